"""Robustness-quadrangle charts and per-family stability rankings.

Each detector becomes a four-cornered polygon whose center sits at
``lam * a_ref`` on the x axis and whose corner heights are the four
stability components: qp left-upper, res right-upper, wn right-bottom,
bv left-bottom. With lam = 0 all centers collapse onto x = 0 and only the
stability differences remain visible. Charts are emitted as self-contained
deterministic SVG; polygons carry data attributes and the plot group
carries its affine mapping so files can be parsed back exactly.
"""

from __future__ import annotations

import csv
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

from .distortions import KINDS
from .stability import StabilityVector

DEFAULT_LAMBDA = 5.0
DEFAULT_HALF_WIDTH = 0.1

VIEW_W = 1000
VIEW_H = 600
PLOT = {"left": 80.0, "right": 960.0, "top": 40.0, "bottom": 540.0}

PALETTE = (
    "#1b6ca8", "#c0392b", "#1e8449", "#8e44ad",
    "#d68910", "#148f77", "#7b241c", "#2c3e50",
)

CORNER_KINDS = ("qp", "res", "wn", "bv")  # left-upper, right-upper, right-bottom, left-bottom


@dataclass(frozen=True)
class QuadrangleSpec:
    """Chart glyph for one detector: center x plus four corner heights."""

    detector_id: str
    a_ref: float
    s: StabilityVector
    lam: float
    half_width: float = DEFAULT_HALF_WIDTH

    def __post_init__(self):
        if not 0.0 <= self.a_ref <= 1.0:
            raise ValueError(f"a_ref must be in [0,1], got {self.a_ref}")
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.half_width <= 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def cx(self) -> float:
        return self.lam * self.a_ref

    @property
    def vertices(self) -> tuple:
        """Corners in left-upper, right-upper, right-bottom, left-bottom order."""
        return (
            (self.cx - self.half_width, self.s.s_qp),
            (self.cx + self.half_width, self.s.s_res),
            (self.cx + self.half_width, self.s.s_wn),
            (self.cx - self.half_width, self.s.s_bv),
        )


def quadrangle(
    detector_id: str,
    a_ref: float,
    s: StabilityVector,
    lam: float,
    half_width: float = DEFAULT_HALF_WIDTH,
) -> QuadrangleSpec:
    return QuadrangleSpec(detector_id=detector_id, a_ref=a_ref, s=s, lam=lam,
                          half_width=half_width)


@dataclass(frozen=True)
class ChartConfig:
    lam: float = DEFAULT_LAMBDA
    show_ideal: bool = True
    x_range: tuple | None = None  # None: fit data and the ideal glyph
    y_range: tuple = (0.0, 1.05)
    title: str = "Robustness quadrangles"

    def __post_init__(self):
        if not (self.y_range[0] <= 0.0 and self.y_range[1] >= 1.0):
            raise ValueError(f"y_range must cover [0,1], got {self.y_range}")


def _fmt(value: float) -> str:
    return f"{value:.6f}"


class _ChartTransform:
    def __init__(self, x_range, y_range):
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range

    def px(self, x: float) -> float:
        frac = (x - self.x0) / (self.x1 - self.x0)
        return PLOT["left"] + frac * (PLOT["right"] - PLOT["left"])

    def py(self, y: float) -> float:
        frac = (y - self.y0) / (self.y1 - self.y0)
        return PLOT["bottom"] - frac * (PLOT["bottom"] - PLOT["top"])


def _x_ticks(x0: float, x1: float) -> list:
    span = x1 - x0
    step = 0.5 if span <= 3 else 1.0
    ticks = []
    t = x0
    while t <= x1 + 1e-9:
        ticks.append(round(t, 6))
        t += step
    return ticks


def render_chart(quads: list, cfg: ChartConfig, path) -> Path:
    """Write the quadrangles as a deterministic standalone SVG file."""
    if not quads:
        raise ValueError("nothing to render: no quadrangles")
    if cfg.x_range is not None:
        x_range = cfg.x_range
    else:
        xs = [q.cx - q.half_width for q in quads] + [q.cx + q.half_width for q in quads]
        if cfg.show_ideal:
            xs += [cfg.lam - DEFAULT_HALF_WIDTH, cfg.lam + DEFAULT_HALF_WIDTH]
        lo = min(0.0, min(xs)) - 0.1
        hi = max(xs) + 0.1
        x_range = (lo, hi if hi > lo else lo + 1.0)
    tr = _ChartTransform(x_range, cfg.y_range)

    parts = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {VIEW_W} {VIEW_H}" '
        f'font-family="sans-serif" font-size="14" '
        f'data-x-min="{_fmt(x_range[0])}" data-x-max="{_fmt(x_range[1])}" '
        f'data-y-min="{_fmt(cfg.y_range[0])}" data-y-max="{_fmt(cfg.y_range[1])}" '
        f'data-plot-left="{_fmt(PLOT["left"])}" data-plot-right="{_fmt(PLOT["right"])}" '
        f'data-plot-top="{_fmt(PLOT["top"])}" data-plot-bottom="{_fmt(PLOT["bottom"])}">'
    )
    parts.append(f'<rect width="{VIEW_W}" height="{VIEW_H}" fill="white"/>')
    parts.append(f'<text x="{VIEW_W / 2:.1f}" y="24" text-anchor="middle">{cfg.title}</text>')

    # axes
    ax = (
        f'<line x1="{_fmt(PLOT["left"])}" y1="{_fmt(PLOT["bottom"])}" '
        f'x2="{_fmt(PLOT["right"])}" y2="{_fmt(PLOT["bottom"])}" stroke="black"/>'
        f'<line x1="{_fmt(PLOT["left"])}" y1="{_fmt(PLOT["bottom"])}" '
        f'x2="{_fmt(PLOT["left"])}" y2="{_fmt(PLOT["top"])}" stroke="black"/>'
    )
    parts.append(ax)
    for t in _x_ticks(*x_range):
        x = tr.px(t)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{_fmt(PLOT["bottom"])}" x2="{_fmt(x)}" '
            f'y2="{_fmt(PLOT["bottom"] + 6)}" stroke="black"/>'
            f'<text x="{_fmt(x)}" y="{_fmt(PLOT["bottom"] + 22)}" '
            f'text-anchor="middle">{t:g}</text>'
        )
    for t in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = tr.py(t)
        parts.append(
            f'<line x1="{_fmt(PLOT["left"] - 6)}" y1="{_fmt(y)}" x2="{_fmt(PLOT["left"])}" '
            f'y2="{_fmt(y)}" stroke="black"/>'
            f'<text x="{_fmt(PLOT["left"] - 10)}" y="{_fmt(y + 5)}" '
            f'text-anchor="end">{t:g}</text>'
        )
    parts.append(
        f'<text x="{(PLOT["left"] + PLOT["right"]) / 2:.1f}" y="{VIEW_H - 12}" '
        f'text-anchor="middle">accuracy x scale (center of each quadrangle)</text>'
    )
    parts.append(
        f'<text x="22" y="{(PLOT["top"] + PLOT["bottom"]) / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 22 {(PLOT["top"] + PLOT["bottom"]) / 2:.1f})">stability</text>'
    )

    if cfg.show_ideal:
        ideal = QuadrangleSpec(
            detector_id="ideal",
            a_ref=1.0,
            s=StabilityVector(1.0, 1.0, 1.0, 1.0),
            lam=cfg.lam,
            half_width=DEFAULT_HALF_WIDTH,
        )
        parts.append(_polygon_svg(ideal, tr, "#c0392b", dashed=True))

    for i, quad in enumerate(quads):
        color = PALETTE[i % len(PALETTE)]
        parts.append(_polygon_svg(quad, tr, color, dashed=False))

    # legend
    ly = PLOT["top"] + 10
    for i, quad in enumerate(quads):
        color = PALETTE[i % len(PALETTE)]
        parts.append(
            f'<rect x="{_fmt(PLOT["right"] - 190)}" y="{_fmt(ly - 11)}" width="14" height="14" '
            f'fill="{color}"/>'
            f'<text x="{_fmt(PLOT["right"] - 170)}" y="{_fmt(ly)}">{quad.detector_id}</text>'
        )
        ly += 22
    if cfg.show_ideal:
        parts.append(
            f'<rect x="{_fmt(PLOT["right"] - 190)}" y="{_fmt(ly - 11)}" width="14" height="14" '
            f'fill="none" stroke="#c0392b" stroke-dasharray="4 3"/>'
            f'<text x="{_fmt(PLOT["right"] - 170)}" y="{_fmt(ly)}">ideal</text>'
        )

    parts.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path


def _polygon_svg(quad: QuadrangleSpec, tr: _ChartTransform, color: str, dashed: bool) -> str:
    points = " ".join(f"{_fmt(tr.px(x))},{_fmt(tr.py(y))}" for x, y in quad.vertices)
    dash = ' stroke-dasharray="6 4"' if dashed else ""
    return (
        f'<polygon points="{points}" fill="none" stroke="{color}" stroke-width="2"{dash} '
        f'data-detector-id="{quad.detector_id}" data-a-ref="{quad.a_ref!r}" '
        f'data-cx="{quad.cx!r}" data-half-width="{quad.half_width!r}" '
        f'data-s-qp="{quad.s.s_qp!r}" data-s-res="{quad.s.s_res!r}" '
        f'data-s-wn="{quad.s.s_wn!r}" data-s-bv="{quad.s.s_bv!r}"/>'
    )


@dataclass(frozen=True)
class ParsedQuadrangle:
    """Geometry recovered from an emitted chart, in chart units."""

    detector_id: str
    cx: float
    heights: dict  # kind -> corner height


def parse_chart(path) -> list:
    """Invert an emitted SVG back to center positions and corner heights.

    Uses the polygon point geometry plus the affine mapping recorded on the
    svg root, not the data attributes, so it genuinely round-trips the
    drawing.
    """
    root = ET.parse(path).getroot()
    x0 = float(root.get("data-x-min"))
    x1 = float(root.get("data-x-max"))
    y0 = float(root.get("data-y-min"))
    y1 = float(root.get("data-y-max"))
    left = float(root.get("data-plot-left"))
    right = float(root.get("data-plot-right"))
    top = float(root.get("data-plot-top"))
    bottom = float(root.get("data-plot-bottom"))

    def inv_x(px: float) -> float:
        return x0 + (px - left) / (right - left) * (x1 - x0)

    def inv_y(py: float) -> float:
        return y0 + (bottom - py) / (bottom - top) * (y1 - y0)

    out = []
    ns = "{http://www.w3.org/2000/svg}"
    for poly in root.iter(f"{ns}polygon"):
        detector_id = poly.get("data-detector-id")
        if detector_id is None:
            continue
        pts = []
        for pair in poly.get("points").split():
            px, py = pair.split(",")
            pts.append((inv_x(float(px)), inv_y(float(py))))
        cx = sum(x for x, _ in pts) / len(pts)
        heights = {kind: pts[i][1] for i, kind in enumerate(CORNER_KINDS)}
        out.append(ParsedQuadrangle(detector_id=detector_id, cx=cx, heights=heights))
    return out


def rank_by_stability(results: list) -> list:
    """Per-family rankings of (detector_id, StabilityVector) pairs.

    Rows come out as (kind, rank, detector_id, s_value), sorted by score
    descending with lexicographic detector_id tie-breaks.
    """
    if not results:
        raise ValueError("no results to rank")
    rows = []
    for kind in KINDS:
        ranked = sorted(results, key=lambda item: (-item[1].component(kind), item[0]))
        for rank, (detector_id, vector) in enumerate(ranked, start=1):
            rows.append((kind, rank, detector_id, vector.component(kind)))
    return rows


def write_ranking_csv(rows: list, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "rank", "detector_id", "s_value"])
        for kind, rank, detector_id, s_value in rows:
            writer.writerow([kind, rank, detector_id, repr(s_value)])
    return path
