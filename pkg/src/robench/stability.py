"""Stability scoring of accuracy chains over quality-descending ladders.

Two penalties drive the score. The degradation penalty grows with the
squared relative gap between a distorted level's accuracy and the
reference accuracy. The monotonicity penalty punishes accuracy *rises*
from one level to the next worse one (an oscillating detector is less
predictable than one that degrades monotonically); drops cost nothing.
Both are clamped to 1. A per-family stability is

    s = 1 - sqrt(mean_i(omega * pd_i + (1 - omega) * pm_i))

and the four families (qp, res, wn, bv) form the stability vector.
"""

from __future__ import annotations

from dataclasses import dataclass

from .distortions import KINDS

DEFAULT_OMEGA = 0.8


def degradation_penalty(a_i: float, a_ref: float) -> float:
    """Clamped squared relative accuracy gap against the reference."""
    _check_unit("a_i", a_i)
    _check_unit("a_ref", a_ref)
    if a_ref == 0.0:
        return 0.0 if a_i == 0.0 else 1.0
    return min(1.0, ((a_i - a_ref) / a_ref) ** 2)


def monotonicity_penalty(a_i: float, a_prev: float) -> float:
    """Clamped squared relative rise over the previous (better-quality) level."""
    _check_unit("a_i", a_i)
    _check_unit("a_prev", a_prev)
    if a_i <= a_prev:
        return 0.0
    if a_prev == 0.0:
        return 1.0
    return min(1.0, ((a_i - a_prev) / a_prev) ** 2)


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0,1], got {value}")


@dataclass(frozen=True)
class ChainEntry:
    """One ladder level inside a quality-descending chain."""

    level: int  # 1-based position within the chain
    param: float
    a: float


@dataclass(frozen=True)
class LadderAccuracies:
    """Accuracy chain(s) of one distortion family, quality descending.

    qp/res/wn have a single chain; bv splits into a darkening and a
    brightening chain, each restarting from the reference.
    """

    kind: str
    a_ref: float
    chains: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        _check_unit("a_ref", self.a_ref)
        chains = tuple(tuple(chain) for chain in self.chains)
        if self.kind == "bv":
            if len(chains) != 2:
                raise ValueError("bv needs exactly two chains (low, high)")
        elif len(chains) != 1:
            raise ValueError(f"{self.kind} needs exactly one chain")
        if sum(len(c) for c in chains) < 1:
            raise ValueError("ladder has no levels")
        object.__setattr__(self, "chains", chains)

    @property
    def n_levels(self) -> int:
        return sum(len(chain) for chain in self.chains)


def order_ladder(kind: str, entries: list, a_ref: float) -> LadderAccuracies:
    """Arrange (param, accuracy) pairs into quality-descending chains.

    qp orders by ascending quantizer index, res by descending scale, wn by
    ascending sigma. bv splits by offset sign into a darkening and a
    brightening chain, each ordered by ascending magnitude; each chain's
    first level is later compared against the reference.
    """
    params = [p for p, _ in entries]
    if len(set(params)) != len(params):
        raise ValueError(f"duplicate ladder params for kind {kind!r}")
    if kind == "qp":
        chains = [sorted(entries, key=lambda e: e[0])]
    elif kind == "res":
        chains = [sorted(entries, key=lambda e: -e[0])]
    elif kind == "wn":
        chains = [sorted(entries, key=lambda e: e[0])]
    elif kind == "bv":
        if any(p == 0 for p in params):
            raise ValueError("bv offsets must be nonzero")
        low = sorted((e for e in entries if e[0] < 0), key=lambda e: -e[0])
        high = sorted((e for e in entries if e[0] > 0), key=lambda e: e[0])
        chains = [low, high]
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return LadderAccuracies(
        kind=kind,
        a_ref=a_ref,
        chains=tuple(
            tuple(ChainEntry(level=i + 1, param=p, a=a) for i, (p, a) in enumerate(chain))
            for chain in chains
        ),
    )


@dataclass(frozen=True)
class LevelPenalty:
    level: int
    param: float
    a: float
    pd: float
    pm: float


@dataclass(frozen=True)
class PenaltyBreakdown:
    omega: float
    levels: tuple  # LevelPenalty per ladder level, chain order


def stability(ladder: LadderAccuracies, omega: float = DEFAULT_OMEGA) -> tuple:
    """Stability of one family: (score, per-level penalty breakdown).

    Every chain's first entry is compared against the reference for the
    monotonicity penalty.
    """
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"omega must be in [0,1], got {omega}")
    penalties = []
    total = 0.0
    for chain in ladder.chains:
        prev = ladder.a_ref
        for entry in chain:
            pd = degradation_penalty(entry.a, ladder.a_ref)
            pm = monotonicity_penalty(entry.a, prev)
            penalties.append(
                LevelPenalty(level=entry.level, param=entry.param, a=entry.a, pd=pd, pm=pm)
            )
            total += omega * pd + (1.0 - omega) * pm
            prev = entry.a
    score = 1.0 - (total / ladder.n_levels) ** 0.5
    return score, PenaltyBreakdown(omega=omega, levels=tuple(penalties))


@dataclass(frozen=True)
class StabilityVector:
    """Per-family stability scores, each in [0,1]."""

    s_qp: float
    s_res: float
    s_wn: float
    s_bv: float

    def component(self, kind: str) -> float:
        return getattr(self, f"s_{kind}")

    def as_dict(self) -> dict:
        return {kind: self.component(kind) for kind in KINDS}


def stability_vector(ladders: dict, omega: float = DEFAULT_OMEGA) -> tuple:
    """Combine one ladder per family into the stability vector.

    Returns (StabilityVector, {kind: PenaltyBreakdown}).
    """
    missing = [kind for kind in KINDS if kind not in ladders]
    if missing:
        raise ValueError(f"missing ladders for kinds: {missing}")
    scores = {}
    breakdowns = {}
    for kind in KINDS:
        scores[kind], breakdowns[kind] = stability(ladders[kind], omega)
    vector = StabilityVector(
        s_qp=scores["qp"], s_res=scores["res"], s_wn=scores["wn"], s_bv=scores["bv"]
    )
    return vector, breakdowns


def stability_report(detector_id: str, ladders: dict, omega: float = DEFAULT_OMEGA) -> dict:
    """JSON-ready stability report for one detector.

    All four ladders must share the same reference accuracy.
    """
    a_refs = {ladder.a_ref for ladder in ladders.values()}
    if len(a_refs) != 1:
        raise ValueError(f"ladders disagree on the reference accuracy: {sorted(a_refs)}")
    vector, breakdowns = stability_vector(ladders, omega)
    per_kind = {}
    for kind in KINDS:
        per_kind[kind] = {
            "s": vector.component(kind),
            "levels": [
                {"level": lp.level, "param": lp.param, "a": lp.a, "pd": lp.pd, "pm": lp.pm}
                for lp in breakdowns[kind].levels
            ],
        }
    return {
        "detector_id": detector_id,
        "a_ref": next(iter(a_refs)),
        "omega": omega,
        "per_kind": per_kind,
    }
