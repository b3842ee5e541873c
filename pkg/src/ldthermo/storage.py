"""The external work storage: a flat ladder of equally spaced rungs.

The ladder unit always equals the system's energy grid unit, so every
energy-preserving shift e + h - h' lands exactly on a rung (until the top
cap, which the protocol treats as a hard abort, never a silent clip).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (EmptyWindow, WindowTouchesGround, WindowTouchesTop,
                     ZeroRungs)
from .numerics import logsumexp
from .spectrum import EnergyHistogram


@dataclass(frozen=True)
class Ladder:
    """Work-storage spectrum: rung k has energy k * unit, ground at 0."""

    unit: Fraction
    num_rungs: int

    def energy_of(self, rung: int) -> Fraction:
        return rung * self.unit

    def top_rung(self) -> int:
        return self.num_rungs - 1


def ladder_new(unit, num_rungs: int) -> Ladder:
    if num_rungs < 1:
        raise ZeroRungs(f"num_rungs must be >= 1, got {num_rungs}")
    return Ladder(unit=Fraction(unit), num_rungs=num_rungs)


@dataclass(frozen=True)
class LadderState:
    """Distribution over rung indices, probabilities in log domain."""

    probs: dict  # rung index -> log probability

    def __post_init__(self):
        total = logsumexp(list(self.probs.values()))
        if abs(total) > 1e-9:
            raise ValueError(f"ladder state not normalized: {total}")

    def entropy(self) -> float:
        lps = np.array(list(self.probs.values()))
        return float(np.sum(-np.exp(lps) * lps))

    def mean_rung(self) -> float:
        return float(sum(math.exp(lp) * r for r, lp in self.probs.items()))

    def support(self) -> tuple[int, int]:
        rungs = sorted(self.probs)
        return rungs[0], rungs[-1]


def window_rungs(ladder: Ladder, n: int, u_center: float, delta: float):
    """Inclusive rung window for total energy in [n(u-delta), n(u+delta)]."""
    unit = float(ladder.unit)
    lo = math.ceil(n * (u_center - delta) / unit - 1e-9)
    hi = math.floor(n * (u_center + delta) / unit + 1e-9)
    return lo, hi


def microcanonical(ladder: Ladder, n: int, u_center: float,
                   delta: float) -> LadderState:
    """Uniform state on the rung window n(u_center +/- delta).

    Requires u_center - delta > 0 so the window count is u-independent
    (flatness only holds away from the ground cap).
    """
    if u_center - delta <= 0:
        raise WindowTouchesGround(
            f"need u - delta > 0, got {u_center} - {delta}")
    lo, hi = window_rungs(ladder, n, u_center, delta)
    if hi > ladder.top_rung():
        raise WindowTouchesTop(
            f"window reaches rung {hi} but ladder tops out at {ladder.top_rung()}")
    if lo > hi:
        raise EmptyWindow(f"no rungs in [{n * (u_center - delta)}, "
                          f"{n * (u_center + delta)}]")
    count = hi - lo + 1
    lp = -math.log(count)
    return LadderState(probs={r: lp for r in range(lo, hi + 1)})


def closure_check(ladder: Ladder, system_hist: EnergyHistogram,
                  window: tuple[int, int]) -> dict:
    """Condition check: every shift e + h - h' > 0 from the occupied rung
    window lands on an existing rung.

    Shifts driving e' <= 0 are excluded by construction (the paper's
    e + h - h' > 0 proviso) and reported separately.
    """
    lo, hi = window
    h_lo = int(system_hist.energies[0])
    h_hi = int(system_hist.energies[-1])
    max_shift = h_hi - h_lo
    violations = []
    excluded_nonpositive = 0
    top_needed = hi + max_shift
    if top_needed > ladder.top_rung():
        violations.append(
            ("top", top_needed, f"rung {top_needed} exceeds top "
             f"{ladder.top_rung()}"))
    if lo - max_shift <= 0:
        excluded_nonpositive = max(0, max_shift - lo + 1)
    return {
        "ok": not violations,
        "violations": violations,
        "excluded_nonpositive_shifts": excluded_nonpositive,
        "max_shift": max_shift,
    }
