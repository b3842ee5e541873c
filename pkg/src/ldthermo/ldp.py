"""Energy-tail probabilities and their exponential decay rates.

The finite-n estimator sums state blocks exactly (no sampling); the
analytic oracle solves the Legendre transform of the single-site cumulant
generating function by bisection on its strictly increasing derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonThermalState, OutOfRange
from .numerics import NEG_INF, bisect_increasing, logsumexp
from .spectrum import DiagonalState, SiteSpectrum, convolve_n, gibbs_state, potentials


@dataclass
class RateCurve:
    """Finite-n rate estimates on a grid of energy deviations."""

    x_grid: list[float]
    rate: list[float]
    n_used: list[int]
    rate_analytic: list[float] = field(default_factory=list)


def tail_log_prob(state: DiagonalState, grid_unit, n: int, x: float,
                  side: str = "above") -> float:
    """ln Tr[rho Pi] for the projector onto per-site energies >= U~+x
    (side="above") or <= U~-x (side="below"); -inf if the projector is empty.

    The threshold is n*(U~ +/- x) in absolute energy where U~ is the
    state's own mean energy per site.
    """
    if side not in ("above", "below"):
        raise ValueError("side must be 'above' or 'below'")
    if x <= 0:
        raise ValueError("x must be positive")
    if not state.has_energies():
        raise NonThermalState("tail_log_prob needs energy-labelled blocks")
    unit = float(grid_unit)
    mean_units = state.mean_energy_units()
    energies = np.asarray(state.energies, dtype=float)
    if side == "above":
        cut = mean_units + n * x / unit
        mask = energies >= cut - 1e-12
    else:
        cut = mean_units - n * x / unit
        mask = energies <= cut + 1e-12
    if not np.any(mask):
        return NEG_INF
    return logsumexp(state.log_p[mask] + state.log_c[mask])


def rate_analytic(site: SiteSpectrum, beta: float, x: float) -> float:
    """Cramer rate I(x) = sup_t [t(U~+x) - ln <e^{tE}>_Gibbs].

    Independent oracle for the i.i.d. case; the sup is located by bisection
    on the tilted mean, which increases strictly in t for a non-degenerate
    finite spectrum.
    """
    pots = potentials(site, beta)
    target = pots.u_tilde + x
    unit = float(site.grid_unit)
    e = np.asarray(site.levels_units, dtype=float) * unit + float(site.energy_shift)
    log_d = np.log(np.asarray(site.degeneracies, dtype=float))
    log_w0 = log_d - beta * e          # unnormalized Gibbs weights
    e_min, e_max = float(e.min()), float(e.max())
    if e_min == e_max:
        raise OutOfRange("degenerate spectrum: rate undefined away from 0")
    if x == 0:
        return 0.0
    if not (e_min < target < e_max):
        raise OutOfRange(f"U~+x = {target} outside open range ({e_min}, {e_max})")

    def tilted_mean(t: float) -> float:
        z = log_w0 + t * e
        m = z.max()
        w = np.exp(z - m)
        return float(np.dot(w, e) / w.sum())

    lo, hi = -1.0, 1.0
    while tilted_mean(lo) > target:
        lo *= 2.0
        if lo < -1e8:
            raise OutOfRange("target unreachable by tilting")
    while tilted_mean(hi) < target:
        hi *= 2.0
        if hi > 1e8:
            raise OutOfRange("target unreachable by tilting")
    t_star = bisect_increasing(lambda t: tilted_mean(t) - target, lo, hi,
                               tol=1e-14)
    log_mgf = logsumexp(log_w0 + t_star * e) - logsumexp(log_w0)
    return t_star * target - log_mgf


def rate_estimate(site: SiteSpectrum, beta: float, x: float,
                  n_list: list[int], side: str | None = None) -> RateCurve:
    """I_n(x) = -(1/n) ln Tr[rho Pi] along an n sequence.

    x > 0 probes the upper tail, x < 0 the lower tail.  Degenerate spectra
    yield +inf (the tail is empty at every n).
    """
    if x == 0:
        raise ValueError("x must be nonzero")
    if any(n < 2 for n in n_list):
        raise ValueError("all n must be >= 2")
    if side is None:
        side = "above" if x > 0 else "below"
    analytic = None
    try:
        analytic = rate_analytic(site, beta, x)
    except OutOfRange:
        pass
    rates = []
    for n in n_list:
        hist = convolve_n(site, n)
        state = gibbs_state(hist, beta, site.grid_unit)
        lt = tail_log_prob(state, site.grid_unit, n, abs(x), side)
        rates.append(math.inf if lt == NEG_INF else -lt / n)
    curve = RateCurve(x_grid=[x] * len(n_list), rate=rates,
                      n_used=list(n_list))
    if analytic is not None:
        curve.rate_analytic = [analytic] * len(n_list)
    return curve
