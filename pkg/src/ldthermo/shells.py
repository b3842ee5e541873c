"""Typical-energy-shell projections and their dimension/mass bounds.

A shell is the integer-unit window [ceil(n(U-eps)/u), floor(n(U+eps)/u)]:
boundaries round inward so the shell never exceeds the stated real
interval, keeping the dimension upper bound provable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyShell, NonThermalState
from .ldp import rate_analytic
from .numerics import NEG_INF, logsumexp
from .spectrum import (DiagonalState, EnergyHistogram, SiteSpectrum,
                       convolve_n, diagonal_state, gibbs_state, potentials)


@dataclass(frozen=True)
class Shell:
    """Energy window n(center +/- half_width) on the integer grid."""

    center: float
    half_width: float
    lo_units: int
    hi_units: int

    @property
    def empty(self) -> bool:
        return self.lo_units > self.hi_units

    def contains(self, energy_units: int) -> bool:
        return self.lo_units <= energy_units <= self.hi_units


def shell_for(n: int, center: float, half_width: float,
              grid_unit=1) -> Shell:
    """Inward-rounded shell for per-site energy center +/- half_width."""
    unit = float(grid_unit)
    lo = math.ceil(n * (center - half_width) / unit - 1e-12)
    hi = math.floor(n * (center + half_width) / unit + 1e-12)
    return Shell(center=center, half_width=half_width, lo_units=lo,
                 hi_units=hi)


def shell_project(state: DiagonalState, shell: Shell):
    """Drop blocks outside the shell and renormalize.

    Returns (projected state, kept_mass).  Raises EmptyShell when no mass
    survives.
    """
    if not state.has_energies():
        raise NonThermalState("shell_project needs energy-labelled blocks")
    mask = np.array([shell.contains(e) for e in state.energies])
    if not np.any(mask):
        raise EmptyShell(
            f"no blocks inside [{shell.lo_units}, {shell.hi_units}]")
    log_kept = logsumexp(state.log_p[mask] + state.log_c[mask])
    kept_mass = float(np.exp(log_kept))
    projected = diagonal_state(
        state.log_p[mask] - log_kept, state.log_c[mask],
        [e for e, m in zip(state.energies, mask) if m],
    )
    return projected, kept_mass


def shell_dim_log(hist: EnergyHistogram, shell: Shell) -> float:
    """ln of the number of states inside the shell."""
    mask = (hist.energies >= shell.lo_units) & (hist.energies <= shell.hi_units)
    if not np.any(mask):
        raise EmptyShell(
            f"no levels inside [{shell.lo_units}, {shell.hi_units}]")
    return logsumexp(hist.log_mult[mask])


def dim_bounds_check(site: SiteSpectrum, beta: float, eps: float,
                     n: int) -> dict:
    """Check the shell-dimension bracket (1/n) ln D in S~ +/- (2 beta eps + eta).

    eta = ln(n * range + 1)/n absorbs the polynomial level-count prefactor;
    out-of-asymptopia failures are reported, not raised.
    """
    pots = potentials(site, beta)
    hist = convolve_n(site, n)
    shell = shell_for(n, pots.u_tilde - float(site.energy_shift), eps,
                      site.grid_unit)
    log_d = shell_dim_log(hist, shell)
    per_site = log_d / n
    slack = math.log(n * site.max_units + 1) / n
    lower = pots.s_tilde - 2 * beta * eps - slack
    upper = pots.s_tilde + 2 * beta * eps + slack
    return {
        "lower_ok": per_site >= lower,
        "upper_ok": per_site <= upper,
        "margins": (per_site - lower, upper - per_site),
        "log_dim_per_site": per_site,
        "s_tilde": pots.s_tilde,
        "slack": slack,
    }


def truncation_distance(state: DiagonalState, truncated: DiagonalState,
                        kept_mass: float) -> float:
    """Trace-norm distance between a state and its renormalized shell
    truncation; equals 2(1 - kept_mass) exactly for diagonal states."""
    del state, truncated  # the diagonal formula needs only the kept mass
    return 2.0 * (1.0 - kept_mass)


def kept_mass_curve(site: SiteSpectrum, beta: float, eps: float,
                    n_list: list[int]) -> list[tuple[int, float]]:
    """Exact kept mass of the Gibbs state in the +/-eps shell along n."""
    pots = potentials(site, beta)
    out = []
    for n in n_list:
        hist = convolve_n(site, n)
        state = gibbs_state(hist, beta, site.grid_unit)
        shell = shell_for(n, pots.u_tilde - float(site.energy_shift), eps,
                          site.grid_unit)
        try:
            _, kept = shell_project(state, shell)
        except EmptyShell:
            kept = 0.0
        out.append((n, kept))
    return out


def suggested_fit_grid(site: SiteSpectrum, beta: float, eps: float,
                       points: int = 8, lo_exponent: float = 1.5,
                       hi_exponent: float = 4.0) -> list[int]:
    """n grid on which n*I(eps) spans roughly [lo, hi] exponents.

    Shallower windows sit on the Gaussian shoulder of the tail and bias a
    single-exponential fit upward.
    """
    rate = min(rate_analytic(site, beta, eps), rate_analytic(site, beta, -eps))
    lo = max(200, int(lo_exponent / rate))
    hi = max(lo + points, min(6000, int(hi_exponent / rate)))
    step = max(1, (hi - lo) // (points - 1))
    return list(range(lo, hi + 1, step))[:points]


def fit_tail_exponent(site: SiteSpectrum, beta: float, eps: float,
                      n_list: list[int]) -> dict:
    """Fit 1 - kept_mass(n) = C n^{-1/2} e^{-alpha n} by least squares.

    The 1/sqrt(n) factor models the lattice-sum prefactor of the exact
    tail; alpha is compared against min(I(eps), I(-eps)).
    """
    pts = [(n, k) for n, k in kept_mass_curve(site, beta, eps, n_list)
           if 0.0 < k < 1.0]
    if len(pts) < 2:
        raise ValueError("need at least two n with nontrivial tails")
    ns = np.array([n for n, _ in pts], dtype=float)
    y = np.array([math.log(1.0 - k) + 0.5 * math.log(n)
                  for n, k in pts])
    a = np.vstack([-ns, np.ones_like(ns)]).T
    (alpha, logc), *_ = np.linalg.lstsq(a, y, rcond=None)
    target = min(rate_analytic(site, beta, eps),
                 rate_analytic(site, beta, -eps))
    return {
        "alpha": float(alpha),
        "log_prefactor": float(logc),
        "target": target,
        "rel_err": abs(alpha - target) / target,
        "points": pts,
    }
