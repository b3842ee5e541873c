"""Single-site spectra, n-fold densities of states, Gibbs states, potentials.

Energies live on an exact integer grid (multiples of a rational grid unit)
so that "same energy" is decidable bit-exactly; multiplicities and
probabilities live in the natural-log domain because they reach d^n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import (DuplicateEnergy, EmptySpectrum, NonPositiveDegeneracy,
                     Overflow)
from .numerics import NEG_INF, log_conv_power, logsumexp

_MAX_UNITS = 2 ** 62


@dataclass(frozen=True)
class SiteSpectrum:
    """Energy levels of one subsystem on an exact integer grid.

    ``levels_units[i]`` is the i-th level in units of ``grid_unit`` above
    ``energy_shift``; the physical energy is shift + units * grid_unit.
    """

    levels_units: tuple[int, ...]
    degeneracies: tuple[int, ...]
    grid_unit: Fraction
    energy_shift: Fraction

    @property
    def max_units(self) -> int:
        return self.levels_units[-1]

    @property
    def total_dim(self) -> int:
        return sum(self.degeneracies)

    def energy_of(self, units: int) -> Fraction:
        return self.energy_shift + units * self.grid_unit


def site_spectrum_new(levels: Iterable[tuple]) -> SiteSpectrum:
    """Build a SiteSpectrum from (energy, degeneracy) pairs.

    Energies may be ints, Fractions, or strings like "1/2"; they are put on
    the common grid 1/LCD and shifted so the minimum is unit 0.
    """
    pairs = [(Fraction(e), int(d)) for e, d in levels]
    if not pairs:
        raise EmptySpectrum("a site needs at least one level")
    for e, d in pairs:
        if d < 1:
            raise NonPositiveDegeneracy(f"level {e} has degeneracy {d}")
    energies = [e for e, _ in pairs]
    if len(set(energies)) != len(energies):
        raise DuplicateEnergy("duplicate energies after normalization")
    lcd = 1
    for e in energies:
        lcd = lcd * e.denominator // math.gcd(lcd, e.denominator)
    unit = Fraction(1, lcd)
    shift = min(energies)
    scaled = sorted(((int((e - shift) / unit), d) for e, d in pairs))
    return SiteSpectrum(
        levels_units=tuple(u for u, _ in scaled),
        degeneracies=tuple(d for _, d in scaled),
        grid_unit=unit,
        energy_shift=shift,
    )


@dataclass(frozen=True)
class EnergyHistogram:
    """Density of states of the n-fold composite, in log domain.

    ``energies`` (grid units, strictly increasing) and ``log_mult`` have
    equal length; levels with zero multiplicity are omitted.
    """

    n: int
    energies: np.ndarray
    log_mult: np.ndarray

    def log_total_dim(self) -> float:
        return logsumexp(self.log_mult)

    def log_mult_at(self, energy_units: int) -> float:
        idx = np.searchsorted(self.energies, energy_units)
        if idx < len(self.energies) and self.energies[idx] == energy_units:
            return float(self.log_mult[idx])
        return NEG_INF


def convolve_n(site: SiteSpectrum, n: int) -> EnergyHistogram:
    """Exact n-fold convolution of the site's degeneracy sequence.

    Repeated doubling keeps the cost at O(E^2 log n) log-domain flops where
    E = n * max_units is the final support width.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n * max(site.max_units, 1) >= _MAX_UNITS:
        raise Overflow(f"energy range {n * site.max_units} exceeds integer width")
    dense = np.full(site.max_units + 1, NEG_INF)
    for u, d in zip(site.levels_units, site.degeneracies):
        dense[u] = math.log(d)
    out = log_conv_power(dense, n)
    support = out > NEG_INF
    return EnergyHistogram(
        n=n,
        energies=np.nonzero(support)[0].astype(np.int64),
        log_mult=out[support],
    )


@dataclass(frozen=True)
class DiagonalState:
    """A diagonal state as (log prob-per-state, log state-count, energy) blocks.

    Blocks are sorted by descending probability; blocks sharing the exact
    same probability and energy are merged.  ``energies[i]`` is None for
    blocks without an energy label (abstract distributions, or merges
    across energies).
    """

    log_p: np.ndarray
    log_c: np.ndarray
    energies: tuple

    def __post_init__(self):
        total = logsumexp(self.log_p + self.log_c)
        if abs(total) > 1e-9:
            raise ValueError(f"state not normalized: log total mass {total}")

    @property
    def num_blocks(self) -> int:
        return len(self.log_p)

    def block_masses(self) -> np.ndarray:
        return np.exp(self.log_p + self.log_c)

    def entropy(self) -> float:
        mass = self.block_masses()
        return float(np.sum(np.where(mass > 0, -mass * self.log_p, 0.0)))

    def mean_energy_units(self) -> float:
        if any(e is None for e in self.energies):
            from .errors import NonThermalState
            raise NonThermalState("state has blocks without energy labels")
        return float(np.dot(self.block_masses(),
                            np.asarray(self.energies, dtype=float)))

    def has_energies(self) -> bool:
        return all(e is not None for e in self.energies)


def diagonal_state(log_p: Sequence[float], log_c: Sequence[float],
                   energies: Sequence | None = None,
                   renormalize: bool = False) -> DiagonalState:
    """Canonicalize raw blocks: sort by descending probability and merge
    blocks with identical (probability, energy)."""
    lp = np.asarray(log_p, dtype=float)
    lc = np.asarray(log_c, dtype=float)
    if energies is None:
        ens = [None] * len(lp)
    else:
        ens = list(energies)
    keep = lp + lc > NEG_INF
    lp, lc = lp[keep], lc[keep]
    ens = [e for e, k in zip(ens, keep) if k]
    if renormalize and len(lp):
        lp = lp - logsumexp(lp + lc)
    order = sorted(range(len(lp)),
                   key=lambda i: (-lp[i], ens[i] if ens[i] is not None else -1))
    merged_p, merged_c, merged_e = [], [], []
    for i in order:
        if merged_p and merged_p[-1] == lp[i] and merged_e[-1] == ens[i]:
            merged_c[-1] = float(np.logaddexp(merged_c[-1], lc[i]))
        else:
            merged_p.append(float(lp[i]))
            merged_c.append(float(lc[i]))
            merged_e.append(ens[i])
    return DiagonalState(
        log_p=np.asarray(merged_p), log_c=np.asarray(merged_c),
        energies=tuple(merged_e),
    )


def gibbs_state(hist: EnergyHistogram, beta: float,
                grid_unit: Fraction | float = 1) -> DiagonalState:
    """Gibbs state on the composite spectrum: one block per energy level."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    unit = float(grid_unit)
    exponents = hist.log_mult - beta * unit * hist.energies.astype(float)
    log_z = logsumexp(exponents)
    log_p = -beta * unit * hist.energies.astype(float) - log_z
    return diagonal_state(log_p, hist.log_mult, [int(e) for e in hist.energies])


@dataclass(frozen=True)
class ThermoPotentials:
    """Regularized per-site internal energy, free energy, and entropy."""

    u_tilde: float
    f_tilde: float
    s_tilde: float
    beta: float

    def __post_init__(self):
        gap = self.s_tilde - self.beta * (self.u_tilde - self.f_tilde)
        if abs(gap) > 1e-9:
            raise ValueError(f"S = beta(U - F) violated by {gap}")


def potentials(site: SiteSpectrum, beta: float) -> ThermoPotentials:
    """Closed-form i.i.d. potentials from the single-site partition sum.

    Reported on the caller's original energy scale (shift included), which
    leaves the entropy unchanged.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    unit = float(site.grid_unit)
    e = np.asarray(site.levels_units, dtype=float) * unit
    log_d = np.log(np.asarray(site.degeneracies, dtype=float))
    log_z = logsumexp(log_d - beta * e)
    w = np.exp(log_d - beta * e - log_z)
    shift = float(site.energy_shift)
    u = float(np.dot(w, e)) + shift
    f = -log_z / beta + shift
    return ThermoPotentials(u_tilde=u, f_tilde=f, s_tilde=beta * (u - f),
                            beta=beta)


def potentials_from_histogram(hist: EnergyHistogram, beta: float,
                              grid_unit: Fraction | float = 1,
                              shift: Fraction | float = 0) -> ThermoPotentials:
    """Finite-n potentials of one histogram, per site.

    Extrapolation mode for user-supplied non-i.i.d. histogram sequences:
    call this along an n sequence and inspect the trend.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    unit = float(grid_unit)
    e = hist.energies.astype(float) * unit
    log_z = logsumexp(hist.log_mult - beta * e)
    w = np.exp(hist.log_mult - beta * e - log_z)
    u = (float(np.dot(w, e)) / hist.n) + float(shift)
    f = (-log_z / beta) / hist.n + float(shift)
    return ThermoPotentials(u_tilde=u, f_tilde=f, s_tilde=beta * (u - f),
                            beta=beta)
