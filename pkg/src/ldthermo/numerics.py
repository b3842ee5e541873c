"""Stable log-domain primitives used everywhere in the package.

All probabilities and multiplicities live in the natural-log domain, so
sums become logsumexp and differences become logdiffexp.  -inf encodes an
exact zero.
"""

import math

import numpy as np

NEG_INF = float("-inf")


def logsumexp(values) -> float:
    """log(sum(exp(values))) without overflow; -inf for an empty sum."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return NEG_INF
    m = np.max(arr)
    if m == NEG_INF:
        return NEG_INF
    return float(m + np.log(np.sum(np.exp(arr - m))))


def logaddexp(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    return float(np.logaddexp(a, b))


def logdiffexp(a: float, b: float) -> float:
    """log(exp(a) - exp(b)) for a >= b; snaps near-cancellation to -inf.

    The snap threshold (1e-13 relative) keeps tiny negative residues from
    split bookkeeping out of downstream sqrt/log calls.
    """
    if b == NEG_INF:
        return a
    if a == NEG_INF or b > a:
        raise ValueError(f"logdiffexp needs a >= b, got a={a}, b={b}")
    d = b - a
    if d > -1e-13:
        return NEG_INF
    return a + math.log1p(-math.exp(d))


def log_conv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Log-domain linear convolution of two dense coefficient arrays.

    Index k of the result is logsumexp over i+j==k of a[i]+b[j]; entries
    equal to -inf are exact zeros.  Cost O(len(a)*len(b)) flops.
    """
    n_out = len(a) + len(b) - 1
    out = np.full(n_out, NEG_INF)
    for j in range(len(b)):
        if b[j] == NEG_INF:
            continue
        seg = out[j:j + len(a)]
        out[j:j + len(a)] = np.logaddexp(seg, a + b[j])
    return out


def log_conv_power(a: np.ndarray, n: int) -> np.ndarray:
    """n-fold log-domain self-convolution by repeated doubling."""
    if n < 1:
        raise ValueError("n must be >= 1")
    result = None
    base = a
    k = n
    while k > 0:
        if k & 1:
            result = base.copy() if result is None else log_conv(result, base)
        k >>= 1
        if k > 0:
            base = log_conv(base, base)
    return result


def entropy_of_blocks(log_p: np.ndarray, log_c: np.ndarray) -> float:
    """Shannon entropy (nats) of a block state: sum count * p * (-log p)."""
    mass = np.exp(np.asarray(log_p) + np.asarray(log_c))
    lp = np.asarray(log_p, dtype=float)
    terms = np.where(mass > 0.0, -mass * lp, 0.0)
    return float(np.sum(terms))


def binary_entropy(t: float) -> float:
    """h(t) = -t ln t - (1-t) ln(1-t) on [0, 1]."""
    if t <= 0.0 or t >= 1.0:
        return 0.0
    return -t * math.log(t) - (1.0 - t) * math.log(1.0 - t)


def bisect_increasing(f, lo: float, hi: float, tol: float = 1e-12,
                      max_iter: int = 200) -> float:
    """Root of a strictly increasing f on [lo, hi] with f(lo)<=0<=f(hi)."""
    flo, fhi = f(lo), f(hi)
    if flo > 0 or fhi < 0:
        raise ValueError(f"root not bracketed: f({lo})={flo}, f({hi})={fhi}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm <= 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)
