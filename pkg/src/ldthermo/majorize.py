"""Majorization order, closest majorized targets, and T-transform chains.

States are handled as sorted block profiles (probability per state, state
count).  Counts can be astronomically large (binomial multiplicities), so
the transfer-chain construction compresses runs of identical two-block
mixing rounds into closed-form families: a chain between block states is
emitted in O(blocks * log(count ratio)) families even when the literal
number of two-branch rounds is exponential.

A single round mixes u states of block A with u states of block B through
the two-branch randomized permutation {(1-w) identity, w pairwise-swap},
which sends per-state values (a, b) to (a - w(a-b), b + w(a-b)).  Every
round is doubly stochastic, so uniform states are fixed points and entropy
never decreases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NotMajorized, Overflow
from .spectrum import DiagonalState, diagonal_state

_REL_SNAP = 1e-12     # relative snap-to-target for float drift
_COUNT_SNAP = 1e-9    # relative count below which a split tail is dust
_DEV_STOP = 1e-11     # residual total |mass| deviation treated as done
_LORENZ_TOL = 1e-12   # cumulative-mass tolerance of the order test


# ---------------------------------------------------------------------------
# sorted block profiles
# ---------------------------------------------------------------------------

class Profile:
    """Sorted-descending block profile in linear arithmetic.

    values[i] is the per-state probability of run i, counts[i] the number
    of states.  Optional ``tags`` track per-run provenance labels (used by
    the protocol to recover routed masses); mixing combines tag vectors
    with the same affine weights as values.
    """

    def __init__(self, values, counts, tags=None):
        self.values = [float(v) for v in values]
        self.counts = [float(c) for c in counts]
        self.tags = tags  # list of np.ndarray or None

    @classmethod
    def from_state(cls, state: DiagonalState) -> "Profile":
        if np.any(state.log_p > 700) or np.any(state.log_c > 700) or \
           np.any(state.log_p[state.log_p != -math.inf] < -700):
            raise Overflow("block scale exceeds linear float range")
        return cls(np.exp(state.log_p), np.exp(state.log_c))

    def to_state(self, energies=None) -> DiagonalState:
        lp = [math.log(v) if v > 0 else -math.inf for v in self.values]
        lc = [math.log(c) for c in self.counts]
        return diagonal_state(lp, lc, energies, renormalize=False)

    def total_count(self) -> float:
        return float(sum(self.counts))

    def total_mass(self) -> float:
        return float(sum(v * c for v, c in zip(self.values, self.counts)))

    def entropy(self) -> float:
        return float(sum(-c * v * math.log(v)
                         for v, c in zip(self.values, self.counts) if v > 0))

    def padded(self, total: float) -> "Profile":
        extra = total - self.total_count()
        if extra < -1e-6:
            raise DimensionMismatch(
                f"cannot pad {self.total_count()} down to {total}")
        vals, cnts = list(self.values), list(self.counts)
        if extra > 1e-9:
            vals.append(0.0)
            cnts.append(extra)
        return Profile(vals, cnts)

    def copy(self) -> "Profile":
        p = Profile(self.values, self.counts)
        if self.tags is not None:
            p.tags = [t.copy() for t in self.tags]
        return p


def _sorted_runs(state_or_profile) -> Profile:
    if isinstance(state_or_profile, Profile):
        prof = state_or_profile
    else:
        prof = Profile.from_state(state_or_profile)
    order = sorted(range(len(prof.values)), key=lambda i: -prof.values[i])
    merged_v, merged_c = [], []
    for i in order:
        if merged_v and merged_v[-1] == prof.values[i]:
            merged_c[-1] += prof.counts[i]
        else:
            merged_v.append(prof.values[i])
            merged_c.append(prof.counts[i])
    return Profile(merged_v, merged_c)


# ---------------------------------------------------------------------------
# Lorenz curves and the majorization test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LorenzCurve:
    """Concave piecewise-linear cumulative-mass curve.

    breakpoints[i] = (cumulative count in log domain, cumulative mass).
    """

    breakpoints: tuple

    def mass_at(self, count: float) -> float:
        """Exact cumulative mass of the top `count` states."""
        prev_c, prev_m = 0.0, 0.0
        for log_c, m in self.breakpoints:
            c = math.exp(log_c)
            if count <= c:
                if c == prev_c:
                    return m
                slope = (m - prev_m) / (c - prev_c)
                return prev_m + slope * (count - prev_c)
            prev_c, prev_m = c, m
        return prev_m


def lorenz_curve(state) -> LorenzCurve:
    prof = _sorted_runs(state)
    pts = []
    cum_c, cum_m = 0.0, 0.0
    for v, c in zip(prof.values, prof.counts):
        cum_c += c
        cum_m += v * c
        pts.append((math.log(cum_c), cum_m))
    return LorenzCurve(breakpoints=tuple(pts))


def _common_counts(p: Profile, q: Profile):
    cuts = set()
    for prof in (p, q):
        cum = 0.0
        for c in prof.counts:
            cum += c
            cuts.add(cum)
    return sorted(cuts)


def majorizes(p, q, tol: float = _LORENZ_TOL) -> bool:
    """True iff Lorenz(p) >= Lorenz(q) at every breakpoint of either curve.

    Supports are padded with zero-probability blocks to the larger total
    dimension; a mass mismatch beyond tolerance is a DimensionMismatch.
    """
    pp, qq = _sorted_runs(p), _sorted_runs(q)
    if abs(pp.total_mass() - qq.total_mass()) > 1e-9:
        raise DimensionMismatch("profiles carry different total mass")
    total = max(pp.total_count(), qq.total_count())
    pp, qq = pp.padded(total), qq.padded(total)
    lp, lq = lorenz_curve(pp.to_state()), lorenz_curve(qq.to_state())
    for cut in _common_counts(pp, qq):
        if lp.mass_at(cut) < lq.mass_at(cut) - tol:
            return False
    return True


# ---------------------------------------------------------------------------
# closest majorized target (cap-and-fill / flattest approximation)
# ---------------------------------------------------------------------------

def tv_profiles(a, b) -> float:
    """Total-variation distance (half L1) between two sorted profiles,
    aligned position-by-position on the common count axis."""
    pa, pb = _sorted_runs(a), _sorted_runs(b)
    total = max(pa.total_count(), pb.total_count())
    pa, pb = pa.padded(total), pb.padded(total)
    ia = ib = 0
    rem_a, rem_b = pa.counts[0], pb.counts[0]
    acc = 0.0
    while ia < len(pa.values) and ib < len(pb.values):
        step = min(rem_a, rem_b)
        acc += step * abs(pa.values[ia] - pb.values[ib])
        rem_a -= step
        rem_b -= step
        if rem_a <= 1e-12 * pa.counts[ia]:
            ia += 1
            rem_a = pa.counts[ia] if ia < len(pa.values) else 0.0
        if rem_b <= 1e-12 * pb.counts[ib]:
            ib += 1
            rem_b = pb.counts[ib] if ib < len(pb.values) else 0.0
    return 0.5 * acc


def _max_lorenz_gap(target: Profile, source: Profile) -> float:
    lt, ls = lorenz_curve(target.to_state()), lorenz_curve(source.to_state())
    gap = 0.0
    for cut in _common_counts(target, source):
        gap = max(gap, lt.mass_at(cut) - ls.mass_at(cut))
    return gap


def _cap_level(prof: Profile, remove: float) -> float:
    """Level gamma with sum_i c_i (v_i - gamma)_+ == remove."""
    removable = 0.0
    count_above = 0.0
    levels = list(zip(prof.values, prof.counts))
    for idx, (v, c) in enumerate(levels):
        nxt = levels[idx + 1][0] if idx + 1 < len(levels) else 0.0
        count_above += c
        band = count_above * (v - nxt)
        if removable + band >= remove:
            return v - (remove - removable) / count_above
        removable += band
    return 0.0


def _fill_level(prof: Profile, add: float) -> float:
    """Level w with sum_i c_i (w - v_i)_+ == add."""
    addable = 0.0
    count_below = 0.0
    levels = list(zip(prof.values, prof.counts))
    for idx in range(len(levels) - 1, -1, -1):
        v, c = levels[idx]
        prv = levels[idx - 1][0] if idx > 0 else math.inf
        count_below += c
        band = count_below * (prv - v)
        if addable + band >= add:
            return v + (add - addable) / count_below
        addable += band
    raise AssertionError("fill exceeded total spread")  # pragma: no cover


def _apply_cap_fill(prof: Profile, gamma: float, w: float) -> Profile:
    vals, cnts = [], []
    for v, c in zip(prof.values, prof.counts):
        vals.append(min(max(v, w), gamma))
        cnts.append(c)
    return _sorted_runs(Profile(vals, cnts))


def closest_majorized(target, source) -> DiagonalState:
    """The TV-closest distribution to `target` that `source` majorizes.

    Construction: remove the minimal excess eps = max_k (L_target(k) -
    L_source(k))_+ by capping the largest entries, then re-add it by
    water-filling the smallest — the flattest eps-approximation of the
    target, which any source within eps can reach and whose TV to the
    target equals the lower bound eps.

    Returns the target itself when the source already majorizes it.  When
    the input carries energy labels they are preserved positionwise on the
    target's sorted order (cap/fill splits level blocks as needed).
    """
    tgt_state = target if isinstance(target, DiagonalState) else None
    pt, ps = _sorted_runs(target), _sorted_runs(source)
    if abs(pt.total_mass() - ps.total_mass()) > 1e-9:
        raise DimensionMismatch("profiles carry different total mass")
    total = max(pt.total_count(), ps.total_count())
    pt, ps = pt.padded(total), ps.padded(total)
    eps = _max_lorenz_gap(pt, ps)
    if eps <= 1e-15:
        result_prof = pt
    else:
        gamma = _cap_level(pt, eps)
        capped = Profile([min(v, gamma) for v in pt.values], pt.counts)
        w = _fill_level(capped, eps)
        if w > gamma:  # ball swallows the spread: flattest is uniform
            u = pt.total_mass() / total
            result_prof = Profile([u], [total])
        else:
            result_prof = _apply_cap_fill(pt, gamma, w)
    if not majorizes(ps, result_prof):
        raise AssertionError("cap-and-fill output escaped the source's "
                             "majorization cone")  # pragma: no cover
    if tgt_state is not None and tgt_state.has_energies() and eps > 1e-15:
        return _relabel_on_target(result_prof, tgt_state)
    if tgt_state is not None and eps <= 1e-15:
        return tgt_state
    return result_prof.to_state()


def _relabel_on_target(prof: Profile, tgt: DiagonalState) -> DiagonalState:
    """Attach the target's energy labels to a cap/fill output positionwise
    along the target's own descending-probability order."""
    out_p, out_c, out_e = [], [], []
    ti = 0
    rem_t = math.exp(tgt.log_c[0])
    for v, c in zip(prof.values, prof.counts):
        rem = c
        while rem > 1e-12 * c:
            take = min(rem, rem_t)
            out_p.append(math.log(v) if v > 0 else -math.inf)
            out_c.append(math.log(take))
            out_e.append(tgt.energies[ti])
            rem -= take
            rem_t -= take
            if rem_t <= 1e-9 and ti + 1 < tgt.num_blocks:
                ti += 1
                rem_t = math.exp(tgt.log_c[ti])
    return diagonal_state(out_p, out_c, out_e)


# ---------------------------------------------------------------------------
# T-transform chains
# ---------------------------------------------------------------------------

@dataclass
class TransferStep:
    """One compressed family of identical two-block mixing rounds.

    weight is the first round's mixing weight; rounds > 1 means the family
    repeats with a fresh chunk of the larger block each round (the repeated
    side's value moves by delta per round, so later rounds have different
    weights, all derived from delta).  moved_count = unit_count * rounds
    states change blocks in total.
    """

    weight: float
    source_block: int
    dest_block: int
    moved_count: float
    rounds: int = 1
    # exact-replay fields
    donor_offset: float = 0.0
    acceptor_offset: float = 0.0
    unit_count: float = 0.0
    delta: float = 0.0
    chunked_side: str = "acceptor"  # which side supplies fresh chunks

    @property
    def log_moved_count(self) -> float:
        return math.log(self.moved_count) if self.moved_count > 0 else -math.inf


class _Segs:
    """Working list of (value, count, target value, tag) position runs."""

    def __init__(self, values, counts, targets, tags=None):
        self.v = list(values)
        self.c = list(counts)
        self.t = list(targets)
        self.tags = tags

    def refine_against(self, tgt_prof: Profile):
        """Split runs so current and target boundaries coincide."""
        new_v, new_c, new_t, new_tags = [], [], [], []
        ti, rem_t = 0, tgt_prof.counts[0]
        for i, (v, c) in enumerate(zip(self.v, self.c)):
            rem = c
            while rem > 0:
                take = min(rem, rem_t)
                new_v.append(v)
                new_c.append(take)
                new_t.append(tgt_prof.values[ti])
                if self.tags is not None:
                    new_tags.append(self.tags[i].copy())
                rem -= take
                rem_t -= take
                if rem <= _COUNT_SNAP * c:
                    rem = 0.0
                if rem_t <= _COUNT_SNAP * tgt_prof.counts[ti]:
                    if ti + 1 < len(tgt_prof.counts):
                        ti += 1
                        rem_t = tgt_prof.counts[ti]
                    else:
                        rem_t = math.inf
        self.v, self.c, self.t = new_v, new_c, new_t
        self.tags = new_tags if self.tags is not None else None


def _snap(value: float, target: float) -> float:
    scale = max(abs(target), abs(value), 1e-300)
    return target if abs(value - target) <= _REL_SNAP * scale else value


def t_transform_chain(source, reached, max_families: int = 200_000):
    """Chain of generalized T-transforms carrying `source` to `reached`.

    Pre: reached is exactly majorized by source (use closest_majorized).
    Each emitted family is a run of doubly stochastic two-block mixes; the
    composition reproduces `reached` exactly up to float drift.
    """
    ps, pr = _sorted_runs(source), _sorted_runs(reached)
    if abs(ps.total_mass() - pr.total_mass()) > 1e-9:
        raise DimensionMismatch("profiles carry different total mass")
    total = max(ps.total_count(), pr.total_count())
    ps, pr = ps.padded(total), pr.padded(total)
    if not majorizes(ps, pr):
        raise NotMajorized("reached state is not majorized by source")

    segs = _Segs(ps.values, ps.counts, [0.0] * len(ps.values))
    segs.refine_against(pr)
    chain: list[TransferStep] = []
    guard = 0
    while True:
        guard += 1
        if guard > max_families:
            raise RuntimeError("chain construction exceeded family budget")
        step = _next_family(segs)
        if step is None:
            break
        chain.append(step)
    return chain


def _first_mismatch(segs: _Segs):
    """First position whose value differs from its target; None when the
    residual deviation is float dust (then the dust is snapped away)."""
    deviation = sum(c * abs(v - t)
                    for v, c, t in zip(segs.v, segs.c, segs.t))
    if deviation < _DEV_STOP:
        segs.v = list(segs.t)
        return None
    for i, (v, t) in enumerate(zip(segs.v, segs.t)):
        scale = max(abs(v), abs(t), 1e-300)
        if abs(v - t) > _REL_SNAP * scale:
            return i
    return None


def _next_family(segs: _Segs):
    f = _first_mismatch(segs)
    if f is None:
        return None
    # first deficit at or after f, then the last surplus before it
    k = f
    while k < len(segs.v) and segs.v[k] >= segs.t[k] - \
            _REL_SNAP * max(abs(segs.t[k]), 1e-300):
        k += 1
    if k >= len(segs.v):  # pure float dust: snap everything
        segs.v = list(segs.t)
        return None
    j = k - 1
    while j >= 0 and abs(segs.v[j] - segs.t[j]) <= \
            _REL_SNAP * max(abs(segs.t[j]), abs(segs.v[j]), 1e-300):
        j -= 1
    assert j >= 0, "deficit without a preceding surplus"
    a, bt, m_j = segs.v[j], segs.t[j], segs.c[j]
    c, dt, m_k = segs.v[k], segs.t[k], segs.c[k]
    d_don, d_acc = a - bt, dt - c
    off_d = sum(segs.c[:j])
    off_a = sum(segs.c[:k])

    if m_j <= m_k:
        u = m_j
        if d_don <= d_acc * (1 + _REL_SNAP):
            rounds, delta = 1, d_don
        else:
            rounds = max(1, min(int(d_don / d_acc), int(m_k / u)))
            delta = d_acc
        chunked = "acceptor"
        w = delta / (a - c)
    else:
        u = m_k
        if d_acc <= d_don * (1 + _REL_SNAP):
            rounds, delta = 1, d_acc
        else:
            rounds = max(1, min(int(d_acc / d_don), int(m_j / u)))
            delta = d_don
        chunked = "donor"
        w = delta / (a - c)

    step = TransferStep(weight=w, source_block=j, dest_block=k,
                        moved_count=u * rounds, rounds=rounds,
                        donor_offset=off_d, acceptor_offset=off_a,
                        unit_count=u, delta=delta, chunked_side=chunked)
    _apply_family(segs, step)
    return step


def _split_run(segs: _Segs, idx: int, head_count: float):
    """Split run idx into head (head_count) + tail, head first."""
    tail = segs.c[idx] - head_count
    if tail <= _REL_SNAP * segs.c[idx]:
        return
    segs.c[idx] = head_count
    segs.v.insert(idx + 1, segs.v[idx])
    segs.c.insert(idx + 1, tail)
    segs.t.insert(idx + 1, segs.t[idx])
    if segs.tags is not None:
        segs.tags.insert(idx + 1, segs.tags[idx].copy())


def _run_at_offset(segs: _Segs, offset: float) -> int:
    cum = 0.0
    for i, c in enumerate(segs.c):
        if abs(cum - offset) <= 1e-6 * max(1.0, abs(offset)):
            return i
        if cum > offset:
            break
        cum += c
    raise AssertionError(f"no run boundary at offset {offset}")


def _apply_family(segs: _Segs, st: TransferStep):
    """Apply one compressed family to the working runs, in place.

    Closed forms (derivation: telescoping products of per-round affine
    mixes): with T rounds at transfer delta per pair,
      - repeated side moves by T*delta total;
      - every fresh chunk lands at (own value +/- delta), all chunks equal;
      - tag vectors mix with the same coefficients as values, and all
        chunks share one tag vector, so the family stays O(1).
    """
    T, u, delta = st.rounds, st.unit_count, st.delta
    j = _run_at_offset(segs, st.donor_offset)
    # donor may sit in a run larger than needed
    need_d = u if st.chunked_side == "acceptor" else u * T
    _split_run(segs, j, need_d)
    k = _run_at_offset(segs, st.acceptor_offset)
    need_a = u * T if st.chunked_side == "acceptor" else u
    _split_run(segs, k, need_a)

    a, c = segs.v[j], segs.v[k]
    tag_d = segs.tags[j] if segs.tags is not None else None
    tag_a = segs.tags[k] if segs.tags is not None else None

    if st.chunked_side == "acceptor":
        # donor: m states repeated T rounds, acceptor supplies T chunks
        new_donor = _snap(a - T * delta, segs.t[j])
        chunk_val = _snap(c + delta, segs.t[k])
        segs.v[j] = new_donor
        segs.v[k] = chunk_val
        if tag_d is not None:
            # telescoped: donor_tag -> [(vT-c) tag_d + (v0-vT) tag_a]/(v0-c)
            frac = (new_donor - c) / (a - c)
            seg_tag_d = frac * tag_d + (1 - frac) * tag_a
            chunk_tag = tag_a + (delta / (a - c)) * (tag_d - tag_a)
            segs.tags[j] = seg_tag_d
            segs.tags[k] = chunk_tag
    else:
        # acceptor repeated T rounds, donor supplies T chunks
        new_acc = _snap(c + T * delta, segs.t[k])
        chunk_val = _snap(a - delta, segs.t[j])
        segs.v[k] = new_acc
        segs.v[j] = chunk_val
        if tag_d is not None:
            frac = (a - new_acc) / (a - c)
            seg_tag_a = frac * tag_a + (1 - frac) * tag_d
            chunk_tag = tag_d + (delta / (a - c)) * (tag_a - tag_d)
            segs.tags[k] = seg_tag_a
            segs.tags[j] = chunk_tag


def apply_chain(source, chain, reached_hint=None):
    """Run a chain against a source profile; returns the final Profile.

    The target values recorded in the chain are only used for float
    snapping, via reached_hint when provided.
    """
    ps = _sorted_runs(source)
    if reached_hint is not None:
        pr = _sorted_runs(reached_hint)
        total = max(ps.total_count(), pr.total_count())
        ps, pr = ps.padded(total), pr.padded(total)
        segs = _Segs(ps.values, ps.counts, [0.0] * len(ps.values))
        segs.refine_against(pr)
    else:
        segs = _Segs(ps.values, ps.counts, list(ps.values))
    for st in chain:
        _apply_family(segs, st)
    return Profile(segs.v, segs.c)


def chain_entropy_trace(source, chain, reached_hint=None):
    """Entropies of the intermediate states after each family."""
    ps = _sorted_runs(source)
    if reached_hint is not None:
        pr = _sorted_runs(reached_hint)
        total = max(ps.total_count(), pr.total_count())
        ps, pr = ps.padded(total), pr.padded(total)
        segs = _Segs(ps.values, ps.counts, [0.0] * len(ps.values))
        segs.refine_against(pr)
    else:
        segs = _Segs(ps.values, ps.counts, list(ps.values))
    out = [Profile(segs.v, segs.c).entropy()]
    for st in chain:
        _apply_family(segs, st)
        out.append(Profile(segs.v, segs.c).entropy())
    return out
