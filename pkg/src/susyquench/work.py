"""Work statistics: closed forms, many-body transition enumeration, spectra.

The work probability distribution is built by exact enumeration of
particle-hole excitations of the post-quench Fermi sea. Amplitudes are
Slater determinants of overlap submatrices; with A the ground block and
T = A^{-1} B, the amplitude for holes H and particles P is
det(A) * det(T[H, P]) up to a sign that squares away. Cauchy-Binet turns
the same T into exact per-order probability masses (elementary symmetric
polynomials of the Gram spectrum), so everything the threshold drops is
accounted for, not estimated.

All work values are exact integer combinations of squared indices times
E1; records are merged and binned on those integers.
"""

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import CombinatorialCapError, NumericalError
from .kernels import closed_form_available, closed_form_rows, tail_weight_constant

__all__ = [
    "ExcitationRecord",
    "WorkSpectrum",
    "TruncationInfo",
    "ground_state_energy_shift",
    "average_work",
    "irreversible_work",
    "work_scan",
    "many_body_overlap",
    "enumerate_final_states",
    "wpd_finite_T",
    "finite_difference_work",
    "finite_difference_work_profile",
    "spectrum_overlap_series",
    "DEFAULT_THRESHOLD",
    "DEFAULT_MAX_ORDER",
]

DEFAULT_THRESHOLD = 1e-12
DEFAULT_MAX_ORDER = 3
# cap on determinant evaluations in the final stage (and 1/20 of it on
# materialized candidate sets); the flagship N=30 run needs about 2e9
DEFAULT_CANDIDATE_CAP = 6_000_000_000
_CHUNK = 2048
_FD_TARGET_REL = 2.5e-4


# ---------------------------------------------------------------- closed forms

def ground_state_energy_shift(alpha, N, geom):
    """Ground-to-ground energy cost (alpha-1)(N^2 + alpha N) E1."""
    alpha, N = int(alpha), int(N)
    if alpha < 1 or N < 1:
        raise ValueError("need alpha >= 1 and N >= 1")
    return (alpha - 1) * (N * N + alpha * N) * geom.energy_unit


def average_work(alpha, N, geom):
    """<W> = E1 N (N+1) (alpha^2 - alpha)."""
    alpha, N = int(alpha), int(N)
    return N * (N + 1) * (alpha * alpha - alpha) * geom.energy_unit


def irreversible_work(alpha, N, geom):
    """<W_irr> = E1 N^2 (alpha-1)^2; equals <W> - ground shift identically."""
    alpha, N = int(alpha), int(N)
    return N * N * (alpha - 1) ** 2 * geom.energy_unit


def work_scan(alpha_list, N_range, geom):
    """Closed-form table of (N, alpha, <W>, <W_irr>) rows."""
    rows = []
    for alpha in alpha_list:
        for N in N_range:
            rows.append(
                dict(N=int(N), alpha=int(alpha),
                     average_work=average_work(alpha, N, geom),
                     irreversible_work=irreversible_work(alpha, N, geom))
            )
    return rows


# ------------------------------------------------------------------ amplitudes

def many_body_overlap(U, initial_set, final_set):
    """det of the submatrix over 1-based initial rows and final columns."""
    ent = U.entries if hasattr(U, "entries") else np.asarray(U)
    i = np.asarray(sorted(initial_set), dtype=int)
    f = np.asarray(sorted(final_set), dtype=int)
    if i.size != f.size:
        raise ValueError("initial and final sets must have equal size")
    if len(set(initial_set)) != i.size or len(set(final_set)) != f.size:
        raise ValueError("duplicate indices in an occupation set")
    if i.min() < 1 or f.min() < 1 or i.max() > ent.shape[0] or f.max() > ent.shape[1]:
        raise ValueError("occupation index outside the stored overlap block")
    return float(np.linalg.det(ent[np.ix_(i - 1, f - 1)]))


# ----------------------------------------------------------------- record data

@dataclass(frozen=True)
class ExcitationRecord:
    final_occupation: tuple
    order: int
    W: float
    P: float
    w_over_E1: int = 0   # exact integer when both spectra share E1


@dataclass(frozen=True)
class TruncationInfo:
    max_order: int
    M: int
    threshold: float
    order_mass_exact: tuple = ()
    order_mass_emitted: tuple = ()
    dropped_below_threshold: float = 0.0
    dropped_beyond_order: float = 0.0
    det_evaluations: int = 0


class _RecordColumns:
    """Columnar record store; materializes ExcitationRecord objects lazily.

    Millions of records are common at the default threshold, so holes,
    particles, probabilities and integer work values live in flat arrays
    and the dataclass view is built per access.
    """

    def __init__(self, N, holes, parts, prob, order, w_key, W, ground_set=None):
        self.N = int(N)
        self.holes = holes          # (n, r_max) 1-based, -1 padded
        self.parts = parts
        self.prob = prob
        self.order = order
        self.w_key = w_key          # exact integer work key
        self.W = W                  # work value in energy units
        self._ground = ground_set if ground_set is not None else tuple(range(1, self.N + 1))

    def __len__(self):
        return self.prob.size

    def _occupation(self, idx):
        occ = set(self._ground)
        occ.difference_update(int(h) for h in self.holes[idx] if h > 0)
        occ.update(int(p) for p in self.parts[idx] if p > 0)
        return tuple(sorted(occ))

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return [self[i] for i in range(*idx.indices(len(self)))]
        idx = int(idx)
        if idx < 0:
            idx += len(self)
        return ExcitationRecord(
            final_occupation=self._occupation(idx),
            order=int(self.order[idx]),
            W=float(self.W[idx]),
            P=float(self.prob[idx]),
            w_over_E1=int(self.w_key[idx]),
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


@dataclass(frozen=True)
class WorkSpectrum:
    records: object = field(repr=False)
    total_probability: float = 0.0
    first_moment: float = 0.0
    truncation: TruncationInfo = None

    def binned(self):
        """(w_key, probability) aggregated over records sharing a work value."""
        keys = self.records.w_key
        uniq, inv = np.unique(keys, return_inverse=True)
        mass = np.zeros(uniq.size)
        np.add.at(mass, inv, self.records.prob)
        return uniq, mass

    def ground_record(self):
        for i in range(len(self.records)):
            if self.records.order[i] == 0:
                return self.records[i]
        return None


# ------------------------------------------------------- enumeration internals

def _elementary_symmetric(lam, r_max):
    e = np.zeros(r_max + 1)
    e[0] = 1.0
    for x in lam:
        for r in range(r_max, 0, -1):
            e[r] += x * e[r - 1]
    return e


def _pairs_above(cn, floor):
    """Index pairs (i < j) into the descending array cn with cn_i cn_j >= floor."""
    out_i, out_j = [], []
    n = cn.size
    for a in range(n - 1):
        if cn[a] * cn[a + 1] < floor:
            break
        jmax = np.searchsorted(-cn, -(floor / cn[a]), side="right")
        if jmax > a + 1:
            out_i.append(np.full(jmax - a - 1, a, dtype=np.int64))
            out_j.append(np.arange(a + 1, jmax, dtype=np.int64))
    if not out_i:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(out_i), np.concatenate(out_j)


def _triples_above(cn, floor, cap):
    out = [[], [], []]
    total = 0
    n = cn.size
    for a in range(n - 2):
        if cn[a] * cn[a + 1] * cn[a + 2] < floor:
            break
        fa = floor / cn[a]
        for b in range(a + 1, n - 1):
            if cn[b] * cn[b + 1] < fa:
                break
            kmax = np.searchsorted(-cn, -(fa / cn[b]), side="right")
            if kmax > b + 1:
                cnt = kmax - b - 1
                total += cnt
                if total > cap:
                    raise CombinatorialCapError(
                        f"more than {cap} candidate particle triples; raise the "
                        "threshold or the candidate cap"
                    )
                out[0].append(np.full(cnt, a, dtype=np.int64))
                out[1].append(np.full(cnt, b, dtype=np.int64))
                out[2].append(np.arange(b + 1, kmax, dtype=np.int64))
    if not out[0]:
        z = np.empty(0, dtype=np.int64)
        return z, z.copy(), z.copy()
    return tuple(np.concatenate(o) for o in out)


def _quads_above(cn, floor, cap):
    idx = [[], [], [], []]
    total = 0
    n = cn.size
    for a in range(n - 3):
        if cn[a] * cn[a + 1] * cn[a + 2] * cn[a + 3] < floor:
            break
        for b in range(a + 1, n - 2):
            fab = floor / (cn[a] * cn[b])
            if cn[b + 1] * cn[b + 2] < fab:
                break
            for c in range(b + 1, n - 1):
                dmax = np.searchsorted(-cn, -(fab / cn[c]), side="right")
                if dmax <= c + 1:
                    if cn[c] * cn[c + 1] < fab:
                        break
                    continue
                cnt = dmax - c - 1
                total += cnt
                if total > cap:
                    raise CombinatorialCapError(f"more than {cap} candidate particle quadruples")
                idx[0].append(np.full(cnt, a, dtype=np.int64))
                idx[1].append(np.full(cnt, b, dtype=np.int64))
                idx[2].append(np.full(cnt, c, dtype=np.int64))
                idx[3].append(np.arange(c + 1, dmax, dtype=np.int64))
    if not idx[0]:
        z = np.empty(0, dtype=np.int64)
        return z, z.copy(), z.copy(), z.copy()
    return tuple(np.concatenate(o) for o in idx)


def _gram_dots(T, pi, pj, chunk=400_000):
    out = np.empty(pi.size)
    for lo in range(0, pi.size, chunk):
        hi = min(pi.size, lo + chunk)
        out[lo:hi] = np.einsum("kc,kc->c", T[:, pi[lo:hi]], T[:, pj[lo:hi]])
    return out


class _Pipeline:
    """Threshold enumeration of hole/particle excitations of one reference set."""

    def __init__(self, ent, rows, max_order, threshold, cap):
        self.N = rows.size
        self.max_order = int(max_order)
        self.threshold = float(threshold)
        self.cap = int(cap)
        sub = ent[rows, :]
        A = sub[:, rows]
        sign, ld = np.linalg.slogdet(A)
        if sign == 0.0 or ld < -150.0:
            raise NumericalError("reference block too close to singular for the solve route")
        self.detA = sign * math.exp(ld)
        self.detA2 = math.exp(2.0 * ld)
        mask = np.ones(ent.shape[1], dtype=bool)
        mask[rows] = False
        self.rest = np.nonzero(mask)[0]           # 0-based column ids of particle slots
        self.T = np.linalg.solve(A, sub[:, self.rest])
        self.amp_floor = math.sqrt(self.threshold)
        self.det_evals = 0

    def order_masses(self, r_max):
        lam = np.linalg.eigvalsh(self.T @ self.T.T)
        lam = np.clip(lam, 0.0, None)
        e = _elementary_symmetric(lam, min(r_max, self.N))
        masses = self.detA2 * e
        total = self.detA2 * math.exp(float(np.sum(np.log1p(lam))))
        return masses, total

    def _colnorms(self):
        return np.sqrt(np.sum(self.T * self.T, axis=0))

    def run(self):
        """Yields per order r: (hole_position_sets, particle_column_sets, amp^2)."""
        N, T = self.N, self.T
        thr, dA, dA2 = self.threshold, self.detA, self.detA2
        results = {0: (np.empty((1, 0), dtype=np.int64), np.empty((1, 0), dtype=np.int64),
                       np.array([dA2]))}
        if self.max_order >= 1 and T.shape[1] > 0:
            amp2 = (dA * T) ** 2
            h, p = np.nonzero(amp2 >= thr)
            results[1] = (h[:, None], self.rest[p][:, None], amp2[h, p])
            self.det_evals += amp2.size
        cn = self._colnorms()
        order_desc = np.argsort(-cn)
        cns = cn[order_desc]
        if self.max_order >= 2 and N >= 2 and T.shape[1] >= 2:
            results[2] = self._order2(cns, order_desc)
        if self.max_order >= 3 and N >= 3 and T.shape[1] >= 3:
            results[3] = self._order3(cns, order_desc)
        if self.max_order >= 4 and N >= 4 and T.shape[1] >= 4:
            results[4] = self._order4(cns, order_desc)
        return results

    def _check_cap(self, new_evals):
        self.det_evals += int(new_evals)
        if self.det_evals > self.cap:
            raise CombinatorialCapError(
                f"enumeration needs more than {self.cap} determinant evaluations; "
                "raise the threshold, lower max_order, or raise the cap"
            )

    def _order2(self, cns, order_desc):
        T, thr, dA2 = self.T, self.threshold, self.detA2
        floor = self.amp_floor / abs(self.detA)
        i, j = _pairs_above(cns, floor)
        if i.size > self.cap // 20:
            raise CombinatorialCapError(f"{i.size} candidate particle pairs exceed the cap")
        pi, pj = order_desc[i], order_desc[j]
        g = _gram_dots(T, pi, pj)
        keep = dA2 * (cns[i] ** 2 * cns[j] ** 2 - g * g) >= thr
        pi, pj = pi[keep], pj[keep]
        hp = np.array(list(combinations(range(self.N), 2)), dtype=np.int64)
        h0, h1 = hp[:, 0], hp[:, 1]
        self._check_cap(hp.shape[0] * pi.size)
        holes, parts, probs = [], [], []
        for lo in range(0, pi.size, _CHUNK):
            hi = min(pi.size, lo + _CHUNK)
            c0, c1 = T[:, pi[lo:hi]], T[:, pj[lo:hi]]
            d = c0[h0] * c1[h1] - c0[h1] * c1[h0]
            amp2 = dA2 * d * d
            hh, cc = np.nonzero(amp2 >= thr)
            holes.append(hp[hh])
            parts.append(np.stack([pi[lo:hi][cc], pj[lo:hi][cc]], axis=1))
            probs.append(amp2[hh, cc])
        return (np.concatenate(holes) if holes else np.empty((0, 2), dtype=np.int64),
                self.rest[np.concatenate(parts)] if parts else np.empty((0, 2), dtype=np.int64),
                np.concatenate(probs) if probs else np.empty(0))

    def _order3(self, cns, order_desc):
        T, thr, dA2 = self.T, self.threshold, self.detA2
        floor = self.amp_floor / abs(self.detA)
        ia, ib, ic = _triples_above(cns, floor, self.cap // 20)
        pa, pb, pc = order_desc[ia], order_desc[ib], order_desc[ic]
        gab = _gram_dots(T, pa, pb)
        gac = _gram_dots(T, pa, pc)
        gbc = _gram_dots(T, pb, pc)
        na2, nb2, nc2 = cns[ia] ** 2, cns[ib] ** 2, cns[ic] ** 2
        det3 = (na2 * (nb2 * nc2 - gbc * gbc)
                - gab * (gab * nc2 - gbc * gac)
                + gac * (gab * gbc - nb2 * gac))
        keep = dA2 * det3 >= thr
        pa, pb, pc = pa[keep], pb[keep], pc[keep]
        del gab, gac, gbc, det3, na2, nb2, nc2, ia, ib, ic
        N = self.N
        hpair = np.array(list(combinations(range(N), 2)), dtype=np.int64)
        pair_id = np.full((N, N), -1, dtype=np.int64)
        pair_id[hpair[:, 0], hpair[:, 1]] = np.arange(hpair.shape[0])
        htri = np.array(list(combinations(range(N), 3)), dtype=np.int64)
        h0, h1, h2 = htri[:, 0], htri[:, 1], htri[:, 2]
        q12, q02, q01 = pair_id[h1, h2], pair_id[h0, h2], pair_id[h0, h1]
        self._check_cap(htri.shape[0] * pa.size)
        holes, parts, probs = [], [], []
        for lo in range(0, pa.size, _CHUNK):
            hi = min(pa.size, lo + _CHUNK)
            c0, c1, c2 = T[:, pa[lo:hi]], T[:, pb[lo:hi]], T[:, pc[lo:hi]]
            # 2x2 minors of (c1, c2) over all hole pairs, then expand along c0
            m12 = c1[hpair[:, 0]] * c2[hpair[:, 1]] - c1[hpair[:, 1]] * c2[hpair[:, 0]]
            d = c0[h0] * m12[q12] - c0[h1] * m12[q02] + c0[h2] * m12[q01]
            amp2 = dA2 * d * d
            hh, cc = np.nonzero(amp2 >= thr)
            holes.append(htri[hh])
            parts.append(np.stack([pa[lo:hi][cc], pb[lo:hi][cc], pc[lo:hi][cc]], axis=1))
            probs.append(amp2[hh, cc])
        return (np.concatenate(holes) if holes else np.empty((0, 3), dtype=np.int64),
                self.rest[np.concatenate(parts)] if parts else np.empty((0, 3), dtype=np.int64),
                np.concatenate(probs) if probs else np.empty(0))

    def _order4(self, cns, order_desc):
        T, thr, dA2 = self.T, self.threshold, self.detA2
        floor = self.amp_floor / abs(self.detA)
        quads = _quads_above(cns, floor, self.cap // 20)
        p = np.stack([order_desc[q] for q in quads], axis=1) if quads[0].size else np.empty((0, 4), dtype=np.int64)
        if p.shape[0]:
            Gq = np.einsum("kac,kbc->cab", T[:, p.T], T[:, p.T])  # (n,4,4) Gram
            keep = dA2 * np.linalg.det(Gq) >= thr
            p = p[keep]
        hqua = np.array(list(combinations(range(self.N), 4)), dtype=np.int64)
        self._check_cap(hqua.shape[0] * p.shape[0])
        holes, parts, probs = [], [], []
        for row in p:
            cols = T[:, row]                       # (N, 4)
            d = np.linalg.det(cols[hqua])          # (H,)
            amp2 = dA2 * d * d
            sel = np.nonzero(amp2 >= thr)[0]
            holes.append(hqua[sel])
            parts.append(np.tile(row, (sel.size, 1)))
            probs.append(amp2[sel])
        return (np.concatenate(holes) if holes else np.empty((0, 4), dtype=np.int64),
                self.rest[np.concatenate(parts)] if parts else np.empty((0, 4), dtype=np.int64),
                np.concatenate(probs) if probs else np.empty(0))


def _pack_sets(sets_by_order, r_max):
    """Stack per-order (holes, parts, prob) into padded columnar arrays."""
    n_total = sum(v[2].size for v in sets_by_order.values())
    holes = np.full((n_total, r_max), -1, dtype=np.int64)
    parts = np.full((n_total, r_max), -1, dtype=np.int64)
    prob = np.empty(n_total)
    order = np.empty(n_total, dtype=np.int8)
    at = 0
    for r in sorted(sets_by_order):
        h, p, q = sets_by_order[r]
        n = q.size
        if n == 0:
            continue
        holes[at:at + n, :r] = h
        parts[at:at + n, :r] = p
        prob[at:at + n] = q
        order[at:at + n] = r
        at += n
    return holes, parts, prob, order


def enumerate_final_states(N, M, max_order, U, threshold=DEFAULT_THRESHOLD,
                           candidate_cap=DEFAULT_CANDIDATE_CAP,
                           E_from=None, E_to=None):
    """Zero-temperature work spectrum by explicit final-state enumeration.

    Final occupations differ from the final ground set {1..N} by at most
    max_order indices; records below the probability threshold are dropped
    but their exact per-order mass (Cauchy-Binet) stays in the truncation
    metadata. Work values use the quench energies; for same-unit spectra
    the integer value W/E1 is stored exactly.
    """
    N, M, max_order = int(N), int(M), int(max_order)
    ent = U.entries if hasattr(U, "entries") else np.asarray(U)
    ent = ent[:, :M] if M < ent.shape[1] else ent
    if N > ent.shape[0] or N > ent.shape[1]:
        raise ValueError(f"N={N} exceeds the stored overlap block {ent.shape}")
    if max_order > 4:
        raise ValueError("enumeration orders above 4 are not supported")
    geom = getattr(U, "geom", None)
    to_level = getattr(U, "to_level", 1)
    if E_to is None:
        n_to = np.arange(1, ent.shape[1] + 1, dtype=np.int64) + to_level - 1
        E_to = (n_to * n_to) * geom.energy_unit
        to_int = n_to * n_to
    else:
        E_to = np.asarray(E_to, dtype=float)
        to_int = None
    if E_from is None:
        k = np.arange(1, N + 1, dtype=np.int64)
        E_from = (k * k) * geom.energy_unit
        from_int = k * k
    else:
        E_from = np.asarray(E_from, dtype=float)[:N]
        from_int = None

    rows = np.arange(N)
    pipe = _Pipeline(ent, rows, max_order, threshold, candidate_cap)
    masses, total_all = pipe.order_masses(max_order)
    results = pipe.run()
    holes, parts, prob, order = _pack_sets(results, max(max_order, 1))

    # work values: reference w0 plus particle minus hole contributions
    if to_int is not None and from_int is not None:
        unit = geom.energy_unit
        w0 = int(np.sum(to_int[:N]) - np.sum(from_int))
        hole_w = np.where(holes >= 0, to_int[np.clip(holes, 0, None)], 0)
        part_w = np.where(parts >= 0, to_int[np.clip(parts, 0, None)], 0)
        w_key = w0 + np.sum(part_w, axis=1) - np.sum(hole_w, axis=1)
        W = w_key * unit
    else:
        e0 = float(np.sum(E_to[:N]) - np.sum(E_from))
        hole_e = np.where(holes >= 0, E_to[np.clip(holes, 0, None)], 0.0)
        part_e = np.where(parts >= 0, E_to[np.clip(parts, 0, None)], 0.0)
        W = e0 + np.sum(part_e, axis=1) - np.sum(hole_e, axis=1)
        # exact integer key: the final-side sum of squared indices
        n_to = np.arange(1, ent.shape[1] + 1, dtype=np.int64) + to_level - 1
        sq = n_to * n_to
        base = int(np.sum(sq[:N]))
        w_key = base + np.sum(np.where(parts >= 0, sq[np.clip(parts, 0, None)], 0), axis=1) \
            - np.sum(np.where(holes >= 0, sq[np.clip(holes, 0, None)], 0), axis=1)

    # deterministic order: by work value, then excitation order, then index sets
    sort_cols = [holes[:, c] for c in range(holes.shape[1] - 1, -1, -1)]
    sort_cols += [parts[:, c] for c in range(parts.shape[1] - 1, -1, -1)]
    sort_cols += [order, w_key]
    perm = np.lexsort(sort_cols)
    holes, parts = holes[perm] + 1, parts[perm] + 1   # 1-based, padding becomes 0
    prob, order, w_key, W = prob[perm], order[perm], w_key[perm], W[perm]

    emitted = np.zeros(max_order + 1)
    np.add.at(emitted, order, prob)
    dropped_thr = float(np.sum(masses[: max_order + 1]) - np.sum(emitted))
    records = _RecordColumns(N, holes, parts, prob, order, w_key, W)
    info = TruncationInfo(
        max_order=max_order, M=int(ent.shape[1]), threshold=float(threshold),
        order_mass_exact=tuple(float(x) for x in masses),
        order_mass_emitted=tuple(float(x) for x in emitted),
        dropped_below_threshold=dropped_thr,
        dropped_beyond_order=float(total_all - np.sum(masses[: max_order + 1])),
        det_evaluations=pipe.det_evals,
    )
    return WorkSpectrum(
        records=records,
        total_probability=float(np.sum(prob)),
        first_moment=float(np.sum(prob * W)),
        truncation=info,
    )


def spectrum_overlap_series(spectrum, t_grid):
    """sum_records P exp(-i W t); the conjugate of det O_N(t) up to truncation."""
    W = spectrum.records.W
    P = spectrum.records.prob
    t = np.asarray(t_grid, dtype=float)
    out = np.zeros(t.shape, dtype=complex)
    step = max(1, 20_000_000 // max(1, t.size))
    for lo in range(0, W.size, step):
        hi = min(W.size, lo + step)
        out += np.exp(-1j * np.outer(t, W[lo:hi])) @ P[lo:hi]
    return out


# ------------------------------------------------------------------- finite T

def _config_log_weight(holes_1b, parts_1b, base_log, log_n, log_1mn):
    lw = base_log
    for h in holes_1b:
        lw += log_1mn[h - 1] - log_n[h - 1]
    for p in parts_1b:
        lw += log_n[p - 1] - log_1mn[p - 1]
    return lw


def wpd_finite_T(N, M, max_order_initial, max_order_final, thermal, U,
                 threshold=DEFAULT_THRESHOLD, candidate_cap=DEFAULT_CANDIDATE_CAP):
    """Thermal work spectrum: weighted double enumeration, merged on integer W.

    Initial configurations are particle-hole excitations of the Fermi sea
    (up to max_order_initial) inside the thermally retained modes, carrying
    grand-canonical product weights renormalized over the enumerated set.
    Each merged record keeps the occupation set and order of its largest
    contributor. Requires matching energy units on both sides (one box).
    """
    ent = U.entries if hasattr(U, "entries") else np.asarray(U)
    geom = U.geom
    to_level = U.to_level
    if getattr(U, "from_level", 1) != 1 or to_level == 1:
        # both spectra must share one energy unit for the integer merge
        raise ValueError("thermal spectra are supported for bare-box to partner-level quenches")
    N, M = int(N), int(M)
    ent = ent[:, :M] if M < ent.shape[1] else ent
    occ = np.asarray(thermal.occupations, dtype=float)
    m_th = min(occ.size, ent.shape[0])
    occ = occ[:m_th]
    log_n = np.log(np.clip(occ, 1e-300, None))
    log_1mn = np.log(np.clip(1.0 - occ, 1e-300, None))
    base_log = float(np.sum(log_n[:N]) + np.sum(log_1mn[N:]))

    # enumerate initial configurations (holes in the sea, particles above it)
    configs = []
    for qh in range(0, max_order_initial + 1):
        for qp_holes in combinations(range(1, N + 1), qh):
            for qp_parts in combinations(range(N + 1, m_th + 1), qh):
                lw = _config_log_weight(qp_holes, qp_parts, base_log, log_n, log_1mn)
                configs.append((qp_holes, qp_parts, lw))
    lws = np.array([c[2] for c in configs])
    weights = np.exp(lws - np.max(lws))
    weights /= np.sum(weights)

    n_to = np.arange(1, ent.shape[1] + 1, dtype=np.int64) + to_level - 1
    sq_to = n_to * n_to
    k_all = np.arange(1, m_th + 1, dtype=np.int64)
    sq_from = k_all * k_all

    bins = {}
    sea = frozenset(range(1, N + 1))
    for (c_holes, c_parts, _), p_c in zip(configs, weights):
        if p_c < threshold:       # its best record is already below threshold
            continue
        cfg = sorted(sea.difference(c_holes).union(c_parts))
        rows = np.asarray(cfg, dtype=np.int64) - 1
        q = len(c_holes)
        init_int = int(np.sum(sq_from[rows]))
        eff_thr = threshold / p_c
        try:
            pipe = _Pipeline(ent, rows, min(max_order_final + q, 4), eff_thr, candidate_cap)
        except NumericalError:
            continue    # reference block degenerate; everything here is sub-threshold
        results = pipe.run()
        for r, (h, p, amp2) in results.items():
            if amp2.size == 0:
                continue
            # reconstruct final sets relative to this configuration's columns
            for i in range(amp2.size):
                if amp2[i] < eff_thr:
                    continue
                fin = set(cfg)
                for hh in h[i]:
                    fin.discard(cfg[hh])
                for pp in p[i]:
                    fin.add(int(pp) + 1)
                ground_order = sum(1 for m in fin if m > N)
                if ground_order > max_order_final:
                    continue
                fin_t = tuple(sorted(fin))
                w_int = int(sum(int(sq_to[m - 1]) for m in fin_t)) - init_int
                P_rec = float(p_c * amp2[i])
                entry = bins.get(w_int)
                if entry is None:
                    bins[w_int] = [P_rec, P_rec, fin_t, ground_order]
                else:
                    entry[0] += P_rec
                    if P_rec > entry[1]:
                        entry[1], entry[2], entry[3] = P_rec, fin_t, ground_order

    keys = np.array(sorted(bins), dtype=np.int64)
    prob = np.array([bins[k][0] for k in keys])
    reps = [bins[k][2] for k in keys]
    orders = np.array([bins[k][3] for k in keys], dtype=np.int8)
    W = keys * geom.energy_unit
    records = _MergedRecords(N, keys, prob, W, reps, orders)
    info = TruncationInfo(
        max_order=max_order_final, M=int(ent.shape[1]), threshold=float(threshold),
    )
    return WorkSpectrum(
        records=records,
        total_probability=float(np.sum(prob)),
        first_moment=float(np.sum(prob * W)),
        truncation=info,
    )


class _MergedRecords:
    """Thermal records merged on exact integer work; one representative each."""

    def __init__(self, N, w_key, prob, W, reps, order):
        self.N = N
        self.w_key = w_key
        self.prob = prob
        self.W = W
        self.order = order
        self._reps = reps

    def __len__(self):
        return self.prob.size

    def __getitem__(self, idx):
        idx = int(idx)
        if idx < 0:
            idx += len(self)
        return ExcitationRecord(
            final_occupation=self._reps[idx],
            order=int(self.order[idx]),
            W=float(self.W[idx]),
            P=float(self.prob[idx]),
            w_over_E1=int(self.w_key[idx]),
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


# --------------------------------------------------- finite-difference checker

def _fd_step_and_truncation(to_level, K, geom, target_rel):
    """Step small enough that modes invisible to the difference carry less
    than target_rel of the work, per the measured tail law."""
    E1 = geom.energy_unit
    alpha = int(to_level)
    t_c = tail_weight_constant(alpha)
    m_star = t_c * (2 * K + 1) / (6.0 * alpha * (alpha - 1) * E1 * target_rel)
    m_star = int(math.ceil(m_star))
    h = 1.0 / (E1 * m_star**2)
    M = int(math.ceil(2.5 * m_star))
    return h, M


def finite_difference_work_profile(to_level, K, geom, target_rel=_FD_TARGET_REL,
                                   h=None, M=None, block=250_000):
    """O(+h) over K retained rows at a very large truncation, plus the step.

    Column blocks keep memory flat; O(-h) is the complex conjugate, so one
    accumulation serves the central difference for every N <= K at once.
    """
    if not closed_form_available(1, to_level):
        raise ValueError("profile needs an analytic kernel (bare box to level 2..4)")
    if h is None or M is None:
        h_auto, M_auto = _fd_step_and_truncation(to_level, K, geom, target_rel)
        h = h_auto if h is None else h
        M = M_auto if M is None else M
    E1 = geom.energy_unit
    kk = np.arange(1, K + 1)
    O = np.zeros((K, K), dtype=complex)
    for lo in range(1, M + 1, block):
        hi = min(M, lo + block - 1)
        mm = np.arange(lo, hi + 1)
        Ub = closed_form_rows(to_level, kk, mm)
        Et = ((mm + to_level - 1).astype(float)) ** 2 * E1
        O += (Ub * np.exp(1j * Et * h)[None, :]) @ Ub.T
    O *= np.exp(-1j * (kk.astype(float) ** 2 * E1) * h)[None, :]
    return O, float(h), int(M)


def finite_difference_work(to_level, N, geom, target_rel=_FD_TARGET_REL, h=None, M=None):
    """Central-difference slope of the phase of det O_N(t) at t = 0.

    Converges to the average work; the default step resolves enough of the
    spectrum for target_rel relative accuracy (the error scales as sqrt(h),
    so tightening the step is expensive but controlled).
    """
    O_plus, h_used, _ = finite_difference_work_profile(to_level, int(N), geom,
                                                       target_rel=target_rel, h=h, M=M)
    return fd_slope_from_profile(O_plus, h_used, int(N))


def fd_slope_from_profile(O_plus, h, N):
    sp, _ = np.linalg.slogdet(O_plus[:N, :N])
    sm, _ = np.linalg.slogdet(np.conj(O_plus[:N, :N]))
    return (np.angle(sp) - np.angle(sm)) / (2.0 * h)
