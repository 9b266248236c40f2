"""Sudden box expansion (the comparison quench without a shared spectrum).

A bare box of size L_initial released into a larger box L_final. Overlaps
have a closed sinc form, so no quadrature is involved; the final box sets
the revival clock while the initial box sets the energies being dephased,
and the incommensurate ratio is what kills the many-body revival.
"""

import math
from dataclasses import dataclass

import numpy as np

from .basis import BoxGeometry, box_energy
from .errors import TruncationError
from .overlaps import (DEFAULT_DEFECT_TOLERANCE, DEFAULT_M_CAP, OverlapMatrix,
                       _ADAPT_STEP)

__all__ = [
    "ExpansionSpec",
    "box_box_overlap",
    "talbot_overlap_matrix",
    "talbot_quench",
]


@dataclass(frozen=True)
class ExpansionSpec:
    L_initial: float
    L_final: float
    N: int
    K: int = 0
    M: int = 0

    def __post_init__(self):
        if not (0.0 < self.L_initial <= self.L_final):
            raise ValueError("need 0 < L_initial <= L_final")
        if self.N < 1:
            raise ValueError("need at least one particle")

    @property
    def rows(self):
        return self.K if self.K > 0 else self.N


def box_box_overlap(k_idx, l_idx, L_initial, L_final):
    """Overlap block between centered-box eigenstates of two box sizes.

    Rows are initial-box indices, columns final-box indices (both 1-based
    arrays). Opposite parities give exact zeros; equal parities reduce to
    a pair of sinc terms integrated over the smaller box.
    """
    k = np.asarray(k_idx, dtype=np.int64).reshape(-1, 1)
    l = np.asarray(l_idx, dtype=np.int64).reshape(1, -1)
    a = 0.5 * L_initial
    w1 = k * (math.pi / L_initial)
    w2 = l * (math.pi / L_final)

    def s(w):
        return a * np.sinc(w * (a / math.pi))

    both_odd = (k % 2 == 1) & (l % 2 == 1)
    both_even = (k % 2 == 0) & (l % 2 == 0)
    out = np.zeros(np.broadcast_shapes(k.shape, l.shape))
    pref = 2.0 / math.sqrt(L_initial * L_final)
    plus, minus = s(w1 - w2), s(w1 + w2)
    np.copyto(out, pref * (plus + minus), where=both_odd)
    np.copyto(out, pref * (plus - minus), where=both_even)
    return out


def _defect(U):
    return 1.0 - np.sum(U * U, axis=1)


def talbot_overlap_matrix(spec, M=0, defect_tolerance=DEFAULT_DEFECT_TOLERANCE,
                          m_cap=DEFAULT_M_CAP, row_weights=None, mass_tolerance=None):
    """Overlap matrix for the expansion, truncation chosen by completeness.

    With M = 0 the column count grows (multiples of the adaptive step)
    until every row defect, or the weighted defect mass when row_weights
    is given, clears the tolerance.
    """
    K = spec.rows
    kk = np.arange(1, K + 1)
    if M and M > 0:
        ll = np.arange(1, int(M) + 1)
        U = box_box_overlap(kk, ll, spec.L_initial, spec.L_final)
        chosen = int(M)
    else:
        def metric(d):
            if row_weights is not None:
                return float(np.dot(row_weights[:K], d))
            return float(np.max(d))
        tol = mass_tolerance if row_weights is not None else defect_tolerance
        m_try = _ADAPT_STEP * max(2, math.ceil(2 * K / _ADAPT_STEP))
        U = None
        while True:
            ll = np.arange(1, m_try + 1)
            U = box_box_overlap(kk, ll, spec.L_initial, spec.L_final)
            if metric(_defect(U)) < tol:
                break
            if m_try >= m_cap:
                raise TruncationError(
                    f"defect metric {metric(_defect(U)):.3e} above {tol:.1e} "
                    f"at the column cap {m_cap}"
                )
            m_try = min(m_cap, 2 * m_try)
        # smallest multiple of the step that still clears the tolerance
        S = np.cumsum(U * U, axis=1)
        chosen = U.shape[1]
        for m in range(_ADAPT_STEP, U.shape[1] + 1, _ADAPT_STEP):
            if metric(1.0 - S[:, m - 1]) < tol:
                chosen = m
                break
        U = U[:, :chosen]
    geom = BoxGeometry(spec.L_final)
    return OverlapMatrix(
        from_level=1, to_level=1, K=K, M=chosen, entries=U,
        completeness_defect=_defect(U), geom=geom, rule_order=0,
        defect_tolerance=float(defect_tolerance),
    )


def talbot_quench(spec, M=0, defect_tolerance=DEFAULT_DEFECT_TOLERANCE,
                  m_cap=DEFAULT_M_CAP, thermal=None, mass_tolerance=None):
    """(U, E_initial, E_final) for evolving the expansion with the final clock.

    Pass a thermal state built on the initial box to weight the truncation
    by occupations; energies come out in ordinary units (the final box's
    revival time is 4 L_final^2 / pi).
    """
    row_weights = None
    if thermal is not None:
        occ = np.asarray(thermal.occupations)
        K = max(spec.rows, occ.size, spec.N + 10)
        spec = ExpansionSpec(spec.L_initial, spec.L_final, spec.N, K=K, M=spec.M)
        row_weights = np.ones(K)
        row_weights[: occ.size] = np.clip(occ, 1e-16, None)
        if mass_tolerance is None:
            mass_tolerance = 5e-6
    U = talbot_overlap_matrix(spec, M=M or spec.M, defect_tolerance=defect_tolerance,
                              m_cap=m_cap, row_weights=row_weights,
                              mass_tolerance=mass_tolerance)
    gi = BoxGeometry(spec.L_initial)
    gf = BoxGeometry(spec.L_final)
    E_from = np.array([box_energy(k, gi) for k in range(1, U.K + 1)])
    E_to = np.array([box_energy(l, gf) for l in range(1, U.M + 1)])
    return U, E_from, E_to
