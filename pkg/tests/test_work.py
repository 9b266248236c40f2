"""Work statistics: closed forms, enumeration, thermal spectra, FD check."""

import itertools
import math

import numpy as np
import pytest

import susyquench as sq
from susyquench.work import fd_slope_from_profile, finite_difference_work_profile


def test_closed_form_table(geom):
    E1 = geom.energy_unit
    assert sq.average_work(2, 30, geom) == pytest.approx(1860 * E1, rel=1e-15)
    assert sq.irreversible_work(2, 30, geom) == pytest.approx(900 * E1, rel=1e-15)
    assert sq.ground_state_energy_shift(2, 30, geom) == pytest.approx(960 * E1, rel=1e-15)
    assert sq.average_work(4, 10, geom) == pytest.approx(10 * 11 * 12 * E1, rel=1e-15)


def test_energy_sum_identity(geom):
    # <W> - <W_irr> = ground shift, exactly, everywhere the scan runs
    for alpha in (2, 3, 4):
        for N in range(1, 101):
            lhs = sq.average_work(alpha, N, geom) - sq.irreversible_work(alpha, N, geom)
            rhs = sq.ground_state_energy_shift(alpha, N, geom)
            assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


def test_work_scan_rows(geom):
    rows = sq.work_scan((2, 3), range(1, 4), geom)
    assert len(rows) == 6
    assert rows[0] == {
        "N": 1, "alpha": 2,
        "average_work": sq.average_work(2, 1, geom),
        "irreversible_work": sq.irreversible_work(2, 1, geom),
    }


def test_first_moment_from_overlap_rows(basis, geom):
    # independent route: <W> = sum_k sum_m U_km^2 (E_m - E_k). The finite
    # column count leaves a positive 1/M tail, so agreement with the closed
    # form means: small deficit at M=60000 AND the deficit halves when M
    # doubles (anything but a pure truncation tail breaks the halving).
    N = 6

    def deficit(alpha, M):
        U = sq.overlap_matrix(basis, 1, alpha, N, M, method="closed-form")
        Em = basis.energies(alpha, M)
        Ek = basis.energies(1, N)
        mom = float(np.sum(U.entries**2 * (Em[None, :] - Ek[:, None])))
        exact = sq.average_work(alpha, N, geom)
        return (exact - mom) / exact

    for alpha in (2, 3, 4):
        d30, d60 = deficit(alpha, 30000), deficit(alpha, 60000)
        assert 0 < d60 < 2.5e-4, f"alpha={alpha}: {d60:.3e}"
        assert d30 / d60 == pytest.approx(2.0, abs=0.05), f"alpha={alpha}"


def test_many_body_overlap_validation(basis):
    U = sq.overlap_matrix(basis, 1, 2, 6, 40)
    with pytest.raises(ValueError):
        sq.many_body_overlap(U, (1, 2, 2), (1, 2, 3))
    with pytest.raises(ValueError):
        sq.many_body_overlap(U, (1, 2), (1, 2, 3))
    with pytest.raises(ValueError):
        sq.many_body_overlap(U, (0, 1), (1, 2))
    with pytest.raises(ValueError):
        sq.many_body_overlap(U, (1, 2), (1, 99))


def _brute_force_amplitude(initial_states, final_states, rule):
    """N-dimensional quadrature of conj(Slater_final) * Slater_initial."""
    N = len(initial_states)
    x, w = rule.nodes, rule.weights
    iv = [s(x) for s in initial_states]
    fv = [s(x) for s in final_states]

    def slater(vals):
        out = np.zeros((x.size,) * N)
        for perm in itertools.permutations(range(N)):
            sign = 1.0
            seen = list(perm)
            for i in range(N):       # permutation parity by counting swaps
                while seen[i] != i:
                    j = seen[i]
                    seen[i], seen[j] = seen[j], seen[i]
                    sign = -sign
            term = vals[perm[0]]
            for i in range(1, N):
                term = np.multiply.outer(term, vals[perm[i]])
            out += sign * term
        return out / math.sqrt(math.factorial(N))

    phi_i = slater(iv)
    phi_f = slater(fv)
    ww = w
    for _ in range(N - 1):
        ww = np.multiply.outer(ww, w)
    return float(np.sum(ww * phi_f * phi_i))


@pytest.mark.parametrize("to_level,final_set", [
    (2, (1, 2)), (2, (1, 3)), (2, (2, 4)), (3, (1, 2)), (3, (2, 3)),
])
def test_brute_force_oracle_N2(basis, geom, to_level, final_set):
    rule = sq.build_quadrature(160, geom)
    U = sq.overlap_matrix(basis, 1, to_level, 2, 8)
    det_amp = sq.many_body_overlap(U, (1, 2), final_set)
    states_i = [sq.box_wavefunction(k, geom) for k in (1, 2)]
    states_f = [sq.hierarchy_wavefunction(to_level, m, geom) for m in final_set]
    brute = _brute_force_amplitude(states_i, states_f, rule)
    assert det_amp == pytest.approx(brute, abs=1e-6)


def test_enumeration_against_direct_determinants(basis, geom):
    N, M = 4, 300
    spec = sq.QuenchSpec(geom=geom, to_level=2, N=N, M=M)
    U, _, _ = sq.quench_overlaps(spec)
    ws = sq.enumerate_final_states(N, M, 3, U, threshold=1e-10)
    assert ws.total_probability > 0.999
    # every emitted record reproduces its direct determinant probability
    rng = np.random.default_rng(7)
    for idx in rng.choice(len(ws.records), size=40, replace=False):
        r = ws.records[int(idx)]
        amp = sq.many_body_overlap(U, range(1, N + 1), r.final_occupation)
        assert r.P == pytest.approx(amp * amp, rel=1e-10, abs=1e-18)
        # integer bookkeeping: W is an exact multiple of E1
        w_int = sum((m + 1) ** 2 for m in r.final_occupation) - sum(
            k**2 for k in range(1, N + 1))
        assert r.w_over_E1 == w_int
        assert r.W == pytest.approx(w_int * geom.energy_unit, rel=1e-14)
        assert r.order == sum(1 for m in r.final_occupation if m > N)


def test_order_masses_are_exact(basis, geom):
    # Cauchy-Binet per-order masses vs explicit sums over all emitted records
    N, M = 3, 240
    spec = sq.QuenchSpec(geom=geom, to_level=3, N=N, M=M)
    U, _, _ = sq.quench_overlaps(spec)
    ws = sq.enumerate_final_states(N, M, 3, U, threshold=1e-14)
    info = ws.truncation
    for r in range(4):
        emitted = float(np.sum(ws.records.prob[ws.records.order == r]))
        assert emitted <= info.order_mass_exact[r] + 1e-15
        assert info.order_mass_exact[r] - emitted < 1e-10
    assert info.dropped_below_threshold >= -1e-15
    assert min(ws.records.W) == pytest.approx(
        sq.ground_state_energy_shift(3, N, geom), rel=1e-14)


def test_work_never_below_ground_shift(basis, geom):
    spec = sq.QuenchSpec(geom=geom, to_level=2, N=5, M=400)
    U, _, _ = sq.quench_overlaps(spec)
    ws = sq.enumerate_final_states(5, 400, 3, U)
    dE0 = sq.ground_state_energy_shift(2, 5, geom)
    assert np.min(ws.records.W) >= dE0 - 1e-12
    assert np.min(ws.records.w_key) == 5 * 5 + 2 * 5  # (alpha-1)(N^2+alpha N)


def test_fourier_consistency_small(geom):
    # sum_records P e^{-iWt} equals conj(det O_N(t)) for the same truncated
    # matrix, up to the mass the enumeration provably dropped
    N, M = 6, 1500
    spec = sq.QuenchSpec(geom=geom, to_level=2, N=N, M=M)
    U, Ef, Et = sq.quench_overlaps(spec)
    ws = sq.enumerate_final_states(N, M, 3, U, threshold=1e-12)
    info = ws.truncation
    bound = info.dropped_below_threshold + info.dropped_beyond_order + 1e-10
    tr = sq.revival_time(geom)
    ts = np.linspace(0.0, 1.5 * tr, 50)
    series = sq.spectrum_overlap_series(ws, ts)
    for t, s in zip(ts, series):
        O = sq.evolution_matrix(U, Ef, Et, t)
        det = np.linalg.det(O[:N, :N])
        assert abs(s - np.conj(det)) <= bound, f"t={t}"


def test_candidate_cap_raises(basis, geom):
    spec = sq.QuenchSpec(geom=geom, to_level=2, N=6, M=600)
    U, _, _ = sq.quench_overlaps(spec)
    with pytest.raises(sq.CombinatorialCapError) as ei:
        sq.enumerate_final_states(6, 600, 3, U, threshold=1e-14, candidate_cap=500)
    assert ei.value.exit_code == 4


def test_wpd_finite_T_basics(geom):
    N = 10
    th = sq.thermal_state(N, 0.05, geom)
    K = max(th.occupations.size, N + 10)
    for to_level in (2, 3):
        spec = sq.QuenchSpec(geom=geom, to_level=to_level, N=N, K=K, M=1600)
        U, _, _ = sq.quench_overlaps(spec, thermal=th)
        ws = sq.wpd_finite_T(N, 1600, 2, 3, th, U, threshold=1e-9)
        assert 0.99 <= ws.total_probability <= 1 + 1e-9
        mean_w = ws.first_moment / sq.average_work(to_level, N, geom)
        assert 0.95 < mean_w < 1.05
        # thermally excited initial states can release energy: lines below
        # the zero-T ground shift must appear, which cannot happen at T=0
        shift = sq.ground_state_energy_shift(to_level, N, geom)
        assert min(r.W for r in ws.records) < shift - 1e-9


def test_wpd_finite_T_reduces_to_zero_T(geom):
    N, M = 5, 500
    th = sq.thermal_state(N, 0.004, geom)
    K = max(th.occupations.size, N + 10)
    spec = sq.QuenchSpec(geom=geom, to_level=2, N=N, K=K, M=M)
    U, _, _ = sq.quench_overlaps(spec, thermal=th)
    cold = sq.wpd_finite_T(N, M, 1, 3, th, U, threshold=1e-10)
    ws0 = sq.enumerate_final_states(N, M, 3, U, threshold=1e-10)
    keys0, mass0 = ws0.binned()
    lookup = dict(zip((int(k) for k in keys0), mass0))
    for i in range(len(cold.records)):
        k = int(cold.records.w_key[i])
        assert lookup.get(k, 0.0) == pytest.approx(float(cold.records.prob[i]), abs=1e-6)


def test_wpd_finite_T_rejects_expansion(geom):
    th = sq.thermal_state(4, 0.05, geom)
    U, _, _ = sq.talbot_quench(sq.ExpansionSpec(3.9, 4.0, 4))
    with pytest.raises(ValueError):
        sq.wpd_finite_T(4, U.M, 1, 2, th, U)


def test_fd_matches_closed_form_small(geom):
    for alpha in (2, 3, 4):
        fd = sq.finite_difference_work(alpha, 5, geom)
        exact = sq.average_work(alpha, 5, geom)
        assert abs(fd - exact) / exact < 1e-3


def test_fd_profile_serves_all_leading_blocks(geom):
    # one accumulated matrix pair answers every N below its size
    O_plus, h, M = finite_difference_work_profile(2, 12, geom)
    assert M > 0 and h > 0
    for N in (1, 4, 12):
        slope = fd_slope_from_profile(O_plus, h, N)
        exact = sq.average_work(2, N, geom)
        assert abs(slope - exact) / exact < 1e-3


def test_fd_requires_kernel(geom):
    with pytest.raises(ValueError):
        sq.finite_difference_work(5, 5, geom)


def test_irreversible_work_via_fd_and_shift(geom):
    # W_irr = (FD slope) - (exact ground shift): same 0.1% headroom
    for alpha in (2, 3):
        N = 8
        fd = sq.finite_difference_work(alpha, N, geom)
        w_irr = fd - sq.ground_state_energy_shift(alpha, N, geom)
        exact = sq.irreversible_work(alpha, N, geom)
        assert abs(w_irr - exact) / exact < 1e-3
