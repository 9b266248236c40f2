"""Single-particle layer: energies, wavefunctions, operators, parities."""

import math

import numpy as np
import pytest

import susyquench as sq


E1_L4 = math.pi**2 / 32.0


def test_box_energy_values(geom):
    assert sq.box_energy(1, geom) == pytest.approx(E1_L4, rel=1e-15)
    assert sq.box_energy(2, geom) == pytest.approx(math.pi**2 / 8.0, rel=1e-15)
    assert sq.box_energy(31, geom) == pytest.approx(961 * E1_L4, rel=1e-15)
    assert geom.energy_unit == sq.box_energy(1, geom)


def test_spectrum_shift_exact(geom):
    for alpha in range(1, 5):
        for m in range(1, 30):
            assert sq.hierarchy_energy(alpha, m, geom) == sq.box_energy(m + alpha - 1, geom)


def test_level3_energy_example(geom):
    assert sq.hierarchy_energy(3, 1, geom) == pytest.approx(9 * math.pi**2 / 32, rel=1e-15)


def test_box_wavefunction_values(geom, rule):
    psi1 = sq.box_wavefunction(1, geom)
    psi2 = sq.box_wavefunction(2, geom)
    assert psi1(np.array([0.0]))[0] == pytest.approx(math.sqrt(0.5), rel=1e-14)
    assert psi2(np.array([0.0]))[0] == pytest.approx(0.0, abs=1e-15)
    psi3 = sq.box_wavefunction(3, geom)
    norm = sq.inner_product(psi3, psi3, rule)
    assert norm == pytest.approx(1.0, abs=1e-13)
    assert psi1.parity == "even" and psi2.parity == "odd"


def test_wavefunctions_vanish_at_and_beyond_walls(geom):
    x = np.array([-2.0, 2.0, -2.5, 3.0])
    for alpha in (1, 2, 3, 4):
        s = sq.hierarchy_wavefunction(alpha, 3, geom)
        assert np.all(s(x) == 0.0)


def test_superpotential_values(geom):
    W2 = sq.superpotential(2, geom)
    assert W2(np.array([0.0]))[0] == pytest.approx(0.0, abs=1e-15)
    assert W2(np.array([1.0]))[0] == pytest.approx(math.pi / (4 * math.sqrt(2)), rel=1e-14)
    W3 = sq.superpotential(3, geom)
    assert W3(np.array([1.0]))[0] == pytest.approx(2 * math.pi / (4 * math.sqrt(2)), rel=1e-14)


def test_superpotential_domain_error(geom):
    W2 = sq.superpotential(2, geom)
    with pytest.raises(ValueError):
        W2(np.array([2.0]))
    with pytest.raises(ValueError):
        W2(np.array([-2.1]))


def test_partner_potential_values(geom):
    V2 = sq.partner_potential(2, geom)
    assert V2(np.array([0.0]))[0] == pytest.approx(math.pi**2 / 32, rel=1e-14)
    # monotone divergence toward the walls
    xs = np.array([1.5, 1.8, 1.95, 1.999])
    vals = V2(xs)
    assert np.all(np.diff(vals) > 0) and vals[-1] > 1e4
    V1 = sq.partner_potential(1, geom)
    assert V1(np.array([0.7]))[0] == 0.0
    with pytest.raises(ValueError):
        V2(np.array([2.0]))


def test_orthonormality_all_levels(basis, geom, rule):
    w = rule.weights
    for alpha in range(1, 5):
        block = basis.level_block(alpha, 40, rule.nodes)
        G = (block * w) @ block.T
        assert np.max(np.abs(G - np.eye(40))) < 1e-10, f"level {alpha}"


def test_level2_ground_positive_even(geom, rule):
    s = sq.hierarchy_wavefunction(2, 1, geom)
    assert s(np.array([0.0]))[0] > 0
    assert s.parity == "even"
    assert sq.inner_product(s, s, rule) == pytest.approx(1.0, abs=1e-12)
    # parity selection against the odd second box state
    psi2 = sq.box_wavefunction(2, geom)
    assert abs(sq.inner_product(psi2, s, rule)) < 1e-14


def test_ground_state_annihilation(geom, rule):
    for alpha in (1, 2, 3):
        ground = sq.hierarchy_wavefunction(alpha, 1, geom)
        g = sq.apply_annihilation(alpha, ground, geom)
        assert np.max(np.abs(g(rule.nodes))) < 1e-9, f"level {alpha}"


def test_annihilation_of_second_box_state(geom, rule):
    psi2 = sq.box_wavefunction(2, geom)
    g = sq.apply_annihilation(1, psi2, geom)
    x = rule.nodes
    target = sq.hierarchy_wavefunction(2, 1, geom)(x)
    vals = g(x)
    scale = vals[len(x) // 2] / target[len(x) // 2]
    assert np.max(np.abs(vals - scale * target)) < 1e-9
    # proportional to cos^2(pi x / L), an even function
    assert np.max(np.abs(vals - vals[::-1])) < 1e-10


def test_annihilation_flips_parity(geom, rule):
    x = rule.nodes
    even_state = sq.box_wavefunction(3, geom)      # even parity
    g = sq.apply_annihilation(1, even_state, geom)
    vals = g(x)
    assert np.max(np.abs(vals + vals[::-1])) < 1e-9   # odd function


def test_parity_flip_rule(geom):
    x = np.linspace(-1.9, 1.9, 41)
    for alpha in range(1, 5):
        for m in range(1, 10):
            s = sq.hierarchy_wavefunction(alpha, m, geom)
            base = "even" if (m + alpha - 1) % 2 == 1 else "odd"
            flips = alpha - 1
            expect = base if flips % 2 == 0 else ("odd" if base == "even" else "even")
            assert s.parity == expect
            sig = 1.0 if s.parity == "even" else -1.0
            assert np.max(np.abs(s(x) - sig * s(-x))) < 1e-12


def test_eigenvalue_residual(geom, rule):
    x = rule.nodes
    w = rule.weights
    for alpha in range(1, 5):
        V = sq.partner_potential(alpha, geom)(x)
        shift = sq.hierarchy_energy_shift(alpha, geom)
        for m in range(1, 21):
            psi, _, d2 = sq.wavefunction_derivatives(alpha, m, geom, x)
            E = sq.hierarchy_energy(alpha, m, geom)
            r = -0.5 * d2 + V * psi - (E - shift) * psi
            norm = math.sqrt(float(np.dot(w, r * r)))
            assert norm < 1e-6, f"alpha={alpha} m={m}: {norm:.2e}"


def test_normalization_denominator_guard(geom):
    # valid inputs can never trip it; the guard exists for internal misuse
    s = sq.hierarchy_wavefunction(4, 1, geom)
    assert s.energy == sq.box_energy(4, geom)


def test_basis_cache_and_energies(basis, geom):
    s1 = basis.state(2, 3)
    s2 = basis.state(2, 3)
    assert s1 is s2
    E = basis.energies(3, 5)
    assert np.allclose(E, [sq.hierarchy_energy(3, m, geom) for m in range(1, 6)], rtol=1e-15)
