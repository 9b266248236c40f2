"""Analytic eigenbasis of the 1D box and its ladder of partner potentials.

Everything lives on the centered interval (-L/2, L/2) with hbar = m = 1.
Level alpha = 1 is the bare box; level alpha removes the lowest alpha - 1
box states, so energy(alpha, m) = E1 * (m + alpha - 1)^2 exactly.

Wavefunctions of level alpha are evaluated in closed form,

    psi_m^(alpha)(x) = sign * norm * cos(pi x / L)^alpha * C_{m-1}^{(alpha)}(-sin(pi x / L)),

with C a Gegenbauer polynomial. This product form is finite and smooth on
the whole closed interval (no 0/0 ratios near the walls), and its first
and second derivatives are available analytically, which keeps
orthonormality and eigenvalue residuals at quadrature precision.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError

__all__ = [
    "BoxGeometry",
    "HierarchyLevel",
    "SingleParticleState",
    "Superpotential",
    "HierarchyBasis",
    "box_energy",
    "box_wavefunction",
    "superpotential",
    "partner_potential",
    "apply_annihilation",
    "hierarchy_wavefunction",
    "hierarchy_energy",
    "hierarchy_energy_shift",
    "wavefunction_derivatives",
]

DEFAULT_ALPHA_MAX = 4


@dataclass(frozen=True)
class BoxGeometry:
    """Box width L, centered at the origin."""

    L: float
    center: float = 0.0

    def __post_init__(self):
        if not (self.L > 0):
            raise ValueError(f"box width must be positive, got L={self.L}")
        if self.center != 0.0:
            raise ValueError("geometry is fixed to a centered box")

    @property
    def half(self):
        return self.L / 2

    @property
    def energy_unit(self):
        """Ground-state energy E1 of the bare box."""
        return math.pi**2 / (2 * self.L**2)


@dataclass(frozen=True)
class HierarchyLevel:
    alpha: int

    def __post_init__(self):
        if self.alpha < 1:
            raise ValueError(f"hierarchy level must be >= 1, got {self.alpha}")


def _parity_of(m):
    return "even" if m % 2 == 1 else "odd"


def _std_sign(n):
    """Sign relating sin(n(pi x/L + pi/2)) to the usual cos/sin convention."""
    return 1.0 if n % 4 in (0, 1) else -1.0


def _gegenbauer(j, alpha, t):
    """C_j^{(alpha)}(t) for array t, by upward recurrence."""
    t = np.asarray(t, dtype=float)
    c_prev = np.ones_like(t)
    if j == 0:
        return c_prev
    c = 2.0 * alpha * t
    for i in range(2, j + 1):
        c, c_prev = (2.0 * (i + alpha - 1) * t * c - (i + 2 * alpha - 2) * c_prev) / i, c
    return c


def _gegenbauer_sweep(alpha, j_max, t):
    """All C_j^{(alpha)}(t) for j = 0..j_max as a (j_max+1, len(t)) array."""
    t = np.asarray(t, dtype=float)
    out = np.empty((j_max + 1, t.size))
    out[0] = 1.0
    if j_max >= 1:
        out[1] = 2.0 * alpha * t
    for i in range(2, j_max + 1):
        out[i] = (2.0 * (i + alpha - 1) * t * out[i - 1] - (i + 2 * alpha - 2) * out[i - 2]) / i
    return out


def _norm_const(alpha, m, L):
    """Normalization of cos^alpha * C_{m-1}^{(alpha)} on (-L/2, L/2)."""
    j = m - 1
    log_n2 = (
        math.lgamma(j + 1)
        + math.log(j + alpha)
        + 2 * math.lgamma(alpha)
        + (2 * alpha - 1) * math.log(2.0)
        - math.log(L)
        - math.lgamma(j + 2 * alpha)
    )
    return math.exp(0.5 * log_n2)


def box_energy(n, geom):
    """Energy n^2 pi^2 / (2 L^2) of box state n >= 1."""
    n = int(n)
    if n < 1:
        raise ValueError(f"box state index must be >= 1, got {n}")
    return (n * n) * geom.energy_unit


def hierarchy_energy(alpha, m, geom):
    """Physical energy of state m at level alpha: integer shift, then one float multiply."""
    n = int(m) + int(alpha) - 1
    return (n * n) * geom.energy_unit


def hierarchy_energy_shift(alpha, geom):
    """Constant offset between the physical spectrum and the factorized
    Hamiltonian built from the level-alpha superpotential: (alpha-1)^2 E1."""
    return (alpha - 1) ** 2 * geom.energy_unit


@dataclass(frozen=True)
class SingleParticleState:
    """Normalized eigenstate; callable, with an analytic derivative attached."""

    level: HierarchyLevel
    m: int
    energy: float
    parity: str
    evaluator: object = field(repr=False)
    derivative: object = field(repr=False)

    def __call__(self, x):
        return self.evaluator(x)


class Superpotential:
    """Generator of the level-alpha partner pair: (alpha-1)(pi/(sqrt2 L)) tan(pi x/L)."""

    def __init__(self, alpha, geom):
        if alpha < 2:
            raise ValueError(f"superpotential is defined for levels >= 2, got {alpha}")
        self.level = HierarchyLevel(alpha)
        self.geom = geom
        self._amp = (alpha - 1) * math.pi / (math.sqrt(2.0) * geom.L)

    def _check_domain(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) >= self.geom.half):
            raise ValueError("superpotential diverges at the walls; evaluate strictly inside (-L/2, L/2)")
        return x

    def __call__(self, x):
        x = self._check_domain(x)
        return self._amp * np.tan(math.pi * x / self.geom.L)

    def derivative(self, x):
        x = self._check_domain(x)
        return self._amp * (math.pi / self.geom.L) / np.cos(math.pi * x / self.geom.L) ** 2


def superpotential(alpha, geom):
    return Superpotential(int(alpha), geom)


def partner_potential(alpha, geom):
    """Potential of level alpha: W^2 + W'/sqrt(2) for alpha >= 2, zero for alpha = 1.

    Equals (pi^2/(2L^2)) * (alpha(alpha-1) sec^2(pi x/L) - (alpha-1)^2); its
    spectrum is the physical one minus hierarchy_energy_shift(alpha).
    """
    alpha = int(alpha)
    if alpha < 1:
        raise ValueError(f"level must be >= 1, got {alpha}")
    half = geom.half

    def V(x):
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) >= half):
            raise ValueError("potential evaluated at or beyond the walls")
        if alpha == 1:
            return np.zeros_like(x)
        sec2 = 1.0 / np.cos(math.pi * x / geom.L) ** 2
        return geom.energy_unit * (alpha * (alpha - 1) * sec2 - (alpha - 1) ** 2)

    return V


def _state_arrays(alpha, m, geom, x, order=0):
    """psi and, if asked, its x-derivatives, on array x. Zero outside the open box."""
    x = np.asarray(x, dtype=float)
    L = geom.L
    inside = np.abs(x) < geom.half
    s = np.where(inside, np.cos(math.pi * x / L), 0.0)   # sin(u) with u = pi x/L + pi/2
    c = -np.sin(math.pi * x / L)                          # cos(u)
    j = m - 1
    n = m + alpha - 1
    pref = _std_sign(n) * (-1.0) ** (alpha - 1) * _norm_const(alpha, m, L)
    cj = _gegenbauer(j, alpha, c)
    psi = pref * s**alpha * cj
    if order == 0:
        return np.where(inside, psi, 0.0)
    # d/dx = (pi/L) d/du with d/du[s^a C_j(c)] = a s^(a-1) c C_j - 2a s^(a+1) C_{j-1}^{(a+1)}
    cj1 = _gegenbauer(j - 1, alpha + 1, c) if j >= 1 else np.zeros_like(c)
    du = alpha * s ** (alpha - 1) * c * cj - 2 * alpha * s ** (alpha + 1) * cj1
    d1 = pref * (math.pi / L) * du
    if order == 1:
        return np.where(inside, psi, 0.0), np.where(inside, d1, 0.0)
    cj2 = _gegenbauer(j - 2, alpha + 2, c) if j >= 2 else np.zeros_like(c)
    d2u = (
        -alpha * s**alpha * cj
        - 2 * alpha * (2 * alpha + 1) * s**alpha * c * cj1
        + 4 * alpha * (alpha + 1) * s ** (alpha + 2) * cj2
    )
    if alpha > 1:  # the s^(alpha-2) term vanishes identically for alpha = 1
        d2u = d2u + alpha * (alpha - 1) * s ** (alpha - 2) * c**2 * cj
    d2 = pref * (math.pi / L) ** 2 * d2u
    return (np.where(inside, psi, 0.0), np.where(inside, d1, 0.0), np.where(inside, d2, 0.0))


def box_wavefunction(n, geom):
    """Bare-box state n: sqrt(2/L) cos(n pi x/L) for odd n, sin for even n."""
    n = int(n)
    if n < 1:
        raise ValueError(f"box state index must be >= 1, got {n}")
    return hierarchy_wavefunction(1, n, geom)


def hierarchy_wavefunction(alpha, m, geom):
    """Normalized state m >= 1 of level alpha >= 1.

    Identical to (alpha-1)-fold ladder descent applied to box state
    m + alpha - 1, divided by sqrt(prod_j (E_{m+alpha-1} - E_j)), but
    evaluated through the closed product form above.
    """
    alpha, m = int(alpha), int(m)
    if alpha < 1 or m < 1:
        raise ValueError(f"need alpha >= 1 and m >= 1, got alpha={alpha}, m={m}")
    n = m + alpha - 1
    if alpha >= 2:
        # shift-independent normalization denominator; positive for all valid inputs
        denom = math.prod((n * n - a * a) for a in range(1, alpha))
        if denom <= 0:
            raise NumericalError(f"normalization denominator not positive for alpha={alpha}, m={m}")
    energy = hierarchy_energy(alpha, m, geom)

    def evaluator(x, _a=alpha, _m=m, _g=geom):
        return _state_arrays(_a, _m, _g, x, order=0)

    def derivative(x, _a=alpha, _m=m, _g=geom):
        return _state_arrays(_a, _m, _g, x, order=1)[1]

    return SingleParticleState(
        level=HierarchyLevel(alpha),
        m=m,
        energy=energy,
        parity=_parity_of(m),
        evaluator=evaluator,
        derivative=derivative,
    )


def wavefunction_derivatives(alpha, m, geom, x):
    """(psi, psi', psi'') on array x, all analytic. Used by residual checks."""
    return _state_arrays(int(alpha), int(m), geom, x, order=2)


def apply_annihilation(level_from, f, geom):
    """One ladder step g = f'/sqrt(2) + W^(level_from+1) f, flipping parity.

    Uses an attached analytic derivative when f has one, otherwise a
    fourth-order central difference with a step well inside the interval.
    """
    level_from = int(level_from)
    if level_from < 1:
        raise ValueError(f"source level must be >= 1, got {level_from}")
    W = Superpotential(level_from + 1, geom)
    fval = f.evaluator if isinstance(f, SingleParticleState) else f
    fder = getattr(f, "derivative", None)

    def g(x):
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) >= geom.half):
            raise ValueError("ladder output evaluated at or beyond the walls")
        if fder is not None:
            df = fder(x)
        else:
            h = np.minimum(1e-6 * geom.L, 0.4 * (geom.half - np.abs(x)))  # stay inside the box
            df = (fval(x - 2 * h) - 8 * fval(x - h) + 8 * fval(x + h) - fval(x + 2 * h)) / (12 * h)
        return df / math.sqrt(2.0) + W(x) * fval(x)

    return g


class HierarchyBasis:
    """Immutable cache of states over levels 1..alpha_max for one geometry."""

    def __init__(self, geom, alpha_max=DEFAULT_ALPHA_MAX):
        if alpha_max < 1:
            raise ValueError(f"alpha_max must be >= 1, got {alpha_max}")
        self.geom = geom
        self.alpha_max = int(alpha_max)
        self._cache = {}

    def state(self, alpha, m):
        alpha, m = int(alpha), int(m)
        if alpha > self.alpha_max:
            raise ValueError(f"level {alpha} exceeds alpha_max={self.alpha_max}")
        key = (alpha, m)
        if key not in self._cache:
            self._cache[key] = hierarchy_wavefunction(alpha, m, self.geom)
        return self._cache[key]

    def energy(self, alpha, m):
        return hierarchy_energy(alpha, m, self.geom)

    def energies(self, alpha, m_max):
        n = np.arange(1, int(m_max) + 1) + int(alpha) - 1
        return (n * n) * self.geom.energy_unit

    def level_block(self, alpha, m_max, x):
        """Values of psi_m^(alpha) for m = 1..m_max on array x, shape (m_max, len(x)).

        One shared Gegenbauer recurrence sweep; this is what makes large
        quadrature overlap matrices affordable.
        """
        alpha, m_max = int(alpha), int(m_max)
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) < self.geom.half
        s = np.where(inside, np.cos(math.pi * x / self.geom.L), 0.0)
        c = -np.sin(math.pi * x / self.geom.L)
        C = _gegenbauer_sweep(alpha, m_max - 1, c)
        m = np.arange(1, m_max + 1)
        n = m + alpha - 1
        signs = np.where((n % 4 == 0) | (n % 4 == 1), 1.0, -1.0) * (-1.0) ** (alpha - 1)
        norms = np.array([_norm_const(alpha, int(mm), self.geom.L) for mm in m])
        block = (signs * norms)[:, None] * s[None, :] ** alpha * C
        return np.where(inside[None, :], block, 0.0)
