"""Concrete fields and reference solutions.

Three vector-potential gauges of one uniform field B e_z (symmetric,
Landau, and a shifted "smooth" gauge), the Fock-Darwin oscillator
energies they must reproduce, the Aharonov-Bohm solenoid field and
wavepacket, and manufactured sources for convergence studies.

All closures are vectorized over an (n, 2) point array.  The covariant
operator is (-i grad - A), so with unit constants the source expansion
for (-i grad - A)^2 u + V u reads

    f = -lap(u) + i div(A) u + 2i A . grad(u) + |A|^2 u + V u.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .local_ops import FieldSpec

GAUGE_NAMES = ("sym", "landau", "smooth")


def _sample_sup_norm(A, bounds, n: int = 512) -> float:
    """Sup of |A| on an n x n grid over the rectangle."""
    xs = np.linspace(bounds[0], bounds[1], n)
    ys = np.linspace(bounds[2], bounds[3], n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    vals = np.asarray(A(pts))
    return float(np.sqrt((vals ** 2).sum(axis=1)).max())


@dataclass(frozen=True)
class GaugeCase:
    """One vector-potential gauge of the uniform field B, tied to 'sym'.

    ``fieldspec.chi`` holds the gauge function with A = A_sym + grad chi
    (zero for 'sym' itself).
    """

    name: str
    B: float
    fieldspec: FieldSpec

    @property
    def chi(self):
        return self.fieldspec.chi

    @property
    def grad_chi(self):
        return self.fieldspec.grad_chi


def gauge(name: str, B: float, bounds=(-4.0, 4.0, -4.0, 4.0)) -> GaugeCase:
    """Build one of the three gauges; |A|_inf is sampled over ``bounds``."""
    if name not in GAUGE_NAMES:
        raise ValueError(f"unknown gauge '{name}' (use one of {GAUGE_NAMES})")
    B = float(B)
    if name == "sym":
        A = lambda p: 0.5 * B * np.column_stack([-p[:, 1], p[:, 0]])
        chi = lambda p: np.zeros(len(p))
        grad_chi = lambda p: np.zeros((len(p), 2))
    elif name == "landau":
        A = lambda p: np.column_stack([-B * p[:, 1], np.zeros(len(p))])
        chi = lambda p: -0.5 * B * p[:, 0] * p[:, 1]
        grad_chi = lambda p: -0.5 * B * p[:, [1, 0]]
    else:
        A = lambda p: np.column_stack([-0.5 * B * p[:, 1] + 0.1,
                                       0.5 * B * p[:, 0] + 0.1])
        chi = lambda p: 0.1 * (p[:, 0] + p[:, 1])
        grad_chi = lambda p: np.full((len(p), 2), 0.1)
    spec = FieldSpec(A=A, div_A=lambda p: np.zeros(len(p)),
                     curl_A=lambda p: np.full(len(p), B),
                     chi=chi, grad_chi=grad_chi,
                     a_inf=_sample_sup_norm(A, bounds))
    return GaugeCase(name=name, B=B, fieldspec=spec)


def harmonic_potential(omega0: float):
    """Isotropic confinement V(x, y) = omega0^2 (x^2 + y^2) / 2."""
    return lambda p: 0.5 * omega0 ** 2 * (p[:, 0] ** 2 + p[:, 1] ** 2)


def harmonic_sup(omega0: float, bounds) -> float:
    """Sup of the harmonic potential over a rectangle (corner maximum)."""
    r2 = max(x ** 2 for x in (bounds[0], bounds[1])) + \
        max(y ** 2 for y in (bounds[2], bounds[3]))
    return 0.5 * omega0 ** 2 * r2


def fock_darwin_energy(n: int, m: int, B: float, omega0: float) -> float:
    """Planar oscillator-in-field level sqrt(B^2 + 2 w0^2)(2n+|m|+1) - mB."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return float(np.sqrt(B ** 2 + 2.0 * omega0 ** 2) * (2 * n + abs(m) + 1) - m * B)


def fock_darwin_levels(count: int, B: float, omega0: float) -> np.ndarray:
    """The lowest ``count`` planar levels, ascending (with multiplicity)."""
    levels = [fock_darwin_energy(n, m, B, omega0)
              for n in range(count + 1) for m in range(-count - 1, count + 2)]
    return np.sort(levels)[:count]


@dataclass(frozen=True)
class FockDarwinConfig:
    """Truncated-domain oscillator-in-field eigenvalue study."""

    omega0: float = 1.0
    B: float = 1.0
    L: float = 4.0
    n: int = 0
    m: int = 0

    @property
    def bounds(self):
        return (-self.L, self.L, -self.L, self.L)

    def reference_energy(self) -> float:
        return fock_darwin_energy(self.n, self.m, self.B, self.omega0)

    def fieldspec(self, gauge_name: str = "sym") -> FieldSpec:
        g = gauge(gauge_name, self.B, bounds=self.bounds)
        return g.fieldspec.with_potential(harmonic_potential(self.omega0),
                                          harmonic_sup(self.omega0, self.bounds))


def ab_vector_potential(flux: float, solenoid_radius: float = 0.5) -> FieldSpec:
    """Irrotational solenoid field A = flux/(2 pi) (-y, x)/r^2 outside r_s.

    Evaluations deep inside the solenoid (r < r_s/2) raise, guarding
    against quadrature points leaking into the excluded hole; points in
    the thin shell between the polygonal hole boundary and the circle are
    legitimate.  div A = 0 and curl A = 0 analytically.
    """
    flux = float(flux)
    r_min = 0.5 * solenoid_radius

    def guard(p):
        r2 = p[:, 0] ** 2 + p[:, 1] ** 2
        if np.any(r2 < r_min ** 2):
            raise ValueError("vector potential evaluated inside the solenoid")
        return r2

    if flux == 0.0:
        return FieldSpec(a_inf=0.0)

    def A(p):
        r2 = guard(p)
        return (flux / (2.0 * np.pi)) * np.column_stack([-p[:, 1], p[:, 0]]) / r2[:, None]

    def curl(p):
        # d_x A_y - d_y A_x = c [ (r^2 - 2x^2) + (r^2 - 2y^2) ] / r^4 = 0
        r2 = guard(p)
        c = flux / (2.0 * np.pi)
        return c * ((r2 - 2 * p[:, 0] ** 2) + (r2 - 2 * p[:, 1] ** 2)) / r2 ** 2

    return FieldSpec(A=A, div_A=lambda p: np.zeros(len(p)), curl_A=curl,
                     a_inf=flux / (2.0 * np.pi * solenoid_radius))


def gaussian_packet(x0: float, sigma: float, k0: float):
    """Gaussian wavepacket centered at (x0, 0) moving in +x."""
    def psi0(p):
        r2 = (p[:, 0] - x0) ** 2 + p[:, 1] ** 2
        return np.exp(-r2 / (2.0 * sigma ** 2)) * np.exp(1j * k0 * p[:, 0])
    return psi0


@dataclass(frozen=True)
class ABConfig:
    """Aharonov-Bohm interference setup (2D reduction)."""

    flux: float = np.pi
    bounds: tuple = (-5.0, 5.0, -2.0, 2.0)
    solenoid_radius: float = 0.5
    x0: float = -3.5
    sigma: float = 0.8
    k0: float = 3.0
    screen_x: float = 3.0
    t_end: float = 1.49

    def packet(self):
        return gaussian_packet(self.x0, self.sigma, self.k0)

    def fieldspec(self) -> FieldSpec:
        return ab_vector_potential(self.flux, self.solenoid_radius)


@dataclass(frozen=True)
class ManufacturedCase:
    """Exact solution with closures for its derivatives and field data."""

    u: object
    grad_u: object
    laplacian_u: object
    fieldspec: FieldSpec
    bounds: tuple = (0.0, 1.0, 0.0, 1.0)

    @property
    def source(self):
        return manufactured_source(self)


def manufactured_source(case: ManufacturedCase):
    """Assemble f = (-i grad - A)^2 u + V u from the closure data."""
    fs = case.fieldspec

    def f(p):
        out = -np.asarray(case.laplacian_u(p), dtype=complex)
        u = np.asarray(case.u(p), dtype=complex)
        if fs.A is not None:
            a = np.asarray(fs.A(p))
            gu = np.asarray(case.grad_u(p))
            out = out + 2j * (a * gu).sum(axis=1) + (a ** 2).sum(axis=1) * u
            if fs.div_A is not None:
                out = out + 1j * np.asarray(fs.div_A(p)) * u
        if fs.V is not None:
            out = out + np.asarray(fs.V(p)) * u
        return out
    return f


def default_manufactured(B: float = 1.0, omega0: float = 1.0) -> ManufacturedCase:
    """u = sin(pi x) sin(pi y) e^{i(x+y)} on the unit square.

    Vanishes on the boundary (strong Dirichlet elimination compatible);
    paired with the symmetric gauge and the harmonic confinement.
    """
    bounds = (0.0, 1.0, 0.0, 1.0)

    def u(p):
        return np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1]) \
            * np.exp(1j * (p[:, 0] + p[:, 1]))

    def grad_u(p):
        x, y = p[:, 0], p[:, 1]
        s = np.sin(np.pi * x) * np.sin(np.pi * y)
        sx = np.pi * np.cos(np.pi * x) * np.sin(np.pi * y)
        sy = np.pi * np.sin(np.pi * x) * np.cos(np.pi * y)
        e = np.exp(1j * (x + y))
        return np.column_stack([e * (sx + 1j * s), e * (sy + 1j * s)])

    def lap_u(p):
        x, y = p[:, 0], p[:, 1]
        s = np.sin(np.pi * x) * np.sin(np.pi * y)
        sx = np.pi * np.cos(np.pi * x) * np.sin(np.pi * y)
        sy = np.pi * np.sin(np.pi * x) * np.cos(np.pi * y)
        e = np.exp(1j * (x + y))
        return e * (-2.0 * np.pi ** 2 * s + 2j * (sx + sy) - 2.0 * s)

    g = gauge("sym", B, bounds=bounds)
    spec = g.fieldspec.with_potential(harmonic_potential(omega0),
                                      harmonic_sup(omega0, bounds))
    return ManufacturedCase(u=u, grad_u=grad_u, laplacian_u=lap_u,
                            fieldspec=spec, bounds=bounds)
