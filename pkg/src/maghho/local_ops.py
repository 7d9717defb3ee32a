"""Per-cell HHO operators.

For one cell T and degree k, the hybrid unknown is (u_T, (u_F)_F) with
u_T in P^k(T) and u_F in P^k(F).  This module builds:

* the interpolator (componentwise L2 projection),
* the degree-(k+1) potential reconstruction, defined by
  (grad p, grad w)_T = (grad u_T, grad w)_T + sum_F (u_F - u_T, dn w)_F
  for all w in P^{k+1}(T), closed by matching means with u_T,
* the face-jump stabilization s_T,
* the discrete covariant gradient G in P^k(T)^2, defined against vector
  test polynomials tau by
  (G u, tau)_T = (u_T, -i div tau - A_T . tau)_T - i sum_F (u_F, tau.n)_F
  with A_T the componentwise L2 projection of the vector potential (the
  integration-by-parts face term is -i sum_F (u_F - u_T, tau.n)_F),
* a cheaper gradient variant, the P^k projection of -i grad(p) - A_T p
  with p the reconstruction,
* the discrete gauge transformation and the full local Hermitian form
  a_T = (G u, G v)_T + s_T(u, v) + (V u_T, v_T)_T.

Matrices act on the local coefficient vector ordered cell block first,
then face blocks in cell face order; M[i, j] = a(phi_j, phi_i) so that
v^H A u equals a_T(u, v) under the (u, v) = int u conj(v) convention.
All construction is pure per cell; cells can be processed concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_solve

from .functional import (CellBasis, FaceBasis, Projector, mass_matrix,
                         polygon_quadrature, segment_quadrature, space_dim)


@dataclass(frozen=True)
class FieldSpec:
    """Physics inputs: vector potential A, scalar potential V, gauge chi.

    Closures are vectorized: they take an (n, 2) point array and return
    (n, 2) for vector fields, (n,) for scalars.  ``a_inf`` and ``v_inf``
    are sup-norm bounds of A and V over the computational domain; they
    feed the spectral floor -(a_inf^2 + v_inf) and the default eigen
    shift.  ``None`` closures mean identically zero.
    """

    A: Optional[Callable] = None
    div_A: Optional[Callable] = None
    V: Optional[Callable] = None
    chi: Optional[Callable] = None
    grad_chi: Optional[Callable] = None
    curl_A: Optional[Callable] = None
    a_inf: float = 0.0
    v_inf: float = 0.0

    def with_potential(self, V, v_inf: float) -> "FieldSpec":
        return replace(self, V=V, v_inf=v_inf)

    def gauge_floor(self) -> float:
        """Lower bound of the Rayleigh quotients, -(|A|_inf^2 + |V|_inf)."""
        return -(self.a_inf ** 2 + self.v_inf)


ZERO_FIELDS = FieldSpec()


@dataclass(frozen=True)
class LocalDofLayout:
    k: int
    n_cell: int
    face_dims: tuple
    n_loc: int

    @classmethod
    def create(cls, k: int, n_faces: int) -> "LocalDofLayout":
        n_cell = space_dim(k)
        face_dims = tuple([k + 1] * n_faces)
        return cls(k, n_cell, face_dims, n_cell + sum(face_dims))

    def face_slice(self, i: int) -> slice:
        start = self.n_cell + sum(self.face_dims[:i])
        return slice(start, start + self.face_dims[i])


class _FaceData:
    """Per-face quadrature, basis tables and exact trace maps."""

    def __init__(self, ctx, face_id: int):
        mesh, cell_id = ctx.mesh, ctx.cell_id
        f = mesh.faces[face_id]
        self.face_id = face_id
        self.h = f.diameter
        self.normal = f.normal_from(cell_id)
        p0, p1 = mesh.face_vertices(face_id)
        self.rule = segment_quadrature(p0, p1, ctx.face_order)
        # face basis tied to the face frame, identical for both incident cells
        self.basis = FaceBasis(ctx.k, f.midpoint, f.tangent, f.diameter)
        self.proj = Projector(self.basis, self.rule)
        self.phi = self.proj.values                       # (nq, k+1)
        self.mass = self.proj.mass
        w = self.rule.weights
        self.cell_k = ctx.basis_k.eval(self.rule.points)  # traces of cell bases
        self.cell_k1 = ctx.basis_k1.eval(self.rule.points)
        self.cell_k1_dn = ctx.basis_k1.grad(self.rule.points) @ self.normal
        # exact face-coefficient maps (traces have degree <= k, k+1)
        self.trace_k = self.proj.solve(mass_matrix(self.phi, w, self.cell_k))
        self.proj_k1 = self.proj.solve(mass_matrix(self.phi, w, self.cell_k1))


class CellContext:
    """Workspace for one cell: quadrature, bases, and HHO operators.

    Everything heavier than geometry is a cached property, so cheap uses
    (interpolation, norms) do not pay for the full operator build.
    """

    def __init__(self, mesh, cell_id: int, k: int, fieldspec: FieldSpec = None,
                 quad_extra: int = 0):
        if k < 0:
            raise ValueError("k must be >= 0")
        self.mesh = mesh
        self.cell_id = cell_id
        self.k = k
        self.fieldspec = ZERO_FIELDS if fieldspec is None else fieldspec
        self.cell = mesh.cells[cell_id]
        # max(2k+3, 3k+1) integrates every operator product exactly for k <= 3
        self.cell_order = max(2 * k + 3, 3 * k + 1) + quad_extra
        self.face_order = 2 * k + 3 + quad_extra
        self.coords = mesh.cell_vertices(cell_id)
        self.basis_k = CellBasis(k, self.cell.centroid, self.cell.diameter)
        self.basis_k1 = CellBasis(k + 1, self.cell.centroid, self.cell.diameter)
        self.layout = LocalDofLayout.create(k, len(self.cell.face_ids))

    # -- quadrature and basis tables ------------------------------------

    @cached_property
    def rule(self):
        return polygon_quadrature(self.coords, self.cell_order)

    @cached_property
    def Nk(self):
        return self.basis_k.eval(self.rule.points)

    @cached_property
    def Gk(self):
        return self.basis_k.grad(self.rule.points)

    @cached_property
    def Nk1(self):
        return self.basis_k1.eval(self.rule.points)

    @cached_property
    def Gk1(self):
        return self.basis_k1.grad(self.rule.points)

    @cached_property
    def proj_k(self):
        return Projector(self.basis_k, self.rule, values=self.Nk)

    @cached_property
    def mass_k(self):
        return self.proj_k.mass

    @cached_property
    def proj_k1(self):
        return Projector(self.basis_k1, self.rule, values=self.Nk1)

    @cached_property
    def stiff_k(self):
        w = self.rule.weights
        return np.einsum("q,qid,qjd->ij", w, self.Gk, self.Gk)

    @cached_property
    def stiff_k1(self):
        w = self.rule.weights
        return np.einsum("q,qid,qjd->ij", w, self.Gk1, self.Gk1)

    @cached_property
    def faces(self):
        return [_FaceData(self, fid) for fid in self.cell.face_ids]

    @cached_property
    def reduce_k1_to_k(self):
        """Coefficient map of the L2 projection P^{k+1}(T) -> P^k(T)."""
        w = self.rule.weights
        return self.proj_k.solve(mass_matrix(self.Nk, w, self.Nk1))

    @cached_property
    def potential_coeffs(self):
        """Componentwise projection A_T of the vector potential, (2, dim_k)."""
        if self.fieldspec.A is None:
            return None
        avals = np.asarray(self.fieldspec.A(self.rule.points), dtype=float)
        return np.vstack([self.proj_k.project_values(avals[:, c]) for c in (0, 1)])

    def potential_values(self, a_coeffs=None):
        """A_T sampled at the cell quadrature points, (nq, 2)."""
        a_coeffs = self.potential_coeffs if a_coeffs is None else a_coeffs
        if a_coeffs is None:
            return None
        return self.Nk @ np.asarray(a_coeffs).T

    # -- operators -------------------------------------------------------

    @cached_property
    def reconstruction(self):
        return potential_reconstruction(self)

    @cached_property
    def stab_jumps(self):
        """Per-face jump factors (h_F, face mass, jump matrix) of s_T."""
        P = self.reconstruction
        lay = self.layout
        delta_T = self.reduce_k1_to_k @ P
        delta_T[:, :lay.n_cell] -= np.eye(lay.n_cell)
        jumps = []
        for i, fd in enumerate(self.faces):
            jump = fd.proj_k1 @ P - fd.trace_k @ delta_T
            jump[:, lay.face_slice(i)] -= np.eye(lay.face_dims[i])
            jumps.append((fd.h, fd.mass, jump))
        return jumps

    @cached_property
    def stabilization(self):
        return stabilization(self)

    @cached_property
    def gradient(self):
        return covariant_gradient(self)

    @cached_property
    def gradient_cheap(self):
        return covariant_gradient_cheap(self)

def interpolate_local(u, ctx: CellContext) -> np.ndarray:
    """Hybrid interpolant: cell and face L2 projections of a closure."""
    parts = [ctx.proj_k.project(u)]
    for fd in ctx.faces:
        parts.append(fd.proj.project(u))
    return np.concatenate(parts)


def potential_reconstruction(ctx: CellContext) -> np.ndarray:
    """Reconstruction matrix P: local DOFs -> P^{k+1}(T) coefficients.

    Solves the cellwise Neumann problem with a mean-value Lagrange row;
    raises on degenerate cells (singular bordered system).
    """
    lay = ctx.layout
    dk1 = ctx.basis_k1.dim
    w = ctx.rule.weights
    rhs = np.zeros((dk1 + 1, lay.n_loc))
    # volumetric part (grad u_T, grad w)_T
    rhs[:dk1, :lay.n_cell] = np.einsum("q,qid,qjd->ij", w, ctx.Gk1, ctx.Gk)
    for i, fd in enumerate(ctx.faces):
        wf = fd.rule.weights
        dn = fd.cell_k1_dn                           # (nq, dk1)
        rhs[:dk1, :lay.n_cell] -= np.einsum("q,qi,qj->ij", wf, dn, fd.cell_k)
        rhs[:dk1, lay.face_slice(i)] = np.einsum("q,qi,qj->ij", wf, dn, fd.phi)
    # mean constraint (p - u_T, 1)_T = 0
    ones_k1 = w @ ctx.Nk1
    rhs[dk1, :lay.n_cell] = w @ ctx.Nk
    system = np.zeros((dk1 + 1, dk1 + 1))
    system[:dk1, :dk1] = ctx.stiff_k1
    system[:dk1, dk1] = ones_k1
    system[dk1, :dk1] = ones_k1
    try:
        sol = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            f"degenerate cell {ctx.cell_id}: reconstruction system singular") from exc
    return sol[:dk1]


def stabilization(ctx: CellContext, P: np.ndarray = None) -> np.ndarray:
    """Face-jump penalty s_T, Hermitian PSD, zero on P^{k+1} interpolants.

    Realizes sum_F h_F^{-1} ((d_F - d_T) u, (d_F - d_T) v)_F with
    d_T u = pi_T^k(p u - u_T) and d_F u = pi_F^k(p u - u_F).
    """
    if P is not None:
        ctx.__dict__.setdefault("reconstruction", P)
    lay = ctx.layout
    S = np.zeros((lay.n_loc, lay.n_loc))
    for h, mass, jump in ctx.stab_jumps:
        S += (jump.T @ mass @ jump) / h
    return 0.5 * (S + S.T)


def stabilization_energy(ctx: CellContext, uhat: np.ndarray) -> float:
    """s_T(u, u) evaluated through the face jumps (exact PSD floor).

    Summing h_F^{-1} |jump|_F^2 keeps consistency errors at the square of
    the jump roundoff, far below what the assembled matrix resolves.
    """
    total = 0.0
    for h, mass, jump in ctx.stab_jumps:
        e = jump @ uhat
        total += float(np.real(np.conj(e) @ (mass @ e))) / h
    return total


def covariant_gradient(ctx: CellContext, a_coeffs=None) -> np.ndarray:
    """Discrete covariant gradient matrix, stacked (2*dim_k, n_loc) complex.

    Row block c holds the c-th vector component of G in the cell basis.
    ``a_coeffs`` overrides the projected potential (2, dim_k); ``None``
    takes it from the context fieldspec.
    """
    lay = ctx.layout
    dk = lay.n_cell
    w = ctx.rule.weights
    a_coeffs = ctx.potential_coeffs if a_coeffs is None else a_coeffs
    avals = ctx.potential_values(a_coeffs)
    G = np.empty((2 * dk, lay.n_loc), dtype=complex)
    for c in (0, 1):
        rhs = np.zeros((dk, lay.n_loc), dtype=complex)
        # conjugation in the second slot flips the sign of the i factors
        rhs[:, :lay.n_cell] = 1j * np.einsum("q,qi,qj->ij", w, ctx.Gk[:, :, c], ctx.Nk)
        if avals is not None:
            rhs[:, :lay.n_cell] -= np.einsum("q,qi,qj->ij", w * avals[:, c],
                                             ctx.Nk, ctx.Nk)
        for i, fd in enumerate(ctx.faces):
            wf = fd.rule.weights
            rhs[:, lay.face_slice(i)] = -1j * fd.normal[c] * np.einsum(
                "q,qi,qj->ij", wf, fd.cell_k, fd.phi)
        G[c * dk:(c + 1) * dk] = cho_solve(ctx.proj_k._cho, rhs)
    return G


def covariant_gradient_cheap(ctx: CellContext, a_coeffs=None,
                             P: np.ndarray = None) -> np.ndarray:
    """Gradient variant reusing the reconstruction: pi_k(-i grad p - A_T p)."""
    P = ctx.reconstruction if P is None else P
    lay = ctx.layout
    dk = lay.n_cell
    w = ctx.rule.weights
    a_coeffs = ctx.potential_coeffs if a_coeffs is None else a_coeffs
    avals = ctx.potential_values(a_coeffs)
    G = np.empty((2 * dk, lay.n_loc), dtype=complex)
    for c in (0, 1):
        rhs = -1j * np.einsum("q,qi,qj->ij", w, ctx.Nk, ctx.Gk1[:, :, c]) + 0j
        if avals is not None:
            rhs -= np.einsum("q,qi,qj->ij", w * avals[:, c], ctx.Nk, ctx.Nk1)
        G[c * dk:(c + 1) * dk] = cho_solve(ctx.proj_k._cho, rhs) @ P
    return G


def gauge_transform_local(uhat: np.ndarray, chi, ctx: CellContext) -> np.ndarray:
    """Discrete gauge transformation: projections of e^{i chi} times u.

    ``chi`` is a real-valued vectorized closure.  Constant phases commute
    exactly with the projections; varying phases are resolved by the cell
    and face quadrature rules.
    """
    lay = ctx.layout
    out = np.empty_like(uhat, dtype=complex)
    phase = np.exp(1j * np.asarray(chi(ctx.rule.points)))
    vals = (ctx.Nk @ uhat[:lay.n_cell]) * phase
    out[:lay.n_cell] = ctx.proj_k.project_values(vals)
    for i, fd in enumerate(ctx.faces):
        sl = lay.face_slice(i)
        phase = np.exp(1j * np.asarray(chi(fd.rule.points)))
        out[sl] = fd.proj.project_values((fd.phi @ uhat[sl]) * phase)
    return out


@dataclass(frozen=True)
class LocalOperators:
    """Bundle of the per-cell matrices used by the global assembly."""

    cell_id: int
    layout: LocalDofLayout
    P: np.ndarray               # (dim P^{k+1}, n_loc), real
    G: np.ndarray               # (2 dim P^k, n_loc), complex
    S: np.ndarray               # (n_loc, n_loc), real symmetric PSD
    Aloc: np.ndarray            # (n_loc, n_loc), complex Hermitian
    Mloc: np.ndarray            # cell-block mass (dim P^k, dim P^k)


def local_form(ctx: CellContext, cheap_gradient: bool = False) -> LocalOperators:
    """Full local Hermitian form: gradient part + stabilization + V mass."""
    lay = ctx.layout
    P = ctx.reconstruction
    G = ctx.gradient_cheap if cheap_gradient else ctx.gradient
    S = stabilization(ctx, P)
    dk = lay.n_cell
    A = S.astype(complex)
    for c in (0, 1):
        Gc = G[c * dk:(c + 1) * dk]
        A += Gc.conj().T @ (ctx.mass_k @ Gc)
    if ctx.fieldspec.V is not None:
        vvals = np.asarray(ctx.fieldspec.V(ctx.rule.points), dtype=float)
        A[:dk, :dk] += np.einsum("q,qi,qj->ij", ctx.rule.weights * vvals,
                                 ctx.Nk, ctx.Nk)
    A = 0.5 * (A + A.conj().T)
    return LocalOperators(cell_id=ctx.cell_id, layout=lay, P=P, G=G, S=S,
                          Aloc=A, Mloc=ctx.mass_k)
