import numpy as np
import pytest
from scipy.integrate import quad

from maghho.local_ops import (CellContext, FieldSpec, covariant_gradient,
                              covariant_gradient_cheap, gauge_transform_local,
                              interpolate_local, local_form,
                              stabilization_energy)
from maghho.mesh import generate_cartesian

from conftest import random_polygon, single_cell_mesh


def make_ctx(coords, k, fieldspec=None):
    return CellContext(single_cell_mesh(coords), 0, k, fieldspec=fieldspec)


def ones(p):
    return np.ones(len(p))


class TestInterpolate:
    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_reproduces_degree_k(self, k, rng):
        ctx = make_ctx(random_polygon(rng, "quad"), k)
        c = rng.standard_normal(ctx.basis_k.dim) + 1j * rng.standard_normal(ctx.basis_k.dim)
        u = lambda p: ctx.basis_k.eval(p) @ c
        uhat = interpolate_local(u, ctx)
        assert np.abs(uhat[:ctx.layout.n_cell] - c).max() < 1e-12 * np.abs(c).max()
        # face blocks represent the exact traces
        for i, fd in enumerate(ctx.faces):
            vals = fd.phi @ uhat[ctx.layout.face_slice(i)]
            assert np.abs(vals - u(fd.rule.points)).max() < 1e-11 * np.abs(c).max()

    def test_zero(self):
        ctx = make_ctx(np.array([[0, 0], [1, 0], [0.5, 1]]), 1)
        uhat = interpolate_local(lambda p: np.zeros(len(p)), ctx)
        assert np.abs(uhat).max() == 0.0

    def test_packet_trace_vs_adaptive_quadrature(self):
        # oracle: 1D adaptive quadrature of the trace projection on a face
        k0, sigma, x0 = 3.0, 0.8, -0.25
        u = lambda p: np.exp(-((p[:, 0] - x0) ** 2 + p[:, 1] ** 2)
                             / (2 * sigma ** 2)) * np.exp(1j * k0 * p[:, 0])
        mesh = single_cell_mesh(np.array([[0, 0], [0.5, 0], [0.5, 0.5], [0, 0.5]]))
        ctx = CellContext(mesh, 0, 1, quad_extra=8)   # resolve the oscillation
        uhat = interpolate_local(u, ctx)
        fd = ctx.faces[0]
        p0, p1 = ctx.mesh.face_vertices(fd.face_id)

        def trace(s):
            pt = (p0 + s * (p1 - p0)).reshape(1, 2)
            return u(pt)[0]

        length = np.linalg.norm(p1 - p0)
        mid, tang, h = fd.basis.midpoint, fd.basis.tangent, fd.basis.scale
        coeffs = []
        for j in range(2):
            def phi_j(s):
                pt = p0 + s * (p1 - p0)
                return (np.dot(pt - mid, tang) / h) ** j
            re = quad(lambda s: (trace(s) * phi_j(s)).real, 0, 1, epsabs=1e-13)[0]
            im = quad(lambda s: (trace(s) * phi_j(s)).imag, 0, 1, epsabs=1e-13)[0]
            coeffs.append((re + 1j * im) * length)
        # assemble the 2x2 face mass exactly: entries int phi_i phi_j
        M = np.empty((2, 2))
        for a in range(2):
            for b in range(2):
                def f(s):
                    pt = p0 + s * (p1 - p0)
                    val = (np.dot(pt - mid, tang) / h)
                    return val ** (a + b)
                M[a, b] = quad(f, 0, 1, epsabs=1e-14)[0] * length
        oracle = np.linalg.solve(M, np.array(coeffs))
        got = uhat[ctx.layout.face_slice(0)]
        assert np.abs(got - oracle).max() < 1e-9


class TestReconstruction:
    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    def test_identity_on_pk1(self, k, rng):
        for kind in ("triangle", "quad", "clipped"):
            ctx = make_ctx(random_polygon(rng, kind), k)
            c = rng.standard_normal(ctx.basis_k1.dim) \
                + 1j * rng.standard_normal(ctx.basis_k1.dim)
            uhat = interpolate_local(lambda p: ctx.basis_k1.eval(p) @ c, ctx)
            rec = ctx.reconstruction @ uhat
            assert np.abs(rec - c).max() < 1e-10 * np.abs(c).max()

    def test_constant(self, rng):
        ctx = make_ctx(random_polygon(rng, "quad"), 1)
        uhat = interpolate_local(lambda p: np.full(len(p), 2.0 - 1.0j), ctx)
        rec = ctx.reconstruction @ uhat
        expect = np.zeros(ctx.basis_k1.dim, dtype=complex)
        expect[0] = 2.0 - 1.0j
        assert np.abs(rec - expect).max() < 1e-12

    def test_k0_linear_on_unit_square(self):
        mesh = generate_cartesian((0, 1, 0, 1), 1, 1)
        ctx = CellContext(mesh, 0, 0)
        uhat = interpolate_local(lambda p: p[:, 0] + p[:, 1], ctx)
        rec = ctx.reconstruction @ uhat
        pts = np.array([[0.15, 0.85], [0.6, 0.3], [1.0, 1.0]])
        vals = ctx.basis_k1.eval(pts) @ rec
        assert np.abs(vals - (pts[:, 0] + pts[:, 1])).max() < 1e-12


class TestStabilization:
    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    def test_vanishes_on_interpolants(self, k, rng):
        ctx = make_ctx(random_polygon(rng, "quad"), k)
        c = rng.standard_normal(ctx.basis_k1.dim)
        uhat = interpolate_local(lambda p: ctx.basis_k1.eval(p) @ c, ctx)
        assert stabilization_energy(ctx, uhat) < 1e-20 * max(1, np.abs(uhat).max() ** 2)

    def test_positive_on_face_perturbation(self, rng):
        ctx = make_ctx(random_polygon(rng, "quad"), 1)
        uhat = interpolate_local(lambda p: p[:, 0], ctx).astype(complex)
        uhat[ctx.layout.face_slice(0)] += 1e-3
        assert stabilization_energy(ctx, uhat) > 1e-10

    def test_matrix_psd_and_matches_energy(self, rng):
        ctx = make_ctx(random_polygon(rng, "clipped"), 2)
        S = ctx.stabilization
        assert np.linalg.eigvalsh(S).min() > -1e-12
        v = rng.standard_normal(ctx.layout.n_loc) + 1j * rng.standard_normal(ctx.layout.n_loc)
        direct = stabilization_energy(ctx, v)
        via_matrix = float(np.real(np.conj(v) @ S @ v))
        assert via_matrix == pytest.approx(direct, rel=1e-10, abs=1e-14)

    def test_brute_force_delta_formula(self, rng):
        # oracle: evaluate the jump integrals with an independent rule
        from maghho.functional import segment_quadrature
        k = 1
        ctx = make_ctx(np.array([[0, 0], [1.1, 0], [1.2, 0.9], [-0.1, 1.0]]), k)
        v = rng.standard_normal(ctx.layout.n_loc) + 1j * rng.standard_normal(ctx.layout.n_loc)
        p_coeff = ctx.reconstruction @ v
        total = 0.0
        for i, fd in enumerate(ctx.faces):
            p0, p1 = ctx.mesh.face_vertices(fd.face_id)
            rule = segment_quadrature(p0, p1, 2 * k + 9)   # much higher order
            # delta_T = pi_T^k(p - u_T) evaluated on the face
            dT_coeff = ctx.reduce_k1_to_k @ p_coeff - v[:ctx.layout.n_cell]
            dT_vals = ctx.basis_k.eval(rule.points) @ dT_coeff
            # delta_TF = pi_F^k(p - u_F)
            from maghho.functional import Projector, face_basis_for
            fb = face_basis_for(p0, p1, k)
            pr = Projector(fb, rule)
            p_vals = ctx.basis_k1.eval(rule.points) @ p_coeff
            uF_vals = fd.basis.eval(rule.points) @ v[ctx.layout.face_slice(i)]
            dTF_coeff = pr.project_values(p_vals - uF_vals)
            dTF_vals = fb.eval(rule.points) @ dTF_coeff
            diff = dTF_vals - dT_vals
            total += (rule.weights * np.abs(diff) ** 2).sum() / fd.h
        assert stabilization_energy(ctx, v) == pytest.approx(total, rel=1e-9)


class TestCovariantGradient:
    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_zero_potential_equals_gradient(self, k, rng):
        ctx = make_ctx(random_polygon(rng, "triangle"), k)
        c = rng.standard_normal(ctx.basis_k1.dim) + 1j * rng.standard_normal(ctx.basis_k1.dim)
        uhat = interpolate_local(lambda p: ctx.basis_k1.eval(p) @ c, ctx)
        g = covariant_gradient(ctx, a_coeffs=np.zeros((2, ctx.layout.n_cell))) @ uhat
        grad = np.einsum("qid,i->qd", ctx.basis_k1.grad(ctx.rule.points), c)
        dk = ctx.layout.n_cell
        expect = np.concatenate([ctx.proj_k.project_values(-1j * grad[:, 0]),
                                 ctx.proj_k.project_values(-1j * grad[:, 1])])
        assert np.abs(g - expect).max() < 1e-10 * max(1, np.abs(expect).max())

    def test_constant_potential_on_constant(self, rng):
        ctx = make_ctx(random_polygon(rng, "quad"), 1)
        dk = ctx.layout.n_cell
        a = np.zeros((2, dk))
        a[0, 0] = 1.0                      # A = (1, 0)
        uhat = interpolate_local(ones, ctx)
        g = covariant_gradient(ctx, a_coeffs=a) @ uhat
        expect = np.zeros(2 * dk, dtype=complex)
        expect[0] = -1.0
        assert np.abs(g - expect).max() < 1e-12

    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    def test_projection_identity_polynomial_data(self, k, rng):
        # oracle: independent projection of -i grad u - A u (polynomial data)
        ctx = make_ctx(random_polygon(rng, "quad"), k)
        dk = ctx.layout.n_cell
        cu = rng.standard_normal(dk) + 1j * rng.standard_normal(dk)
        a_coeffs = rng.standard_normal((2, dk))
        uhat = interpolate_local(lambda p: ctx.basis_k.eval(p) @ cu, ctx)
        g = covariant_gradient(ctx, a_coeffs=a_coeffs) @ uhat
        pts = ctx.rule.points
        uvals = ctx.basis_k.eval(pts) @ cu
        grad = np.einsum("qid,i->qd", ctx.basis_k.grad(pts), cu)
        avals = ctx.Nk @ a_coeffs.T
        target = -1j * grad - avals * uvals[:, None]
        expect = np.concatenate([ctx.proj_k.project_values(target[:, 0]),
                                 ctx.proj_k.project_values(target[:, 1])])
        assert np.abs(g - expect).max() < 1e-10 * max(1, np.abs(expect).max())

    def test_zero_potential_decomposition(self, rng):
        # G[A] u = G[0] u - pi(A_T u_T), an exact algebraic identity
        ctx = make_ctx(random_polygon(rng, "clipped"), 2)
        dk = ctx.layout.n_cell
        a_coeffs = rng.standard_normal((2, dk))
        v = rng.standard_normal(ctx.layout.n_loc) + 1j * rng.standard_normal(ctx.layout.n_loc)
        gA = covariant_gradient(ctx, a_coeffs=a_coeffs) @ v
        g0 = covariant_gradient(ctx, a_coeffs=np.zeros((2, dk))) @ v
        avals = ctx.Nk @ a_coeffs.T
        uvals = ctx.Nk @ v[:dk]
        corr = np.concatenate([ctx.proj_k.project_values(avals[:, 0] * uvals),
                               ctx.proj_k.project_values(avals[:, 1] * uvals)])
        assert np.abs(gA - (g0 - corr)).max() < 1e-11 * max(1, np.abs(g0).max())

    def test_gradient_projection_identity_vs_reconstruction(self, rng):
        # (G[0] u, grad q) = (-i grad p u, grad q) for q in P^{k+1}
        k = 2
        ctx = make_ctx(random_polygon(rng, "quad"), k)
        dk = ctx.layout.n_cell
        v = rng.standard_normal(ctx.layout.n_loc) + 1j * rng.standard_normal(ctx.layout.n_loc)
        g = covariant_gradient(ctx, a_coeffs=np.zeros((2, dk))) @ v
        p_coeff = ctx.reconstruction @ v
        w = ctx.rule.weights
        gvals = np.column_stack([ctx.Nk @ g[:dk], ctx.Nk @ g[dk:]])
        pgrad = np.einsum("qid,i->qd", ctx.Gk1, p_coeff)
        for i in range(ctx.basis_k1.dim):
            qgrad = ctx.Gk1[:, i, :]
            lhs = (w * (gvals * qgrad).sum(1)).sum()
            rhs = (w * ((-1j * pgrad) * qgrad).sum(1)).sum()
            assert abs(lhs - rhs) < 1e-11 * max(1, abs(rhs))


class TestCheapGradient:
    def test_zero_potential(self, rng):
        ctx = make_ctx(random_polygon(rng, "quad"), 1)
        dk = ctx.layout.n_cell
        c = rng.standard_normal(ctx.basis_k1.dim)
        uhat = interpolate_local(lambda p: ctx.basis_k1.eval(p) @ c, ctx)
        gc = covariant_gradient_cheap(ctx, a_coeffs=np.zeros((2, dk))) @ uhat
        g = covariant_gradient(ctx, a_coeffs=np.zeros((2, dk))) @ uhat
        assert np.abs(gc - g).max() < 1e-10

    def test_constant_potential_on_constant(self, rng):
        ctx = make_ctx(random_polygon(rng, "triangle"), 1)
        dk = ctx.layout.n_cell
        a = np.zeros((2, dk))
        a[0, 0] = 1.0
        uhat = interpolate_local(ones, ctx)
        gc = covariant_gradient_cheap(ctx, a_coeffs=a) @ uhat
        expect = np.zeros(2 * dk, dtype=complex)
        expect[0] = -1.0
        assert np.abs(gc - expect).max() < 1e-11

    def test_matches_direct_quadrature(self, rng):
        # oracle: project -i grad(p) - A p with explicit integrals
        k = 1
        ctx = make_ctx(random_polygon(rng, "quad"), k)
        dk = ctx.layout.n_cell
        a_coeffs = rng.standard_normal((2, dk))
        v = rng.standard_normal(ctx.layout.n_loc) + 1j * rng.standard_normal(ctx.layout.n_loc)
        gc = covariant_gradient_cheap(ctx, a_coeffs=a_coeffs) @ v
        p_coeff = ctx.reconstruction @ v
        pts, w = ctx.rule.points, ctx.rule.weights
        pvals = ctx.Nk1 @ p_coeff
        pgrad = np.einsum("qid,i->qd", ctx.Gk1, p_coeff)
        avals = ctx.Nk @ a_coeffs.T
        target = -1j * pgrad - avals * pvals[:, None]
        expect = np.concatenate([ctx.proj_k.project_values(target[:, 0]),
                                 ctx.proj_k.project_values(target[:, 1])])
        assert np.abs(gc - expect).max() < 1e-10 * max(1, np.abs(expect).max())


class TestGaugeTransform:
    def test_constant_phase(self, rng):
        ctx = make_ctx(random_polygon(rng, "quad"), 2)
        v = rng.standard_normal(ctx.layout.n_loc) + 1j * rng.standard_normal(ctx.layout.n_loc)
        out = gauge_transform_local(v, lambda p: np.full(len(p), 0.7), ctx)
        assert np.abs(out - np.exp(0.7j) * v).max() < 1e-12 * np.abs(v).max()

    def test_zero_phase_identity(self, rng):
        ctx = make_ctx(random_polygon(rng, "triangle"), 1)
        v = rng.standard_normal(ctx.layout.n_loc) + 0j
        out = gauge_transform_local(v, lambda p: np.zeros(len(p)), ctx)
        assert np.abs(out - v).max() < 1e-14

    def test_projection_contraction(self, rng):
        ctx = make_ctx(random_polygon(rng, "quad"), 1)
        v = rng.standard_normal(ctx.layout.n_loc) + 1j * rng.standard_normal(ctx.layout.n_loc)
        out = gauge_transform_local(v, lambda p: p[:, 0] * p[:, 1], ctx)
        dk = ctx.layout.n_cell

        def l2(c):
            return np.sqrt(np.real(np.conj(c) @ ctx.mass_k @ c))
        assert l2(out[:dk]) <= l2(v[:dk]) * (1 + 1e-12)

    def test_constant_phase_commutes_with_gradient(self, rng):
        # the exact fragment of discrete gauge covariance
        ctx = make_ctx(random_polygon(rng, "quad"), 1)
        a_coeffs = rng.standard_normal((2, ctx.layout.n_cell))
        G = covariant_gradient(ctx, a_coeffs=a_coeffs)
        v = rng.standard_normal(ctx.layout.n_loc) + 1j * rng.standard_normal(ctx.layout.n_loc)
        v_rot = gauge_transform_local(v, lambda p: np.full(len(p), 1.3), ctx)
        assert np.abs(G @ v_rot - np.exp(1.3j) * (G @ v)).max() < 1e-11


class TestLocalForm:
    def test_zero_fields_kernel_is_constants(self, rng):
        ctx = make_ctx(random_polygon(rng, "quad"), 1)
        ops = local_form(ctx)
        assert np.abs(ops.Aloc - ops.Aloc.conj().T).max() == 0.0
        const = interpolate_local(ones, ctx)
        assert abs(np.conj(const) @ ops.Aloc @ const) < 1e-12
        evals = np.linalg.eigvalsh(ops.Aloc)
        assert evals.min() > -1e-12
        assert (evals > 1e-10).sum() == ctx.layout.n_loc - 1

    def test_pure_scalar_potential(self):
        mesh = generate_cartesian((0, 1, 0, 1), 1, 1)
        spec = FieldSpec(V=lambda p: np.full(len(p), 5.0), v_inf=5.0)
        ctx = CellContext(mesh, 0, 1, fieldspec=spec)
        ops = local_form(ctx)
        one = interpolate_local(ones, ctx)
        val = np.real(np.conj(one) @ ops.Aloc @ one)
        assert val == pytest.approx(5.0, abs=1e-12)

    def test_rayleigh_floor_1000_random(self, rng):
        # quotient >= -(|A|_inf^2 + |V|_inf) with the potential included
        from maghho.physics import FockDarwinConfig
        cfg = FockDarwinConfig()
        spec = cfg.fieldspec("landau")
        mesh = generate_cartesian(cfg.bounds, 4, 4)
        floor = spec.gauge_floor()
        for ci in range(4):
            ctx = CellContext(mesh, ci, 1, fieldspec=spec)
            ops = local_form(ctx)
            Mfull = np.zeros_like(ops.Aloc)
            dk = ctx.layout.n_cell
            Mfull[:dk, :dk] = ops.Mloc
            for _ in range(250):
                v = rng.standard_normal(ctx.layout.n_loc) \
                    + 1j * rng.standard_normal(ctx.layout.n_loc)
                num = np.real(np.conj(v) @ ops.Aloc @ v)
                den = np.real(np.conj(v) @ Mfull @ v)
                assert num >= floor * den - 1e-10

    def test_local_coercivity_constant_across_refinement(self, rng):
        # |grad p|^2 + s >= C |grad u_T|^2 with C uniform in h
        consts = []
        for n in (2, 4, 8):
            mesh = generate_cartesian((0, 1, 0, 1), n, n)
            worst = np.inf
            for ci in (0, mesh.n_cells // 2):
                ctx = CellContext(mesh, ci, 1)
                for _ in range(40):
                    v = rng.standard_normal(ctx.layout.n_loc) \
                        + 1j * rng.standard_normal(ctx.layout.n_loc)
                    p = ctx.reconstruction @ v
                    num = np.real(np.conj(p) @ ctx.stiff_k1 @ p) \
                        + stabilization_energy(ctx, v)
                    den = np.real(np.conj(v[:ctx.layout.n_cell])
                                  @ ctx.stiff_k @ v[:ctx.layout.n_cell])
                    if den > 1e-14:
                        worst = min(worst, num / den)
            consts.append(worst)
        assert min(consts) > 0.1
        assert max(consts) / min(consts) < 1.5
