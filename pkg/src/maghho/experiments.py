"""Experiment drivers: convergence, spectra, gauge deviation, interference.

Each driver returns plain data and, given an output directory, writes
machine-readable artifacts with pinned headers:

* convergence: ``h,ndof,err1h,rate1h,errL2,rateL2,seconds``
* eigen:       ``h,ndof,lambda0,lambda1,lambda2,lambda3,lambda4,rel_err,rate``
* gauge-dev:   ``h,dev_smooth,rate_smooth,dev_landau,rate_landau``
* screen:      ``y,intensity``

Rates are log-ratios between consecutive rows.  All floats are written
with 17 significant digits; the eigensolver start vector is seeded, so
reruns are byte-identical (except the measured ``seconds`` column).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assembly import HybridField, assemble, assemble_rhs, l2_norm_cells, \
    norm_1h
from .local_ops import CellContext, interpolate_local, stabilization_energy
from .mesh import generate_cartesian, generate_punctured, validate
from .physics import ABConfig, FockDarwinConfig, default_manufactured
from .solvers import evolve, lowest_eigenpairs_system, solve_condensed
from .vtkio import write_vtk


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _rates(errors, hs):
    """log(e_{i-1}/e_i) / log(h_{i-1}/h_i), nan for the first row."""
    out = [np.nan]
    for i in range(1, len(errors)):
        with np.errstate(divide="ignore", invalid="ignore"):
            out.append(np.log(errors[i - 1] / errors[i])
                       / np.log(hs[i - 1] / hs[i]))
    return out


def endpoint_rate(errors, hs) -> float:
    """Observed rate between the first and last refinement levels."""
    return float(np.log(errors[0] / errors[-1]) / np.log(hs[0] / hs[-1]))


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _np_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_np_default)
        fh.write("\n")


# ---------------------------------------------------------------------------
# point evaluation of hybrid fields

class FieldSampler:
    """Evaluate cell polynomials (or reconstructions) at arbitrary points."""

    def __init__(self, mesh, k: int):
        import shapely
        from shapely.geometry import Polygon
        self.mesh = mesh
        self.k = k
        self._polys = [Polygon(mesh.cell_vertices(ci)) for ci in range(mesh.n_cells)]
        self._tree = shapely.STRtree(self._polys)

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Containing cell per point (lowest id wins on shared faces), -1 outside."""
        import shapely
        pts = shapely.points(np.asarray(points, dtype=float))
        pidx, cidx = self._tree.query(pts, predicate="intersects")
        owner = np.full(len(pts), -1, dtype=int)
        for p, c in zip(pidx, cidx):
            if owner[p] < 0 or c < owner[p]:
                owner[p] = c
        return owner

    def evaluate(self, field: HybridField, points: np.ndarray,
                 use_reconstruction: bool = False) -> np.ndarray:
        """Field values at the points; NaN for points outside the mesh."""
        points = np.asarray(points, dtype=float)
        owner = self.locate(points)
        out = np.full(len(points), np.nan, dtype=complex)
        for ci in np.unique(owner[owner >= 0]):
            sel = owner == ci
            ctx = CellContext(self.mesh, ci, self.k)
            if use_reconstruction:
                coeffs = ctx.reconstruction @ field.local_vector(ci)
                out[sel] = ctx.basis_k1.eval(points[sel]) @ coeffs
            else:
                out[sel] = ctx.basis_k.eval(points[sel]) @ field.cell_coeffs(ci)
        return out


# ---------------------------------------------------------------------------
# convergence study

@dataclass
class ConvergenceRow:
    h: float
    ndof: int
    err_1h: float
    err_l2: float
    rate_1h: float
    rate_l2: float
    seconds: float


def run_convergence(k: int, levels, out_dir=None, case=None,
                    quad_extra: int = 0, cheap_gradient: bool = False):
    """Manufactured-solution refinements; errors against the interpolant."""
    case = default_manufactured() if case is None else case
    rows = []
    errs1, errs2, hs = [], [], []
    for n in levels:
        t0 = time.perf_counter()
        mesh = generate_cartesian(case.bounds, n, n)
        system = assemble(mesh, k, case.fieldspec, quad_extra=quad_extra,
                          cheap_gradient=cheap_gradient)
        rhs = assemble_rhs(system.dofmap, case.source, quad_extra=quad_extra)
        u = solve_condensed(system, rhs)
        interp = HybridField.interpolate(system.dofmap, case.u,
                                         quad_extra=quad_extra)
        err = HybridField(system.dofmap, u - interp.values)
        e1, e2 = norm_1h(err), l2_norm_cells(err)
        seconds = time.perf_counter() - t0
        hs.append(mesh.h)
        errs1.append(e1)
        errs2.append(e2)
        rows.append([mesh.h, system.n_dof, e1, np.nan, e2, np.nan, seconds])
    r1, r2 = _rates(errs1, hs), _rates(errs2, hs)
    out = []
    for i, row in enumerate(rows):
        row[3], row[5] = r1[i], r2[i]
        out.append(ConvergenceRow(h=row[0], ndof=int(row[1]), err_1h=row[2],
                                  rate_1h=row[3], err_l2=row[4], rate_l2=row[5],
                                  seconds=row[6]))
    if out_dir is not None:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        _write_csv(path / f"convergence_k{k}.csv",
                   "h,ndof,err1h,rate1h,errL2,rateL2,seconds",
                   [[r.h, r.ndof, r.err_1h, r.rate_1h, r.err_l2, r.rate_l2,
                     r.seconds] for r in out])
    return out


# ---------------------------------------------------------------------------
# eigenvalue studies

def run_eigen(k: int, levels, out_dir=None, config: FockDarwinConfig = None,
              gauge_name: str = "sym", n_eig: int = 5, sigma: float = None,
              method: str = "shift-invert", quad_extra: int = 0,
              cheap_gradient: bool = False):
    """Lowest spectrum on refinements plus ground-state relative errors."""
    config = FockDarwinConfig() if config is None else config
    spec = config.fieldspec(gauge_name)
    e_ref = config.reference_energy()
    results = []
    for n in levels:
        mesh = generate_cartesian(config.bounds, n, n)
        system = assemble(mesh, k, spec, quad_extra=quad_extra,
                          cheap_gradient=cheap_gradient)
        res = lowest_eigenpairs_system(system, n_eig=max(n_eig, 5), sigma=sigma,
                                       method=method)
        results.append({"h": mesh.h, "ndof": system.n_dof,
                        "values": res.values,
                        "rel_err": abs(res.values[0] - e_ref) / e_ref})
    hs = [r["h"] for r in results]
    rates = _rates([r["rel_err"] for r in results], hs)
    for r, rate in zip(results, rates):
        r["rate"] = rate
    if out_dir is not None:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        _write_csv(path / f"eigen_k{k}_{gauge_name}.csv",
                   "h,ndof,lambda0,lambda1,lambda2,lambda3,lambda4,rel_err,rate",
                   [[r["h"], r["ndof"], *r["values"][:5], r["rel_err"], r["rate"]]
                    for r in results])
        _write_json(path / f"eigen_k{k}_{gauge_name}.json", {
            "k": k, "gauge": gauge_name, "reference_energy": e_ref,
            "omega0": config.omega0, "B": config.B, "L": config.L,
            "levels": [{"h": r["h"], "ndof": r["ndof"],
                        "eigenvalues": list(r["values"]),
                        "rel_err": r["rel_err"]} for r in results]})
    return results


def run_gauge_dev(k: int, levels, out_dir=None, config: FockDarwinConfig = None,
                  n_eig: int = 5, quad_extra: int = 0,
                  cheap_gradient: bool = False):
    """Max deviation of the first eigenvalues across the three gauges."""
    config = FockDarwinConfig() if config is None else config
    spectra = {}
    hs = []
    for n in levels:
        mesh = generate_cartesian(config.bounds, n, n)
        hs.append(mesh.h)
        for gname in ("sym", "landau", "smooth"):
            system = assemble(mesh, k, config.fieldspec(gname),
                              quad_extra=quad_extra,
                              cheap_gradient=cheap_gradient)
            res = lowest_eigenpairs_system(system, n_eig=n_eig)
            spectra.setdefault(gname, []).append(res.values)
    devs = {g: [float(np.abs(spectra[g][i] - spectra["sym"][i]).max())
                for i in range(len(hs))] for g in ("smooth", "landau")}
    rate_s = _rates(devs["smooth"], hs)
    rate_l = _rates(devs["landau"], hs)
    rows = [[hs[i], devs["smooth"][i], rate_s[i], devs["landau"][i], rate_l[i]]
            for i in range(len(hs))]
    if out_dir is not None:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        _write_csv(path / f"gauge_dev_k{k}.csv",
                   "h,dev_smooth,rate_smooth,dev_landau,rate_landau", rows)
    return {"h": hs, "dev_smooth": devs["smooth"], "dev_landau": devs["landau"],
            "rate_smooth": rate_s, "rate_landau": rate_l, "spectra": spectra}


# ---------------------------------------------------------------------------
# Aharonov-Bohm interference

@dataclass
class ScreenProfile:
    flux: float
    y: np.ndarray
    intensity: np.ndarray

    def intensity_at_zero(self) -> float:
        return float(np.interp(0.0, self.y, self.intensity))

    def peaks(self):
        """Local maxima sorted by height (descending), as (y, I) pairs."""
        I = self.intensity
        idx = [i for i in range(1, len(I) - 1)
               if I[i] >= I[i - 1] and I[i] >= I[i + 1]]
        idx.sort(key=lambda i: -I[i])
        return [(float(self.y[i]), float(I[i])) for i in idx]

    def lobe_centroids(self):
        """Intensity-weighted centroid of each half-plane lobe.

        Per side, samples above half that side's maximum contribute; this
        locates broad interference lobes robustly against sampling
        ripples.  Returns {side: (location, height)} for sides with any
        signal, side in {'neg', 'pos'}.
        """
        out = {}
        for side, sel in (("neg", self.y < 0), ("pos", self.y > 0)):
            I = self.intensity[sel]
            if I.size == 0 or I.max() <= 0:
                continue
            mask = I > 0.5 * I.max()
            yy = self.y[sel][mask]
            ii = I[mask]
            out[side] = (float((yy * ii).sum() / ii.sum()), float(I.max()))
        return out


def run_ab(flux: float, out_dir=None, nx: int = 150, ny: int = 60, k: int = 1,
           dt: float = 2.5e-3, config: ABConfig = None, hole_segments: int = 64,
           n_screen: int = 400, use_reconstruction: bool = False,
           cheap_gradient: bool = False, quad_extra: int = 0,
           frame_times=(0.0, 0.8, 1.45), write_frames: bool = True,
           progress=None):
    """Propagate the wavepacket past the solenoid and sample the screen."""
    config = ABConfig(flux=flux) if config is None else config
    mesh = generate_punctured(config.bounds, nx, ny, (0.0, 0.0),
                              config.solenoid_radius, hole_segments)
    system = assemble(mesh, k, config.fieldspec(), quad_extra=quad_extra,
                      cheap_gradient=cheap_gradient)
    dofmap = system.dofmap
    psi0 = HybridField.interpolate(dofmap, config.packet(),
                                   quad_extra=quad_extra).values
    mass0 = system.m_norm(psi0)
    n_steps = int(round(config.t_end / dt))
    frame_steps = {int(round(t / dt)): t for t in frame_times}
    sampler = FieldSampler(mesh, k)
    out_path = None
    if out_dir is not None:
        out_path = Path(out_dir)
        out_path.mkdir(parents=True, exist_ok=True)

    max_drift = 0.0
    frames = {}
    collect = write_frames and out_path is not None

    def callback(step, t, psi):
        nonlocal max_drift
        drift = abs(system.m_norm(psi) - mass0) / mass0
        max_drift = max(max_drift, drift)
        if collect and step in frame_steps:
            frames[step] = psi.copy()
        if progress is not None and step % 50 == 0:
            progress(step, n_steps, t, drift)

    psi_end = evolve(system, psi0, dt, config.t_end, callback=callback)

    if write_frames and out_path is not None:
        for step, psi in sorted(frames.items()):
            fld = HybridField(dofmap, psi)
            density = np.abs(np.array([fld.cell_coeffs(ci)[0]
                                       for ci in range(mesh.n_cells)])) ** 2
            write_vtk(mesh, {"density": density},
                      out_path / f"ab_flux{flux:.6g}_step{step:05d}.vtk",
                      title=f"ab density t={step * dt:.6g}")

    ys = np.linspace(config.bounds[2], config.bounds[3], n_screen)
    pts = np.column_stack([np.full(n_screen, config.screen_x), ys])
    vals = sampler.evaluate(HybridField(dofmap, psi_end), pts,
                            use_reconstruction=use_reconstruction)
    profile = ScreenProfile(flux=flux, y=ys, intensity=np.abs(vals) ** 2)

    peaks = profile.peaks()
    summary = {
        "flux": flux, "k": k, "nx": nx, "ny": ny, "dt": dt,
        "t_end": n_steps * dt, "n_steps": n_steps,
        "screen_x": config.screen_x, "ndof": system.n_dof,
        "mass_drift": max_drift,
        "intensity_at_zero": profile.intensity_at_zero(),
        "max_intensity": float(profile.intensity.max()),
        "argmax_y": float(profile.y[int(np.argmax(profile.intensity))]),
        "peaks": peaks[:4],
        "lobe_centroids": profile.lobe_centroids(),
    }
    if out_path is not None:
        _write_csv(out_path / f"screen_flux{flux:.6g}.csv", "y,intensity",
                   np.column_stack([profile.y, profile.intensity]))
        _write_json(out_path / f"ab_flux{flux:.6g}.json", summary)
    return profile, summary


# ---------------------------------------------------------------------------
# invariant check run

def run_check(mesh, k: int = 1, rho: float = 0.05, n_sample: int = 20,
              seed: int = 0, out_dir=None):
    """Run the cross-module invariant suite on one mesh.

    Validates the geometry, then measures on a cell sample: reconstruction
    exactness, stabilization consistency, the zero-potential gradient
    projection identity, quadrature weight sums, and the local coercivity
    constant (min over random unknowns of (|grad p|^2 + s) / |grad u_T|^2).
    """
    rng = np.random.default_rng(seed)
    report = validate(mesh, rho=rho)
    sample = rng.choice(mesh.n_cells, size=min(n_sample, mesh.n_cells),
                        replace=False)
    rec_err = stab_err = grad_err = quad_err = 0.0
    coercivity = np.inf
    for ci in sample:
        ctx = CellContext(mesh, int(ci), k)
        quad_err = max(quad_err, abs(ctx.rule.weights.sum() - ctx.cell.measure)
                       / ctx.cell.measure)
        c = rng.standard_normal(ctx.basis_k1.dim) \
            + 1j * rng.standard_normal(ctx.basis_k1.dim)
        w_poly = lambda p: ctx.basis_k1.eval(p) @ c
        uhat = interpolate_local(w_poly, ctx)
        rec = ctx.reconstruction @ uhat
        rec_err = max(rec_err, float(np.abs(rec - c).max() / np.abs(c).max()))
        stab_err = max(stab_err, stabilization_energy(ctx, uhat))
        g = ctx.gradient @ uhat if ctx.fieldspec.A is None else None
        if g is not None:
            grad = np.einsum("qid,i->qd", ctx.basis_k1.grad(ctx.rule.points), c)
            tgt = np.concatenate([ctx.proj_k.project_values(-1j * grad[:, 0]),
                                  ctx.proj_k.project_values(-1j * grad[:, 1])])
            grad_err = max(grad_err, float(np.abs(g - tgt).max()
                                           / max(np.abs(tgt).max(), 1e-30)))
        for _ in range(5):
            v = rng.standard_normal(ctx.layout.n_loc) \
                + 1j * rng.standard_normal(ctx.layout.n_loc)
            p = ctx.reconstruction @ v
            num = float(np.real(np.conj(p) @ ctx.stiff_k1 @ p)) \
                + stabilization_energy(ctx, v)
            den = float(np.real(np.conj(v[:ctx.layout.n_cell])
                                @ ctx.stiff_k @ v[:ctx.layout.n_cell]))
            if den > 1e-12:
                coercivity = min(coercivity, num / den)
    result = {
        "mesh_valid": report.ok,
        "violations": report.violations,
        "min_shape_ratio": report.min_shape_ratio,
        "regularity": report.regularity,
        "n_cells": mesh.n_cells,
        "h": mesh.h,
        "k": k,
        "quadrature_weight_error": quad_err,
        "reconstruction_error": rec_err,
        "stabilization_consistency": stab_err,
        "gradient_identity_error": grad_err,
        "coercivity_constant": coercivity,
    }
    if out_dir is not None:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        _write_json(path / "check.json", result)
    return result
