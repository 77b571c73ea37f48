"""Fixed-eigenvalue radius solves and the search over candidate eigenvalues.

The fixed-lambda problem is attacked in two stages. A shifted inverse
iteration on the nonlinear pencil (the weightings are rebuilt from the
iterate every sweep step, shift mu = psi * smallest positive generalized
eigenvalue) explores the landscape; it is kept faithful to the update rule
but is not locally contractive at stationary points, so a Gauss-Newton
polish on the normalized stationarity system finishes the job. The polish
works on unknowns (x, y, sigma) with explicit unit-norm rows appended,
which kills both the scale gauge and the spurious x = 0 solution branch.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla

from .network_model import (ConstraintMask, NetworkSystem, canonicalize,
                            verify_unobservability)
from .radius_core import (CandidateTriple, PencilPair, Reconstruction,
                          ReducedProblem, SpuriousTripleError, a_tilde,
                          assemble_pencil, assemble_real_pencil, balanced_embed,
                          build_reduced, embed_real_triple, normalize_triple,
                          reconstruct_perturbation, system_residual)


@dataclass(frozen=True)
class SolverConfig:
    psi: float = 0.9              # shift factor, open interval (0.5, 1)
    max_iter: int = 500
    conv_tol: float = 1e-9
    restarts: int = 8
    seed: int = 0
    spectrum_refresh: int = 1     # recompute spec(H, D) every k sweep steps
    sweep_iters: int = 20         # inverse-iteration steps before the polish
    polish_max_iter: int = 60
    polish_tol: float = 1e-12
    zero_tol: float = 1e-8
    cond_limit: float = 1e14
    refine_steps: int = 20
    keep_delta_trace: bool = False
    force_full_pencil: bool = False

    def __post_init__(self):
        if not (0.5 < self.psi < 1.0):
            raise ValueError(f"psi must lie in (0.5, 1), got {self.psi}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.spectrum_refresh < 1:
            raise ValueError("spectrum_refresh must be >= 1")


@dataclass(frozen=True)
class SpectrumResult:
    values: np.ndarray   # finite generalized eigenvalues (complex dtype)
    regular: bool


def generalized_spectrum(pp: PencilPair, zero_tol=1e-8) -> SpectrumResult:
    """Finite part of spec(H, D) via QZ, with a regularity probe.

    Infinite eigenvalues (beta ~ 0 with alpha away from 0) come from Ker(D)
    and are dropped. If any alpha/beta pair is indeterminate (both ~ 0) the
    pencil may be singular; det(H - tD) is probed at a few fixed points and
    the pencil is flagged non-regular when all probes vanish.
    """
    alpha, beta = sla.eigvals(pp.h, pp.d, homogeneous_eigvals=True)
    scale = max(1.0, float(np.abs(alpha).max()))
    # a second-order block at infinity splits under rounding into a huge
    # conjugate pair with |beta| ~ sqrt(eps); anything past eps^-0.4 of the
    # pencil scale is indistinguishable from infinity and classified as such
    finite = np.abs(beta) > 5e-7 * (1.0 + np.abs(alpha))
    indeterminate = (np.abs(alpha) <= 1e-12 * scale) & (np.abs(beta) <= 1e-12)
    regular = True
    if indeterminate.any():
        hnorm = max(1.0, float(np.abs(pp.h).max()), float(np.abs(pp.d).max()))
        regular = any(
            np.linalg.svd(pp.h - t * pp.d, compute_uv=False)[-1] > 1e-12 * hnorm
            for t in (0.37281, -1.11803, 2.64575))
    values = alpha[finite] / beta[finite]
    order = np.lexsort((values.imag, values.real))
    return SpectrumResult(values=values[order], regular=regular)


def _min_positive(values, zero_tol):
    if len(values) == 0:
        return None
    re = values.real
    scale = max(1.0, float(np.abs(re).max()))
    ok = (re > zero_tol * scale) & (np.abs(values.imag) <= 1e-6 * scale)
    if not ok.any():
        return None
    return float(re[ok].min())


# ---------------------------------------------------------------------------
# Gauss-Newton polish on the normalized stationarity system.
# Unknown u = (x, y, sigma); residual F(u) stacks the two stationarity
# equations plus (|x|^2 - 1)/2 and (|y|^2 - 1)/2.


def _gn_core(f_of, j_of, u0, max_iter, tol, record=False):
    u = u0.copy()
    f = f_of(u)
    us = [u.copy()] if record else None
    its = 0
    for its in range(1, max_iter + 1):
        if np.linalg.norm(f, np.inf) <= tol:
            return u, its - 1, True, us
        step, *_ = np.linalg.lstsq(j_of(u), -f, rcond=None)
        base = np.linalg.norm(f)
        alpha = 1.0
        moved = False
        for _ in range(25):
            trial = u + alpha * step
            ft = f_of(trial)
            if np.linalg.norm(ft) < (1.0 - 1e-4 * alpha) * base:
                u, f, moved = trial, ft, True
                break
            alpha *= 0.5
        if not moved:
            return u, its, False, us
        if record:
            us.append(u.copy())
    return u, its, bool(np.linalg.norm(f, np.inf) <= tol), us


def _full_fj(at, v_bar):
    n, m = v_bar.shape
    vt = v_bar.T

    def f_of(u):
        x, y, sig = u[:2 * m], u[2 * m:2 * m + 2 * n], u[-1]
        xr, xi = x[:m], x[m:]
        y1, y2 = y[:n], y[n:]
        sy = vt @ (y1 * y1); ty = vt @ (y1 * y2); qy = vt @ (y2 * y2)
        dyx = np.concatenate([sy * xr + ty * xi, ty * xr + qy * xi])
        sx = v_bar @ (xr * xr); tx = v_bar @ (xr * xi); qx = v_bar @ (xi * xi)
        dxy = np.concatenate([sx * y1 + tx * y2, tx * y1 + qx * y2])
        return np.concatenate([at.T @ y - sig * dyx, at @ x - sig * dxy,
                               [(x @ x - 1.0) / 2.0, (y @ y - 1.0) / 2.0]])

    def j_of(u):
        x, y, sig = u[:2 * m], u[2 * m:2 * m + 2 * n], u[-1]
        xr, xi = x[:m], x[m:]
        y1, y2 = y[:n], y[n:]
        sy = vt @ (y1 * y1); ty = vt @ (y1 * y2); qy = vt @ (y2 * y2)
        sx = v_bar @ (xr * xr); tx = v_bar @ (xr * xi); qx = v_bar @ (xi * xi)
        dy_mat = np.block([[np.diag(sy), np.diag(ty)], [np.diag(ty), np.diag(qy)]])
        dx_mat = np.block([[np.diag(sx), np.diag(tx)], [np.diag(tx), np.diag(qx)]])
        dyx = np.concatenate([sy * xr + ty * xi, ty * xr + qy * xi])
        dxy = np.concatenate([sx * y1 + tx * y2, tx * y1 + qx * y2])
        ddyx_dy = np.block([
            [vt * (2 * np.outer(xr, y1) + np.outer(xi, y2)), vt * np.outer(xi, y1)],
            [vt * np.outer(xr, y2), vt * (np.outer(xr, y1) + 2 * np.outer(xi, y2))]])
        ddxy_dx = np.block([
            [v_bar * (2 * np.outer(y1, xr) + np.outer(y2, xi)), v_bar * np.outer(y2, xr)],
            [v_bar * np.outer(y1, xi), v_bar * (np.outer(y1, xr) + 2 * np.outer(y2, xi))]])
        top = np.hstack([-sig * dy_mat, at.T - sig * ddyx_dy, -dyx[:, None]])
        mid = np.hstack([at - sig * ddxy_dx, -sig * dx_mat, -dxy[:, None]])
        r1 = np.concatenate([x, np.zeros(2 * n), [0.0]])[None, :]
        r2 = np.concatenate([np.zeros(2 * m), y, [0.0]])[None, :]
        return np.vstack([top, mid, r1, r2])

    return f_of, j_of


def _real_fj(at, v_bar):
    n, m = v_bar.shape
    vt = v_bar.T

    def f_of(u):
        x, y, sig = u[:m], u[m:m + n], u[-1]
        return np.concatenate([at.T @ y - sig * (vt @ (y * y)) * x,
                               at @ x - sig * (v_bar @ (x * x)) * y,
                               [(x @ x - 1.0) / 2.0, (y @ y - 1.0) / 2.0]])

    def j_of(u):
        x, y, sig = u[:m], u[m:m + n], u[-1]
        sy = vt @ (y * y)
        sx = v_bar @ (x * x)
        top = np.hstack([-sig * np.diag(sy), at.T - 2 * sig * vt * np.outer(x, y),
                         -(sy * x)[:, None]])
        mid = np.hstack([at - 2 * sig * v_bar * np.outer(y, x), -sig * np.diag(sx),
                         -(sx * y)[:, None]])
        r1 = np.concatenate([x, np.zeros(n), [0.0]])[None, :]
        r2 = np.concatenate([np.zeros(m), y, [0.0]])[None, :]
        return np.vstack([top, mid, r1, r2])

    return f_of, j_of


@dataclass(frozen=True)
class FixedLambdaResult:
    lam: complex
    converged: bool
    triple: CandidateTriple | None = None
    reconstruction: Reconstruction | None = None
    iterations: int = 0
    residual: float = np.inf       # ||H z - sigma_bar D z|| at the final triple
    sigma: float | None = None
    phi_plus_mu: float | None = None
    history: tuple = ()            # per-iteration ||Delta_i - Delta_final||_F
    polish_start: int = 0          # index in history where the polish phase begins
    delta_trace: tuple | None = None
    verification: object = None
    failure: str | None = None

    @property
    def perturbation(self):
        return None if self.reconstruction is None else self.reconstruction.perturbation

    @property
    def cost(self):
        """Radius value ||Delta||_F, inf when the run failed."""
        if self.perturbation is None:
            return np.inf
        return self.perturbation.frob_norm


def _rebalance(z, nx):
    zx, zy = z[:nx], z[nx:]
    nzx, nzy = np.linalg.norm(zx), np.linalg.norm(zy)
    if nzx < 1e-300 or nzy < 1e-300:
        return None
    return np.concatenate([zx / (np.sqrt(2.0) * nzx), zy / (np.sqrt(2.0) * nzy)])


def _delta_bar_signed(rp, t, sign):
    m, n = rp.m, rp.n
    xr, xi = t.x[:m], t.x[m:]
    y1, y2 = t.y[:n], t.y[n:]
    return -t.sigma * (np.outer(y1, xr) + sign * np.outer(y2, xi)) * rp.v_bar


def heuristic_iterate(rp: ReducedProblem, cf, cfg: SolverConfig,
                      z0=None) -> FixedLambdaResult:
    """One solve of the fixed-lambda problem from one initial vector.

    Runs the shifted inverse-iteration sweep, then polishes the best sweep
    iterate (by stationarity residual) with Gauss-Newton, reconstructs the
    perturbation, and reports the pencil residual and iteration trace.
    Real lambda is routed through the half-size pencil unless the config
    forces the full one.
    """
    use_real = rp.is_real and not cfg.force_full_pencil
    n, m = rp.n, rp.m
    at_full = a_tilde(rp)
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0xA5)))

    if use_real:
        at = rp.a_bar - rp.n_bar
        nx, ny = m, n
        f_of, j_of = _real_fj(at, rp.v_bar)

        def pencil_at(z):
            return assemble_real_pencil(rp, z[:nx], z[nx:])

        def triple_of(u):
            return embed_real_triple(u[-1], u[:nx], u[nx:nx + ny])
    else:
        at = at_full
        nx, ny = 2 * m, 2 * n
        f_of, j_of = _full_fj(at, rp.v_bar)

        def pencil_at(z):
            return assemble_pencil(rp, z[:nx], z[nx:])

        def triple_of(u):
            return normalize_triple(u[-1], u[:nx], u[nx:nx + ny])

    if z0 is None:
        z = rng.standard_normal(nx + ny)
    else:
        z = np.array(z0, dtype=float, copy=True)
    z = _rebalance(z, nx)
    if z is None:
        return FixedLambdaResult(lam=rp.lam, converged=False,
                                 failure="degenerate initial vector")
    z_init = z.copy()

    def u_of(z, sigma_bar):
        # unit blocks and the triple-scale sigma for the polish variable
        return np.concatenate([np.sqrt(2.0) * z[:nx], np.sqrt(2.0) * z[nx:],
                               [sigma_bar / 2.0]])

    trace_u = []
    best_seed = None
    best_merit = np.inf
    psi_cur = cfg.psi
    mp = None
    phi_plus_mu = None
    sweep_budget = min(cfg.sweep_iters, cfg.max_iter)
    sweep_used = 0
    for it in range(sweep_budget):
        pp = pencil_at(z)
        if it % cfg.spectrum_refresh == 0:
            spec = generalized_spectrum(pp, cfg.zero_tol)
            if not spec.regular:
                break
            mp = _min_positive(spec.values, cfg.zero_tol)
        if mp is None:
            break
        mu = psi_cur * mp
        mmat = pp.h - mu * pp.d
        if np.linalg.cond(mmat) > cfg.cond_limit:
            # shift sits on an eigenvalue; back psi off and retry next pass
            psi_cur = max(0.5 + 0.45 * (psi_cur - 0.5), 0.500001)
            mu = psi_cur * mp
            mmat = pp.h - mu * pp.d
        try:
            w = np.linalg.solve(mmat, pp.d @ z)
        except np.linalg.LinAlgError:
            break
        phi = np.linalg.norm(w)
        if not np.isfinite(phi) or phi < 1e-300:
            break
        zn = w / phi
        if zn @ z < 0:
            zn = -zn
        zn = _rebalance(zn, nx)
        if zn is None:
            break
        sweep_used = it + 1
        num = zn @ (pp.h @ zn)
        den = zn @ (pp.d @ zn)
        sigma_bar = abs(num / den) if den != 0 else 1.0
        phi_plus_mu = mu + 1.0 / phi
        u = u_of(zn, sigma_bar)
        merit = np.linalg.norm(f_of(u))
        trace_u.append(u)
        if merit < best_merit:
            best_merit = merit
            best_seed = u
        z = zn

    pp0 = pencil_at(z_init)
    den0 = z_init @ (pp0.d @ z_init)
    sb0 = abs(z_init @ (pp0.h @ z_init) / den0) if den0 != 0 else 1.0
    init_seed = u_of(z_init, sb0)

    seeds = []
    if best_seed is not None:
        seeds.append(best_seed)
    if trace_u and (best_seed is None or not np.array_equal(trace_u[-1], best_seed)):
        seeds.append(trace_u[-1])
    if not trace_u:
        # the sweep died on the initial vector (singular pencil there, e.g.
        # a start with zero imaginary blocks at real lambda): that vector is
        # the only information available, so polish it before any random
        # fallback instead of dropping it on the floor
        seeds.append(init_seed)
    xs = rng.standard_normal(nx)
    ys = rng.standard_normal(ny)
    seeds.append(np.concatenate([xs / np.linalg.norm(xs), ys / np.linalg.norm(ys), [0.5]]))
    if trace_u:
        seeds.append(init_seed)

    polish_budget = min(cfg.polish_max_iter, max(1, cfg.max_iter - sweep_used))
    final = None
    gn_used = 0
    failure = "did not converge"
    for u0 in seeds:
        u, its, ok, us = _gn_core(f_of, j_of, u0, polish_budget, cfg.polish_tol,
                                  record=True)
        gn_used += its
        if not ok:
            continue
        if np.linalg.norm(u[:nx]) < 1e-6 or np.linalg.norm(u[nx:nx + ny]) < 1e-6:
            failure = "collapsed onto the trivial solution branch"
            continue
        if u[-1] < 0:
            u = np.concatenate([-u[:nx], u[nx:nx + ny], [-u[-1]]])
        if abs(u[-1]) < 1e-14:
            failure = "stationary point with zero sigma"
            continue
        try:
            t = triple_of(u)
            rec = reconstruct_perturbation(rp, t, cf)
        except (SpuriousTripleError, ValueError) as exc:
            failure = f"spurious stationary point: {exc}"
            continue
        final = (t, rec, u, us)
        break

    iterations = sweep_used + gn_used
    if final is None:
        return FixedLambdaResult(lam=rp.lam, converged=False, iterations=iterations,
                                 phi_plus_mu=phi_plus_mu, failure=failure)

    t, rec, u_fin, us_fin = final
    res = _pencil_residual_full(rp, t)
    converged = res <= cfg.conv_tol

    # distance trace against the final perturbation, rebuilt with its sign;
    # iterates are the sweep passes followed by the winning polish sequence
    sign = +1.0 if rec.sign == "plus" else -1.0
    d_final = _delta_bar_signed(rp, t, sign)

    def snapshots(us):
        hist = []
        deltas = [] if cfg.keep_delta_trace else None
        for u in us:
            try:
                ti = triple_of(u)
            except ValueError:
                continue
            di = _delta_bar_signed(rp, ti, sign)
            hist.append(float(np.linalg.norm(di - d_final)))
            if deltas is not None:
                full = np.hstack([np.zeros((n, rp.p)), di])
                deltas.append(cf.to_original(full))
        return hist, deltas

    h_sweep, d_sweep = snapshots(trace_u)
    h_gn, d_gn = snapshots(us_fin + [u_fin])
    history = h_sweep + h_gn
    deltas = None if d_sweep is None else d_sweep + d_gn

    return FixedLambdaResult(
        lam=rp.lam, converged=converged, triple=t, reconstruction=rec,
        iterations=iterations, residual=res, sigma=t.sigma,
        phi_plus_mu=phi_plus_mu, history=tuple(history),
        polish_start=len(h_sweep),
        delta_trace=None if deltas is None else tuple(deltas),
        failure=None if converged else f"pencil residual {res:.3e} above tolerance")


def _pencil_residual_full(rp, t):
    z, sigma_bar = balanced_embed(t)
    pp = assemble_pencil(rp, z[:2 * rp.m], z[2 * rp.m:])
    return float(np.linalg.norm(pp.h @ z - sigma_bar * (pp.d @ z)))


def _pbh_warm_start(cf, lam, use_real, rng):
    """Seed z with the PBH singular vector at lam: the unstructured optimum
    is usually in the right basin for the structured one."""
    ac = cf.a_canonical
    n, p = cf.n, cf.p
    c = np.hstack([np.eye(p), np.zeros((p, n - p))])
    stack = np.vstack([complex(lam) * np.eye(n) - ac, c])
    _, _, vh = np.linalg.svd(stack)
    xc = vh[-1].conj()[p:]
    if np.linalg.norm(xc) < 1e-8:
        return None
    k = int(np.argmax(np.abs(xc)))
    xc = xc * np.exp(-1j * np.angle(xc[k]))
    xc = xc / np.linalg.norm(xc)
    at = np.vstack([cf.a12, cf.a22])
    m = n - p
    if use_real:
        x = xc.real
        if np.linalg.norm(x) < 1e-8:
            return None
        x = x / np.linalg.norm(x)
        y = (at - complex(lam).real * np.vstack([np.zeros((p, m)), np.eye(m)])) @ x
    else:
        x = np.concatenate([xc.real, xc.imag])
        rp_at = a_tilde(build_reduced(cf, lam))
        y = rp_at @ x
    ny = np.linalg.norm(y)
    if ny < 1e-12:
        y = rng.standard_normal(len(y))
        ny = np.linalg.norm(y)
    return np.concatenate([x / (np.sqrt(2.0) * np.linalg.norm(x)), y / (np.sqrt(2.0) * ny)])


def solve_fixed_lambda(net: NetworkSystem, mask: ConstraintMask, lam,
                       cfg: SolverConfig = SolverConfig()) -> FixedLambdaResult:
    """Best fixed-lambda result over cfg.restarts initializations.

    Restart 0 is warm-started from the PBH singular vector at lam; the rest
    draw random unit vectors from per-restart seeded streams. Winner is the
    minimum-cost converged run, re-verified against the original system
    before return. If nothing converges an explicit failure result comes
    back rather than a silent wrong answer.
    """
    cf = canonicalize(net, mask)
    rp = build_reduced(cf, lam)
    use_real = rp.is_real and not cfg.force_full_pencil
    best = None
    failures = []
    for r in range(cfg.restarts):
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, r)))
        if r == 0:
            z0 = _pbh_warm_start(cf, lam, use_real, rng)
            if z0 is None:
                z0 = rng.standard_normal((rp.m + rp.n) if use_real else (2 * rp.m + 2 * rp.n))
        else:
            z0 = rng.standard_normal((rp.m + rp.n) if use_real else (2 * rp.m + 2 * rp.n))
        run_cfg = replace(cfg, seed=cfg.seed * 1009 + r)
        res = heuristic_iterate(rp, cf, run_cfg, z0=z0)
        if res.converged:
            if best is None or res.cost < best.cost - 1e-15:
                best = res
        else:
            failures.append(res.failure)
    if best is None:
        return FixedLambdaResult(lam=complex(lam), converged=False,
                                 failure="all restarts failed: " +
                                         "; ".join(sorted(set(f or "?" for f in failures))))
    report = verify_unobservability(net, best.perturbation, lam)
    return replace(best, verification=report)


# ---------------------------------------------------------------------------
# search over candidate eigenvalues


def candidate_lambdas(net: NetworkSystem, mask: ConstraintMask, grid="default"):
    """Candidate unobservable eigenvalues for the outer search.

    "default": eigenvalues of all trailing principal submatrices of the
    non-sensor block plus a coarse 21x21 rectangle on [-2, 2]^2.
    "submatrix": the trailing-submatrix eigenvalues only.
    "topo": submatrix eigenvalues plus pairwise means of the non-sensor
    diagonal (covers symmetry-type optima on hub topologies).
    "rect:re0,re1,im0,im1,nre,nim": explicit rectangle.
    Or pass an explicit iterable of complex numbers.
    Conjugates are folded onto the closed upper half plane.
    """
    cf = canonicalize(net, mask)
    a22 = cf.a22
    m = a22.shape[0]

    def submatrix_eigs():
        vals = []
        for k in range(m):
            vals.extend(np.linalg.eigvals(a22[k:, k:]))
        return vals

    def rect(re0, re1, im0, im1, nre, nim):
        return [complex(re, im)
                for re in np.linspace(re0, re1, int(nre))
                for im in np.linspace(im0, im1, int(nim))]

    if isinstance(grid, str):
        if grid == "default":
            vals = submatrix_eigs() + rect(-2, 2, -2, 2, 21, 21)
        elif grid == "submatrix":
            vals = submatrix_eigs()
        elif grid == "topo":
            diag = np.diag(a22)
            means = [(diag[i] + diag[j]) / 2.0
                     for i in range(m) for j in range(i + 1, m)]
            vals = submatrix_eigs() + [complex(v) for v in means]
        elif grid.startswith("rect:"):
            parts = [float(s) for s in grid[5:].split(",")]
            if len(parts) != 6:
                raise ValueError(f"bad rectangle grid spec {grid!r}")
            vals = rect(*parts)
        else:
            raise ValueError(f"unknown grid spec {grid!r}")
    else:
        vals = [complex(v) for v in grid]
        if not vals:
            raise ValueError("explicit candidate grid is empty")
    folded = []
    for v in vals:
        v = complex(v)
        if v.imag < 0:
            v = v.conjugate()
        if abs(v.imag) < 1e-12:
            v = complex(v.real, 0.0)
        folded.append(v)
    folded.sort(key=lambda v: (v.real, v.imag))
    dedup = []
    for v in folded:
        if not dedup or abs(v - dedup[-1]) > 1e-9:
            dedup.append(v)
    return tuple(dedup)


def _pbh_lower_bound(net, lam):
    """Unstructured distance at lam: a valid lower bound on the structured
    radius since restricting the support can only cost more."""
    n = net.n
    stack = np.vstack([complex(lam) * np.eye(n) - net.weights, net.c_matrix])
    return float(np.linalg.svd(stack, compute_uv=False)[-1])


@dataclass(frozen=True)
class RadiusResult:
    best: FixedLambdaResult
    lambda_star: complex | None
    search_trace: tuple          # ((lambda, cost) per evaluated candidate)
    pruned: int = 0
    refine_evals: int = 0

    @property
    def cost(self):
        return self.best.cost


def _continue_triple(rp, cf, t_prev, cfg):
    """Polish-only continuation of a triple to a neighboring lambda."""
    use_real = rp.is_real and not cfg.force_full_pencil
    m, n = rp.m, rp.n
    if use_real:
        at = rp.a_bar - rp.n_bar
        f_of, j_of = _real_fj(at, rp.v_bar)
        xr = t_prev.x[:m]
        y1 = t_prev.y[:n]
        nx_, ny_ = np.linalg.norm(xr), np.linalg.norm(y1)
        if nx_ < 1e-8 or ny_ < 1e-8:
            return None
        u0 = np.concatenate([xr / nx_, y1 / ny_, [t_prev.sigma * nx_ * ny_]])
        nx = m
        ny = n

        def triple_of(u):
            return embed_real_triple(u[-1], u[:nx], u[nx:nx + ny])
    else:
        f_of, j_of = _full_fj(a_tilde(rp), rp.v_bar)
        u0 = np.concatenate([t_prev.x, t_prev.y, [t_prev.sigma]])
        nx, ny = 2 * m, 2 * n

        def triple_of(u):
            return normalize_triple(u[-1], u[:nx], u[nx:nx + ny])

    u, its, ok, _ = _gn_core(f_of, j_of, u0, cfg.polish_max_iter, cfg.polish_tol)
    if not ok or np.linalg.norm(u[:nx]) < 1e-6 or np.linalg.norm(u[nx:nx + ny]) < 1e-6:
        return None
    if u[-1] < 0:
        u = np.concatenate([-u[:nx], u[nx:nx + ny], [-u[-1]]])
    if abs(u[-1]) < 1e-14:
        return None
    try:
        t = triple_of(u)
        rec = reconstruct_perturbation(rp, t, cf)
    except (SpuriousTripleError, ValueError):
        return None
    res = _pencil_residual_full(rp, t)
    if res > cfg.conv_tol:
        return None
    return FixedLambdaResult(lam=rp.lam, converged=True, triple=t,
                             reconstruction=rec, iterations=its, residual=res,
                             sigma=t.sigma)


def solve_radius(net: NetworkSystem, mask: ConstraintMask, grid="default",
                 cfg: SolverConfig = SolverConfig()) -> RadiusResult:
    """Minimize the fixed-lambda cost over a candidate grid, then refine.

    Candidates are ranked by the unstructured PBH lower bound and solved in
    that order; a candidate whose bound already exceeds the incumbent cost is
    pruned. One coordinate-descent pass (step halving, refine_steps budget)
    then polishes lambda locally, warm-starting each probe from the
    incumbent triple.
    """
    cands = candidate_lambdas(net, mask, grid)
    if not cands:
        raise ValueError("empty lambda grid")
    bounds = [(lam, _pbh_lower_bound(net, lam)) for lam in cands]
    bounds.sort(key=lambda t: (t[1], t[0].real, t[0].imag))
    best = None
    best_lam = None
    trace = []
    pruned = 0
    for lam, bound in bounds:
        if best is not None and bound >= best.cost - 1e-12:
            pruned += 1
            continue
        res = solve_fixed_lambda(net, mask, lam, cfg)
        trace.append((lam, res.cost))
        if not res.converged:
            continue
        if best is None or res.cost < best.cost - 1e-15 or (
                abs(res.cost - best.cost) <= 1e-15 and
                (lam.real, lam.imag) < (best_lam.real, best_lam.imag)):
            best, best_lam = res, lam
    refine_evals = 0
    if best is not None and cfg.refine_steps > 0:
        cf = canonicalize(net, mask)
        h = 0.05 * max(1.0, abs(best_lam))
        for _ in range(cfg.refine_steps):
            if h < 1e-7:
                break
            improved = False
            for d_re, d_im in ((h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)):
                lam_try = complex(best_lam.real + d_re, abs(best_lam.imag + d_im))
                if abs(lam_try.imag) < 1e-12:
                    lam_try = complex(lam_try.real, 0.0)
                rp_try = build_reduced(cf, lam_try)
                res = _continue_triple(rp_try, cf, best.triple, cfg)
                refine_evals += 1
                if res is not None:
                    trace.append((lam_try, res.cost))
                if res is not None and res.cost < best.cost - 1e-12:
                    best, best_lam = res, lam_try
                    improved = True
                    break
            if not improved:
                h *= 0.5
    if best is None:
        return RadiusResult(
            best=FixedLambdaResult(lam=0j, converged=False,
                                   failure="no candidate converged"),
            lambda_star=None, search_trace=tuple(trace), pruned=pruned,
            refine_evals=refine_evals)
    best = replace(best, verification=verify_unobservability(net, best.perturbation,
                                                             best.lam))
    return RadiusResult(best=best, lambda_star=best_lam, search_trace=tuple(trace),
                        pruned=pruned, refine_evals=refine_evals)
