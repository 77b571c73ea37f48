"""Reduced minimization, eigenvector-dependent weightings, and the pencil.

Everything here works in canonical (sensor-first) coordinates. The reduced
unknown is the block Delta_bar = [Delta12; Delta22]: only the columns of A
hitting non-sensor states can help hide an eigenvector from the sensors.
Complex quantities are split into stacked real parts throughout: the reduced
eigenvector is x = (x_re, x_im), length 2(n-p), and the multiplier is
y = (y1, y2), length 2n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network_model import CanonicalForm, ConstraintMask, Perturbation


class SpuriousTripleError(ValueError):
    """Candidate triple fails the eigen-constraint residual check."""


@dataclass(frozen=True)
class ReducedProblem:
    a_bar: np.ndarray       # n x (n-p), columns of A over non-sensor states
    m_bar: np.ndarray       # n x (n-p), [0; lam_im * I]
    n_bar: np.ndarray       # n x (n-p), [0; lam_re * I]
    v_bar: np.ndarray       # n x (n-p) mask block [V12; V22]
    lam: complex

    @property
    def n(self):
        return self.a_bar.shape[0]

    @property
    def m(self):
        """Number of non-sensor states, n - p."""
        return self.a_bar.shape[1]

    @property
    def p(self):
        return self.n - self.m

    @property
    def is_real(self):
        return self.lam.imag == 0.0


def build_reduced(cf: CanonicalForm, lam) -> ReducedProblem:
    """Assemble the reduced blocks for a fixed candidate eigenvalue."""
    lam = complex(lam)
    p, m = cf.p, cf.n - cf.p
    a_bar = np.vstack([cf.a12, cf.a22])
    m_bar = np.vstack([np.zeros((p, m)), lam.imag * np.eye(m)])
    n_bar = np.vstack([np.zeros((p, m)), lam.real * np.eye(m)])
    return ReducedProblem(a_bar=a_bar, m_bar=m_bar, n_bar=n_bar,
                          v_bar=cf.v_bar.copy(), lam=lam)


def a_tilde(rp: ReducedProblem):
    """Real-split constraint operator, 2n x 2(n-p).

    Maps stacked (x_re, x_im) to the residuals of the two real eigen-equations
    when Delta = 0; its kernel would be an unobservable eigenvector of A itself.
    """
    an = rp.a_bar - rp.n_bar
    return np.block([[an, rp.m_bar], [-rp.m_bar, an]])


def build_weightings(rp: ReducedProblem, x, y):
    """Diagonal S/T/Q weightings assembled into (D_x, D_y).

    (S_x)_ii = sum_j vbar_ij x_re_j^2, (T_x)_ii mixes re*im, (Q_x)_ii the im
    part; S_y/T_y/Q_y sum over rows with y1, y2. D_x is 2n x 2n and weights y;
    D_y is 2(n-p) x 2(n-p) and weights x.
    """
    v = rp.v_bar
    n, m = v.shape
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xr, xi = x[:m], x[m:]
    y1, y2 = y[:n], y[n:]
    sx = v @ (xr * xr)
    tx = v @ (xr * xi)
    qx = v @ (xi * xi)
    sy = v.T @ (y1 * y1)
    ty = v.T @ (y1 * y2)
    qy = v.T @ (y2 * y2)
    d_x = np.block([[np.diag(sx), np.diag(tx)], [np.diag(tx), np.diag(qx)]])
    d_y = np.block([[np.diag(sy), np.diag(ty)], [np.diag(ty), np.diag(qy)]])
    return d_x, d_y


@dataclass(frozen=True)
class PencilPair:
    """Generalized eigenproblem H z = sigma D z frozen at one (x, y).

    z stacks (x, y); H carries the constraint operator, D the weightings.
    D pairs D_y with the x block and D_x with the y block.
    """

    h: np.ndarray
    d: np.ndarray
    a_tilde: np.ndarray
    nx: int  # length of the x block of z

    @property
    def size(self):
        return self.h.shape[0]


def assemble_pencil(rp: ReducedProblem, x, y) -> PencilPair:
    at = a_tilde(rp)
    d_x, d_y = build_weightings(rp, x, y)
    k, l = at.shape
    h = np.block([[np.zeros((l, l)), at.T], [at, np.zeros((k, k))]])
    d = np.block([[d_y, np.zeros((l, k))], [np.zeros((k, l)), d_x]])
    return PencilPair(h=h, d=d, a_tilde=at, nx=l)


def assemble_real_pencil(rp: ReducedProblem, x_re, y1) -> PencilPair:
    """Half-size pencil for a real candidate eigenvalue.

    With lam_im = 0 the imaginary components decouple and can be taken zero;
    only the S weightings survive. Sizes drop from 4n-2p to 2n-p.
    """
    if not rp.is_real:
        raise ValueError("real pencil requires a real lambda")
    v = rp.v_bar
    at = rp.a_bar - rp.n_bar
    x_re = np.asarray(x_re, dtype=float)
    y1 = np.asarray(y1, dtype=float)
    sx = v @ (x_re * x_re)
    sy = v.T @ (y1 * y1)
    k, l = at.shape
    h = np.block([[np.zeros((l, l)), at.T], [at, np.zeros((k, k))]])
    d = np.block([[np.diag(sy), np.zeros((l, k))], [np.zeros((k, l)), np.diag(sx)]])
    return PencilPair(h=h, d=d, a_tilde=at, nx=l)


@dataclass(frozen=True)
class CandidateTriple:
    """Stationary candidate (sigma, x, y): unit vectors, sigma > 0."""

    sigma: float
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float, copy=True)
        y = np.array(self.y, dtype=float, copy=True)
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if abs(np.linalg.norm(x) - 1.0) > 1e-10 or abs(np.linalg.norm(y) - 1.0) > 1e-10:
            raise ValueError("x and y must be unit vectors")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


def normalize_triple(sigma, x, y) -> CandidateTriple:
    """Rescale an unnormalized stationary pair onto unit spheres.

    Scaling x by alpha and y by beta moves sigma to sigma/(alpha*beta), so any
    solution can be oriented to sigma > 0 with unit vectors: alpha carries the
    sign of sigma, beta the length of y.
    """
    nxr = np.linalg.norm(x)
    nyr = np.linalg.norm(y)
    if nxr == 0 or nyr == 0 or sigma == 0:
        raise ValueError("degenerate triple")
    alpha = np.sign(sigma) / nxr
    beta = 1.0 / nyr
    return CandidateTriple(sigma=float(abs(sigma) * nxr * nyr),
                           x=alpha * np.asarray(x, dtype=float),
                           y=beta * np.asarray(y, dtype=float))


def embed_real_triple(sigma, x_re, y1) -> CandidateTriple:
    m = len(x_re)
    n = len(y1)
    x = np.concatenate([x_re, np.zeros(m)])
    y = np.concatenate([y1, np.zeros(n)])
    return normalize_triple(sigma, x, y)


def system_residual(rp: ReducedProblem, t: CandidateTriple):
    """Residual of the two stationarity equations at (sigma, x, y)."""
    at = a_tilde(rp)
    d_x, d_y = build_weightings(rp, t.x, t.y)
    r1 = at.T @ t.y - t.sigma * (d_y @ t.x)
    r2 = at @ t.x - t.sigma * (d_x @ t.y)
    return float(np.sqrt(np.dot(r1, r1) + np.dot(r2, r2)))


def balanced_embed(t: CandidateTriple):
    """Map a unit triple onto the pencil variable z = (x, y)/sqrt(2).

    The balanced z is an eigenvector of the pencil assembled at itself with
    eigenvalue 2*sigma (the weightings are quadratic, so halving the block
    norms doubles the generalized eigenvalue).
    """
    z = np.concatenate([t.x, t.y]) / np.sqrt(2.0)
    return z, 2.0 * t.sigma


def pencil_residual(rp: ReducedProblem, t: CandidateTriple):
    """||H z - sigma_bar D(z) z|| at the balanced embedding of the triple."""
    z, sigma_bar = balanced_embed(t)
    pp = assemble_pencil(rp, z[:2 * rp.m], z[2 * rp.m:])
    return float(np.linalg.norm(pp.h @ z - sigma_bar * (pp.d @ z)))


def orthogonality_diagnostic(rp: ReducedProblem, t: CandidateTriple):
    """First-order sensitivity of the cost to moving lambda; diagnostic only.

    Returns the two inner products that vanish when lambda is itself optimal.
    Nonzero values just mean the radius could shrink at a neighboring lambda.
    """
    m, n, p = rp.m, rp.n, rp.p
    xr, xi = t.x[:m], t.x[m:]
    y1, y2 = t.y[:n], t.y[n:]
    y1t, y2t = y1[p:], y2[p:]
    c_re = float(y1t @ xr + y2t @ xi)
    c_im = float(y1t @ xi - y2t @ xr)
    return c_re, c_im


@dataclass(frozen=True)
class Reconstruction:
    """Perturbation rebuilt from a stationary triple, with audit fields."""

    perturbation: Perturbation
    sign: str                 # 'plus' or 'minus': which coupling variant won
    r_eig: float              # eigen-equation residual of the winner
    r_eig_other: float        # residual of the rejected variant
    cost_identity_rel: float  # relative gap of ||Delta||_F^2 vs sigma * x' At' y
    cost_bound_slack: float   # sigma * ||At||_F - ||Delta||_F^2  (should be >= 0)


def _delta_bar(rp, t, sign):
    m, n = rp.m, rp.n
    xr, xi = t.x[:m], t.x[m:]
    y1, y2 = t.y[:n], t.y[n:]
    return -t.sigma * (np.outer(y1, xr) + sign * np.outer(y2, xi)) * rp.v_bar


def reconstruct_perturbation(rp: ReducedProblem, t: CandidateTriple,
                             cf: CanonicalForm, residual_tol=1e-8) -> Reconstruction:
    """Rebuild the minimum-norm perturbation from a stationary triple.

    The coupling between the y2 and x_im factors is evaluated with both signs
    and the variant with the smaller eigen-equation residual is kept (the two
    appear inconsistently across derivations; constraint satisfaction is the
    ground truth). Triples whose best variant still violates the eigen
    constraint are rejected as spurious.
    """
    if system_residual(rp, t) > residual_tol:
        raise SpuriousTripleError("triple does not satisfy the stationarity system")
    m, n, p = rp.m, rp.n, rp.p
    xr, xi = t.x[:m], t.x[m:]
    xc = np.concatenate([np.zeros(p), xr + 1j * xi])
    nxc = np.linalg.norm(xc)
    if nxc == 0:
        raise SpuriousTripleError("zero eigenvector")
    xc = xc / nxc
    ac = cf.a_canonical
    db_p = _delta_bar(rp, t, +1.0)
    db_m = _delta_bar(rp, t, -1.0)
    dc_p = np.hstack([np.zeros((n, p)), db_p])
    dc_m = np.hstack([np.zeros((n, p)), db_m])
    r_p = float(np.linalg.norm((ac + dc_p) @ xc - rp.lam * xc))
    r_m = float(np.linalg.norm((ac + dc_m) @ xc - rp.lam * xc))
    if r_p <= r_m:
        sign_name, dc, r_eig, r_other = "plus", dc_p, r_p, r_m
    else:
        sign_name, dc, r_eig, r_other = "minus", dc_m, r_m, r_p
    if r_eig > residual_tol:
        raise SpuriousTripleError(
            f"reconstructed perturbation violates the eigen constraint "
            f"(residual {r_eig:.3e})"
        )
    delta = cf.to_original(dc)
    mask = ConstraintMask(cf.to_original(cf.v_canonical))
    pert = Perturbation(delta, mask)
    at = a_tilde(rp)
    identity = t.sigma * float(t.x @ (at.T @ t.y))
    cost = pert.frob_cost
    rel = abs(cost - identity) / max(abs(cost), 1e-300)
    slack = t.sigma * float(np.linalg.norm(at)) - cost
    return Reconstruction(perturbation=pert, sign=sign_name, r_eig=r_eig,
                          r_eig_other=r_other, cost_identity_rel=rel,
                          cost_bound_slack=slack)
