import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netobs import (CandidateTriple, SpuriousTripleError, a_tilde,
                    assemble_pencil, assemble_real_pencil, balanced_embed,
                    build_reduced, build_weightings, canonicalize,
                    embed_real_triple, normalize_triple,
                    orthogonality_diagnostic, pencil_residual,
                    reconstruct_perturbation, system_residual)
from conftest import line_matrix, net_of


def reduced3(lam=1j):
    a = line_matrix([0.7, 0.4, 0.9], [0.5, 0.3], [0.6, 0.8])
    net, mask = net_of(a)
    cf = canonicalize(net, mask)
    return build_reduced(cf, lam), cf


def loop_weightings(v_bar, x, y):
    """Entry-by-entry evaluation of the S/T/Q sums, independent of the
    vectorized implementation."""
    n, m = v_bar.shape
    xr, xi = x[:m], x[m:]
    y1, y2 = y[:n], y[n:]
    sx = np.zeros(n); tx = np.zeros(n); qx = np.zeros(n)
    for i in range(n):
        for j in range(m):
            sx[i] += v_bar[i, j] * xr[j] ** 2
            tx[i] += v_bar[i, j] * xr[j] * xi[j]
            qx[i] += v_bar[i, j] * xi[j] ** 2
    sy = np.zeros(m); ty = np.zeros(m); qy = np.zeros(m)
    for j in range(m):
        for i in range(n):
            sy[j] += v_bar[i, j] * y1[i] ** 2
            ty[j] += v_bar[i, j] * y1[i] * y2[i]
            qy[j] += v_bar[i, j] * y2[i] ** 2
    d_x = np.block([[np.diag(sx), np.diag(tx)], [np.diag(tx), np.diag(qx)]])
    d_y = np.block([[np.diag(sy), np.diag(ty)], [np.diag(ty), np.diag(qy)]])
    return d_x, d_y


# ---------------------------------------------------------------------------
# reduced problem blocks


def test_blocks_at_purely_imaginary_lambda():
    rp, _ = reduced3(1j)
    m = rp.m
    np.testing.assert_array_equal(rp.n_bar, np.zeros((rp.n, m)))
    np.testing.assert_array_equal(rp.m_bar[rp.p:, :], np.eye(m))
    np.testing.assert_array_equal(rp.m_bar[: rp.p, :], np.zeros((rp.p, m)))


def test_blocks_at_real_lambda():
    rp, _ = reduced3(0.4)
    assert rp.is_real
    np.testing.assert_array_equal(rp.m_bar, np.zeros((rp.n, rp.m)))
    np.testing.assert_array_equal(rp.n_bar[rp.p:, :], 0.4 * np.eye(rp.m))


def test_blocks_single_column_when_one_free_node():
    a = line_matrix([0.5, 0.8], [0.6], [0.3])
    net, mask = net_of(a)
    rp = build_reduced(canonicalize(net, mask), 0.25 + 0.1j)
    for blk in (rp.a_bar, rp.m_bar, rp.n_bar, rp.v_bar):
        assert blk.shape[1] == 1


def test_a_tilde_layout():
    rp, _ = reduced3(0.3 + 0.6j)
    at = a_tilde(rp)
    n, m = rp.n, rp.m
    assert at.shape == (2 * n, 2 * m)
    np.testing.assert_array_equal(at[:n, :m], rp.a_bar - rp.n_bar)
    np.testing.assert_array_equal(at[:n, m:], rp.m_bar)
    np.testing.assert_array_equal(at[n:, :m], -rp.m_bar)
    np.testing.assert_array_equal(at[n:, m:], rp.a_bar - rp.n_bar)


# ---------------------------------------------------------------------------
# weighting matrices


def test_weightings_match_loop_oracle():
    rp, _ = reduced3(0.2 + 0.9j)
    rng = np.random.default_rng(42)
    for _ in range(10):
        x = rng.standard_normal(2 * rp.m)
        y = rng.standard_normal(2 * rp.n)
        d_x, d_y = build_weightings(rp, x, y)
        ox, oy = loop_weightings(rp.v_bar, x, y)
        np.testing.assert_allclose(d_x, ox, atol=1e-14)
        np.testing.assert_allclose(d_y, oy, atol=1e-14)


def test_weightings_line3_hand_case():
    # x_Re = e_1, x_Im = e_2: S_x picks column 1 of V_bar, Q_x column 2
    rp, _ = reduced3(1j)
    x = np.array([1.0, 0.0, 0.0, 1.0])
    y = np.zeros(2 * rp.n)
    d_x, _ = build_weightings(rp, x, y)
    np.testing.assert_array_equal(np.diag(d_x)[: rp.n], rp.v_bar[:, 0])
    np.testing.assert_array_equal(np.diag(d_x)[rp.n:], rp.v_bar[:, 1])
    np.testing.assert_array_equal(d_x[: rp.n, rp.n:], np.zeros((rp.n, rp.n)))


def test_weightings_all_ones_mask_real_vector():
    rp, _ = reduced3(1j)
    rp_full = type(rp)(a_bar=rp.a_bar, m_bar=rp.m_bar, n_bar=rp.n_bar,
                       v_bar=np.ones_like(rp.v_bar), lam=rp.lam)
    xr = np.array([0.6, 0.8])
    x = np.concatenate([xr, np.zeros(2)])
    d_x, _ = build_weightings(rp_full, x, np.zeros(2 * rp.n))
    np.testing.assert_allclose(d_x[: rp.n, : rp.n], np.eye(rp.n), atol=1e-15)
    assert np.all(np.diag(d_x)[rp.n:] == 0)


def test_weightings_zero_mask_degenerate():
    rp, _ = reduced3(1j)
    rp0 = type(rp)(a_bar=rp.a_bar, m_bar=rp.m_bar, n_bar=rp.n_bar,
                   v_bar=np.zeros_like(rp.v_bar), lam=rp.lam)
    x = np.ones(2 * rp.m)
    y = np.ones(2 * rp.n)
    d_x, d_y = build_weightings(rp0, x, y)
    assert not d_x.any() and not d_y.any()


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5.0), st.integers(0, 10 ** 6))
def test_weighting_scaling_is_quadratic(alpha, seed):
    rp, _ = reduced3(0.3 + 0.7j)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(2 * rp.m)
    y = rng.standard_normal(2 * rp.n)
    d_x, d_y = build_weightings(rp, x, y)
    d_x2, d_y2 = build_weightings(rp, alpha * x, y)
    np.testing.assert_allclose(d_x2, alpha ** 2 * d_x, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(d_y2, d_y, atol=0)


def test_weighting_traces_full_mask_unit_vectors():
    rp, _ = reduced3(1j)
    rp_full = type(rp)(a_bar=rp.a_bar, m_bar=rp.m_bar, n_bar=rp.n_bar,
                       v_bar=np.ones_like(rp.v_bar), lam=rp.lam)
    rng = np.random.default_rng(3)
    x = rng.standard_normal(2 * rp.m); x /= np.linalg.norm(x)
    y = rng.standard_normal(2 * rp.n); y /= np.linalg.norm(y)
    d_x, d_y = build_weightings(rp_full, x, y)
    assert np.trace(d_x) == pytest.approx(rp.n, rel=1e-12)
    assert np.trace(d_y) == pytest.approx(rp.m, rel=1e-12)


# ---------------------------------------------------------------------------
# pencil assembly


def test_pencil_structure():
    rp, _ = reduced3(0.1 + 0.8j)
    rng = np.random.default_rng(5)
    x = rng.standard_normal(2 * rp.m); x /= np.linalg.norm(x)
    y = rng.standard_normal(2 * rp.n); y /= np.linalg.norm(y)
    pp = assemble_pencil(rp, x, y)
    k = pp.size
    assert k == 4 * rp.n - 2 * rp.p
    np.testing.assert_array_equal(pp.h, pp.h.T)
    np.testing.assert_array_equal(pp.h[: 2 * rp.m, : 2 * rp.m], np.zeros((2 * rp.m,) * 2))
    np.testing.assert_array_equal(pp.h[2 * rp.m:, 2 * rp.m:], np.zeros((2 * rp.n,) * 2))
    np.testing.assert_array_equal(pp.d, pp.d.T)
    assert np.linalg.eigvalsh(pp.d).min() >= -1e-12
    # H always singular: zero belongs to the pencil spectrum
    assert np.linalg.svd(pp.h, compute_uv=False)[-1] < 1e-12


def test_a_tilde_full_column_rank_observable():
    rp, _ = reduced3(0.45 + 0.3j)
    assert np.linalg.matrix_rank(a_tilde(rp)) == 2 * rp.m


def test_real_pencil_requires_real_lambda():
    rp, _ = reduced3(1j)
    with pytest.raises(ValueError):
        assemble_real_pencil(rp, np.ones(rp.m), np.ones(rp.n))


# ---------------------------------------------------------------------------
# triples


def test_triple_validation():
    x = np.array([1.0, 0.0]); y = np.array([1.0, 0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        CandidateTriple(sigma=-0.5, x=x, y=y)
    with pytest.raises(ValueError):
        CandidateTriple(sigma=0.5, x=2 * x, y=y)


@settings(max_examples=40, deadline=None)
@given(st.floats(-4, 4), st.integers(0, 10 ** 6))
def test_normalize_triple_gauge(sigma, seed):
    if abs(sigma) < 1e-3:
        return
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(4) * 2.0
    y = rng.standard_normal(6) * 0.5
    t = normalize_triple(sigma, x, y)
    assert t.sigma > 0
    assert np.linalg.norm(t.x) == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.norm(t.y) == pytest.approx(1.0, abs=1e-12)
    # sigma * outer(y, x) is gauge invariant under the rescaling
    np.testing.assert_allclose(t.sigma * np.outer(t.y, t.x),
                               sigma * np.outer(y, x),
                               rtol=1e-10, atol=1e-12)


def test_balanced_embed_residual_relation():
    rp, _ = reduced3(0.6j)
    rng = np.random.default_rng(11)
    for _ in range(5):
        x = rng.standard_normal(2 * rp.m); x /= np.linalg.norm(x)
        y = rng.standard_normal(2 * rp.n); y /= np.linalg.norm(y)
        t = CandidateTriple(sigma=abs(rng.standard_normal()) + 0.1, x=x, y=y)
        z, sigma_bar = balanced_embed(t)
        assert np.linalg.norm(z) == pytest.approx(1.0, abs=1e-12)
        assert sigma_bar == pytest.approx(2 * t.sigma, rel=1e-14)
        assert pencil_residual(rp, t) == pytest.approx(
            system_residual(rp, t) / np.sqrt(2.0), rel=1e-10)


# ---------------------------------------------------------------------------
# reconstruction


def two_node_optimal_triple():
    """n=2 chain, lambda = a22: the unique admissible perturbation kills a12.

    Stationarity holds with x = e1 (reduced coordinates), y = e1, sigma = a12;
    brute force over the one-parameter family confirms optimality.
    """
    a = line_matrix([0.9, 0.35], [0.62], [0.27])
    net, mask = net_of(a)
    cf = canonicalize(net, mask)
    rp = build_reduced(cf, a[1, 1])
    t = CandidateTriple(sigma=a[0, 1],
                        x=np.array([1.0, 0.0]),
                        y=np.array([1.0, 0.0, 0.0, 0.0]))
    return a, net, mask, cf, rp, t


def test_two_node_reconstruction_matches_brute_force():
    a, net, mask, cf, rp, t = two_node_optimal_triple()
    assert system_residual(rp, t) < 1e-14
    rec = reconstruct_perturbation(rp, t, cf)
    delta = rec.perturbation.delta
    expected = np.zeros((2, 2))
    expected[0, 1] = -a[0, 1]
    np.testing.assert_allclose(delta, expected, atol=1e-12)
    assert rec.perturbation.frob_norm == pytest.approx(a[0, 1], rel=1e-12)
    # brute force over the one-free-parameter feasible family: x = e2 forces
    # d12 = -a12, and d22 only shifts the eigenvalue, so cost is minimal at 0
    from netobs import Perturbation, verify_unobservability
    costs = []
    for d22 in np.linspace(-1, 1, 41):
        d = np.zeros((2, 2))
        d[0, 1] = -a[0, 1]
        d[1, 1] = d22
        rep = verify_unobservability(net, Perturbation(d, mask), a[1, 1] + d22)
        assert rep.verified  # every member is feasible
        costs.append(np.sqrt(a[0, 1] ** 2 + d22 ** 2))
    assert min(costs) == pytest.approx(a[0, 1], rel=1e-12)
    assert all(c >= a[0, 1] - 1e-12 for c in costs)


def test_reconstruction_cost_identities():
    a, net, mask, cf, rp, t = two_node_optimal_triple()
    rec = reconstruct_perturbation(rp, t, cf)
    assert rec.cost_identity_rel < 1e-10
    assert rec.cost_bound_slack >= -1e-12
    assert rec.r_eig <= 1e-10
    assert rec.sign in ("plus", "minus")


def test_orthogonality_diagnostic_near_zero_at_stationary():
    _, _, _, _, rp, t = two_node_optimal_triple()
    c_re, c_im = orthogonality_diagnostic(rp, t)
    assert abs(c_re) < 1e-12 and abs(c_im) < 1e-12


def test_reconstruction_rejects_garbage_triple():
    rp, cf = reduced3(1j)
    rng = np.random.default_rng(0)
    x = rng.standard_normal(2 * rp.m); x /= np.linalg.norm(x)
    y = rng.standard_normal(2 * rp.n); y /= np.linalg.norm(y)
    t = CandidateTriple(sigma=1.0, x=x, y=y)
    with pytest.raises(SpuriousTripleError):
        reconstruct_perturbation(rp, t, cf)


def test_embed_real_triple_roundtrip():
    t = embed_real_triple(0.7, np.array([0.6, 0.8]), np.array([0.0, 1.0, 0.0]))
    assert t.sigma == pytest.approx(0.7)
    assert np.all(t.x[2:] == 0) and np.all(t.y[3:] == 0)
    assert np.linalg.norm(t.x) == pytest.approx(1.0, abs=1e-14)
