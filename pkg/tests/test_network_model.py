import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netobs import (ConstraintMask, MaskSupportError, NetworkFormatError,
                    NetworkSystem, Perturbation, UnobservableSystemError,
                    canonicalize, is_observable, load_network,
                    network_from_dict, pbh_margin, perturbation_from_dict,
                    perturbation_to_dict, verify_unobservability)
from conftest import line_matrix, net_of, star_matrix


# ---------------------------------------------------------------------------
# construction and validation


def test_rejects_all_sensors():
    a = np.array([[0.5, 0.2], [0.3, 0.7]])
    with pytest.raises(NetworkFormatError):
        NetworkSystem(a, (0, 1))


def test_rejects_duplicate_and_out_of_range_sensors():
    a = line_matrix([0.5, 0.6, 0.7], [0.4, 0.3], [0.2, 0.1])
    with pytest.raises(NetworkFormatError):
        NetworkSystem(a, (0, 0))
    with pytest.raises(NetworkFormatError):
        NetworkSystem(a, (3,))


def test_rejects_unobservable_by_default():
    with pytest.raises(UnobservableSystemError):
        NetworkSystem(np.zeros((2, 2)), (0,))
    net = NetworkSystem(np.zeros((2, 2)), (0,), check_observability=False)
    ok, margin = is_observable(net)
    assert not ok
    assert margin < 1e-12


def test_zero_matrix_unobservable():
    ok, _ = is_observable(NetworkSystem(np.zeros((2, 2)), (0,),
                                        check_observability=False))
    assert not ok


def test_line_all_super_nonzero_observable(line4):
    net, _ = line4
    ok, margin = is_observable(net)
    assert ok and margin > 0


def test_star_equal_leaf_diagonals_unobservable():
    # equal leaf self-loops admit an eigenvector in Ker(A12) x Ker(C)
    a = star_matrix([0.5, 0.3, 0.3, 0.8], [0.6, 0.7, 0.9], [0.2, 0.4, 0.5])
    net = NetworkSystem(a, (0,), check_observability=False)
    ok, margin = is_observable(net)
    assert not ok
    assert margin <= 1e-10
    x = np.array([0.0, a[0, 2], -a[0, 1], 0.0])
    x /= np.linalg.norm(x)
    assert np.linalg.norm(a @ x - 0.3 * x) < 1e-14  # direct PBH evidence


def test_observable_margin_positive_everywhere(line3):
    net, _ = line3
    margin, _ = pbh_margin(net.weights, net.sensors)
    assert margin > 1e-6


# ---------------------------------------------------------------------------
# canonical form


def test_canonicalize_identity_when_sensor_first(line3):
    net, mask = line3
    cf = canonicalize(net, mask)
    assert tuple(cf.permutation) == (0, 1, 2)
    assert cf.a11.shape == (1, 1) and cf.a11[0, 0] == net.weights[0, 0]
    np.testing.assert_array_equal(cf.a12, net.weights[0:1, 1:])


def test_canonicalize_sensor_last_roundtrip():
    a = line_matrix([0.7, 0.4, 0.9], [0.5, 0.3], [0.6, 0.8])
    net, mask = net_of(a, sensors=(2,))
    cf = canonicalize(net, mask)
    assert cf.permutation[0] == 2
    np.testing.assert_array_equal(cf.to_original(cf.a_canonical), a)


def test_canonical_c_matrix_is_identity_block(line3):
    net, mask = line3
    cf = canonicalize(net, mask)
    # sensors-first relabeling puts C_O = [I_p 0]
    perm = list(cf.permutation)
    c = net.c_matrix[:, perm]
    np.testing.assert_array_equal(c, np.hstack([np.eye(1), np.zeros((1, 2))]))


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 7), st.integers(0, 10 ** 6))
def test_canonicalize_roundtrip_random(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.1, 1.0, size=(n, n)) * (rng.uniform(size=(n, n)) < 0.7)
    np.fill_diagonal(a, rng.uniform(0.1, 1.0, size=n))
    sensors = tuple(sorted(rng.choice(n, size=rng.integers(1, n), replace=False)))
    try:
        net, mask = net_of(a, sensors=sensors)
    except UnobservableSystemError:
        return
    cf = canonicalize(net, mask)
    np.testing.assert_array_equal(cf.to_original(cf.a_canonical), a)
    np.testing.assert_array_equal(cf.v_canonical[: net.p, net.p:], cf.v12)
    assert cf.v_bar.shape == (n, n - net.p)


# ---------------------------------------------------------------------------
# masks and perturbations


def test_mask_entries_binary():
    with pytest.raises(NetworkFormatError):
        ConstraintMask(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_mask_same_as_graph(line3):
    net, mask = line3
    np.testing.assert_array_equal(mask.mask, (net.weights != 0).astype(float))


def test_perturbation_rejects_off_mask_entries(line3):
    net, mask = line3
    delta = np.zeros((3, 3))
    delta[0, 2] = 1e-30  # not an edge, even tiny values are rejected
    with pytest.raises(MaskSupportError):
        Perturbation(delta, mask)


def test_perturbation_cost_is_squared_frobenius(line3):
    _, mask = line3
    delta = np.zeros((3, 3))
    delta[0, 1] = 0.3
    delta[1, 2] = -0.4
    p = Perturbation(delta, mask)
    assert p.frob_cost == pytest.approx(0.25, rel=1e-14)
    assert p.frob_norm == pytest.approx(0.5, rel=1e-14)
    with pytest.raises(NetworkFormatError):
        Perturbation(delta, mask, frob_cost=0.7)


# ---------------------------------------------------------------------------
# unobservability certificates


def test_verify_edge_deletion_certificate(line3):
    net, mask = line3
    a = net.weights
    delta = np.zeros((3, 3))
    delta[1, 2] = -a[1, 2]  # cut the chain before node 3
    rep = verify_unobservability(net, Perturbation(delta, mask), a[2, 2])
    assert rep.verified
    assert rep.r_eig < 1e-12 and rep.r_out < 1e-12 and rep.smin < 1e-12


def test_verify_star_symmetry_certificate():
    a = star_matrix([0.5, 0.2, 0.8, 0.45], [0.6, 0.7, 0.9], [0.3, 0.4, 0.55])
    net, mask = net_of(a)
    mean = (a[1, 1] + a[2, 2]) / 2.0
    delta = np.zeros((4, 4))
    delta[1, 1] = mean - a[1, 1]
    delta[2, 2] = mean - a[2, 2]
    rep = verify_unobservability(net, Perturbation(delta, mask), mean)
    assert rep.verified and rep.r_eig <= 1e-12


def test_verify_rejects_null_perturbation_on_observable(line3):
    net, mask = line3
    zero = Perturbation(np.zeros((3, 3)), mask)
    for lam in np.linalg.eigvals(net.weights):
        rep = verify_unobservability(net, zero, lam)
        assert not rep.verified
        assert rep.smin > 1e-8


# ---------------------------------------------------------------------------
# serialization


def _doc3():
    return {
        "n": 3,
        "edges": [[1, 1, 0.7], [1, 2, 0.5], [2, 1, 0.6], [2, 2, 0.4],
                  [2, 3, 0.3], [3, 2, 0.8], [3, 3, 0.9]],
        "sensors": [1],
    }


def test_network_from_dict_one_based():
    net, mask = network_from_dict(_doc3())
    assert net.n == 3 and net.sensors == (0,)
    assert net.weights[0, 1] == 0.5
    assert mask.mask[0, 1] == 1.0 and mask.mask[0, 2] == 0.0


def test_network_from_dict_duplicate_edge():
    doc = _doc3()
    doc["edges"].append([1, 1, 0.2])
    with pytest.raises(NetworkFormatError):
        network_from_dict(doc)


def test_load_network_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(NetworkFormatError):
        load_network(str(bad))
    with pytest.raises(NetworkFormatError):
        load_network(str(tmp_path / "missing.json"))


def test_perturbation_roundtrip_bitexact(line3):
    _, mask = line3
    delta = np.zeros((3, 3))
    delta[0, 1] = 0.123456789012345
    delta[2, 1] = -0.987654321098765
    p = Perturbation(delta, mask)
    doc = perturbation_to_dict(p, lam=0.25 + 0.5j)
    doc2 = json.loads(json.dumps(doc))
    p2, lam2 = perturbation_from_dict(doc2)
    np.testing.assert_array_equal(p2.delta, p.delta)
    assert p2.frob_cost == p.frob_cost
    assert lam2 == 0.25 + 0.5j
