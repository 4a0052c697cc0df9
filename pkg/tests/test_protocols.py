import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_consensus.protocols import (
    ConstantBound,
    LinearBound,
    ProtocolConfig,
    ProtocolKind,
    adaptive_leaderless_control,
    adaptive_lf_control,
    discontinuous_leaderless_control,
    g_boundary,
    g_hat,
    g_tilde,
    r_bar,
    r_boundary,
    simplified_adaptive_control,
    static_leaderless_control,
    static_lf_control,
)

K1 = np.array([[-1.0]])
G1 = np.array([[1.0]])


def test_g_boundary_examples():
    np.testing.assert_allclose(g_boundary([0.3, 0.0], 1.0, 0.5), [0.6, 0.0])
    np.testing.assert_allclose(g_boundary([3.0, 4.0], 2.0, 0.5), [0.6, 0.8])
    np.testing.assert_array_equal(g_boundary([0.0, 0.0], 7.0, 0.5), [0.0, 0.0])
    with pytest.raises(ValueError):
        g_boundary([1.0], 1.0, 0.0)


def test_g_hat_examples():
    np.testing.assert_allclose(g_hat([3.0, 4.0]), [0.6, 0.8])
    np.testing.assert_array_equal(g_hat([0.0, 0.0]), [0.0, 0.0])
    np.testing.assert_allclose(g_hat([-2.0, 0.0]), [-1.0, 0.0])


def test_r_boundary_examples():
    np.testing.assert_allclose(r_boundary([1.0, 0.0], 2.0, 0.0, 5.0, 0.5), [2.0, 0.0])
    np.testing.assert_allclose(r_boundary([0.1, 0.0], 1.0, 1.0, 0.0, 0.5), [0.2, 0.0])
    np.testing.assert_array_equal(r_boundary([0.0, 0.0], 1.0, 1.0, 1.0, 0.5), [0.0, 0.0])


def test_g_tilde_examples():
    np.testing.assert_allclose(g_tilde([0.0, 1.0], 0.0, 0.4, 0.5), [0.0, 2.0])
    np.testing.assert_allclose(g_tilde([0.0, 1.0], 1.0, 0.4, 0.5), [0.0, 1.0])
    np.testing.assert_array_equal(g_tilde([0.0, 0.0], 1.0, 0.4, 0.5), [0.0, 0.0])


def test_tie_takes_inner_branch():
    # rho * ||w|| == kappa exactly
    np.testing.assert_allclose(g_boundary([0.5], 1.0, 0.5), [1.0])
    np.testing.assert_allclose(g_boundary([0.25], 2.0, 0.5), [0.5])


def test_static_leaderless_examples():
    assert static_leaderless_control(np.zeros((1, 1)), [3.0], K1, 1.0, 0.5)[0, 0] == 0.0
    assert static_leaderless_control(np.array([[2.0]]), [0.0], K1, 1.0, 0.5)[0, 0] == pytest.approx(-2.0)
    assert static_leaderless_control(np.array([[0.1]]), [1.0], K1, 1.0, 0.5)[0, 0] == pytest.approx(-0.3)


def test_adaptive_examples():
    u, dd, de = adaptive_leaderless_control(np.array([[1.0]]), np.array([0.5]), np.array([0.0]),
                                            np.array([[2.0]]), K1, G1, 0.5, 10.0, 10.0, 0.05, 0.05)
    assert u[0, 0] == pytest.approx(-1.0)
    assert dd[0] == pytest.approx(19.75)
    assert de[0] == pytest.approx(20.0)

    u, dd, de = adaptive_leaderless_control(np.zeros((1, 1)), np.array([3.0]), np.array([2.0]),
                                            np.array([[5.0]]), K1, G1, 0.5, 10.0, 4.0, 0.05, 0.1)
    assert u[0, 0] == 0.0
    assert dd[0] == pytest.approx(-10 * 0.05 * 3.0)
    assert de[0] == pytest.approx(-4 * 0.1 * 2.0)

    _, dd, _ = adaptive_leaderless_control(np.array([[0.3]]), np.array([0.0]), np.array([0.0]),
                                           np.array([[1.0]]), K1, G1, 0.5, 10.0, 10.0, 0.05, 0.05)
    assert dd[0] > 0


def test_static_lf_examples():
    assert static_lf_control(np.zeros((1, 1)), [1.0], K1, 1.0, 1.0, 1.0, 0.5)[0, 0] == 0.0
    # c1 w + (c2 + rho) w/||w|| = -2 + 1 * (-1)
    assert static_lf_control(np.array([[2.0]]), [0.0], K1, 1.0, 1.0, 1.0, 0.5)[0, 0] == pytest.approx(-3.0)


def test_simplified_examples():
    u, dd = simplified_adaptive_control(np.array([[1.0]]), np.array([2.0]), K1, G1, 0.5, 10.0, 0.05)
    assert u[0, 0] == pytest.approx(-4.0)
    u, _ = simplified_adaptive_control(np.array([[1.0]]), np.array([0.1]), K1, G1, 0.5, 10.0, 0.05)
    assert u[0, 0] == pytest.approx(-0.3)
    u, dd = simplified_adaptive_control(np.zeros((1, 1)), np.array([2.0]), K1, G1, 0.5, 10.0, 0.05)
    assert u[0, 0] == 0.0 and dd[0] == pytest.approx(-10 * 0.05 * 2.0)


def test_discontinuous_law_jumps():
    K = np.array([[1.0]])
    lo = discontinuous_leaderless_control(np.array([[-1e-9]]), [1.0], K, 1.0)[0, 0]
    hi = discontinuous_leaderless_control(np.array([[1e-9]]), [1.0], K, 1.0)[0, 0]
    assert hi - lo == pytest.approx(2.0, abs=1e-6)


def _ray_max_jump(fn, n_samples):
    s = np.linspace(0.0, 2.0, n_samples)
    vals = np.array([fn(si * np.array([0.6, 0.8])) for si in s])
    return np.max(np.linalg.norm(np.diff(vals, axis=0), axis=-1))


# g and g_tilde use the inner branch w/kappa, which meets w/||w|| on the
# switching surface only when the switching gain is 1; r is continuous for any gain
@pytest.mark.parametrize("fn", [
    lambda w: g_boundary(w, 1.0, 0.5),
    lambda w: g_tilde(w, 0.3, 0.7, 0.5),
    lambda w: r_boundary(w, 1.5, 0.5, 2.0, 0.5),
    lambda w: r_boundary(w, 0.2, 0.0, 0.0, 0.5),
    lambda w: r_bar(w, 1.0, 0.5),
], ids=["g", "g_tilde", "r", "r_small_gain", "r_bar_unit"])
def test_boundary_layers_continuous(fn):
    # a continuous map's largest step shrinks with the sample spacing
    coarse, fine = _ray_max_jump(fn, 201), _ray_max_jump(fn, 20001)
    assert fine < coarse / 50


def test_g_hat_jump_does_not_vanish():
    assert _ray_max_jump(g_hat, 20001) > 0.5


@pytest.mark.parametrize("rho", [0.5, 2.0, 4.0])
def test_g_boundary_jump_size(rho):
    # ||w/kappa|| = 1/rho on the switching surface versus 1 outside
    assert _ray_max_jump(lambda w: g_boundary(w, rho, 0.5), 20001) == pytest.approx(abs(1 - 1 / rho), abs=1e-3)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=4), st.floats(0, 20), st.floats(1e-3, 5))
def test_g_boundary_norm_bound(w, rho, kappa):
    w = np.array(w)
    g = g_boundary(w, rho, kappa)
    nw = np.linalg.norm(w)
    assert np.linalg.norm(g) <= max(1.0, nw / kappa) * (1 + 1e-12) + 1e-12
    if rho * nw > kappa:
        assert np.linalg.norm(g) == pytest.approx(1.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5), st.integers(1, 3), st.integers(1, 2), st.integers(0, 2 ** 32 - 1))
def test_zero_delta_gives_zero_control(N, n, p, seed):
    rng = np.random.default_rng(seed)
    K = rng.normal(size=(p, n))
    Gam = K.T @ K
    D = np.zeros((N, n))
    X = rng.normal(size=(N, n))
    rho = rng.uniform(0, 5, N)
    d, e = rng.uniform(0, 5, N), rng.uniform(0, 5, N)
    assert not np.any(static_leaderless_control(D, rho, K, 1.3, 0.5))
    assert not np.any(static_lf_control(D, rho, K, 1.3, 2.0, 1.0, 0.5))
    assert not np.any(adaptive_leaderless_control(D, d, e, X, K, Gam, 0.5, 10, 10, 0.05, 0.05)[0])
    assert not np.any(simplified_adaptive_control(D, d, K, Gam, 0.5, 10, 0.05)[0])


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5), st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_lf_and_leaderless_adaptive_coincide(N, n, seed):
    rng = np.random.default_rng(seed)
    K = rng.normal(size=(1, n))
    args = (rng.normal(size=(N, n)), rng.uniform(0, 3, N), rng.uniform(0, 3, N), rng.normal(size=(N, n)),
            K, K.T @ K, 0.5, 10.0, 10.0, 0.05, 0.05)
    for a, b in zip(adaptive_lf_control(*args), adaptive_leaderless_control(*args)):
        np.testing.assert_array_equal(a, b)


def test_vectorized_matches_per_agent():
    rng = np.random.default_rng(3)
    D = rng.normal(size=(4, 2)) * 0.3
    K = np.array([[-0.7, -1.5]])
    rho = rng.uniform(0, 2, 4)
    stacked = static_leaderless_control(D, rho, K, 0.8, 0.5)
    for i in range(4):
        np.testing.assert_allclose(static_leaderless_control(D[i], rho[i], K, 0.8, 0.5), stacked[i])


def test_r_bar_inner_branch_is_linear():
    # inner branch is linear in d_bar, so the map jumps unless d_bar == 1
    d = 2.0
    w_in = np.array([0.25 - 1e-9])
    w_out = np.array([0.25 + 1e-9])
    assert r_bar(w_in, d, 0.5)[0] == pytest.approx(d * 0.25 / 0.5, rel=1e-6)
    assert r_bar(w_out, d, 0.5)[0] == pytest.approx(d, rel=1e-6)


def test_bounds_and_config():
    X = np.array([[3.0, 4.0], [0.0, 0.0]])
    np.testing.assert_allclose(LinearBound([1.0, 2.0], [0.5, 0.5]).rho(X, 0.0), [3.5, 2.0])
    np.testing.assert_allclose(ConstantBound([1.0, 2.0]).rho(X, 0.0), [1.0, 2.0])
    with pytest.raises(ValueError):
        LinearBound([-1.0], [0.0])
    cfg = ProtocolConfig("adaptive_leaderless").resolved(3)
    assert cfg.tau.shape == (3,)
    assert cfg.kind.adaptive_channels == 2
    assert ProtocolKind.SIMPLIFIED_ADAPTIVE.adaptive_channels == 1
    assert ProtocolKind.STATIC_LEADER_FOLLOWER.leader_follower
    with pytest.raises(ValueError):
        ProtocolConfig("adaptive_leaderless", phi=0.0).resolved(2)
    with pytest.raises(ValueError):
        ProtocolConfig("static_leaderless", kappa=0.0)
