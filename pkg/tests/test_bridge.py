import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmetric.algebra import PAULI_X, PAULI_Z, AlgebraShape, Element, Morphism, state_net
from qmetric.bridge import (Bridge, bi_lipschitz_bound, bridge_height_bounds,
                            bridge_length_bounds, bridge_reach_bounds, bridge_seminorm,
                            one_level_support, perturbation_bound)
from qmetric.lipnorm import from_group_action, from_metric

M2 = AlgebraShape([2])
X = Element(M2, [PAULI_X])
Z = Element(M2, [PAULI_Z])
SIGMA = [PAULI_X, np.array([[0, -1j], [1j, 0]]), PAULI_Z]


def pauli_action():
    return from_group_action([X, Z], [1.0, 1.0])


def pivot_bridge(diag):
    idm = Morphism.identity(M2)
    return Bridge(M2.diag(diag), idm, idm)


def bloch_vector(phi):
    rho = phi.densities[0]
    return np.array([np.trace(rho @ s).real for s in SIGMA])


def pauli_ball_oracle(u, grid=20001):
    y = np.linspace(-0.5, 0.5, grid)
    w = np.sqrt(np.maximum(0.25 - y * y, 0.0))
    return float(np.max((abs(u[0]) + abs(u[2])) * w + u[1] * y))


def two_point_vs_point(t=1.0):
    """C^2 with d(0,1) = t and a one-point space, glued by the unit pivot."""
    A = from_metric(np.array([[0.0, t], [t, 0.0]]))
    B = from_metric(np.zeros((1, 1)))
    g = Bridge(AlgebraShape([1, 1]).unit(), Morphism.identity(A.shape),
               Morphism.point_map([0, 0], 1))
    return g, A, B


def test_seminorm_examples():
    g1 = pivot_bridge([1, 1])
    assert bridge_seminorm(g1, X, X) == pytest.approx(0.0, abs=1e-12)
    assert bridge_seminorm(g1, X, Z) == pytest.approx(np.sqrt(2))
    g = pivot_bridge([1, 0])
    assert bridge_seminorm(g, X, X) == pytest.approx(1.0)


def test_one_level_support_ranks():
    P, net = one_level_support(pivot_bridge([1, 0]))
    assert np.allclose(P.to_matrix(), np.diag([1, 0]))
    assert len(net) == 1
    s3 = AlgebraShape([3])
    idm = Morphism.identity(s3)
    P3, net3 = one_level_support(Bridge(s3.diag([1, 1, 0]), idm, idm), count=4)
    assert np.trace(P3.to_matrix()).real == pytest.approx(2.0)
    assert len(net3) == 6
    P1, _ = one_level_support(pivot_bridge([1, 1]))
    assert np.allclose(P1.to_matrix(), np.eye(2))


def test_empty_level_set_rejected():
    with pytest.raises(ValueError):
        pivot_bridge([0.5, 0])


def test_identity_bridge_vanishes():
    L = pauli_action()
    out = bridge_length_bounds(pivot_bridge([1, 1]), L, L, directions=4, net_size=4)
    assert out["reach"].lower == pytest.approx(0.0, abs=1e-7)
    assert out["height"].lower == pytest.approx(0.0, abs=1e-7)
    assert out["length"].lower == pytest.approx(0.0, abs=1e-7)


def test_reach_two_point_grid_oracle():
    t = 1.0
    g, A, B = two_point_vs_point(t)
    got = bridge_reach_bounds(g, A, B, directions=4, seed=0)
    # grid over the two 1-D balls: a = (s, -s), |2s| <= t; b ranges over scalars
    s = np.linspace(-t / 2, t / 2, 401)
    b = np.linspace(-2, 2, 4001)
    oracle = np.max(np.min(np.maximum(np.abs(s[:, None] - b), np.abs(-s[:, None] - b)), axis=1))
    assert got.lower == pytest.approx(oracle, abs=2e-3)
    assert got.lower == pytest.approx(t / 2, abs=1e-7)


def test_reach_scales_with_lipnorm():
    g, A, B = two_point_vs_point()
    base = bridge_reach_bounds(g, A, B, directions=4).lower
    half = bridge_reach_bounds(g, A.scaled(2.0), B, directions=4).lower
    assert half == pytest.approx(base / 2, abs=1e-7)


def test_height_commutative_unit_pivot_is_zero():
    g, A, B = two_point_vs_point()
    h = bridge_height_bounds(g, A, B)
    assert h.certified
    assert h.lower == pytest.approx(0.0, abs=1e-8)


def test_height_matches_pure_state_oracle():
    L = pauli_action()
    g = pivot_bridge([1, 0])
    seed, k = 5, 6
    h = bridge_height_bounds(g, L, L, net_size=k, seed=seed)
    # the 1-level face is the single vector state e_1, Bloch vector (0, 0, 1)
    top = np.array([0.0, 0.0, 1.0])
    vals = [pauli_ball_oracle(bloch_vector(p) - top)
            for s in (seed, seed + 1) for p in state_net(M2, "pure-random", k, s)]
    assert h.lower == pytest.approx(max(vals), abs=1e-6)
    assert not h.certified


def test_reach_monotone_in_directions():
    L = pauli_action()
    g = pivot_bridge([1, 0])
    r2 = bridge_reach_bounds(g, L, L, directions=2, seed=1)
    r6 = bridge_reach_bounds(g, L, L, directions=6, seed=1)
    assert r6.lower >= r2.lower - 1e-9
    assert r6.upper >= r6.lower
    assert not r6.certified


def test_reach_rejects_wrong_lipnorm():
    g = pivot_bridge([1, 0])
    with pytest.raises(ValueError):
        bridge_reach_bounds(g, from_metric(np.array([[0, 1.0], [1.0, 0]])), pauli_action())


def test_perturbation_bound_examples():
    assert perturbation_bound(0.0, 1.0, 1.0, 0.0) == 0.0
    assert perturbation_bound(0.1, 2.0, 2.0, 0.05) == pytest.approx(0.2)
    assert perturbation_bound(0.0, 3.0, 1.0, 0.7) == 0.7
    with pytest.raises(ValueError):
        perturbation_bound(-0.1, 1.0, 1.0, 0.0)


def test_bi_lipschitz_bound_examples():
    assert bi_lipschitz_bound(1.0, 5.0, 2.0) == 0.0
    assert bi_lipschitz_bound(1.5, 2.0, 2.0) == pytest.approx(1.25)
    assert bi_lipschitz_bound(2.0, 0.0, 0.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        bi_lipschitz_bound(0.5, 1.0, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.floats(-3, 3))
def test_bridge_seminorm_is_a_seminorm(seed, c):
    rng = np.random.default_rng(seed)
    g = pivot_bridge([1, 0])
    a1, a2, b1, b2 = (M2.random_hermitian(rng) for _ in range(4))
    s = bridge_seminorm(g, a1 + a2, b1 + b2)
    assert s <= bridge_seminorm(g, a1, b1) + bridge_seminorm(g, a2, b2) + 1e-9
    assert bridge_seminorm(g, a1 * c, b1 * c) == pytest.approx(abs(c) * bridge_seminorm(g, a1, b1),
                                                               abs=1e-9)


def test_perturbation_with_own_height_dominates_length():
    L = pauli_action()
    g = pivot_bridge([1, 0])
    out = bridge_length_bounds(g, L, L, directions=3, net_size=4)
    # with delta = the reach estimate, the assembled bound covers the length estimate
    bound = perturbation_bound(out["reach"].upper, 0.0, 0.0, out["height"].lower)
    assert bound >= out["length"].lower - 1e-7
