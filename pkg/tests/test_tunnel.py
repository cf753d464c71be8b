import numpy as np
import pytest

from qmetric.algebra import PAULI_X, PAULI_Z, AlgebraShape, Element, Morphism, operator_norm
from qmetric.bridge import Bridge
from qmetric.convex import InfeasibleError
from qmetric.lipnorm import check_quasi_leibniz, from_group_action, from_metric, seminorm_eval
from qmetric.metric import Bounds
from qmetric.tunnel import (Trek, TrekStep, compose_tunnels, identity_tunnel, lift_element,
                            propinquity_upper_bound, quotient_seminorm, trek_length,
                            tunnel_from_bridge, tunnel_quantities)

M2 = AlgebraShape([2])
X = Element(M2, [PAULI_X])
Z = Element(M2, [PAULI_Z])
C2 = AlgebraShape([1, 1])


def pauli_action():
    return from_group_action([X, Z], [1.0, 1.0])


def unit_bridge(shape):
    idm = Morphism.identity(shape)
    return Bridge(shape.unit(), idm, idm)


def two_point(t):
    return from_metric(np.array([[0.0, t], [t, 0.0]]))


def test_identity_bridge_tunnel_is_isometric():
    L = pauli_action()
    t = tunnel_from_bridge(unit_bridge(M2), L, L, 1.0, check_samples=8)
    assert t.isometry.passed
    assert t.isometry.margin_A < 1e-6 and t.isometry.margin_B < 1e-6


def test_small_lambda_breaks_isometry():
    L = pauli_action()
    t = tunnel_from_bridge(unit_bridge(M2), L, L.scaled(2.0), 1e-3, check_samples=5)
    assert not t.isometry.passed
    assert t.isometry.margin_A > 0.1


def test_large_lambda_restores_isometry():
    L = pauli_action()
    t = tunnel_from_bridge(unit_bridge(M2), L, L.scaled(2.0), 1e3, check_samples=5)
    assert t.isometry.passed


def test_lambda_must_be_positive():
    L = pauli_action()
    with pytest.raises(ValueError):
        tunnel_from_bridge(unit_bridge(M2), L, L, 0.0)


def test_quotient_against_lift_grid():
    A, B = two_point(1.0), two_point(2.0)
    lam = 50.0
    t = tunnel_from_bridge(unit_bridge(C2), A, B, lam, check_samples=0)
    a = C2.diag([1.0, 0.0])
    got = quotient_seminorm(t, "A", a)
    # lifts are (a, b) with b = (b0, b1) on a grid
    g = np.linspace(-1.5, 2.5, 401)
    b0, b1 = np.meshgrid(g, g, indexing="ij")
    val = np.maximum.reduce([np.full_like(b0, 1.0), np.abs(b0 - b1) / 2.0,
                             np.maximum(np.abs(1.0 - b0), np.abs(b1)) / lam])
    assert got == pytest.approx(seminorm_eval(A, a), abs=1e-5)
    assert got == pytest.approx(val.min(), abs=1e-2)


def test_quotient_floor(rng):
    L = pauli_action()
    t = tunnel_from_bridge(Bridge(M2.diag([1, 0]), Morphism.identity(M2), Morphism.identity(M2)),
                           L, L, 5.0, check_samples=0)
    for _ in range(10):
        a = M2.random_hermitian(rng)
        assert quotient_seminorm(t, "A", a) >= seminorm_eval(L, a) - 1e-9
        assert quotient_seminorm(t, "B", a) >= seminorm_eval(L, a) - 1e-9


def test_direct_sum_depth_is_certified_zero():
    t = tunnel_from_bridge(unit_bridge(C2), two_point(1.0), two_point(1.5), 10.0, check_samples=0)
    q = tunnel_quantities(t)
    assert q["depth"] == Bounds(0.0, 0.0, True)
    assert q["reach"].certified


def test_identity_tunnel_quantities_vanish():
    q = tunnel_quantities(identity_tunnel(pauli_action()), net_size=3)
    for key in ("reach", "depth", "length", "extent"):
        assert q[key].lower == pytest.approx(0.0, abs=1e-7)


def test_length_extent_relation_on_commutative_chain():
    A, B, C = two_point(1.0), two_point(1.5), two_point(2.0)
    t12 = tunnel_from_bridge(unit_bridge(C2), A, B, 3.0, check_samples=0)
    t23 = tunnel_from_bridge(unit_bridge(C2), B, C, 3.0, check_samples=0)
    t13 = compose_tunnels(t12, t23, eps=0.01)
    q12, q23, q13 = (tunnel_quantities(t) for t in (t12, t23, t13))
    for q in (q12, q23, q13):
        assert q["length"].lower <= q["extent"].lower + 1e-6
        assert q["extent"].lower <= 2 * q["length"].lower + 1e-6
    assert q13["extent"].lower <= q12["extent"].lower + q23["extent"].lower + 0.01 + 1e-6


def test_compose_identity_tunnels():
    L = two_point(1.0)
    t = identity_tunnel(L)
    tt = compose_tunnels(t, t, eps=1e-3)
    assert tt.eps == 1e-3
    q = tunnel_quantities(tt)
    assert q["extent"].lower <= 1e-3 + 1e-6
    assert check_quasi_leibniz(tt.L_D, samples=200, seed=2).passed


def test_identity_bridge_tunnel_reach_is_lambda():
    # (lam * 1, 0) has every atom <= 1 and separates the two faces by lam
    L = two_point(1.0)
    for lam in (0.5, 1.0, 2.0):
        t = tunnel_from_bridge(unit_bridge(C2), L, L, lam, check_samples=0)
        q = tunnel_quantities(t)
        assert q["reach"].lower == pytest.approx(lam, abs=1e-7)
        assert q["reach"].certified


def test_composite_of_bridge_tunnels_is_leibniz():
    L = two_point(1.0)
    t = tunnel_from_bridge(unit_bridge(C2), L, L, 1.0, check_samples=0)
    tt = compose_tunnels(t, t)
    assert tt.eps > 0
    assert check_quasi_leibniz(tt.L_D, samples=200, seed=3).passed


def test_compose_rejects_mismatch():
    t1 = tunnel_from_bridge(unit_bridge(C2), two_point(1.0), two_point(1.5), 1.0, check_samples=0)
    t2 = tunnel_from_bridge(unit_bridge(C2), two_point(2.0), two_point(1.5), 1.0, check_samples=0)
    with pytest.raises(ValueError):
        compose_tunnels(t1, t2)


def test_lift_on_identity_bridge(rng):
    L = pauli_action()
    t = tunnel_from_bridge(unit_bridge(M2), L, L, 1.0, check_samples=0)
    a = M2.random_hermitian(rng)
    la = seminorm_eval(L, a)
    rep = lift_element(t, a, la, extent_upper=0.0)
    assert rep.norm == pytest.approx(operator_norm(a), abs=1e-6)
    assert rep.lip <= la + 1e-6
    assert rep.bound_ok
    with pytest.raises(InfeasibleError):
        lift_element(t, a, 0.5 * la)


def test_lift_lands_in_target_set():
    A, B = two_point(1.0), two_point(1.5)
    t = tunnel_from_bridge(unit_bridge(C2), A, B, 2.0, check_samples=0)
    a = C2.diag([0.3, 0.1])
    rep = lift_element(t, a, 0.5)
    assert rep.lip <= 0.5 + 1e-6
    b = t.pi_B(rep.lift)
    assert seminorm_eval(B, b) <= 0.5 + 1e-6
    assert t.pi_A(rep.lift).allclose(a, atol=1e-7)


def test_trek_lengths():
    L = two_point(1.0)
    step = TrekStep(unit_bridge(C2), L, L)
    assert trek_length(Trek([step]), [Bounds(0.0, 0.0, True)]) == Bounds(0.0, 0.0, True)
    two = trek_length(Trek([step, step]), [Bounds(0.1, 0.3, True), Bounds(0.05, 0.2, True)])
    assert two.upper == pytest.approx(0.5)
    mixed = trek_length(Trek([step, step]), [Bounds(0.1, 0.3, True), Bounds(0.05, 0.2, False)])
    assert propinquity_upper_bound([mixed]) is None
    assert propinquity_upper_bound([mixed, two]) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        trek_length(Trek([step]), [])


def test_trek_length_additive_under_concatenation():
    L = two_point(1.0)
    s = TrekStep(unit_bridge(C2), L, L)
    b1 = [Bounds(0.1, 0.4, True)]
    b2 = [Bounds(0.2, 0.25, True), Bounds(0.0, 0.1, True)]
    g1, g2 = Trek([s]), Trek([s, s])
    whole = trek_length(g1 + g2, b1 + b2)
    assert whole.lower == trek_length(g1, b1).lower + trek_length(g2, b2).lower
    assert whole.upper == trek_length(g1, b1).upper + trek_length(g2, b2).upper


def test_trek_endpoint_mismatch():
    s1 = TrekStep(unit_bridge(C2), two_point(1.0), two_point(1.0))
    s2 = TrekStep(unit_bridge(C2), two_point(2.0), two_point(2.0))
    with pytest.raises(ValueError):
        Trek([s1, s2])


def test_trek_estimates_missing_bounds():
    L = two_point(1.0)
    out = trek_length(Trek([TrekStep(unit_bridge(C2), L, L)]), directions=2, net_size=2)
    assert out.lower == pytest.approx(0.0, abs=1e-7)
    assert not out.certified
