"""Tunnels, their numerical quantities, composition, lifts, and treks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import (Element, Morphism, ShapeError, State, hermitian_basis, operator_norm,
                      state_net)
from .bridge import Bridge, bridge_length_bounds
from .convex import (DEFAULT_TOL, InfeasibleError, NormConstraint, SolveReport,
                     minimize_max_norm)
from .lipnorm import Atom, MaxOfAtoms, Seminorm, program_maps, seminorm_eval
from .metric import Bounds, diameter_bounds, face_distance_bounds


@dataclass
class IsometryCheck:
    samples: int
    margin_A: float
    margin_B: float
    floor_margin: float
    threshold: float
    passed: bool


class Tunnel:
    """(D, L_D, pi_A, pi_B) with pi_A, pi_B surjective unital *-morphisms."""

    def __init__(self, L_D: MaxOfAtoms, pi_A: Morphism, pi_B: Morphism, L_A: Seminorm,
                 L_B: Seminorm, direct_sum: bool = False, check_samples: int = 20, seed: int = 0,
                 tol: float = DEFAULT_TOL, threshold: float = 1e-5):
        self.D = L_D.shape
        if pi_A.source != self.D or pi_B.source != self.D:
            raise ShapeError("quotient maps must start at the tunnel algebra")
        if pi_A.target != L_A.shape or pi_B.target != L_B.shape:
            raise ShapeError("quotient maps must end at the endpoint algebras")
        for f in (pi_A, pi_B):
            if not f.is_surjective():
                raise ValueError("quotient maps must be surjective")
            f.check_homomorphism()
        self.L_D, self.pi_A, self.pi_B = L_D, pi_A, pi_B
        self.L_A, self.L_B = L_A, L_B
        self.direct_sum = direct_sum
        self.tol = tol
        self.isometry = None
        if check_samples > 0:
            self.isometry = check_isometry(self, check_samples, seed, threshold)

    @property
    def A(self):
        return self.pi_A.target

    @property
    def B(self):
        return self.pi_B.target

    def side(self, side: str):
        if side == "A":
            return self.pi_A, self.L_A
        if side == "B":
            return self.pi_B, self.L_B
        raise ValueError("side must be 'A' or 'B'")


def _coord_map(f: Morphism) -> np.ndarray:
    """Real matrix of f in the Hermitian bases of source and target."""
    bs, bt = hermitian_basis(f.source), hermitian_basis(f.target)
    return (bt.matrix.conj().T @ f.matrix @ bs.matrix).real


def quotient_report(t: Tunnel, side: str, a: Element, tol: float = DEFAULT_TOL) -> SolveReport:
    """inf L_D(d) over lifts d with pi(d) = a."""
    pi, _ = t.side(side)
    if a.shape != pi.target:
        raise ShapeError("element is not in the chosen endpoint")
    bD = hermitian_basis(t.D)
    n_aux, maps = program_maps(t.L_D)
    P = _coord_map(pi)
    E = np.hstack([P, np.zeros((P.shape[0], n_aux))])
    rhs = hermitian_basis(pi.target).coords(a)
    objective = [NormConstraint(k, np.zeros(co.shape[1:], dtype=complex), co, 0.0)
                 for k, co in maps]
    return minimize_max_norm(objective, bD.dim + n_aux, equalities=(E, rhs), tol=tol,
                             label="quotient")


def quotient_seminorm(t: Tunnel, side: str, a: Element, tol: float = DEFAULT_TOL) -> float:
    return quotient_report(t, side, a, tol).value


def check_isometry(t: Tunnel, samples: int = 20, seed: int = 0,
                   threshold: float = 1e-5) -> IsometryCheck:
    """Sampled check that both quotient maps carry L_D onto the endpoint Lip-norms.

    margin_X is the worst |quotient - L_X| over samples; floor_margin is the worst
    L_X(a) - quotient (positive means the quotient dropped below the endpoint).
    """
    margins = {}
    floor = -np.inf
    for k, side in enumerate("AB"):
        pi, L = t.side(side)
        rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
        worst = 0.0
        for _ in range(samples):
            a = pi.target.random_hermitian(rng)
            q = quotient_seminorm(t, side, a, t.tol)
            la = seminorm_eval(L, a)
            worst = max(worst, abs(q - la))
            floor = max(floor, la - q)
        margins[side] = worst
    ok = max(margins.values()) <= threshold
    return IsometryCheck(samples, margins["A"], margins["B"], float(floor), threshold, ok)


def tunnel_from_bridge(g: Bridge, L_A: MaxOfAtoms, L_B: MaxOfAtoms, lam: float,
                       check_samples: int = 20, seed: int = 0, tol: float = DEFAULT_TOL
                       ) -> Tunnel:
    """L(a, b) = max(L_A(a), L_B(b), bn(a, b) / lam) on A ⊕ B."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if not isinstance(L_A, MaxOfAtoms) or not isinstance(L_B, MaxOfAtoms):
        raise TypeError("tunnels are built from max-of-atoms Lip-norms")
    D = g.A.direct_sum(g.B)
    pA = Morphism.block_projection(D, 0, g.A.nblocks)
    pB = Morphism.block_projection(D, g.A.nblocks, g.B.nblocks)
    w = g.pivot

    def bridge_atom(d):
        return (g.pi_A(pA(d)) @ w - w @ g.pi_B(pB(d))).to_matrix() / lam

    atoms = ([at.pullback(pA) for at in L_A.atoms] + [at.pullback(pB) for at in L_B.atoms]
             + [Atom(D, bridge_atom, "spectral", "bridge")])
    L_D = MaxOfAtoms(D, atoms, kind="tunnel")
    t = Tunnel(L_D, pA, pB, L_A, L_B, direct_sum=True, check_samples=check_samples, seed=seed,
               tol=tol)
    t.lam = lam
    return t


def identity_tunnel(L: MaxOfAtoms, check_samples: int = 0) -> Tunnel:
    """(A, L, id, id): both faces coincide, so every quantity is zero."""
    idm = Morphism.identity(L.shape)
    return Tunnel(L, idm, idm, L, L, check_samples=check_samples)


def _face(pi: Morphism):
    return lambda d: pi(d).to_matrix()


def _endpoint_net(shape, net_size, seed):
    if shape.is_commutative:
        return state_net(shape, "pure-enumerate"), True
    return state_net(shape, "pure-random", net_size, seed), False


def tunnel_quantities(t: Tunnel, net_size: int = 6, seed: int = 0, tol: float = DEFAULT_TOL,
                      threads: int = 1) -> dict:
    """Reach, depth, length and extent as Bounds.

    Every distance from a state to an image face (or to the hull of both) is
    solved exactly; sups over state spaces run over nets, and are certified
    when the nets are exhaustive (commutative algebras).
    """
    netA, fullA = _endpoint_net(t.A, net_size, seed)
    netB, fullB = _endpoint_net(t.B, net_size, seed + 1)
    imgA = [t.pi_A.dual_state(p) for p in netA]
    imgB = [t.pi_B.dual_state(p) for p in netB]
    FA, FB = _face(t.pi_A), _face(t.pi_B)
    rAB = face_distance_bounds(t.L_D, imgA, [FB], tol, threads, fullA)
    rBA = face_distance_bounds(t.L_D, imgB, [FA], tol, threads, fullB)
    reach = Bounds(max(rAB.lower, rBA.lower), max(rAB.upper, rBA.upper),
                   rAB.certified and rBA.certified)
    if t.direct_sum:
        # pure states of A ⊕ B are exactly the pure states of the summands, and
        # every state is a convex combination of the two faces
        depth = Bounds(0.0, 0.0, True)
        extent = reach
    else:
        netD, fullD = _endpoint_net(t.D, net_size, seed + 2)
        if not fullD:
            netD = imgA + imgB + netD
        depth = face_distance_bounds(t.L_D, netD, [FA, FB], tol, threads, fullD)
        eA = face_distance_bounds(t.L_D, netD, [FA], tol, threads, fullD)
        eB = face_distance_bounds(t.L_D, netD, [FB], tol, threads, fullD)
        extent = Bounds(max(eA.lower, eB.lower), max(eA.upper, eB.upper),
                        eA.certified and eB.certified)
    length = Bounds(max(reach.lower, depth.lower), max(reach.upper, depth.upper),
                    reach.certified and depth.certified)
    return {"reach": reach, "depth": depth, "length": length, "extent": extent}


def _same_lipnorm(L1: Seminorm, L2: Seminorm, samples: int = 10) -> bool:
    if L1 is L2:
        return True
    if L1.shape != L2.shape:
        return False
    rng = np.random.default_rng(12345)
    for _ in range(samples):
        a = L1.shape.random_hermitian(rng)
        if abs(seminorm_eval(L1, a) - seminorm_eval(L2, a)) > 1e-9 * max(1.0, seminorm_eval(L1, a)):
            return False
    return True


def compose_tunnels(t12: Tunnel, t23: Tunnel, eps: float | None = None,
                    check_samples: int = 0, seed: int = 0) -> Tunnel:
    """Tunnel on D12 ⊕ D23 with L = max(L12, L23, ||rho1(d1) - pi2(d2)|| / eps)."""
    if not _same_lipnorm(t12.L_B, t23.L_A):
        raise ValueError("endpoint mismatch between the two tunnels")
    if eps is None:
        diams = [diameter_bounds(L).upper for L in (t12.L_A, t12.L_B, t23.L_B)]
        eps = 1e-3 * max(diams)
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    D = t12.D.direct_sum(t23.D)
    p1 = Morphism.block_projection(D, 0, t12.D.nblocks)
    p2 = Morphism.block_projection(D, t12.D.nblocks, t23.D.nblocks)
    rho1, pi2 = t12.pi_B, t23.pi_A

    def glue(d):
        return (rho1(p1(d)) - pi2(p2(d))).to_matrix() / eps

    atoms = ([at.pullback(p1) for at in t12.L_D.atoms] + [at.pullback(p2) for at in t23.L_D.atoms]
             + [Atom(D, glue, "spectral", "glue")])
    L = MaxOfAtoms(D, atoms, kind="tunnel")
    t = Tunnel(L, t12.pi_A.compose(p1), t23.pi_B.compose(p2), t12.L_A, t23.L_B,
               direct_sum=False, check_samples=check_samples, seed=seed, tol=t12.tol)
    t.eps = eps
    return t


@dataclass
class LiftReport:
    lift: Element
    norm: float
    quotient: float
    lip: float
    norm_bound: float | None
    bound_ok: bool | None


def lift_element(t: Tunnel, a: Element, l: float, side: str = "A", extent_upper: float | None = None,
                 tol: float = DEFAULT_TOL) -> LiftReport:
    """A lift d of a with L_D(d) <= l and smallest norm."""
    q = quotient_report(t, side, a, tol)
    if l < q.lower - tol:
        raise InfeasibleError(f"l = {l} is below the quotient value {q.lower}")
    pi, _ = t.side(side)
    bD = hermitian_basis(t.D)
    n_aux, maps = program_maps(t.L_D)
    P = _coord_map(pi)
    E = np.hstack([P, np.zeros((P.shape[0], n_aux))])
    rhs = hermitian_basis(pi.target).coords(a)
    Em = np.array([e.to_matrix() for e in bD.elements()])
    Em = np.concatenate([Em, np.zeros((n_aux,) + Em.shape[1:])], axis=0)
    obj = NormConstraint("spectral", np.zeros(Em.shape[1:], dtype=complex), Em, 0.0, label="norm")
    cons = [NormConstraint(k, np.zeros(co.shape[1:], dtype=complex), co, max(l, q.lower))
            for k, co in maps]
    rep = minimize_max_norm([obj], bD.dim + n_aux, cons, equalities=(E, rhs), tol=tol,
                            label="lift")
    d = bD.to_element(rep.x[: bD.dim])
    nd = operator_norm(d)
    bound = None
    ok = None
    if extent_upper is not None:
        bound = operator_norm(a) + l * extent_upper
        ok = nd <= bound + tol
    return LiftReport(d, nd, q.value, seminorm_eval(t.L_D, d), bound, ok)


# ---------------------------------------------------------------------------
# treks


@dataclass
class TrekStep:
    bridge: Bridge
    L_A: Seminorm
    L_B: Seminorm
    length: Bounds | None = None


@dataclass
class Trek:
    steps: list[TrekStep] = field(default_factory=list)

    def __post_init__(self):
        for s, u in zip(self.steps, self.steps[1:]):
            if not _same_lipnorm(s.L_B, u.L_A):
                raise ValueError("endpoint mismatch inside the trek")

    def __add__(self, other: "Trek") -> "Trek":
        return Trek(self.steps + other.steps)


def trek_length(trek: Trek, bounds: Sequence[Bounds] | None = None, **kw) -> Bounds:
    """Componentwise sum of the bridge length bounds.

    Missing bound data is estimated with bridge_length_bounds (not certified).
    """
    if bounds is None:
        bounds = []
        for s in trek.steps:
            if s.length is None:
                s.length = bridge_length_bounds(s.bridge, s.L_A, s.L_B, **kw)["length"]
            bounds.append(s.length)
    bounds = list(bounds)
    if len(bounds) != len(trek.steps):
        raise ValueError("one bound per bridge is required")
    return Bounds(float(sum(b.lower for b in bounds)), float(sum(b.upper for b in bounds)),
                  all(b.certified for b in bounds))


def propinquity_upper_bound(lengths: Sequence[Bounds]) -> float | None:
    """min over treks with fully certified upper bounds; None when none qualifies."""
    ups = [b.upper for b in lengths if b.certified]
    return min(ups) if ups else None
