"""Bridges: a pivot in an ambient algebra with two unital embeddings into it."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

from .algebra import (Element, Morphism, State, ShapeError, hermitian_basis, operator_norm,
                      random_unit_vector, state_net)
from .convex import DEFAULT_TOL, NormConstraint, NormProgram, maximize_linear, minimize_max_norm
from .lipnorm import MaxOfAtoms, Seminorm, program_maps, seminorm_eval
from .metric import Bounds, face_distance_bounds

LEVEL_TOL = 1e-9


class Bridge:
    def __init__(self, pivot: Element, pi_A: Morphism, pi_B: Morphism, check: bool = True):
        self.D = pivot.shape
        if pi_A.target != self.D or pi_B.target != self.D:
            raise ShapeError("embeddings must land in the pivot's algebra")
        if check:
            for f in (pi_A, pi_B):
                f.check_homomorphism()
                if not f.is_injective():
                    raise ValueError("embeddings must be injective")
        self.pivot = pivot
        self.pi_A = pi_A
        self.pi_B = pi_B
        self._support = _level_support(pivot)
        if sum(V.shape[1] for V in self._support) == 0:
            raise ValueError("pivot has an empty 1-level set")

    @property
    def A(self):
        return self.pi_A.source

    @property
    def B(self):
        return self.pi_B.source

    def support_isometry(self) -> np.ndarray:
        """Isometry from the 1-level subspace into the block-diagonal ambient space."""
        N = self.D.matrix_dim
        r = sum(V.shape[1] for V in self._support)
        W = np.zeros((N, r), dtype=complex)
        row = col = 0
        for n, V in zip(self.D.block_dims, self._support):
            W[row:row + n, col:col + V.shape[1]] = V
            row += n
            col += V.shape[1]
        return W

    def reversed(self) -> "Bridge":
        return Bridge(self.pivot.adjoint(), self.pi_B, self.pi_A, check=False)


def _level_support(pivot: Element) -> list[np.ndarray]:
    """Per block: orthonormal basis of ker(1 - w) ∩ ker((1 - w)*)."""
    out = []
    for w in pivot.blocks:
        n = w.shape[0]
        X = np.eye(n) - w
        S = np.vstack([X, X.conj().T])
        _, s, Vh = np.linalg.svd(S)
        null = Vh[np.sum(s > LEVEL_TOL):].conj().T
        out.append(null)
    return out


def bridge_seminorm(g: Bridge, a: Element, b: Element) -> float:
    w = g.pivot
    return operator_norm(g.pi_A(a) @ w - w @ g.pi_B(b))


def one_level_support(g: Bridge, count: int = 0, seed: int = 0) -> tuple[Element, list[State]]:
    """Projection onto the 1-level subspace and vector states supported there.

    The net lists the basis vectors of the subspace, then `count` random unit
    vectors in it.
    """
    blocks, net = [], []
    for k, V in enumerate(g._support):
        blocks.append(V @ V.conj().T)
        for j in range(V.shape[1]):
            net.append(State.from_vector(g.D, k, V[:, j]))
    rng = np.random.default_rng(seed)
    dims = np.array([V.shape[1] for V in g._support], dtype=float)
    for _ in range(count):
        k = int(rng.choice(len(dims), p=dims / dims.sum()))
        V = g._support[k]
        net.append(State.from_vector(g.D, k, V @ random_unit_vector(rng, V.shape[1])))
    return Element(g.D, blocks), net


# ---------------------------------------------------------------------------
# reach


def _extreme_point(L: Seminorm, c: np.ndarray, tol: float) -> Element:
    """A point of the gauged unit ball maximising the direction c."""
    basis = hermitian_basis(L.shape)
    idx = np.arange(1, basis.dim)
    n_aux, maps = program_maps(L, idx)
    obj = np.concatenate([c[: idx.size], np.zeros(n_aux)])
    cons = [NormConstraint(k, np.zeros(co.shape[1:], dtype=complex), co, 1.0) for k, co in maps]
    rep = maximize_linear(NormProgram(obj.size, obj, cons), tol=tol)
    x = np.concatenate([[0.0], rep.x[: idx.size]])
    a = basis.to_element(x)
    la = seminorm_eval(L, a)
    return a / la if la > 1.0 else a


def _closest_partner(fixed: np.ndarray, side: Morphism, right: bool, w: np.ndarray,
                     L: Seminorm, tol: float):
    """min over b with L(b) <= 1 of ||fixed - w pi(b)|| (or ||fixed - pi(b) w||).

    The sign convention is immaterial for the norm.
    """
    basis = hermitian_basis(L.shape)
    n_aux, maps = program_maps(L)
    m = basis.dim
    T = np.array([side(e).to_matrix() for e in basis.elements()])
    T = -(np.einsum("pq,iqr->ipr", w, T) if right else np.einsum("ipq,qr->ipr", T, w))
    T = np.concatenate([T, np.zeros((n_aux,) + T.shape[1:])], axis=0)
    obj = NormConstraint("spectral", fixed, T, label="bridge")
    cons = [NormConstraint(k, np.zeros(co.shape[1:], dtype=complex), co, 1.0) for k, co in maps]
    return minimize_max_norm([obj], m + n_aux, cons, tol=tol, label="reach")


def _directed_reach(g: Bridge, L_from: Seminorm, L_to: Seminorm, from_A: bool, c: np.ndarray,
                    tol: float) -> float:
    a = _extreme_point(L_from, c, tol)
    w = g.pivot.to_matrix()
    if from_A:
        fixed = g.pi_A(a).to_matrix() @ w
        rep = _closest_partner(fixed, g.pi_B, True, w, L_to, tol)
    else:
        fixed = w @ g.pi_B(a).to_matrix()
        rep = _closest_partner(fixed, g.pi_A, False, w, L_to, tol)
    return max(rep.lower, 0.0) + 0.0


def _direction(dim: int, seed: int, i: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def bridge_reach_bounds(g: Bridge, L_A: Seminorm, L_B: Seminorm, directions: int = 8,
                        seed: int = 0, tol: float = DEFAULT_TOL, ascent_steps: int = 6,
                        threads: int = 1) -> Bounds:
    """Lower bound from sampled extreme points of both unit balls; the upper
    component is the value after a local ascent over directions (heuristic)."""
    if L_A.shape != g.A or L_B.shape != g.B:
        raise ShapeError("Lip-norms do not match the bridge")
    mA = hermitian_basis(g.A).dim - 1
    mB = hermitian_basis(g.B).dim - 1
    jobs = []
    for i in range(directions):
        if mA > 0:
            jobs.append((True, _direction(mA, seed, 2 * i)))
        if mB > 0:
            jobs.append((False, _direction(mB, seed, 2 * i + 1)))

    def one(job):
        from_A, c = job
        if from_A:
            return _directed_reach(g, L_A, L_B, True, c, tol)
        return _directed_reach(g, L_B, L_A, False, c, tol)

    if not jobs:
        return Bounds(0.0, 0.0, True)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            vals = list(ex.map(one, jobs))
    else:
        vals = [one(j) for j in jobs]
    k = int(np.argmax(vals))
    lower = float(vals[k])
    best_side, best_c = jobs[k]
    best = lower
    rng = np.random.default_rng(np.random.SeedSequence([seed, 10 ** 6]))
    step = 0.5
    fails = 0
    while fails < ascent_steps:
        c = best_c + step * rng.standard_normal(best_c.size)
        c /= np.linalg.norm(c)
        v = one((best_side, c))
        if v > best + tol:
            best, best_c, fails = v, c, 0
        else:
            fails += 1
            step /= 2
    return Bounds(lower, max(best, lower), False)


# ---------------------------------------------------------------------------
# height


def _level_face(g: Bridge, side: Morphism):
    W = g.support_isometry()
    return lambda a: W.conj().T @ side(a).to_matrix() @ W


def bridge_height_bounds(g: Bridge, L_A: Seminorm, L_B: Seminorm, net_size: int = 8,
                         seed: int = 0, tol: float = DEFAULT_TOL, threads: int = 1) -> Bounds:
    """Distance from each state space to the pulled-back 1-level states.

    Each distance to the pulled-back set is solved exactly (it is convex); the
    sup over the state space runs over a net, which is exhaustive for
    commutative endpoints.
    """
    parts = []
    for L, side, s in ((L_A, g.pi_A, seed), (L_B, g.pi_B, seed + 1)):
        if L.shape.is_commutative:
            net, full = state_net(L.shape, "pure-enumerate"), True
        else:
            net, full = state_net(L.shape, "pure-random", net_size, s), False
        parts.append(face_distance_bounds(L, net, [_level_face(g, side)], tol, threads, full))
    return Bounds(max(p.lower for p in parts), max(p.upper for p in parts),
                  all(p.certified for p in parts))


def bridge_length_bounds(g: Bridge, L_A: Seminorm, L_B: Seminorm, directions: int = 8,
                         net_size: int = 8, seed: int = 0, tol: float = DEFAULT_TOL,
                         threads: int = 1) -> dict:
    reach = bridge_reach_bounds(g, L_A, L_B, directions, seed, tol, threads=threads)
    height = bridge_height_bounds(g, L_A, L_B, net_size, seed, tol, threads)
    length = Bounds(max(reach.lower, height.lower), max(reach.upper, height.upper), False)
    return {"reach": reach, "height": height, "length": length}


# ---------------------------------------------------------------------------
# closed forms


def perturbation_bound(delta: float, diamA: float, diamB: float, height: float) -> float:
    if min(delta, diamA, diamB, height) < 0:
        raise ValueError("inputs must be nonnegative")
    return max(delta * (1.0 + 0.5 * max(diamA, diamB)), height)


def bi_lipschitz_bound(delta: float, diamA: float, diamB: float) -> float:
    if delta < 1:
        raise ValueError("delta must be at least 1")
    if min(diamA, diamB) < 0:
        raise ValueError("diameters must be nonnegative")
    return abs(1.0 - delta) * (0.5 + max(diamA, diamB))
