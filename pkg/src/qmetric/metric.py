"""Distances between states: Monge-Kantorovich, bounded-Lipschitz, diameters, Hausdorff."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .algebra import State, ShapeError, hermitian_basis, state_net
from .convex import (DEFAULT_TOL, NormConstraint, NormProgram, SolveReport, UnboundedError,
                     maximize_linear)
from .lipnorm import MaxOfAtoms, Seminorm, program_maps


class Bounds(NamedTuple):
    lower: float
    upper: float
    certified: bool = False


class DiameterBounds(NamedTuple):
    lower: float
    upper: float
    certified: bool
    method: str


def _ball_program(L: Seminorm, objective: np.ndarray, cutoff: float | None = None,
                  gauge: bool = True) -> NormProgram:
    basis = hermitian_basis(L.shape)
    m = basis.dim
    idx = np.arange(1, m) if gauge else np.arange(m)
    n_aux, maps = program_maps(L, idx)
    n = idx.size + n_aux
    c = np.concatenate([objective[idx], np.zeros(n_aux)])
    cons = []
    for kind, co in maps:
        cons.append(NormConstraint(kind, np.zeros(co.shape[1:], dtype=complex), co, 1.0))
    if cutoff is not None:
        E = np.array([e.to_matrix() for e in basis.elements()])[idx]
        E = np.concatenate([E, np.zeros((n_aux,) + E.shape[1:])], axis=0)
        cons.append(NormConstraint("spectral", np.zeros(E.shape[1:], dtype=complex), E,
                                   float(cutoff), label="cutoff"))
    return NormProgram(n, c, cons)


def mk_report(L: Seminorm, phi: State, psi: State, tol: float = DEFAULT_TOL,
              cutoff: float | None = None) -> SolveReport:
    if phi.shape != L.shape or psi.shape != L.shape:
        raise ShapeError("states and seminorm live on different algebras")
    basis = hermitian_basis(L.shape)
    diff = basis.functional(phi) - basis.functional(psi)
    if np.max(np.abs(diff), initial=0.0) == 0.0:
        n = basis.dim
        return SolveReport(0.0, np.zeros(n), 0.0, 0.0, 0.0, 0, 0)
    # a cut-off is not invariant under adding scalars, so the unit coordinate
    # stays free in that case (it is then bounded by the cut-off itself)
    prog = _ball_program(L, diff, cutoff=cutoff, gauge=cutoff is None)
    return maximize_linear(prog, tol=tol, label="bl" if cutoff is not None else "mk")


def mk_distance(L: Seminorm, phi: State, psi: State, tol: float = DEFAULT_TOL,
                trace: list | None = None) -> float:
    """sup |phi(a) - psi(a)| over self-adjoint a with L(a) <= 1 (inf if unbounded)."""
    try:
        rep = mk_report(L, phi, psi, tol)
    except UnboundedError:
        return float("inf")
    if trace is not None:
        trace.append(rep)
    return abs(rep.value)


def bl_distance(L: Seminorm, r: float, phi: State, psi: State, tol: float = DEFAULT_TOL,
                trace: list | None = None) -> float:
    """The same supremum with the extra cut-off ||a|| <= r."""
    if not r > 0:
        raise ValueError("cut-off must be positive")
    rep = mk_report(L, phi, psi, tol, cutoff=r)
    if trace is not None:
        trace.append(rep)
    return abs(rep.value)


def distance_matrix(d: Callable[[State, State], float], netA: Sequence[State],
                    netB: Sequence[State] | None = None, threads: int = 1) -> np.ndarray:
    """Pairwise distances; symmetric nets reuse the upper triangle."""
    sym = netB is None
    netB = netA if sym else netB
    if sym:
        jobs = [(i, j) for i in range(len(netA)) for j in range(i + 1, len(netA))]
    else:
        jobs = [(i, j) for i in range(len(netA)) for j in range(len(netB))]

    def one(ij):
        i, j = ij
        return d(netA[i], netB[j])

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            vals = list(ex.map(one, jobs))
    else:
        vals = [one(ij) for ij in jobs]
    out = np.zeros((len(netA), len(netB)))
    for (i, j), v in zip(jobs, vals):
        out[i, j] = v
        if sym:
            out[j, i] = v
    return out


def hausdorff_bounds(netA: Sequence[State], netB: Sequence[State],
                     d: Callable[[State, State], float], mesh: float = 0.0,
                     threads: int = 1) -> Bounds:
    """Hausdorff distance of two finite nets; upper adds the declared net mesh."""
    if not netA or not netB:
        raise ValueError("nets must be nonempty")
    D = distance_matrix(d, netA, netB, threads=threads)
    lower = max(D.min(axis=1).max(), D.min(axis=0).max())
    return Bounds(float(lower), float(lower + mesh), certified=(mesh == 0.0))


def directed_hausdorff(netA, netB, d, threads: int = 1) -> float:
    """sup over netA of the distance to netB."""
    D = distance_matrix(d, netA, netB, threads=threads)
    return float(D.min(axis=1).max())


def coordinate_radius(L: Seminorm, tol: float = DEFAULT_TOL) -> float:
    """Certified bound on max_i |x_i| over the gauged Lip-ball (x = basis coordinates)."""
    basis = hermitian_basis(L.shape)
    best = 0.0
    for i in range(1, basis.dim):
        for sgn in (1.0, -1.0):
            c = np.zeros(basis.dim)
            c[i] = sgn
            best = max(best, maximize_linear(_ball_program(L, c), tol=tol).upper)
    return best


def diameter_bounds(L: Seminorm, net_size: int = 8, seed: int = 0, tol: float = DEFAULT_TOL,
                    threads: int = 1) -> DiameterBounds:
    shape = L.shape
    d = (lambda p, q: mk_distance(L, p, q, tol))
    if shape.is_commutative:
        net = state_net(shape, "pure-enumerate")
        v = float(distance_matrix(d, net, threads=threads).max())
        # mk is convex in each argument, so the sup over states sits at point masses
        return DiameterBounds(v, v, True, "pure-enumerate")
    net = state_net(shape, "pure-random", net_size, seed)
    lower = float(distance_matrix(d, net, threads=threads).max()) if len(net) > 1 else 0.0
    if isinstance(L, MaxOfAtoms) and L.mean_length is not None:
        return DiameterBounds(lower, max(lower, 2.0 * L.mean_length), True, "group-mean")
    R = coordinate_radius(L, tol)
    m = hermitian_basis(shape).dim
    # gauged a: |phi(a) - psi(a)| <= 2||a|| <= 2 ||x||_2 <= 2 sqrt(m-1) R
    return DiameterBounds(lower, max(lower, 2.0 * np.sqrt(m - 1) * R), True, "box-radius")


def face_report(L: Seminorm, phi: State, faces: Sequence[Callable], tol: float = DEFAULT_TOL
                ) -> SolveReport:
    """mk distance from phi to the convex hull of one or more faces.

    A face is the set of states psi(a) = chi(F(a)) for chi ranging over all
    states of the algebra of matrices F lands in, F linear and Hermitian valued.
    Its support function is a -> lambda_max(F(a)), so by minimax the distance is
    sup over the gauged Lip-ball of phi(a) - max_k lambda_max(F_k(a)).
    """
    basis = hermitian_basis(L.shape)
    m = basis.dim
    idx = np.arange(1, m)
    n_aux, maps = program_maps(L, idx)
    n = idx.size + n_aux + 1
    c = np.concatenate([basis.functional(phi)[idx], np.zeros(n_aux), [-1.0]])
    cons = []
    for kind, co in maps:
        co = np.concatenate([co, np.zeros((1,) + co.shape[1:])], axis=0)
        cons.append(NormConstraint(kind, np.zeros(co.shape[1:], dtype=complex), co, 1.0))
    elems = [basis.element(i) for i in idx]
    et = np.zeros(n)
    et[-1] = 1.0
    for F in faces:
        fshape = np.asarray(F(L.shape.unit())).shape
        T = np.array([np.asarray(F(e), dtype=complex) for e in elems]).reshape((-1,) + fshape)
        T = np.concatenate([T, np.zeros((n_aux + 1,) + T.shape[1:])], axis=0)
        cons.append(NormConstraint("lmax", np.zeros(T.shape[1:], dtype=complex), T, 0.0, et,
                                   label="face"))
    interior = np.zeros(n)
    interior[-1] = 1.0
    return maximize_linear(NormProgram(n, c, cons), tol=tol, interior=interior, label="face")


def face_distance_bounds(L: Seminorm, net: Sequence[State], faces: Sequence[Callable],
                         tol: float = DEFAULT_TOL, threads: int = 1,
                         exhaustive: bool = False) -> Bounds:
    """sup over the net of the exact distance to the faces' convex hull.

    The lower component is certified. The distance to a convex set is convex in
    the state, so when the net lists every extreme point (exhaustive=True) the
    upper component is certified too.
    """
    def one(phi):
        r = face_report(L, phi, faces, tol)
        return max(r.lower, 0.0), max(r.upper, 0.0)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            vals = list(ex.map(one, net))
    else:
        vals = [one(p) for p in net]
    lo = max(v[0] for v in vals)
    hi = max(v[1] for v in vals)
    return Bounds(lo, hi if exhaustive else max(hi, lo), certified=exhaustive)
