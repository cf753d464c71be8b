"""Lip-norm candidates on finite-dimensional C*-algebras.

A seminorm is either the max of the norms of finitely many linear images of
the argument (atoms), or the distance to a subspace containing the unit.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .algebra import (AlgebraShape, Element, Morphism, State, Subalgebra, HermitianBasis,
                      ShapeError, as_shape, hermitian_basis, jordan_lie, operator_norm,
                      span_basis)
from .convex import DEFAULT_TOL, NormConstraint, minimize_max_norm

KERNEL_TOL = 1e-9


class NotLipschitzError(ValueError):
    """The seminorm kernel is larger than the scalars."""


class Atom:
    """A linear map from the algebra to matrices (spectral) or vectors (euclidean)."""

    def __init__(self, shape, func: Callable[[Element], np.ndarray], kind: str = "spectral",
                 label: str = ""):
        if kind not in ("spectral", "euclidean"):
            raise ValueError(f"unknown atom kind {kind!r}")
        self.shape = as_shape(shape)
        self.func = func
        self.kind = kind
        self.label = label
        self._tensor = None

    def image(self, a: Element) -> np.ndarray:
        out = np.asarray(self.func(a), dtype=complex)
        return out if self.kind == "spectral" else out.ravel()

    def value(self, a: Element) -> float:
        A = self.image(a)
        if self.kind == "euclidean":
            return float(np.linalg.norm(A))
        if A.shape[0] == A.shape[1] and np.allclose(A, A.conj().T, atol=1e-13, rtol=0):
            return float(np.max(np.abs(np.linalg.eigvalsh((A + A.conj().T) / 2)), initial=0.0))
        return float(np.linalg.norm(A, 2))

    def tensor(self) -> np.ndarray:
        """Images of the Hermitian basis elements, stacked along axis 0."""
        if self._tensor is None:
            basis = hermitian_basis(self.shape)
            self._tensor = np.array([self.image(e) for e in basis.elements()])
            self._tensor.setflags(write=False)
        return self._tensor

    def pullback(self, f: Morphism) -> "Atom":
        """The atom d -> atom(f(d)) on the source of f."""
        if f.target != self.shape:
            raise ShapeError("pullback through a map with the wrong target")
        return Atom(f.source, lambda d: self.func(f(d)), self.kind, self.label)

    def scaled(self, c: float) -> "Atom":
        return Atom(self.shape, lambda a: c * np.asarray(self.func(a)), self.kind, self.label)


class Seminorm:
    shape: AlgebraShape
    kind: str = "seminorm"

    def __call__(self, a: Element) -> float:
        return seminorm_eval(self, a)

    def kernel_dim(self) -> int:
        raise NotImplementedError


class MaxOfAtoms(Seminorm):
    """L(a) = max_j ||atom_j(a)||.

    `mean_length` is set for group-action seminorms; it yields the analytic
    diameter bound 2 * mean(l) over the full group.
    """

    def __init__(self, shape, atoms: Sequence[Atom], kind: str = "atoms",
                 mean_length: float | None = None, descriptor: dict | None = None):
        self.shape = as_shape(shape)
        atoms = list(atoms)
        if not atoms:
            raise ValueError("a max-of-atoms seminorm needs at least one atom")
        for at in atoms:
            if at.shape != self.shape:
                raise ShapeError("atom lives on a different algebra")
        self.atoms = atoms
        self.kind = kind
        self.mean_length = mean_length
        self.descriptor = descriptor

    def evaluate(self, a: Element) -> float:
        if a.shape != self.shape:
            raise ShapeError("shape mismatch")
        return max(at.value(a) for at in self.atoms)

    def stacked(self) -> np.ndarray:
        """Real matrix whose null space is the kernel on self-adjoint coordinates."""
        cols = []
        for at in self.atoms:
            T = at.tensor().reshape(self.shape.real_dim, -1)
            cols.append(T.real)
            cols.append(T.imag)
        return np.hstack(cols)

    def kernel_dim(self, tol: float = KERNEL_TOL) -> int:
        S = self.stacked()
        s = np.linalg.svd(S, compute_uv=False)
        scale = max(1.0, s[0]) if s.size else 1.0
        return int(S.shape[0] - np.sum(s > tol * scale))

    def scaled(self, c: float) -> "MaxOfAtoms":
        return MaxOfAtoms(self.shape, [at.scaled(c) for at in self.atoms], self.kind,
                          None if self.mean_length is None else self.mean_length / c)

    def pullback(self, f: Morphism) -> "MaxOfAtoms":
        return MaxOfAtoms(f.source, [at.pullback(f) for at in self.atoms], self.kind)


class DistToSubspace(Seminorm):
    """L(a) = min over s in span of ||a - s||."""

    kind = "dist"

    def __init__(self, shape, span: Sequence[Element], tol: float = DEFAULT_TOL):
        self.shape = as_shape(shape)
        span = list(span)
        if not span:
            raise ValueError("empty span")
        Q = span_basis(span)
        P = Q @ Q.conj().T
        one = self.shape.unit().vec()
        if np.linalg.norm(one - P @ one) > 1e-9:
            raise ValueError("span must contain the unit")
        for e in span:
            v = e.adjoint().vec()
            if np.linalg.norm(v - P @ v) > 1e-9 * max(1.0, np.linalg.norm(v)):
                raise ValueError("span must be closed under adjoint")
        # real basis of the self-adjoint part of the span
        herm = []
        for k in range(Q.shape[1]):
            q = self.shape.from_vec(Q[:, k])
            herm.append((q + q.adjoint()) / 2)
            herm.append((q - q.adjoint()) / 2j)
        H = np.array([h.vec() for h in herm]).T
        Hr = np.vstack([H.real, H.imag])
        u, s, _ = np.linalg.svd(Hr, full_matrices=False)
        r = int(np.sum(s > 1e-9 * s[0]))
        basis = []
        for k in range(r):
            v = u[:, k]
            n = v.size // 2
            basis.append(self.shape.from_vec(v[:n] + 1j * v[n:]))
        self.span = basis
        self.tol = tol

    def kernel_dim(self) -> int:
        return len(self.span)

    def report(self, a: Element):
        if a.shape != self.shape:
            raise ShapeError("shape mismatch")
        k = len(self.span)
        A = a.to_matrix()
        co = np.array([-s.to_matrix() for s in self.span])
        con = NormConstraint("spectral", A, co, label="dist")
        return minimize_max_norm([con], k, tol=self.tol, label="dist")

    def evaluate(self, a: Element) -> float:
        return self.report(a).value


def seminorm_eval(L: Seminorm, a: Element) -> float:
    if not a.is_self_adjoint(1e-9 * max(1.0, operator_norm(a))):
        raise ValueError("seminorms are evaluated on self-adjoint elements")
    return L.evaluate(a)


def seminorm_bounds(L: Seminorm, a: Element) -> tuple[float, float]:
    """Certified (lower, upper) for L(a); equal for max-of-atoms seminorms."""
    if isinstance(L, DistToSubspace):
        rep = L.report(a)
        return rep.lower, rep.upper
    v = L.evaluate(a)
    return v, v


def require_lipschitz(L: MaxOfAtoms) -> MaxOfAtoms:
    k = L.kernel_dim()
    if k != 1:
        raise NotLipschitzError(f"not a Lipschitz pair: kernel has dimension {k}")
    return L


# ---------------------------------------------------------------------------
# program maps


def program_maps(L: Seminorm, index: np.ndarray | None = None):
    """Norm maps of L written over basis coordinates plus auxiliary variables.

    Returns (n_aux, [(kind, coeffs)]) where coeffs has leading axis
    len(index) + n_aux; L(a) <= t iff some auxiliary vector makes every map
    have norm <= t.
    """
    basis = hermitian_basis(L.shape)
    if index is None:
        index = np.arange(basis.dim)
    if isinstance(L, MaxOfAtoms):
        return 0, [(at.kind, at.tensor()[index]) for at in L.atoms]
    if isinstance(L, DistToSubspace):
        E = np.array([e.to_matrix() for e in basis.elements()])[index]
        S = np.array([-s.to_matrix() for s in L.span])
        return len(L.span), [("spectral", np.concatenate([E, S], axis=0))]
    raise TypeError(f"unsupported seminorm {type(L).__name__}")


# ---------------------------------------------------------------------------
# constructors


def _pairs(unitaries):
    out = []
    for u in unitaries:
        if isinstance(u, tuple):
            out.append(u)
        else:
            out.append((None, u))
    return out


def from_group_action(unitaries, lengths: Sequence[float], rep: Morphism | None = None,
                      mean_length: float | None = None, check_kernel: bool = True,
                      shape=None) -> MaxOfAtoms:
    """sup over g != e of ||u_g a u_g* - a|| / l(g).

    Unitaries act on rep(a) when a faithful representation is given, otherwise
    directly on a. `mean_length` (mean of l over the whole group, identity
    included) defaults to sum(lengths) / (len(lengths) + 1), which is right
    when every non-identity element is listed once.
    """
    pairs = _pairs(unitaries)
    lengths = [float(x) for x in lengths]
    if len(lengths) != len(pairs):
        raise ValueError("one length per unitary is required")
    if any(x <= 0 for x in lengths):
        raise ValueError("lengths must be strictly positive")
    if rep is not None:
        shape = rep.source
    elif shape is None:
        shape = pairs[0][1].shape
    shape = as_shape(shape)
    atoms = []
    for (g, u), l in zip(pairs, lengths):
        U = u.to_matrix() if isinstance(u, Element) else np.asarray(u, dtype=complex)
        if np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) > 1e-9:
            raise ValueError("non-unitary input")
        if rep is None:
            if U.shape[0] != shape.matrix_dim:
                raise ShapeError("unitary does not match the algebra")
            if isinstance(u, Element):
                f = (lambda a, u=u, l=l: ((u @ a @ u.adjoint()) - a).to_matrix() / l)
            else:
                f = (lambda a, U=U, l=l: (U @ a.to_matrix() @ U.conj().T - a.to_matrix()) / l)
        else:
            def f(a, U=U, l=l):
                A = rep(a).to_matrix()
                return (U @ A @ U.conj().T - A) / l
        atoms.append(Atom(shape, f, "spectral", label=str(g) if g is not None else ""))
    if mean_length is None:
        mean_length = sum(lengths) / (len(lengths) + 1)
    L = MaxOfAtoms(shape, atoms, kind="group-action", mean_length=mean_length)
    if check_kernel:
        require_lipschitz(L)
    return L


def from_commutator(D: np.ndarray, rep: Morphism) -> MaxOfAtoms:
    """L(a) = ||D rep(a) - rep(a) D||."""
    D = D.to_matrix() if isinstance(D, Element) else np.asarray(D, dtype=complex)
    if np.max(np.abs(D - D.conj().T)) > 1e-10:
        raise ValueError("Dirac operator must be Hermitian")
    if rep.target.nblocks != 1 or rep.target.matrix_dim != D.shape[0]:
        raise ShapeError("representation target must be the full matrix algebra of D")
    rep.check_homomorphism()
    if not rep.is_injective():
        raise ValueError("representation must be faithful")

    def f(a):
        A = rep(a).to_matrix()
        return D @ A - A @ D

    L = MaxOfAtoms(rep.source, [Atom(rep.source, f, "spectral", "commutator")], kind="commutator")
    return require_lipschitz(L)


def from_filtration(stages: Sequence[Subalgebra], beta: Sequence[float],
                    check_nesting: bool = True, seed: int = 0) -> MaxOfAtoms:
    """L(a) = max_n ||a - E_n(a)|| / beta(n); the first stage must be the scalars."""
    stages = list(stages)
    beta = [float(b) for b in beta]
    if len(beta) != len(stages) or not stages:
        raise ValueError("one beta per stage is required")
    if any(b <= 0 for b in beta):
        raise ValueError("beta must be strictly positive")
    shape = stages[0].shape
    one = shape.unit()
    if stages[0].dim != 1 or not stages[0].contains(one):
        raise NotLipschitzError("first stage must be the scalars")
    if check_nesting:
        rng = np.random.default_rng(seed)
        for lo, hi in zip(stages, stages[1:]):
            for _ in range(3):
                x = lo.project(shape.random_hermitian(rng))
                if not hi.contains(x, 1e-8 * max(1.0, operator_norm(x))):
                    raise ValueError("non-nested filtration")
    atoms = []
    for st, b in zip(stages, beta):
        if st.dim == shape.real_dim:
            continue  # whole algebra: the atom vanishes identically
        f = (lambda a, st=st, b=b: (a - st.project(a)).to_matrix() / b)
        atoms.append(Atom(shape, f, "spectral", st.name))
    if not atoms:
        raise NotLipschitzError("filtration has no proper stage")
    return MaxOfAtoms(shape, atoms, kind="filtration")


def from_stddev(mu: State) -> MaxOfAtoms:
    """sqrt(mu(a*a) - |mu(a)|^2) realised as a GNS column."""
    roots = []
    for d in mu.densities:
        w, V = np.linalg.eigh(d)
        if w.min() <= 1e-10:
            raise ValueError("state is not faithful")
        roots.append((V * np.sqrt(w)) @ V.conj().T)
    shape = mu.shape

    def f(a):
        c = mu(a)
        return np.concatenate([((b - c * np.eye(b.shape[0])) @ r).ravel()
                               for b, r in zip(a.blocks, roots)])

    return MaxOfAtoms(shape, [Atom(shape, f, "euclidean", "stddev")], kind="stddev")


def from_metric(dist: np.ndarray) -> MaxOfAtoms:
    """Classical Lipschitz seminorm max |f(x)-f(y)|/d(x,y) on a finite metric space."""
    from .convex import check_metric

    d = check_metric(dist)
    k = d.shape[0]
    if k < 1:
        raise ValueError("need at least one point")
    if np.any(d[~np.eye(k, dtype=bool)] <= 0):
        raise ValueError("distinct points must have positive distance")
    shape = AlgebraShape([1] * k)
    atoms = []
    for x in range(k):
        for y in range(x + 1, k):
            f = (lambda a, x=x, y=y, dxy=d[x, y]:
                 np.array([(a.blocks[x][0, 0] - a.blocks[y][0, 0]) / dxy]))
            atoms.append(Atom(shape, f, "euclidean", f"{x}-{y}"))
    if k == 1:
        # a single point: every function is constant, so the seminorm is zero
        atoms.append(Atom(shape, lambda a: np.zeros(1), "euclidean", "point"))
    L = MaxOfAtoms(shape, atoms, kind="metric", descriptor={"type": "metric", "dist": d.tolist()})
    L.dist = d
    return L


# ---------------------------------------------------------------------------
# quasi-Leibniz check


@dataclass(frozen=True)
class PermissibleF:
    C: float = 1.0
    D: float = 0.0

    def __post_init__(self):
        if self.C < 1 or self.D < 0:
            raise ValueError("F_{C,D} needs C >= 1 and D >= 0")

    def __call__(self, x, y, lx, ly):
        return self.C * (x * ly + y * lx) + self.D * lx * ly


@dataclass
class LeibnizReport:
    samples: int
    worst_margin: float
    worst_index: int
    passed: bool
    threshold: float = 1e-9

    def line(self) -> str:
        return (f"samples={self.samples} worst_margin={self.worst_margin:.3e} "
                f"{'pass' if self.passed else 'fail'}")


def _sample_pair(shape, seed, i):
    rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
    sa = rng.choice([0.1, 1.0, 10.0])
    sb = rng.choice([0.1, 1.0, 10.0])
    return shape.random_hermitian(rng, sa), shape.random_hermitian(rng, sb)


def check_quasi_leibniz(L: Seminorm, F: PermissibleF = PermissibleF(), samples: int = 1000,
                        seed: int = 0, threads: int = 1,
                        product_eval: Callable[[Element], float] | None = None,
                        threshold: float = 1e-9) -> LeibnizReport:
    """Worst value of L(a∘b) - F(...) and L({a,b}) - F(...) over random pairs.

    For solver-evaluated seminorms the left side uses certified lower bounds and
    the right side certified upper bounds, so only genuine violations count.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    shape = L.shape

    def one(i):
        a, b = _sample_pair(shape, seed, i)
        j, l = jordan_lie(a, b)
        _, la = seminorm_bounds(L, a)
        _, lb = seminorm_bounds(L, b)
        rhs = F(operator_norm(a), operator_norm(b), la, lb)
        if product_eval is not None:
            lj, ll = product_eval(j), product_eval(l)
        else:
            lj = seminorm_bounds(L, j)[0]
            ll = seminorm_bounds(L, l)[0]
        return max(lj, ll) - rhs

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            margins = list(ex.map(one, range(samples)))
    else:
        margins = [one(i) for i in range(samples)]
    k = int(np.argmax(margins))
    worst = float(margins[k])
    return LeibnizReport(samples, worst, k, worst <= threshold, threshold)
