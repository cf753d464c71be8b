"""Finite-dimensional C*-algebras as direct sums of full matrix blocks.

Elements, states, the trace-orthonormal Hermitian basis used as solver
coordinates, conditional expectations and linear maps between algebras.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

HERM_TOL = 1e-10
HOM_TOL = 1e-9


class ShapeError(ValueError):
    """Raised when elements, states or maps do not conform to a shape."""


@dataclass(frozen=True)
class AlgebraShape:
    block_dims: tuple[int, ...]

    def __init__(self, block_dims: Iterable[int]):
        dims = tuple(int(n) for n in block_dims)
        if len(dims) < 1 or any(n < 1 for n in dims):
            raise ShapeError(f"invalid block dimensions {dims}")
        object.__setattr__(self, "block_dims", dims)

    @property
    def nblocks(self) -> int:
        return len(self.block_dims)

    @property
    def real_dim(self) -> int:
        """Real dimension of the self-adjoint part."""
        return sum(n * n for n in self.block_dims)

    @property
    def matrix_dim(self) -> int:
        return sum(self.block_dims)

    @property
    def is_commutative(self) -> bool:
        return all(n == 1 for n in self.block_dims)

    def offsets(self) -> list[int]:
        """Start of each block inside a flattened (vectorised) element."""
        out, pos = [], 0
        for n in self.block_dims:
            out.append(pos)
            pos += n * n
        return out

    def direct_sum(self, other: "AlgebraShape") -> "AlgebraShape":
        return AlgebraShape(self.block_dims + other.block_dims)

    def unit(self) -> "Element":
        return Element(self, [np.eye(n, dtype=complex) for n in self.block_dims])

    def zero(self) -> "Element":
        return Element(self, [np.zeros((n, n), dtype=complex) for n in self.block_dims])

    def from_vec(self, v: np.ndarray) -> "Element":
        v = np.asarray(v, dtype=complex)
        if v.shape != (self.real_dim,):
            raise ShapeError("vector length does not match shape")
        blocks = []
        for off, n in zip(self.offsets(), self.block_dims):
            blocks.append(v[off:off + n * n].reshape(n, n))
        return Element(self, blocks)

    def diag(self, values: Sequence[complex]) -> "Element":
        """Element whose blocks are diagonal with the given concatenated entries."""
        values = np.asarray(values, dtype=complex)
        if values.shape != (self.matrix_dim,):
            raise ShapeError("diagonal length does not match shape")
        blocks, pos = [], 0
        for n in self.block_dims:
            blocks.append(np.diag(values[pos:pos + n]))
            pos += n
        return Element(self, blocks)

    def random_hermitian(self, rng: np.random.Generator, scale: float = 1.0) -> "Element":
        blocks = []
        for n in self.block_dims:
            g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            blocks.append(scale * (g + g.conj().T) / 2)
        return Element(self, blocks)

    def __repr__(self) -> str:
        return f"AlgebraShape({list(self.block_dims)})"


def as_shape(shape) -> AlgebraShape:
    if isinstance(shape, AlgebraShape):
        return shape
    return AlgebraShape(shape)


class Element:
    """A member of a direct sum of matrix blocks. Treated as immutable."""

    __slots__ = ("shape", "blocks")

    def __init__(self, shape, blocks: Sequence[np.ndarray]):
        shape = as_shape(shape)
        if len(blocks) != shape.nblocks:
            raise ShapeError(f"expected {shape.nblocks} blocks, got {len(blocks)}")
        arrs = []
        for b, n in zip(blocks, shape.block_dims):
            a = np.array(b, dtype=complex)
            if a.ndim == 0 and n == 1:
                a = a.reshape(1, 1)
            if a.shape != (n, n):
                raise ShapeError(f"block of shape {a.shape} where {(n, n)} expected")
            a.setflags(write=False)
            arrs.append(a)
        self.shape = shape
        self.blocks = tuple(arrs)

    # arithmetic
    def _check(self, other: "Element") -> None:
        if not isinstance(other, Element) or other.shape != self.shape:
            raise ShapeError("shape mismatch")

    def __add__(self, other):
        if np.isscalar(other):
            return self + other * self.shape.unit()
        self._check(other)
        return Element(self.shape, [a + b for a, b in zip(self.blocks, other.blocks)])

    __radd__ = __add__

    def __sub__(self, other):
        if np.isscalar(other):
            return self - other * self.shape.unit()
        self._check(other)
        return Element(self.shape, [a - b for a, b in zip(self.blocks, other.blocks)])

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Element(self.shape, [-a for a in self.blocks])

    def __mul__(self, c):
        if isinstance(c, Element):
            return self @ c
        return Element(self.shape, [c * a for a in self.blocks])

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Element(self.shape, [a / c for a in self.blocks])

    def __matmul__(self, other: "Element") -> "Element":
        self._check(other)
        return Element(self.shape, [a @ b for a, b in zip(self.blocks, other.blocks)])

    def adjoint(self) -> "Element":
        return Element(self.shape, [a.conj().T for a in self.blocks])

    @property
    def H(self) -> "Element":
        return self.adjoint()

    def is_self_adjoint(self, tol: float = 1e-12) -> bool:
        return all(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol for a in self.blocks)

    def hermitian_part(self) -> "Element":
        return Element(self.shape, [(a + a.conj().T) / 2 for a in self.blocks])

    def vec(self) -> np.ndarray:
        """Concatenation of the row-major flattened blocks."""
        return np.concatenate([a.ravel() for a in self.blocks])

    def to_matrix(self) -> np.ndarray:
        """Block-diagonal dense matrix."""
        N = self.shape.matrix_dim
        out = np.zeros((N, N), dtype=complex)
        pos = 0
        for a in self.blocks:
            n = a.shape[0]
            out[pos:pos + n, pos:pos + n] = a
            pos += n
        return out

    def trace(self) -> complex:
        return complex(sum(np.trace(a) for a in self.blocks))

    def norm(self) -> float:
        return operator_norm(self)

    def allclose(self, other: "Element", atol: float = 1e-9) -> bool:
        self._check(other)
        return all(np.allclose(a, b, atol=atol, rtol=0) for a, b in zip(self.blocks, other.blocks))

    def __repr__(self) -> str:
        return f"Element({self.shape!r}, {[b.tolist() for b in self.blocks]})"


def operator_norm(a: Element) -> float:
    """Largest singular value over all blocks."""
    best = 0.0
    for b in a.blocks:
        if b.shape[0] == 1:
            v = abs(b[0, 0])
        elif np.allclose(b, b.conj().T, atol=1e-14, rtol=0):
            v = float(np.max(np.abs(np.linalg.eigvalsh((b + b.conj().T) / 2))))
        else:
            v = float(np.linalg.norm(b, 2))
        best = max(best, float(v))
    return best


def jordan_lie(a: Element, b: Element) -> tuple[Element, Element]:
    """Jordan product (ab+ba)/2 and Lie product (ab-ba)/2i."""
    a._check(b)
    ab, ba = a @ b, b @ a
    jordan = (ab + ba) / 2
    lie = (ab - ba) / 2j
    if a.is_self_adjoint(1e-10) and b.is_self_adjoint(1e-10):
        scale = max(1.0, operator_norm(a) * operator_norm(b))
        if not (jordan.is_self_adjoint(1e-9 * scale) and lie.is_self_adjoint(1e-9 * scale)):
            raise ArithmeticError("Jordan/Lie products lost self-adjointness")
        jordan, lie = jordan.hermitian_part(), lie.hermitian_part()
    return jordan, lie


class State:
    """Block-diagonal density with total trace one."""

    __slots__ = ("shape", "densities")

    def __init__(self, shape, densities: Sequence[np.ndarray]):
        shape = as_shape(shape)
        if len(densities) != shape.nblocks:
            raise ShapeError("density block count does not match shape")
        dens, total = [], 0.0
        for d, n in zip(densities, shape.block_dims):
            d = np.array(d, dtype=complex).reshape(n, n) if np.size(d) == n * n else None
            if d is None:
                raise ShapeError("density block has wrong size")
            if np.max(np.abs(d - d.conj().T), initial=0.0) > HERM_TOL:
                raise ValueError("density block is not Hermitian")
            d = (d + d.conj().T) / 2
            if n and np.linalg.eigvalsh(d).min() < -HERM_TOL:
                raise ValueError("density block is not positive")
            d.setflags(write=False)
            dens.append(d)
            total += float(np.trace(d).real)
        if abs(total - 1.0) > HERM_TOL:
            raise ValueError(f"densities have total trace {total}, not 1")
        self.shape = shape
        self.densities = tuple(dens)

    def __call__(self, a: Element) -> complex:
        return evaluate(self, a)

    def vec(self) -> np.ndarray:
        return np.concatenate([d.ravel() for d in self.densities])

    def as_element(self) -> Element:
        return Element(self.shape, self.densities)

    @staticmethod
    def from_vector(shape, block: int, psi: np.ndarray) -> "State":
        """Vector state given by a unit vector inside one block."""
        shape = as_shape(shape)
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        dens = [np.zeros((n, n), dtype=complex) for n in shape.block_dims]
        dens[block] = np.outer(psi, psi.conj())
        return State(shape, dens)

    @staticmethod
    def dirac(shape, point: int) -> "State":
        shape = as_shape(shape)
        if not shape.is_commutative:
            raise ShapeError("point states need a commutative shape")
        return State.from_vector(shape, point, np.ones(1))

    @staticmethod
    def trace_state(shape) -> "State":
        shape = as_shape(shape)
        N = shape.matrix_dim
        return State(shape, [np.eye(n) / N for n in shape.block_dims])

    @staticmethod
    def from_probabilities(shape, p: Sequence[float]) -> "State":
        shape = as_shape(shape)
        if not shape.is_commutative:
            raise ShapeError("probability vectors need a commutative shape")
        return State(shape, [np.array([[x]]) for x in p])

    def mix(self, other: "State", t: float) -> "State":
        return State(self.shape, [(1 - t) * a + t * b for a, b in zip(self.densities, other.densities)])

    def __repr__(self) -> str:
        return f"State({self.shape!r})"


def evaluate(phi: State, a: Element) -> complex:
    if phi.shape != a.shape:
        raise ShapeError("state and element shapes differ")
    # tr(rho a) = sum_ij rho_ji a_ij
    return complex(sum(np.sum(d.T * b) for d, b in zip(phi.densities, a.blocks)))


def state_net(shape, kind: str, count: int = 1, seed: int = 0) -> list[State]:
    shape = as_shape(shape)
    if kind == "pure-enumerate":
        if not shape.is_commutative:
            raise ShapeError("pure-enumerate needs a commutative shape")
        return [State.dirac(shape, i) for i in range(shape.nblocks)]
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    dims = np.array(shape.block_dims, dtype=float)
    out = []
    for _ in range(count):
        if kind == "pure-random":
            # block picked with probability proportional to its dimension
            k = int(rng.choice(shape.nblocks, p=dims / dims.sum()))
            n = shape.block_dims[k]
            psi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            out.append(State.from_vector(shape, k, psi))
        elif kind == "mixed-random":
            dens = []
            for n in shape.block_dims:
                g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
                dens.append(g @ g.conj().T + 1e-3 * np.eye(n))
            tot = sum(np.trace(d).real for d in dens)
            out.append(State(shape, [d / tot for d in dens]))
        else:
            raise ValueError(f"unknown net kind {kind!r}")
    return out


class HermitianBasis:
    """Trace-orthonormal real basis of the self-adjoint part.

    Index 0 is the normalised unit. Then come the remaining central directions
    (orthonormalised block identities), then per block the traceless generalised
    Gell-Mann matrices: diagonal ones, then symmetric and antisymmetric pairs.
    """

    def __init__(self, shape):
        self.shape = as_shape(shape)
        self.unit_index = 0
        self._matrix = None

    @property
    def dim(self) -> int:
        return self.shape.real_dim

    @property
    def matrix(self) -> np.ndarray:
        """Columns are the vectorised basis elements, shape (real_dim, real_dim)."""
        if self._matrix is None:
            self._matrix = self._build()
            self._matrix.setflags(write=False)
        return self._matrix

    def _build(self) -> np.ndarray:
        shape = self.shape
        m = shape.real_dim
        offs = shape.offsets()
        cols = []
        # central part: Gram-Schmidt on block identities, unit first
        ids = []
        for k, n in enumerate(shape.block_dims):
            v = np.zeros(m, dtype=complex)
            v[offs[k]:offs[k] + n * n] = np.eye(n).ravel()
            ids.append(v)
        cen = [sum(ids)]
        cen.extend(ids[:-1])
        ortho = []
        for v in cen:
            w = v.copy()
            for q in ortho:
                w = w - np.vdot(q, w) * q
            nrm = np.linalg.norm(w)
            if nrm > 1e-12:
                ortho.append(w / nrm)
        cols.extend(ortho)
        for k, n in enumerate(shape.block_dims):
            off = offs[k]

            def put(mat, off=off, n=n):
                v = np.zeros(m, dtype=complex)
                v[off:off + n * n] = mat.ravel()
                return v

            for l in range(1, n):
                d = np.zeros(n)
                d[:l] = 1.0
                d[l] = -l
                cols.append(put(np.diag(d) / np.sqrt(l * (l + 1))))
            for j in range(n):
                for kk in range(j + 1, n):
                    s = np.zeros((n, n), dtype=complex)
                    s[j, kk] = s[kk, j] = 1 / np.sqrt(2)
                    cols.append(put(s))
                    a = np.zeros((n, n), dtype=complex)
                    a[j, kk] = -1j / np.sqrt(2)
                    a[kk, j] = 1j / np.sqrt(2)
                    cols.append(put(a))
        mat = np.array(cols).T
        assert mat.shape == (m, m)
        return mat

    def element(self, i: int) -> Element:
        return self.shape.from_vec(self.matrix[:, i])

    def elements(self) -> list[Element]:
        return [self.element(i) for i in range(self.dim)]

    def coords(self, a: Element) -> np.ndarray:
        """Real coordinates of the self-adjoint part of a."""
        if a.shape != self.shape:
            raise ShapeError("shape mismatch")
        return (self.matrix.conj().T @ a.vec()).real

    def to_element(self, x: np.ndarray) -> Element:
        return self.shape.from_vec(self.matrix @ np.asarray(x, dtype=float))

    def functional(self, phi: State) -> np.ndarray:
        """phi(e_i) for every basis element."""
        if phi.shape != self.shape:
            raise ShapeError("shape mismatch")
        rhoT = np.concatenate([d.T.ravel() for d in phi.densities])
        return (rhoT @ self.matrix).real


_BASES: dict = {}


def hermitian_basis(shape) -> HermitianBasis:
    """Shared (cached) basis per shape; the basis itself is immutable."""
    shape = as_shape(shape)
    b = _BASES.get(shape)
    if b is None:
        b = HermitianBasis(shape)
        _BASES[shape] = b
    return b


def random_unit_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def span_basis(elements: Sequence[Element], tol: float = 1e-9) -> np.ndarray:
    """Orthonormal (complex) basis of the span of the vectorised elements, as columns."""
    if not elements:
        raise ValueError("empty span")
    mat = np.array([e.vec() for e in elements]).T
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    r = int(np.sum(s > tol * max(1.0, s[0])))
    return u[:, :r]


def check_subalgebra(elements: Sequence[Element], tol: float = HOM_TOL) -> np.ndarray:
    """Verify that the span is a unital *-subalgebra; return an orthonormal basis of it."""
    shape = elements[0].shape
    if len(elements) > 0 and any(e.shape != shape for e in elements):
        raise ShapeError("mixed shapes in subalgebra basis")
    Q = span_basis(elements)
    if Q.shape[1] < len(elements):
        raise ValueError("degenerate (rank-deficient) subalgebra basis")
    P = Q @ Q.conj().T

    def outside(v):
        return np.linalg.norm(v - P @ v)

    if outside(shape.unit().vec()) > tol:
        raise ValueError("span does not contain the unit")
    for e in elements:
        if outside(e.adjoint().vec()) > tol * max(1.0, np.linalg.norm(e.vec())):
            raise ValueError("span is not closed under adjoint")
    for e in elements:
        for f in elements:
            prod = (e @ f).vec()
            if outside(prod) > tol * max(1.0, np.linalg.norm(prod)):
                raise ValueError("span is not closed under products")
    return Q


def conditional_expectation(sub_basis: Sequence[Element], a: Element) -> Element:
    """Trace-orthogonal projection of a onto a unital *-subalgebra."""
    Q = check_subalgebra(sub_basis)
    if a.shape != sub_basis[0].shape:
        raise ShapeError("shape mismatch")
    return a.shape.from_vec(Q @ (Q.conj().T @ a.vec()))


class Subalgebra:
    """A unital *-subalgebra with its trace-preserving conditional expectation.

    Either a spanning set is given (generic orthogonal projection), or a custom
    projection callable for large structured cases.
    """

    def __init__(self, shape, elements: Sequence[Element] | None = None,
                 project: Callable[[Element], Element] | None = None,
                 dim: int | None = None, verify: bool = True, name: str = ""):
        self.shape = as_shape(shape)
        self.name = name
        self._Q = None
        if elements is not None:
            self._Q = check_subalgebra(elements) if verify else span_basis(elements)
            self.dim = self._Q.shape[1]
        elif project is not None:
            self.dim = dim
        else:
            raise ValueError("need elements or a projection")
        self._project = project

    def project(self, a: Element) -> Element:
        if self._project is not None:
            return self._project(a)
        return a.shape.from_vec(self._Q @ (self._Q.conj().T @ a.vec()))

    def contains(self, a: Element, tol: float = 1e-9) -> bool:
        return self.project(a).allclose(a, atol=tol)


# ---------------------------------------------------------------------------
# linear maps between algebras


class Morphism:
    """Linear map between algebras, stored as a matrix on vectorised elements."""

    def __init__(self, source, target, matrix: np.ndarray, name: str = ""):
        self.source = as_shape(source)
        self.target = as_shape(target)
        mat = np.asarray(matrix, dtype=complex)
        if mat.shape != (self.target.real_dim, self.source.real_dim):
            raise ShapeError(f"map matrix shape {mat.shape} inconsistent with shapes")
        mat.setflags(write=False)
        self.matrix = mat
        self.name = name

    def __call__(self, a: Element) -> Element:
        if a.shape != self.source:
            raise ShapeError("map applied to element of the wrong shape")
        return self.target.from_vec(self.matrix @ a.vec())

    def compose(self, inner: "Morphism") -> "Morphism":
        """self ∘ inner."""
        if inner.target != self.source:
            raise ShapeError("cannot compose maps with mismatched shapes")
        return Morphism(inner.source, self.target, self.matrix @ inner.matrix)

    def dual_state(self, phi: State) -> State:
        """Pull a state back along the map: a -> phi(self(a))."""
        if phi.shape != self.target:
            raise ShapeError("state lives on the wrong algebra")
        # phi(T a) = rhoT . T vec(a) ; rho_src^T.ravel = rhoT @ T
        rhoT = np.concatenate([d.T.ravel() for d in phi.densities])
        src = rhoT @ self.matrix
        blocks, pos = [], 0
        for n in self.source.block_dims:
            blocks.append(src[pos:pos + n * n].reshape(n, n).T)
            pos += n * n
        blocks = [(b + b.conj().T) / 2 for b in blocks]
        tot = sum(np.trace(b).real for b in blocks)
        return State(self.source, [b / tot for b in blocks])

    def rank(self, tol: float = 1e-9) -> int:
        s = np.linalg.svd(self.matrix, compute_uv=False)
        return int(np.sum(s > tol * max(1.0, s[0] if s.size else 0.0)))

    def is_injective(self) -> bool:
        return self.rank() == self.source.real_dim

    def is_surjective(self) -> bool:
        return self.rank() == self.target.real_dim

    def check_homomorphism(self, tol: float = HOM_TOL, max_pairs: int = 4096,
                           seed: int = 0) -> None:
        """Unital, adjoint-preserving, multiplicative on matrix-unit pairs."""
        if not self(self.source.unit()).allclose(self.target.unit(), atol=tol):
            raise ValueError("map is not unital")
        units = matrix_units(self.source)
        for e in units:
            if not self(e.adjoint()).allclose(self(e).adjoint(), atol=tol):
                raise ValueError("map does not preserve adjoints")
        pairs = [(i, j) for i in range(len(units)) for j in range(len(units))]
        if len(pairs) > max_pairs:
            rng = np.random.default_rng(seed)
            idx = rng.choice(len(pairs), size=max_pairs, replace=False)
            pairs = [pairs[i] for i in sorted(idx)]
        for i, j in pairs:
            lhs = self(units[i] @ units[j])
            rhs = self(units[i]) @ self(units[j])
            if not lhs.allclose(rhs, atol=tol):
                raise ValueError("map is not multiplicative")

    @staticmethod
    def from_function(source, target, f: Callable[[Element], Element], name: str = "") -> "Morphism":
        source, target = as_shape(source), as_shape(target)
        cols = []
        for k in range(source.real_dim):
            v = np.zeros(source.real_dim, dtype=complex)
            v[k] = 1.0
            img = f(source.from_vec(v))
            if img.shape != target:
                raise ShapeError("function returned element of the wrong shape")
            cols.append(img.vec())
        return Morphism(source, target, np.array(cols).T, name=name)

    @staticmethod
    def identity(shape) -> "Morphism":
        shape = as_shape(shape)
        return Morphism(shape, shape, np.eye(shape.real_dim), name="identity")

    @staticmethod
    def conjugation(u: Element) -> "Morphism":
        shape = u.shape
        return Morphism.from_function(shape, shape, lambda a: u @ a @ u.adjoint(), name="conjugation")

    @staticmethod
    def block_projection(total, start: int, count: int) -> "Morphism":
        """Surjection of a direct sum onto the consecutive blocks [start, start+count)."""
        total = as_shape(total)
        target = AlgebraShape(total.block_dims[start:start + count])

        def f(a):
            return Element(target, a.blocks[start:start + count])

        return Morphism.from_function(total, target, f, name="block-projection")

    @staticmethod
    def diagonal(k: int) -> "Morphism":
        """C^k (shape [1]*k) -> M_k as diagonal matrices."""
        src = AlgebraShape([1] * k)
        return Morphism.from_function(src, AlgebraShape([k]),
                                      lambda a: Element([k], [a.to_matrix()]), name="diagonal")

    @staticmethod
    def point_map(points: Sequence[int], source_points: int) -> "Morphism":
        """Commutative map f -> f∘m from C(X) to C(Z), m: Z -> X given as a list."""
        src = AlgebraShape([1] * source_points)
        tgt = AlgebraShape([1] * len(points))
        mat = np.zeros((tgt.real_dim, src.real_dim))
        for z, x in enumerate(points):
            if not 0 <= x < source_points:
                raise ShapeError("point map index out of range")
            mat[z, x] = 1.0
        return Morphism(src, tgt, mat, name="point-map")

    @staticmethod
    def block_embedding(source, target, blocks: Sequence[Sequence[tuple[int, np.ndarray | None]]]) -> "Morphism":
        """Embedding given per target block by a list of (source block, isometry) pieces.

        Target block j receives the block-diagonal sum of V a_s V* over its pieces;
        V defaults to the identity.
        """
        source, target = as_shape(source), as_shape(target)

        def f(a):
            out = []
            for j, pieces in enumerate(blocks):
                n = target.block_dims[j]
                M = np.zeros((n, n), dtype=complex)
                pos = 0
                for s, V in pieces:
                    b = a.blocks[s]
                    if V is None:
                        m = b.shape[0]
                        M[pos:pos + m, pos:pos + m] += b
                        pos += m
                    else:
                        M += V @ b @ V.conj().T
                out.append(M)
            return Element(target, out)

        return Morphism.from_function(source, target, f, name="block-embedding")


def direct_sum_maps(a: Morphism, b: Morphism) -> Morphism:
    """a ⊕ b acting blockwise on source_a ⊕ source_b."""
    mat = np.zeros((a.target.real_dim + b.target.real_dim, a.source.real_dim + b.source.real_dim),
                   dtype=complex)
    mat[:a.target.real_dim, :a.source.real_dim] = a.matrix
    mat[a.target.real_dim:, a.source.real_dim:] = b.matrix
    return Morphism(a.source.direct_sum(b.source), a.target.direct_sum(b.target), mat)


def matrix_units(shape) -> list[Element]:
    shape = as_shape(shape)
    out = []
    for k in range(shape.real_dim):
        v = np.zeros(shape.real_dim, dtype=complex)
        v[k] = 1.0
        out.append(shape.from_vec(v))
    return out


def kron_element(shape, *factors: np.ndarray) -> Element:
    """Single-block element given by a Kronecker product."""
    out = np.array([[1.0 + 0j]])
    for f in factors:
        out = np.kron(out, f)
    return Element(shape, [out])


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
