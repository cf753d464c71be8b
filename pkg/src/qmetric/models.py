"""Concrete models and experiment drivers.

Fuzzy tori (clock and shift matrices, twisted group algebras of finite Abelian
groups), Fejér averaging kernels, weight operators on lattice windows, UHF
filtrations, Berezin symbols on spin matrices, and the collapse and
convergence experiments built from them.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm, null_space

from .algebra import AlgebraShape, Element, Morphism, Subalgebra, operator_norm
from .bridge import perturbation_bound
from .convex import transport_lp
from .lipnorm import MaxOfAtoms, from_group_action

ROOT_TOL = 1e-12
SPOT_TOL = 1e-8


# ---------------------------------------------------------------------------
# finite Abelian groups and cocycles


class FiniteAbelianGroup:
    """Z_{m_1} x ... x Z_{m_d} with elements as integer tuples reduced mod the orders."""

    def __init__(self, orders: Sequence[int]):
        orders = tuple(int(m) for m in orders)
        if not orders or any(m < 1 for m in orders):
            raise ValueError("orders must be positive integers")
        self.orders = orders
        self.elements = [tuple(g) for g in itertools.product(*(range(m) for m in orders))]
        self._index = {g: i for i, g in enumerate(self.elements)}

    @property
    def rank(self) -> int:
        return len(self.orders)

    @property
    def order(self) -> int:
        return len(self.elements)

    def reduce(self, g) -> tuple:
        return tuple(int(x) % m for x, m in zip(g, self.orders))

    def index(self, g) -> int:
        return self._index[self.reduce(g)]

    def add(self, g, h) -> tuple:
        return tuple((x + y) % m for x, y, m in zip(g, h, self.orders))

    def neg(self, g) -> tuple:
        return tuple((-x) % m for x, m in zip(g, self.orders))

    def sub(self, g, h) -> tuple:
        return self.add(g, self.neg(h))

    def centered(self, g) -> tuple:
        """Representative of g in the symmetric window around 0."""
        return tuple(((x + m // 2) % m) - m // 2 for x, m in zip(self.reduce(g), self.orders))

    def word_length(self, g) -> float:
        """l1 length for the standard generators."""
        return float(sum(min(x, m - x) for x, m in zip(self.reduce(g), self.orders)))

    def torus_length(self, g) -> float:
        """Chordal length of g viewed as a point of the torus."""
        return float(sum(abs(1 - np.exp(2j * np.pi * x / m)) for x, m in zip(g, self.orders)))

    def character(self, x, g) -> complex:
        """chi_x(g) = exp(2 pi i sum x_j g_j / m_j)."""
        return complex(np.exp(2j * np.pi * sum(a * b / m for a, b, m in zip(x, g, self.orders))))

    def length_table(self, length: str | Callable = "torus") -> np.ndarray:
        if isinstance(length, str) and length in ("torus", "word"):
            E = np.array(self.elements)
            m = np.array(self.orders)
            if length == "torus":
                return np.abs(1 - np.exp(2j * np.pi * E / m)).sum(axis=1)
            return np.minimum(E, m - E).sum(axis=1).astype(float)
        f = _length_function(self, length)
        return np.array([f(g) for g in self.elements])

    def __eq__(self, other) -> bool:
        return isinstance(other, FiniteAbelianGroup) and self.orders == other.orders

    def __hash__(self) -> int:
        return hash(self.orders)

    def __repr__(self) -> str:
        return f"FiniteAbelianGroup({list(self.orders)})"


def _length_function(G: FiniteAbelianGroup, length) -> Callable:
    if callable(length):
        return length
    if length == "torus":
        return G.torus_length
    if length == "word":
        return G.word_length
    raise ValueError(f"unknown length {length!r}")


class Cocycle:
    """A normalized 2-cocycle on a finite Abelian group, stored as a table."""

    def __init__(self, G: FiniteAbelianGroup, table: np.ndarray, verify: bool = True,
                 samples: int = 20000, seed: int = 0):
        table = np.asarray(table, dtype=complex)
        if table.shape != (G.order, G.order):
            raise ValueError("cocycle table has the wrong shape")
        if np.max(np.abs(np.abs(table) - 1)) > 1e-12:
            raise ValueError("cocycle values must be unimodular")
        self.G = G
        self.table = table
        if verify:
            self.verify(samples, seed)

    def __call__(self, g, h) -> complex:
        return self.table[self.G.index(g), self.G.index(h)]

    def residual(self, samples: int = 20000, seed: int = 0) -> float:
        """Worst |s(x,y)s(x+y,z) - s(x,y+z)s(y,z)|; exhaustive when |G| <= 64."""
        G, T = self.G, self.table
        n = G.order
        add = np.array([[G.index(G.add(g, h)) for h in G.elements] for g in G.elements])
        if n <= 64:
            x, y, z = (a.ravel() for a in np.meshgrid(np.arange(n), np.arange(n), np.arange(n),
                                                      indexing="ij"))
        else:
            rng = np.random.default_rng(seed)
            x, y, z = rng.integers(0, n, size=(3, samples))
        lhs = T[x, y] * T[add[x, y], z]
        rhs = T[x, add[y, z]] * T[y, z]
        return float(np.max(np.abs(lhs - rhs)))

    def verify(self, samples: int = 20000, seed: int = 0) -> None:
        if self.residual(samples, seed) > 1e-10:
            raise ValueError("table fails the cocycle identity")

    def antisymmetric(self) -> np.ndarray:
        """s(g,h) / s(h,g)."""
        return self.table / self.table.T

    def radical(self) -> list[tuple]:
        """Elements commuting with everything: s(g,h) = s(h,g) for all h."""
        A = self.antisymmetric()
        return [g for i, g in enumerate(self.G.elements) if np.allclose(A[i], 1, atol=1e-10)]

    def is_nondegenerate(self) -> bool:
        return len(self.radical()) == 1

    @staticmethod
    def trivial(G: FiniteAbelianGroup) -> "Cocycle":
        return Cocycle(G, np.ones((G.order, G.order)), verify=False)

    @staticmethod
    def bicharacter(G: FiniteAbelianGroup, theta: np.ndarray) -> "Cocycle":
        """s(x, y) = exp(2 pi i sum_jk theta_jk x_j y_k), checked to be well defined mod the orders."""
        theta = np.asarray(theta, dtype=float)
        d = G.rank
        if theta.shape != (d, d):
            raise ValueError("theta must be a d x d matrix")
        m = np.array(G.orders, dtype=float)
        # periodicity in x_j needs theta_jk m_j integral, in y_k needs theta_jk m_k integral
        for M in (theta * m[:, None], theta * m[None, :]):
            if np.max(np.abs(M - np.round(M))) > 1e-12:
                raise ValueError("theta does not define a bicharacter on this group")
        E = np.array(G.elements, dtype=float)
        table = np.exp(2j * np.pi * (E @ theta @ E.T))
        return Cocycle(G, table, verify=False)

    @staticmethod
    def fuzzy_torus(n: int, p: int = 1) -> "Cocycle":
        """On Z_n x Z_n: s((a,b),(c,d)) = rho^(bc) with rho = exp(2 pi i p / n)."""
        G = FiniteAbelianGroup([n, n])
        theta = np.array([[0.0, 0.0], [p / n, 0.0]])
        return Cocycle.bicharacter(G, theta)


# ---------------------------------------------------------------------------
# fuzzy tori


def clock_shift(n: int, rho: complex) -> tuple[Element, Element]:
    """Shift U (U e_{i+1} = e_i, cyclically) and clock V = diag(rho^k), with UV = rho VU."""
    if n < 2:
        raise ValueError("n must be at least 2")
    rho = complex(rho)
    if abs(rho ** n - 1) > ROOT_TOL:
        raise ValueError("rho is not an n-th root of unity")
    U = np.roll(np.eye(n, dtype=complex), -1, axis=0)
    V = np.diag(rho ** np.arange(n))
    shape = AlgebraShape([n])
    return Element(shape, [U]), Element(shape, [V])


def root_of_unity(n: int, p: int = 1) -> complex:
    return complex(np.exp(2j * np.pi * p / n))


def fuzzy_torus_unitaries(n: int, p: int = 1, generators: str = "both"):
    """Unitaries implementing the dual action of Z_n x Z_n on M_n.

    Returns (group, [(g, W_g)]) over non-identity g. When p is invertible mod
    n, W_g is chosen so that W_g U W_g* = w^j U and W_g V W_g* = w^k V for
    g = (j, k), w = exp(2 pi i / n). Otherwise exponents label the unitaries
    directly (the action is then not ergodic). `generators` restricts to the
    clock or shift direction only.
    """
    rho = root_of_unity(n, p)
    U, V = clock_shift(n, rho)
    Um, Vm = U.blocks[0], V.blocks[0]
    try:
        pinv = pow(p, -1, n)
    except ValueError:
        pinv = None
    G = FiniteAbelianGroup([n, n])
    out = []
    for g in G.elements[1:]:
        j, k = g
        if generators == "clock" and k != 0:
            continue
        if generators == "shift" and j != 0:
            continue
        if pinv is None:
            a, b = -j, k
        else:
            a, b = (-j * pinv) % n, (k * pinv) % n
        W = np.linalg.matrix_power(Vm, a % n) @ np.linalg.matrix_power(Um, b % n)
        out.append((g, Element(U.shape, [W])))
    return G, out


def fuzzy_torus_lipnorm(n: int, p: int = 1, length: str | Callable = "torus",
                        generators: str = "both", check_kernel: bool = True) -> MaxOfAtoms:
    """Lip-norm of the dual action on M_n for the chosen length on Z_n x Z_n.

    Raises NotLipschitzError when the action is not ergodic (rho not primitive,
    or only one direction acting).
    """
    G, pairs = fuzzy_torus_unitaries(n, p, generators)
    f = _length_function(G, length)
    lengths = [f(g) for g, _ in pairs]
    mean = float(np.sum(G.length_table(f)) / G.order)
    L = from_group_action(pairs, lengths, mean_length=mean, check_kernel=check_kernel)
    L.descriptor = {"type": "fuzzy-torus", "n": n, "p": p,
                    "length": length if isinstance(length, str) else "custom",
                    "generators": generators}
    return L


# ---------------------------------------------------------------------------
# twisted group algebras


def commutant_dim(mats: Sequence[np.ndarray]) -> int:
    """dim {X : M X = X M for all M}, by an exact null-space computation."""
    n = mats[0].shape[0]
    eye = np.eye(n)
    # vec is row-major: vec(MX) = (M kron I) vec X, vec(XM) = (I kron M^T) vec X
    rows = [np.kron(M, eye) - np.kron(eye, M.T) for M in mats]
    return int(null_space(np.vstack(rows), rcond=1e-10).shape[1])


@dataclass
class TwistedGroupAlgebra:
    """C*(G, s) in block form, with its regular representation and dual action."""

    G: FiniteAbelianGroup
    sigma: Cocycle
    shape: AlgebraShape
    regular: list[np.ndarray]
    rep: Morphism
    isometries: list[np.ndarray]
    _phi: np.ndarray = field(repr=False)

    def unitary(self, g) -> Element:
        """U^g as an element of the block algebra."""
        i = self.G.index(g)
        return self.shape.from_vec(self._phi[:, i])

    def from_regular(self, X: np.ndarray) -> Element:
        """Inverse of the regular representation on its range."""
        # U^g delta_0 = s(g, 0) delta_g
        c = np.array([X[i, 0] / self.sigma.table[i, 0] for i in range(self.G.order)])
        return self.shape.from_vec(self._phi @ c)

    def dual_unitary(self, x) -> np.ndarray:
        return np.diag([self.G.character(x, h) for h in self.G.elements])

    def dual_action(self, x) -> Morphism:
        """Automorphism U^g -> chi_x(g) U^g of the block algebra."""
        M = self.dual_unitary(x)

        def f(a):
            return self.from_regular(M @ self.rep(a).to_matrix() @ M.conj().T)

        return Morphism.from_function(self.shape, self.shape, f, name=f"dual{tuple(x)}")

    def lipnorm(self, length: str | Callable = "torus", check_kernel: bool = True) -> MaxOfAtoms:
        f = _length_function(self.G, length)
        pairs = [(x, self.dual_unitary(x)) for x in self.G.elements[1:]]
        lengths = [f(x) for x, _ in pairs]
        mean = float(np.sum(self.G.length_table(f)) / self.G.order)
        return from_group_action(pairs, lengths, rep=self.rep, mean_length=mean,
                                 check_kernel=check_kernel)

    def center_dim(self) -> int:
        """dim of the center of span{U^g}, by linear algebra on coefficients."""
        n = self.G.order
        A = self.sigma.antisymmetric()
        # sum c_g U^g is central iff c_g (s(g,h) - s(h,g)) = 0 for all g, h
        rows = np.zeros((n * n, n), dtype=complex)
        for h in range(n):
            rows[h * n:(h + 1) * n] = np.diag(A[:, h] - 1)
        return int(null_space(rows, rcond=1e-10).shape[1])

    def block_commutants(self) -> list[int]:
        """Commutant dimension of each irreducible block (1 means irreducible)."""
        out = []
        for V in self.isometries:
            out.append(commutant_dim([V.conj().T @ U @ V for U in self.regular]))
        return out

    def points(self) -> list[tuple]:
        """For commutative algebras: the character labelling each 1x1 block."""
        if not self.shape.is_commutative:
            raise ValueError("points only exist for commutative algebras")
        labels = []
        for b in range(self.shape.nblocks):
            vals = np.array([self.unitary(g).blocks[b][0, 0] for g in self.G.elements])
            for x in self.G.elements:
                chi = np.array([self.G.character(x, g) for g in self.G.elements])
                if np.allclose(vals, chi, atol=1e-9):
                    labels.append(x)
                    break
            else:
                raise RuntimeError("block is not a character")
        return labels


def regular_representation(G: FiniteAbelianGroup, sigma: Cocycle) -> list[np.ndarray]:
    """U^g delta_h = s(g, h) delta_{g+h}."""
    n = G.order
    mats = []
    for i, g in enumerate(G.elements):
        U = np.zeros((n, n), dtype=complex)
        for j, h in enumerate(G.elements):
            U[G.index(G.add(g, h)), j] = sigma.table[i, j]
        mats.append(U)
    return mats


def twisted_group_algebra(G: FiniteAbelianGroup, sigma: Cocycle, seed: int = 0
                          ) -> TwistedGroupAlgebra:
    """Decompose the regular s-representation into irreducible blocks.

    A generic central self-adjoint element separates the isotypic components;
    inside each, a generic self-adjoint element of the compressed algebra
    picks a vector whose cyclic subspace is irreducible.
    """
    if sigma.G != G:
        raise ValueError("cocycle lives on another group")
    sigma.verify()
    n = G.order
    regs = regular_representation(G, sigma)
    for i, g in enumerate(G.elements):
        for j, h in enumerate(G.elements):
            k = G.index(G.add(g, h))
            if np.max(np.abs(regs[i] @ regs[j] - sigma.table[i, j] * regs[k])) > 1e-10:
                raise ValueError("regular representation is not projective for this table")
    rng = np.random.default_rng(seed)
    rad = [G.index(g) for g in sigma.radical()]
    # complex coefficients, so that conjugate characters get different eigenvalues
    Z = sum(complex(*rng.standard_normal(2)) * regs[i] for i in rad)
    Z = (Z + Z.conj().T) / 2
    w, Q = np.linalg.eigh(Z)
    groups = _cluster(w)
    isometries = []
    for idx in groups:
        P = Q[:, idx]
        X = sum(rng.standard_normal() * regs[i] + 1j * rng.standard_normal() * regs[i]
                for i in range(n))
        H = P.conj().T @ (X + X.conj().T) @ P
        _, E = np.linalg.eigh(H)
        v = P @ E[:, 0]
        K = np.array([U @ v for U in regs]).T
        Uk, s, _ = np.linalg.svd(K, full_matrices=False)
        r = int(np.sum(s > 1e-8 * s[0]))
        isometries.append(Uk[:, :r])
    dims = [V.shape[1] for V in isometries]
    if sum(d * d for d in dims) != n:
        raise RuntimeError("block reduction failed; try another seed")
    shape = AlgebraShape(dims)
    phi = np.array([np.concatenate([(V.conj().T @ U @ V).ravel() for V in isometries])
                    for U in regs]).T
    R = np.array([U.ravel() for U in regs]).T
    rep = Morphism(shape, AlgebraShape([n]), R @ np.linalg.inv(phi), name="regular")
    rep.check_homomorphism()
    return TwistedGroupAlgebra(G, sigma, shape, regs, rep, isometries, phi)


def _cluster(w: np.ndarray, tol: float = 1e-8) -> list[list[int]]:
    groups = [[0]]
    for i in range(1, len(w)):
        if w[i] - w[groups[-1][-1]] > tol * max(1.0, abs(w[i])):
            groups.append([i])
        else:
            groups[-1].append(i)
    return groups


# ---------------------------------------------------------------------------
# Fejér kernels


@dataclass
class FejerData:
    """Normalized squared Dirichlet kernel of a centered box of Fourier modes."""

    G: FiniteAbelianGroup
    radii: tuple
    weights: np.ndarray
    fourier: np.ndarray

    def support(self) -> list[tuple]:
        return [p for p in self.G.elements
                if all(abs(c) <= K for c, K in zip(self.G.centered(p), self.radii))]

    def defect(self, length: str | Callable | np.ndarray = "torus") -> float:
        """sum_g phi(g) l(g)."""
        table = length if isinstance(length, np.ndarray) else self.G.length_table(length)
        return float(self.weights @ table)

    def closed_form(self) -> np.ndarray | None:
        """prod_j (1 - |p_j| / (K_j + 1)) on the box, or None when modes alias."""
        if any(2 * K + 1 > m for K, m in zip(self.radii, self.G.orders)):
            return None
        out = np.zeros(self.G.order)
        for i, p in enumerate(self.G.elements):
            c = self.G.centered(p)
            if all(abs(x) <= K for x, K in zip(c, self.radii)):
                out[i] = np.prod([1 - abs(x) / (K + 1) for x, K in zip(c, self.radii)])
        return out

    def range_residual(self) -> float:
        """Largest Fourier coefficient outside the box (zero up to rounding)."""
        sup = set(self.support())
        off = [abs(self.fourier[i]) for i, p in enumerate(self.G.elements) if p not in sup]
        return float(max(off, default=0.0))

    def apply(self, a: Element, act: Callable[[tuple, Element], Element]) -> Element:
        """sum_g phi(g) act(g, a)."""
        out = a.shape.zero()
        for g, w in zip(self.G.elements, self.weights):
            if w != 0.0:
                out = out + act(g, a) * float(w)
        return out


def fejer_data(G: FiniteAbelianGroup, radii: Sequence[int] | None = None,
               support: Sequence[Sequence[int]] | None = None) -> FejerData:
    """Fejér kernel whose Fourier transform is supported on the box |p_j| <= K_j.

    Either radii K or an explicit support set (which must be such a box) is given.
    """
    if (radii is None) == (support is None):
        raise ValueError("give exactly one of radii or support")
    if support is not None:
        radii = _box_radii(G, support)
    radii = tuple(int(K) for K in radii)
    if len(radii) != G.rank or any(K < 0 for K in radii):
        raise ValueError("one nonnegative radius per cyclic factor")
    if any(K + 1 > m for K, m in zip(radii, G.orders)):
        raise ValueError("box is wider than the group")
    # the box is a product, so kernel and transform factor over the cyclic factors
    phi, four = np.ones(1), np.ones(1)
    for K, m in zip(radii, G.orders):
        x = np.arange(m)
        D = np.exp(2j * np.pi * np.outer(x, np.arange(K + 1)) / m).sum(axis=1)
        w = np.abs(D) ** 2
        # the Dirichlet sum has exact zeros; do not keep their roundoff
        w[w < 1e-12 * w.max()] = 0.0
        w = w / w.sum()
        chi = np.exp(2j * np.pi * np.outer(x, x) / m)
        phi = np.outer(phi, w).ravel()
        four = np.outer(four, chi @ w).ravel()
    if phi.min() < 0:
        raise RuntimeError("negative kernel weight")
    return FejerData(G, radii, phi, four)


def _box_radii(G: FiniteAbelianGroup, support) -> tuple:
    S = {G.reduce(p) for p in support}
    if G.reduce([0] * G.rank) not in S:
        raise ValueError("support must contain 0")
    if any(G.neg(p) not in S for p in S):
        raise ValueError("support must be symmetric")
    cent = [G.centered(p) for p in S]
    radii = tuple(max(abs(c[j]) for c in cent) for j in range(G.rank))
    box = {G.reduce(q) for q in itertools.product(*(range(-K, K + 1) for K in radii))}
    if box != S:
        raise ValueError("support must be a centered box")
    return radii


def fuzzy_torus_action(n: int, p: int = 1):
    """act(g, a) = W_g a W_g* for the dual action on M_n (identity at g = 0)."""
    _, pairs = fuzzy_torus_unitaries(n, p)
    table = {g: W for g, W in pairs}

    def act(g, a):
        W = table.get(tuple(g))
        return a if W is None else W @ a @ W.adjoint()

    return act


# ---------------------------------------------------------------------------
# weight operators and the commutator bound


def l1(v) -> int:
    return int(np.abs(np.atleast_1d(np.asarray(v, dtype=int))).sum())


def weight(h, N: int, M: int) -> float:
    """1 on |h| <= N, linear ramp (M + N - |h|) / M up to N + M, 0 beyond."""
    r = l1(h)
    if r <= N:
        return 1.0
    if r <= N + M:
        return (M + N - r) / M
    return 0.0


def lattice_window(radius: int, d: int) -> list[tuple]:
    """{h in Z^d : |h|_1 <= radius}, lexicographic."""
    return [h for h in itertools.product(range(-radius, radius + 1), repeat=d) if l1(h) <= radius]


def weight_operator(N: int, M: int, d: int) -> Element:
    """Diagonal weight matrix on the window of radius N + M (ordered as lattice_window)."""
    if N < 1 or M < 1 or d < 1:
        raise ValueError("N, M and d must be at least 1")
    W = lattice_window(N + M, d)
    return AlgebraShape([len(W)]).diag([weight(h, N, M) for h in W])


def fundamental_domain(k: Sequence[int]) -> list[range]:
    return [range((1 - kj) // 2, (kj - 1) // 2 + 1) for kj in k]


def wedge(k: Sequence[int]) -> int:
    """Smallest l1 length of a lattice point outside the fundamental domain."""
    return min((kj - 1) // 2 + 1 for kj in k)


@dataclass
class CommutatorCheck:
    computed: float
    bound: float
    passed: bool

    def row(self) -> list:
        return [self.computed, self.bound, "pass" if self.passed else "fail"]


def commutator_bound_check(N: int, M: int, d: int, m: Sequence[int],
                           k: Sequence[int] | None = None,
                           sigma: Callable | None = None) -> CommutatorCheck:
    """Exact norm of [w, pi(delta_m)] against |m| / M.

    pi(delta_m) sends e_h to sigma(m, h) e_{f(h)}, where f(h) = h + m on Z^d
    (k None) or the representative of h + m in the fundamental domain of
    Z^d / kZ^d. The commutator is supported on the window, its image and its
    preimage, so the finite matrix below is the whole operator.
    """
    m = tuple(int(x) for x in m)
    if len(m) != d:
        raise ValueError("m must have d coordinates")
    if N < 1 or M < 1:
        raise ValueError("N and M must be at least 1")
    if k is not None:
        k = tuple(int(x) for x in k)
        if len(k) != d or any(x < 1 for x in k):
            raise ValueError("k must list d positive orders")
        if not N + M < wedge(k):
            raise ValueError("window does not fit in the fundamental domain")
        dom = fundamental_domain(k)
        if any(x not in r for x, r in zip(m, dom)):
            raise ValueError("m must lie in the fundamental domain")

        def f(h):
            return tuple((x + y - r.start) % kj + r.start for x, y, r, kj in zip(h, m, dom, k))

        def finv(h):
            return tuple((x - y - r.start) % kj + r.start for x, y, r, kj in zip(h, m, dom, k))
    else:
        def f(h):
            return tuple(x + y for x, y in zip(h, m))

        def finv(h):
            return tuple(x - y for x, y in zip(h, m))

    sig = sigma if sigma is not None else (lambda a, b: 1.0)
    W = lattice_window(N + M, d)
    pts = sorted(set(W) | {f(h) for h in W} | {finv(h) for h in W})
    pos = {h: i for i, h in enumerate(pts)}
    C = np.zeros((len(pts), len(pts)), dtype=complex)
    for h in pts:
        fh = f(h)
        if fh in pos:
            C[pos[fh], pos[h]] = sig(m, h) * (weight(fh, N, M) - weight(h, N, M))
    computed = float(np.linalg.norm(C, 2)) if C.size else 0.0
    bound = l1(m) / M
    return CommutatorCheck(computed, bound, computed <= bound + 1e-10)


# ---------------------------------------------------------------------------
# collapse experiment


@dataclass
class CollapseRow:
    j: int
    eps: float
    diam_H: float
    delta: float
    diam_A: float
    diam_K: float
    bound: float
    margin_expectation: float
    margin_fixed: float
    margin_upper: float
    literal_violations: int

    @property
    def passed(self) -> bool:
        return max(self.margin_expectation, self.margin_fixed, self.margin_upper) <= SPOT_TOL

    HEADER = ["j", "eps", "diam_H", "delta", "diam_A", "diam_K", "bound", "margin_expectation",
              "margin_fixed", "margin_upper", "literal_violations", "status"]

    def row(self) -> list:
        return [self.j, self.eps, self.diam_H, self.delta, self.diam_A, self.diam_K, self.bound,
                self.margin_expectation, self.margin_fixed, self.margin_upper,
                self.literal_violations, "pass" if self.passed else "fail"]


def _subgroup(G: FiniteAbelianGroup, generators: Sequence[Sequence[int]]) -> list[tuple]:
    H = {G.reduce([0] * G.rank)}
    frontier = list(H)
    gens = [G.reduce(g) for g in generators]
    while frontier:
        nxt = []
        for h in frontier:
            for g in gens:
                s = G.add(h, g)
                if s not in H:
                    H.add(s)
                    nxt.append(s)
        frontier = nxt
    return sorted(H)


def collapse_experiment(n: int, H_generators: Sequence[Sequence[int]] | None = None,
                        js: Sequence[int] = (1, 2, 4, 8, 16), samples: int = 50, seed: int = 0,
                        p: int = 1) -> list[CollapseRow]:
    """Collapse of the fuzzy torus M_n onto the fixed points of a subgroup H.

    l_0 is the word length on Z_n x Z_n, l'(g) = min over h in H of l_0(g + h)
    vanishes exactly on H, and l_j = l' + l_0 / j. Per j the table gives
    eps_j = sup over g outside H of |l'(g)/l_j(g) - 1|, diam_H = max_H l_j,
    delta_j = max(diam_H, eps_j / (1 - eps_j)), and the perturbation bound
    with zero height and analytic diameters 2 * mean(length).

    Spot checks on random a, with E the average over H and b = E(a):
      ||a - E a|| <= diam_H L_j(a);
      |L_inf(b) - L_j(b)| <= eps_j L_inf(b);
      L_inf(b) <= L_j(a) / (1 - eps_j).
    `literal_violations` counts samples where |L_inf(E a) - L_j(a)| > eps_j L_j(a).
    """
    G = FiniteAbelianGroup([n, n])
    if H_generators is None:
        H_generators = [(1, 0)]
    H = _subgroup(G, H_generators)
    Hset = set(H)
    l0 = G.length_table("word")
    lp = np.array([min(l0[G.index(G.add(g, h))] for h in H) for g in G.elements])
    inH = np.array([g in Hset for g in G.elements])
    if np.any(lp[inH] != 0) or np.any(lp[~inH] <= 0):
        raise ValueError("quotient length must vanish exactly on H")
    _, pairs = fuzzy_torus_unitaries(n, p)
    act = fuzzy_torus_action(n, p)
    shape = AlgebraShape([n])

    def expect(a):
        out = shape.zero()
        for h in H:
            out = out + act(h, a)
        return out / len(H)

    def lip(a, lengths, skip_H):
        best = 0.0
        for g, W in pairs:
            i = G.index(g)
            if skip_H and inH[i]:
                continue
            best = max(best, operator_norm(W @ a @ W.adjoint() - a) / lengths[i])
        return best

    diam_K = 2.0 * float(lp.mean())
    rows = []
    for j in js:
        lj = lp + l0 / j
        eps = float(np.max(np.abs(lp[~inH] / lj[~inH] - 1))) if np.any(~inH) else 0.0
        dH = float(max(lj[G.index(h)] for h in H))
        delta = max(dH, eps / (1 - eps))
        diam_A = 2.0 * float(lj.mean())
        bound = perturbation_bound(delta, diam_A, diam_K, 0.0)
        rng = np.random.default_rng(np.random.SeedSequence([seed, j]))
        m1 = m2 = m3 = -np.inf
        literal = 0
        for _ in range(samples):
            a = shape.random_hermitian(rng)
            b = expect(a)
            La = lip(a, lj, False)
            Lb_inf = lip(b, lp, True)
            Lb_j = lip(b, lj, False)
            m1 = max(m1, operator_norm(a - b) - dH * La)
            m2 = max(m2, abs(Lb_inf - Lb_j) - eps * Lb_inf)
            m3 = max(m3, Lb_inf - La / (1 - eps))
            if abs(Lb_inf - La) > eps * La + SPOT_TOL:
                literal += 1
        rows.append(CollapseRow(int(j), eps, dH, delta, diam_A, diam_K, bound, float(m1),
                                float(m2), float(m3), literal))
    return rows


# ---------------------------------------------------------------------------
# UHF filtration


def _partial_trace_projection(k: int, n: int):
    """E_n on M_{2^k}: normalized partial trace over the last k - n factors, tensored back."""
    a_dim, b_dim = 2 ** n, 2 ** (k - n)

    def project(x: Element) -> Element:
        X = x.blocks[0].reshape(a_dim, b_dim, a_dim, b_dim)
        R = np.einsum("ibjb->ij", X) / b_dim
        return Element(x.shape, [np.kron(R, np.eye(b_dim))])

    return project


def uhf_filtration(k: int) -> tuple[list[Subalgebra], list[float]]:
    """M_1 ⊂ M_2 ⊂ ... ⊂ M_{2^k} inside M_{2^k}, with beta(n) = 2^-n."""
    if not 0 <= k <= 8:
        raise ValueError("k must be between 0 and 8")
    shape = AlgebraShape([2 ** k])
    stages = [Subalgebra(shape, project=_partial_trace_projection(k, n), dim=4 ** n,
                         name=f"M_{2 ** n}") for n in range(k + 1)]
    beta = [2.0 ** -n for n in range(k + 1)]
    return stages, beta


# ---------------------------------------------------------------------------
# Berezin symbols


def spin_matrices(j: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Jx, Jy, Jz in the basis |j, m>, m = j, j-1, ..., -j."""
    dim = int(round(2 * j)) + 1
    if dim < 2 or abs(2 * j + 1 - dim) > 1e-12:
        raise ValueError("j must be a positive half-integer")
    m = j - np.arange(dim)
    Jz = np.diag(m).astype(complex)
    # <m+1| J+ |m> = sqrt(j(j+1) - m(m+1))
    c = np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1))
    Jp = np.diag(c, 1).astype(complex)
    Jx = (Jp + Jp.conj().T) / 2
    Jy = (Jp - Jp.conj().T) / 2j
    return Jx, Jy, Jz


class Berezin:
    """Covariant symbols and their adjoint quantization on a product sphere grid.

    Nodes: Gauss-Legendre in cos(theta) times equally spaced phi; the weights
    are the normalized products and integrate every spherical polynomial of
    degree < min(2 n_theta, n_phi) exactly.
    """

    def __init__(self, j: float, n_theta: int = 25, n_phi: int = 48):
        self.j = j
        self.J = spin_matrices(j)
        self.dim = self.J[0].shape[0]
        if min(2 * n_theta, n_phi) <= 2 * self.dim:
            raise ValueError("grid too coarse for this spin")
        x, w = np.polynomial.legendre.leggauss(n_theta)
        theta = np.arccos(x)
        phi = 2 * np.pi * np.arange(n_phi) / n_phi
        self.theta = np.repeat(theta, n_phi)
        self.phi = np.tile(phi, n_theta)
        self.weights = np.repeat(w / 2, n_phi) / n_phi
        if abs(self.weights.sum() - 1) > 1e-10:
            raise ValueError("quadrature weights do not sum to 1")
        self.vectors = np.array([self.coherent(t, p) for t, p in zip(self.theta, self.phi)])

    def coherent(self, theta: float, phi: float) -> np.ndarray:
        """exp(-i phi Jz) exp(-i theta Jy) |j, j>."""
        Jx, Jy, Jz = self.J
        e = np.zeros(self.dim, dtype=complex)
        e[0] = 1.0
        return expm(-1j * phi * Jz) @ (expm(-1j * theta * Jy) @ e)

    def symbol(self, T: np.ndarray) -> np.ndarray:
        """sigma_T(g) = tr(T P_g) on every grid node."""
        V = self.vectors
        return np.real(np.einsum("gi,ij,gj->g", V.conj(), T, V)) if _is_herm(T) else \
            np.einsum("gi,ij,gj->g", V.conj(), T, V)

    def symbol_at(self, T: np.ndarray, theta: float, phi: float) -> complex:
        v = self.coherent(theta, phi)
        return complex(v.conj() @ T @ v)

    def quantize(self, f: np.ndarray) -> np.ndarray:
        """dim * sum_g w_g f(g) P_g."""
        V = self.vectors
        return self.dim * np.einsum("g,gi,gj->ij", self.weights * f, V, V.conj())

    def rotation(self, axis: np.ndarray, angle: float) -> np.ndarray:
        axis = np.asarray(axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        G = sum(c * J for c, J in zip(axis, self.J))
        return expm(-1j * angle * G)

    def point_of(self, v: np.ndarray) -> tuple[float, float]:
        """(theta, phi) of a coherent vector, read off from <J> = j n."""
        n = np.array([np.real(v.conj() @ J @ v) for J in self.J]) / self.j
        theta = float(np.arccos(np.clip(n[2], -1, 1)))
        return theta, float(np.arctan2(n[1], n[0]))

    def checks(self, samples: int = 5, seed: int = 0) -> dict:
        """Unitality, positivity and sampled equivariance residuals."""
        rng = np.random.default_rng(seed)
        one = np.eye(self.dim)
        out = {"symbol_one": float(np.max(np.abs(self.symbol(one) - 1))),
               "quantize_one": float(np.linalg.norm(self.quantize(np.ones(self.theta.size)) - one, 2))}
        pos = np.inf
        qpos = np.inf
        equi = 0.0
        for _ in range(samples):
            X = rng.standard_normal((self.dim, self.dim)) + 1j * rng.standard_normal((self.dim, self.dim))
            T = X @ X.conj().T
            pos = min(pos, float(self.symbol(T).min()))
            f = np.abs(rng.standard_normal(self.theta.size))
            qpos = min(qpos, float(np.linalg.eigvalsh(self.quantize(f)).min()))
            R = self.rotation(rng.standard_normal(3), rng.uniform(0, 2 * np.pi))
            S = self.symbol(R @ T @ R.conj().T)
            for g in rng.choice(self.theta.size, size=4, replace=False):
                t, p = self.point_of(R.conj().T @ self.vectors[g])
                equi = max(equi, abs(S[g] - self.symbol_at(T, t, p)))
        out.update(symbol_min=pos, quantize_min=qpos, equivariance=float(equi))
        return out


def _is_herm(T: np.ndarray) -> bool:
    return np.allclose(T, T.conj().T, atol=1e-12)


def berezin(j: float, n_theta: int = 25, n_phi: int = 48) -> Berezin:
    return Berezin(j, n_theta, n_phi)


# ---------------------------------------------------------------------------
# fuzzy torus convergence


CONVERGENCE_HEADER = ["n", "p", "K", "defect", "commutator", "commutator_bound", "drift",
                      "diam_upper", "bound", "between_next", "oracle_w1", "burn_in"]


def kernel_radius(n: int) -> int:
    return max(1, int(round(n ** (1 / 3))))


def _cocycle_drift(n: int, p: int, theta: float, K: int) -> float:
    """max over |b|, |c| <= K of |exp(2 pi i (p/n - theta) b c) - 1|."""
    r = np.arange(-K, K + 1)
    bc = np.outer(r, r)
    return float(np.max(np.abs(np.exp(2j * np.pi * (p / n - theta) * bc) - 1)))


def torus_w1_oracle(n: int, fejer: FejerData) -> float:
    """Transport distance from the point mass at 0 to the Fejér weights on Z_n x Z_n."""
    G = fejer.G
    D = np.array([[G.torus_length(G.sub(g, h)) for h in G.elements] for g in G.elements])
    p0 = np.zeros(G.order)
    p0[0] = 1.0
    return transport_lp(D, p0, fejer.weights)


def fuzzy_torus_convergence_experiment(ns: Sequence[int], theta: float = 0.0,
                                       radius: Callable[[int], int] = kernel_radius,
                                       oracle_max: int = 8) -> list[list]:
    """Per n: Fejér defect, window commutator, cocycle drift and assembled bound.

    rho_n = exp(2 pi i p_n / n) with p_n = round(theta n) approximates
    exp(2 pi i theta). The kernel radius K_n sets the Fourier window. The
    bound column is defect_n + perturbation_bound(drift_n, diam_n, diam_T, 0),
    with diam_n = 2 mean(torus length on Z_n^2) and diam_T = 16 / pi its
    continuum value; drift_n compares the two cocycles on the window.
    between_next adds consecutive bounds (a triangle inequality through the
    limit). oracle_w1 is the transport distance from the point mass to the
    kernel, which equals the defect; it is filled for n <= oracle_max.
    The last column is the first index from which `bound` is nonincreasing.
    """
    ns = list(ns)
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n must increase")
    diam_T = 16.0 / np.pi
    rows = []
    for n in ns:
        G = FiniteAbelianGroup([n, n])
        p = int(round(theta * n)) % n
        K = min(radius(n), n - 1)
        fej = fejer_data(G, [K, K])
        defect = fej.defect("torus")
        if 2 * K < wedge((n, n)):
            rho = root_of_unity(n, p)
            cc = commutator_bound_check(K, K, 2, (1, 1), (n, n),
                                        sigma=lambda a, b, r=rho: r ** (a[1] * b[0]))
            comm, cbound = cc.computed, cc.bound
        else:
            comm = cbound = None
        drift = _cocycle_drift(n, p, theta, K)
        diam_n = 2.0 * float(G.length_table("torus").mean())
        bound = defect + perturbation_bound(drift, diam_n, diam_T, 0.0)
        oracle = torus_w1_oracle(n, fej) if (p == 0 and n <= oracle_max) else None
        rows.append([n, p, K, defect, comm, cbound, drift, diam_n, bound, None, oracle])
    for i in range(len(rows) - 1):
        rows[i][9] = rows[i][8] + rows[i + 1][8]
    b = [r[8] for r in rows]
    burn = len(b) - 1 if b else 0
    while burn > 0 and b[burn - 1] >= b[burn]:
        burn -= 1
    for r in rows:
        r.append(burn)
    return rows
