"""Cutting-plane optimisation under max-of-norm constraints.

Programs have the canonical form

    maximise c.z  subject to  ||M0_j + sum_i z_i M_ij|| <= t_j + w_j.z,

with spectral (operator norm of a matrix) or Euclidean (vector norm) constraints.
The outer LP is solved by a dense revised simplex run on its dual, so that every
new cut is just a new dual column and the previous basis stays feasible.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np
import scipy.linalg as sla

DEFAULT_TOL = 1e-7
MAX_ITER = 20000


class SolverError(RuntimeError):
    pass


class InfeasibleError(SolverError):
    pass


class UnboundedError(SolverError):
    pass


class IterationLimitError(SolverError):
    pass


# ---------------------------------------------------------------------------
# dense LP


class DualSimplexLP:
    """max c.z s.t. G z <= h, solved through min h.y, G^T y = c, y >= 0.

    Entering rows are priced by most negative normalised reduced cost; after
    `bland_after` consecutive degenerate pivots the rule switches to Bland's
    (lowest index enters, lowest index leaves on ties) until progress resumes,
    so runs are deterministic and cannot cycle.
    """

    def __init__(self, c: np.ndarray, eps: float = 1e-11, bland_after: int = 20):
        self.bland_after = bland_after
        self.c = np.asarray(c, dtype=float)
        self.m = self.c.size
        self.G = np.zeros((0, self.m))
        self.h = np.zeros(0)
        self.basis: list[int] | None = None
        self.eps = eps
        self.pivots = 0
        self.x = None
        self.y = None

    @property
    def nrows(self) -> int:
        return self.h.size

    def add_rows(self, G: np.ndarray, h: np.ndarray) -> list[int]:
        G = np.atleast_2d(np.asarray(G, dtype=float))
        h = np.atleast_1d(np.asarray(h, dtype=float))
        start = self.nrows
        self.G = np.vstack([self.G, G])
        self.h = np.concatenate([self.h, h])
        return list(range(start, self.nrows))

    def set_rhs(self, i: int, value: float) -> None:
        self.h[i] = value

    def set_basis(self, rows: Sequence[int]) -> None:
        self.basis = list(rows)

    def solve(self, max_pivots: int = 100000) -> np.ndarray:
        if self.basis is None or len(self.basis) != self.m:
            raise SolverError("LP needs an initial dual-feasible basis")
        B = list(self.basis)
        G, h, c = self.G, self.h, self.c
        degenerate = 0
        for _ in range(max_pivots):
            GB = G[B]
            lu = sla.lu_factor(GB, check_finite=False)
            x = sla.lu_solve(lu, h[B])
            y = sla.lu_solve(lu, c, trans=1)
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
                raise SolverError("simplex basis became singular")
            r = h - G @ x
            scale = 1.0 + np.abs(h) + np.abs(G) @ np.abs(x)
            neg = np.flatnonzero(r < -self.eps * scale)
            inB = np.zeros(h.size, dtype=bool)
            inB[B] = True
            neg = neg[~inB[neg]]
            if neg.size == 0:
                self.basis = B
                self.x, self.y = x, np.maximum(y, 0.0)
                return x
            if degenerate >= self.bland_after:
                j = int(neg[0])
            else:
                j = int(neg[np.argmin(r[neg] / np.linalg.norm(G[neg], axis=1))])
            d = sla.lu_solve(lu, G[j], trans=1)
            # relative pivot tolerance keeps the next basis well conditioned
            pos = d > 1e-9 * max(1.0, float(np.abs(d).max()))
            if not np.any(pos):
                self.basis = B
                raise InfeasibleError("outer LP is infeasible")
            ratios = np.full(self.m, np.inf)
            ratios[pos] = np.maximum(y[pos], 0.0) / d[pos]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + 1e-14 * max(1.0, abs(best)))
            if degenerate >= self.bland_after:
                leave = min(ties, key=lambda k: B[k])
            else:
                leave = int(ties[np.argmax(d[ties])])
            degenerate = degenerate + 1 if best <= 1e-14 else 0
            B[leave] = j
            self.pivots += 1
        raise IterationLimitError("simplex pivot limit reached")


# ---------------------------------------------------------------------------
# programs


@dataclass
class NormConstraint:
    """||offset + sum_i z_i coeffs[i]|| <= bound + bound_coeffs.z

    kind "lmax" bounds the largest eigenvalue of a Hermitian-valued map instead
    of its norm.
    """

    kind: str
    offset: np.ndarray
    coeffs: np.ndarray
    bound: float = 1.0
    bound_coeffs: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("spectral", "euclidean", "lmax"):
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        self.offset = np.asarray(self.offset, dtype=complex)
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        want = 1 if self.kind == "euclidean" else 2
        if self.offset.ndim != want or self.coeffs.shape[1:] != self.offset.shape:
            raise ValueError("constraint map dimensions are inconsistent")

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    def image(self, z: np.ndarray) -> np.ndarray:
        return self.offset + np.tensordot(z, self.coeffs, axes=1)

    def rhs(self, z: np.ndarray) -> float:
        extra = 0.0 if self.bound_coeffs is None else float(self.bound_coeffs @ z)
        return self.bound + extra

    def norm(self, z: np.ndarray) -> float:
        A = self.image(z)
        if self.kind == "euclidean":
            return float(np.linalg.norm(A))
        if self.kind == "lmax":
            return float(np.linalg.eigvalsh((A + A.conj().T) / 2)[-1])
        return float(np.linalg.norm(A, 2)) if A.size else 0.0

    def excess(self, z: np.ndarray) -> float:
        return self.norm(z) - self.rhs(z)

    def cut(self, z: np.ndarray) -> tuple[np.ndarray, float]:
        """Supporting inequality g.z <= r valid on the whole feasible set."""
        A = self.image(z)
        if self.kind == "euclidean":
            u = A / np.linalg.norm(A)
            g = np.real(np.tensordot(self.coeffs, u.conj(), axes=([1], [0])))
            r0 = float(np.real(np.vdot(u, self.offset)))
        elif self.kind == "lmax":
            _, V = np.linalg.eigh((A + A.conj().T) / 2)
            u = V[:, -1]
            g = np.real(np.einsum("p,ipq,q->i", u.conj(), self.coeffs, u))
            r0 = float(np.real(u.conj() @ self.offset @ u))
        else:
            U, s, Vh = np.linalg.svd(A)
            u, v = U[:, 0], Vh[0].conj()
            g = np.real(np.einsum("p,ipq,q->i", u.conj(), self.coeffs, v))
            r0 = float(np.real(u.conj() @ self.offset @ v))
        if self.bound_coeffs is not None:
            g = g - self.bound_coeffs
        return g, self.bound - r0

    def restrict(self, z0: np.ndarray, N: np.ndarray) -> "NormConstraint":
        """The same constraint written in coordinates w with z = z0 + N w."""
        off = self.image(z0)
        co = np.tensordot(N.T, self.coeffs, axes=1)
        bound = self.rhs(z0)
        bc = None if self.bound_coeffs is None else self.bound_coeffs @ N
        return NormConstraint(self.kind, off, co, bound, bc, self.label)


@dataclass
class NormProgram:
    dim: int
    objective: np.ndarray
    constraints: list[NormConstraint]
    equalities: tuple[np.ndarray, np.ndarray] | None = None
    box: float | None = None
    radius_cap: float = 1e8

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        if self.objective.shape != (self.dim,):
            raise ValueError("objective has the wrong length")
        for con in self.constraints:
            if con.dim != self.dim:
                raise ValueError("constraint dimension differs from the program")
        if not self.constraints and self.box is None:
            raise ValueError("program needs a constraint or a box")


@dataclass
class SolveReport:
    value: float
    x: np.ndarray
    lower: float
    upper: float
    gap: float
    cuts: int
    iterations: int
    pivots: int = 0
    status: str = "optimal"
    max_violation: float = 0.0
    label: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["x"] = [float(v) for v in np.asarray(self.x).ravel()]
        for k in ("value", "lower", "upper", "gap", "max_violation"):
            d[k] = float(d[k])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _eliminate(E: np.ndarray, f: np.ndarray, n: int, tol: float = 1e-9):
    E = np.atleast_2d(np.asarray(E, dtype=float))
    f = np.asarray(f, dtype=float)
    z0, *_ = np.linalg.lstsq(E, f, rcond=None)
    if np.linalg.norm(E @ z0 - f) > tol * max(1.0, np.linalg.norm(f)):
        raise InfeasibleError("linear equalities are inconsistent")
    N = sla.null_space(E, rcond=1e-10) if E.size else np.eye(n)
    return z0, N


def _kelley(c, constraints, lo, hi, tol, max_iter, radius_cap, label=""):
    """Core loop. lo/hi per variable: float for a hard side, None for a soft side."""
    m = c.size
    lp = DualSimplexLP(c)
    R = 1.0
    soft_rows = []
    rows_plus, rows_minus = [], []
    for i in range(m):
        e = np.zeros(m)
        e[i] = 1.0
        hv = hi[i] if hi[i] is not None else R
        lv = -lo[i] if lo[i] is not None else R
        rp = lp.add_rows(e, hv)[0]
        rm = lp.add_rows(-e, lv)[0]
        rows_plus.append(rp)
        rows_minus.append(rm)
        if hi[i] is None:
            soft_rows.append(rp)
        if lo[i] is None:
            soft_rows.append(rm)
    lp.set_basis([rows_plus[i] if c[i] >= 0 else rows_minus[i] for i in range(m)])
    cuts = 0
    for it in range(1, max_iter + 1):
        try:
            z = lp.solve()
        except InfeasibleError:
            # cuts may exclude everything inside the current soft box
            if not soft_rows or R > radius_cap:
                raise
            R *= 2.0
            for k in soft_rows:
                lp.set_rhs(k, R)
            continue
        added = 0
        worst = 0.0
        for con in constraints:
            ex = con.excess(z)
            worst = max(worst, ex)
            if ex > tol:
                g, r = con.cut(z)
                nrm = np.linalg.norm(g)
                if nrm < 1e-14:
                    if r < -tol:
                        raise InfeasibleError("constant constraint violated")
                    continue
                lp.add_rows(g / nrm, r / nrm)
                added += 1
        cuts += added
        if added:
            continue
        # constraints satisfied; enlarge the box if a soft side binds
        binding = [k for k in soft_rows if k in lp.basis and lp.y[lp.basis.index(k)] > 1e-12]
        if binding:
            R *= 2.0
            if R > radius_cap:
                raise UnboundedError("feasible region looks unbounded (gauge failure?)")
            for k in soft_rows:
                lp.set_rhs(k, R)
            continue
        return z, lp, cuts, it, worst
    raise IterationLimitError(f"cutting-plane iteration cap {max_iter} exceeded")


def _segment_lower(c, constraints, z, z0):
    """Largest feasible point on the segment from an interior z0 towards z."""
    def feasible(t):
        p = z0 + t * (z - z0)
        return all(con.excess(p) <= 0 for con in constraints)

    if feasible(1.0):
        return float(c @ z), z
    lo_t, hi_t = 0.0, 1.0
    for _ in range(60):
        mid = (lo_t + hi_t) / 2
        if feasible(mid):
            lo_t = mid
        else:
            hi_t = mid
    p = z0 + lo_t * (z - z0)
    return float(c @ p), p


def maximize_linear(p: NormProgram, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER,
                    interior: np.ndarray | None = None, label: str = "") -> SolveReport:
    """Kelley cutting planes for max c.z over the norm-constrained region.

    The reported value is the final outer-LP value (an upper bound). The lower
    bound comes from pulling the LP solution back into the feasible set along a
    segment from an interior point; by default the origin, which is interior for
    homogeneous programs.
    """
    c = p.objective
    cons = list(p.constraints)
    z_shift = np.zeros(p.dim)
    N = None
    if p.equalities is not None:
        z_shift, N = _eliminate(*p.equalities, n=p.dim)
        cons = [con.restrict(z_shift, N) for con in cons]
        c_w = N.T @ c
    else:
        c_w = c
    n = c_w.size
    if n == 0:
        val = float(c @ z_shift)
        return SolveReport(val, z_shift, val, val, 0.0, 0, 0, label=label)
    hard = p.box
    lo = [(-hard if hard is not None else None)] * n
    hi = [(hard if hard is not None else None)] * n
    w, lp, cuts, it, worst = _kelley(c_w, cons, lo, hi, tol, max_iter, p.radius_cap, label)
    upper = float(c_w @ w)
    if interior is None:
        w0 = np.zeros(n)
    else:
        w0 = interior if N is None else N.T @ (interior - z_shift)
    if all(con.excess(w0) < 0 for con in cons):
        lower, _ = _segment_lower(c_w, cons, w, w0)
    else:
        lower = -np.inf
    z = w if N is None else z_shift + N @ w
    off = float(c @ z_shift) if N is not None else 0.0
    upper += off
    lower += off
    return SolveReport(value=upper, x=z, lower=lower, upper=upper,
                       gap=max(0.0, upper - lower), cuts=cuts, iterations=it,
                       pivots=lp.pivots, max_violation=max(worst, 0.0), label=label)


def minimize_max_norm(objective: Sequence[NormConstraint], dim: int,
                      constraints: Sequence[NormConstraint] = (),
                      equalities: tuple[np.ndarray, np.ndarray] | None = None,
                      tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER,
                      radius_cap: float = 1e8, label: str = "") -> SolveReport:
    """min_x max_j ||A_j(x)|| subject to extra norm bounds and linear equalities.

    Epigraph form: maximise -t with ||A_j(x)|| <= t. The bound fields of the
    objective maps are ignored. Reported value is max_j ||A_j(x)|| at the final
    iterate (an upper bound when the iterate satisfies the side constraints);
    the LP value is a certified lower bound.
    """
    if not objective:
        raise ValueError("need at least one objective map")
    z_shift = np.zeros(dim)
    N = np.eye(dim)
    if equalities is not None:
        z_shift, N = _eliminate(*equalities, n=dim)
    n = N.shape[1]

    def lift(con: NormConstraint, epi: bool) -> NormConstraint:
        r = con.restrict(z_shift, N)
        co = np.concatenate([r.coeffs, np.zeros((1,) + r.offset.shape)], axis=0)
        if epi:
            bc = np.zeros(n + 1)
            bc[n] = 1.0
            return NormConstraint(con.kind, r.offset, co, 0.0, bc, con.label)
        bc = None if r.bound_coeffs is None else np.concatenate([r.bound_coeffs, [0.0]])
        return NormConstraint(con.kind, r.offset, co, r.bound, bc, con.label)

    cons = [lift(o, True) for o in objective] + [lift(k, False) for k in constraints]
    c = np.zeros(n + 1)
    c[n] = -1.0
    lo = [None] * n + [0.0]
    hi = [None] * (n + 1)
    wt, lp, cuts, it, worst = _kelley(c, cons, lo, hi, tol, max_iter, radius_cap, label)
    w = wt[:n]
    x = z_shift + N @ w
    lower = float(wt[n])
    upper = max(o.norm(x) for o in objective)
    side = max([k.excess(x) for k in constraints], default=0.0)
    return SolveReport(value=upper, x=x, lower=lower, upper=upper, gap=max(0.0, upper - lower),
                       cuts=cuts, iterations=it, pivots=lp.pivots,
                       max_violation=max(side, 0.0), label=label)


# ---------------------------------------------------------------------------
# transport oracle


def check_metric(dist: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    d = np.asarray(dist, dtype=float)
    k = d.shape[0]
    if d.shape != (k, k):
        raise ValueError("distance matrix must be square")
    if np.any(d < -tol) or np.any(np.abs(d - d.T) > tol) or np.any(np.abs(np.diag(d)) > tol):
        raise ValueError("metric axioms violated (sign, symmetry or diagonal)")
    if np.any(d[:, :, None] > d[:, None, :] + d.T[None, :, :] + tol):
        raise ValueError("metric axioms violated (triangle inequality)")
    return d


def transport_lp(dist: np.ndarray, p: Sequence[float], q: Sequence[float]) -> float:
    """Wasserstein-1 cost by the coupling LP, solved with HiGHS."""
    from scipy.optimize import linprog

    d = check_metric(dist)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    k = d.shape[0]
    if p.shape != (k,) or q.shape != (k,):
        raise ValueError("marginals have the wrong length")
    if abs(p.sum() - 1) > 1e-10 or abs(q.sum() - 1) > 1e-10 or p.min() < 0 or q.min() < 0:
        raise ValueError("marginals must be probability vectors")
    A = np.zeros((2 * k, k * k))
    for i in range(k):
        A[i, i * k:(i + 1) * k] = 1.0
        A[k + i, i::k] = 1.0
    res = linprog(d.ravel(), A_eq=A, b_eq=np.concatenate([p, q]), bounds=(0, None),
                  method="highs")
    if res.status != 0:
        raise SolverError(f"transport LP failed: {res.message}")
    return float(res.fun)
