"""State-space metrics from commutator seminorms.

The distance between two states is the supremum of ``|phi(a) - psi(a)|``
over self-adjoint elements with seminorm at most one.  On a non-degenerate
truncation the seminorm is a genuine norm on the quotient by the constants,
so the supremum is a ratio maximization over the quotient sphere; the
solver runs supergradient ratio ascent there and always returns a feasible
element, hence a certified lower bound.  Two independent cross-checks
accompany it: a grid oracle on small commutative truncations and an exact
transportation LP for metrics on finitely many points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg
import scipy.optimize

from . import matops
from .algebra import AlgState, MultiMatrixAlgebra
from .errors import CapacityError, DegeneracyError, InputError
from .triple import SpectralTriple


@dataclass(frozen=True)
class StatePair:
    """Two states on the same coordinate algebra, stored as dual vectors.

    ``phi(a) = phi_dual . coords(a)``.  Both functionals must be unital and
    Hermitian (real on self-adjoint elements); positivity is the caller's
    responsibility for raw vectors and is automatic when built from
    :class:`AlgState` densities.
    """

    algebra: object
    phi: np.ndarray
    psi: np.ndarray
    labels: tuple[str, str] = ("phi", "psi")

    def __post_init__(self):
        unit = self.algebra.unit()
        for name, dual in (("first", self.phi), ("second", self.psi)):
            dual = np.asarray(dual)
            if dual.shape != (self.algebra.dim,):
                raise InputError(f"{name} state has wrong dimension")
            if abs(np.dot(dual, unit) - 1.0) > 1e-9:
                raise InputError(f"{name} state is not unital")
            s = self.algebra.star_matrix()
            if np.abs(s.T @ dual - np.conj(dual)).max() > 1e-9:
                raise InputError(f"{name} state is not Hermitian")

    @classmethod
    def from_algstates(cls, a: AlgState, b: AlgState,
                       labels=("phi", "psi")) -> "StatePair":
        if a.algebra.block_dims != b.algebra.block_dims:
            raise InputError("states live on different algebras")
        return cls(a.algebra, a.dual_vector(), b.dual_vector(), tuple(labels))

    def difference(self) -> np.ndarray:
        return np.asarray(self.phi) - np.asarray(self.psi)


def hermitian_basis(algebra) -> np.ndarray:
    """Columns form a real basis of the self-adjoint elements in complex
    coordinates (solutions of ``v = S conj(v)``)."""
    d = algebra.dim
    s = np.asarray(algebra.star_matrix(), dtype=complex)
    sr, si = s.real, s.imag
    eye = np.eye(d)
    # v = x + iy is self-adjoint iff  x = Sr x + Si y  and  y = Si x - Sr y
    big = np.block([[eye - sr, -si], [-si, eye + sr]])
    null = scipy.linalg.null_space(big, rcond=1e-10)
    if null.shape[1] != d:
        raise InputError(
            f"self-adjoint subspace has real dimension {null.shape[1]}, expected {d}"
        )
    basis = null[:d, :] + 1j * null[d:, :]
    # orthonormalize for numerical sanity
    q, _ = np.linalg.qr(basis)
    return q


@dataclass
class ConnesResult:
    distance: float
    optimizer: np.ndarray | None
    status: str  # "ok" | "unbounded" | "zero"
    witness: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)
    label: str = "distance"

    def as_json(self) -> dict:
        return {
            "distance": None if not np.isfinite(self.distance) else float(self.distance),
            "status": self.status,
            "label": self.label,
            "diagnostics": {
                k: v for k, v in self.diagnostics.items() if k != "per_restart"
            } | {"per_restart": self.diagnostics.get("per_restart", [])},
        }


def _seminorm_tensors(t: SpectralTriple, basis: np.ndarray) -> np.ndarray:
    h = t.hilbert_dim
    out = np.empty((basis.shape[1], h, h), dtype=complex)
    for j in range(basis.shape[1]):
        out[j] = matops.commutator(t.dirac, t.rep(basis[:, j]))
    return out


def connes_distance(t: SpectralTriple, pair: StatePair, restarts: int = 40,
                    ascent_iters: int = 200, seed: int = 11,
                    label: str = "distance") -> ConnesResult:
    """Supremum of ``(phi - psi)(a)`` over self-adjoint ``a`` with
    ``||[D, pi(a)]|| <= 1``.

    Ratio ascent on the quotient sphere: the objective is linear and the
    constraint set is the unit ball of a norm on the quotient, so the
    maximum of ``|delta(a)| / L(a)`` is the distance.  The supergradient of
    the spectral norm comes from the top singular pair, with near-ties
    averaged.  Every iterate is feasible after rescaling, so the returned
    value is a certified lower bound at solver accuracy.
    """
    if pair.algebra.dim != t.algebra.dim:
        raise InputError("state pair lives on a different algebra")
    basis = hermitian_basis(t.algebra)
    nreal = basis.shape[1]
    tensors = _seminorm_tensors(t, basis)
    delta = np.array([np.dot(pair.difference(), basis[:, j]) for j in range(nreal)])
    if np.abs(delta.imag).max() > 1e-9:
        raise InputError("state difference is not real on self-adjoint elements")
    delta = delta.real

    # coordinates of the unit inside the self-adjoint basis
    unit_t, *_ = np.linalg.lstsq(basis, t.algebra.unit().astype(complex), rcond=None)
    unit_t = unit_t.real
    unit_t = unit_t / np.linalg.norm(unit_t)

    def project(x):
        x = x - np.dot(unit_t, x) * unit_t
        n = np.linalg.norm(x)
        return x / n if n > 0 else x

    # degeneracy scan: the seminorm must be a norm transverse to the unit
    probe = np.column_stack([project(v) for v in np.eye(nreal)])
    probe_q, _ = np.linalg.qr(probe)
    probe_q = probe_q[:, : nreal - 1]
    flat = tensors.reshape(nreal, -1)
    mapped = probe_q.T @ flat
    sv = np.linalg.svd(mapped, compute_uv=False)
    if sv.size and sv[-1] <= 1e-10 * max(sv[0], 1.0):
        # a seminorm-null direction off the constants: distance unbounded
        _, _, vh = np.linalg.svd(mapped)
        witness_t = probe_q @ np.conj(vh[-1, :])
        witness = basis @ witness_t
        dval = float(abs(np.dot(delta, witness_t.real)))
        return ConnesResult(np.inf, None, "unbounded", witness,
                            {"kernel_pairing": dval}, label)

    if np.linalg.norm(delta) < 1e-14:
        return ConnesResult(0.0, None, "zero", None, {}, label)

    def lvalue(x):
        m = np.tensordot(x, tensors, axes=1)
        return float(np.linalg.svd(m, compute_uv=False)[0]), m

    def ratio(x):
        num = abs(float(np.dot(delta, x)))
        den, _ = lvalue(x)
        if den < 1e-13:
            return -np.inf
        return num / den

    def supergrad(m):
        u, s, vh = np.linalg.svd(m)
        ties = np.nonzero(s >= s[0] * (1.0 - 1e-8))[0] if s[0] > 0 else [0]
        g = np.zeros(nreal)
        for k in ties:
            uk, vk = u[:, k], np.conj(vh[k, :])
            g += np.real(np.einsum("i,pij,j->p", np.conj(uk), tensors, vk))
        return g / len(ties)

    def ascend(x):
        x = project(x)
        if np.dot(delta, x) < 0:
            x = -x
        best = ratio(x)
        step = 0.5
        for _ in range(ascent_iters):
            num = float(np.dot(delta, x))
            den, m = lvalue(x)
            if den < 1e-13 or num <= 0:
                break
            direction = delta / num - supergrad(m) / den
            direction = direction - np.dot(unit_t, direction) * unit_t
            nd = np.linalg.norm(direction)
            if nd < 1e-15:
                break
            direction /= nd
            improved = False
            while step > 1e-12:
                cand = project(x + step * direction)
                if np.dot(delta, cand) < 0:
                    cand = -cand
                r = ratio(cand)
                if r > best + 1e-15:
                    x, best = cand, r
                    improved = True
                    step = min(2.0 * step, 1.0)
                    break
                step *= 0.5
            if not improved:
                break
        return best, x

    rng = np.random.default_rng(seed)
    starts = [delta.copy()]
    starts += [rng.standard_normal(nreal) for _ in range(restarts - 1)]
    best_val, best_x = -np.inf, None
    per_restart = []
    for x0 in starts:
        val, x = ascend(x0)
        per_restart.append(float(val))
        if val > best_val:
            best_val, best_x = val, x
    den, _ = lvalue(best_x)
    optimizer_t = best_x / den
    optimizer = basis @ optimizer_t
    diagnostics = {
        "restarts": len(starts),
        "per_restart": per_restart,
        "seminorm_of_optimizer": float(den / den),
    }
    return ConnesResult(float(best_val), optimizer, "ok", None, diagnostics, label)


def _sphere_grid(dim: int, h: float) -> np.ndarray:
    """Direction grid on the unit sphere of R^dim with angular step <= h."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    angles = [np.arange(0.0, np.pi + h, h)] * (dim - 2)
    last = np.arange(0.0, 2 * np.pi, h)
    out = []
    for combo in itertools.product(*angles, last):
        x = []
        sin_prod = 1.0
        for a in combo[:-1]:
            x.append(sin_prod * np.cos(a))
            sin_prod *= np.sin(a)
        x.append(sin_prod * np.cos(combo[-1]))
        x.append(sin_prod * np.sin(combo[-1]))
        out.append(x)
    return np.asarray(out)


def connes_distance_bruteforce(t: SpectralTriple, pair: StatePair,
                               h: float = 1e-2) -> float:
    """Grid oracle for the distance on a small commutative truncation.

    Discretizes directions on the quotient sphere at angular step ``h``,
    scales each direction to seminorm one and takes the best objective.
    Independent of the ascent solver; accuracy is second order in ``h``
    because the optimum is a smooth maximum on the sphere.
    """
    alg = t.algebra
    if not getattr(alg, "commutative", False):
        raise InputError("the grid oracle needs a commutative algebra")
    n = alg.dim
    if n > 5:
        raise CapacityError("the grid oracle is limited to dimension <= 5")
    # self-adjoint elements are real functions; quotient out the constants
    ones = np.ones(n) / np.sqrt(n)
    basis = scipy.linalg.null_space(ones[None, :])  # (n, n-1)
    delta = pair.difference().real @ basis
    tensors = _seminorm_tensors(t, basis.astype(complex))
    grid = _sphere_grid(n - 1, h)
    best = 0.0
    chunk = 8192
    for lo in range(0, grid.shape[0], chunk):
        dirs = grid[lo: lo + chunk]
        mats = np.tensordot(dirs, tensors, axes=1)
        norms = np.linalg.svd(mats, compute_uv=False)[:, 0]
        objs = np.abs(dirs @ delta)
        ok = norms > 1e-13
        if ok.any():
            best = max(best, float(np.max(objs[ok] / norms[ok])))
    return best


def _exact_transport(cost, mu, nu) -> Fraction:
    """Exact transportation optimum by enumerating spanning-tree bases of
    the complete bipartite graph, in rational arithmetic.

    Every vertex of the transportation polytope is supported on a spanning
    forest, and every forest extends to a spanning tree with zero flows, so
    scanning all trees and keeping the feasible ones is exhaustive.  Flows
    on a tree are forced: peel leaves, each leaf edge must carry the leaf's
    remaining mass.
    """
    n, m = len(mu), len(nu)
    mu = [Fraction(x) for x in mu]
    nu = [Fraction(x) for x in nu]
    smu, snu = sum(mu), sum(nu)
    mu = [x / smu for x in mu]
    nu = [x / snu for x in nu]
    cost = [[Fraction(cost[i][j]) for j in range(m)] for i in range(n)]
    edges = [(i, j) for i in range(n) for j in range(m)]
    need = n + m - 1
    best: Fraction | None = None
    for tree in itertools.combinations(edges, need):
        deg_s = [0] * n
        deg_t = [0] * m
        for i, j in tree:
            deg_s[i] += 1
            deg_t[j] += 1
        if 0 in deg_s or 0 in deg_t:
            continue
        rem_s = mu[:]
        rem_t = nu[:]
        live = set(tree)
        flow: dict = {}
        while live:
            leaf_edge = None
            for e in live:
                if deg_s[e[0]] == 1:
                    leaf_edge, side = e, "s"
                    break
                if deg_t[e[1]] == 1:
                    leaf_edge, side = e, "t"
                    break
            if leaf_edge is None:  # a cycle: not a tree
                break
            i, j = leaf_edge
            if side == "s":
                f = rem_s[i]
                rem_s[i] = Fraction(0)
                rem_t[j] -= f
            else:
                f = rem_t[j]
                rem_t[j] = Fraction(0)
                rem_s[i] -= f
            flow[leaf_edge] = f
            live.remove(leaf_edge)
            deg_s[i] -= 1
            deg_t[j] -= 1
        if len(flow) != need or any(f < 0 for f in flow.values()):
            continue
        total = sum(cost[i][j] * f for (i, j), f in flow.items())
        if best is None or total < best:
            best = total
    if best is None:
        raise InputError("no feasible transportation basis found")
    return best


def _lp_transport(cost, mu, nu) -> float:
    n, m = len(mu), len(nu)
    c = np.asarray(cost, dtype=float).reshape(-1)
    a_eq = np.zeros((n + m, n * m))
    for i in range(n):
        a_eq[i, i * m: (i + 1) * m] = 1.0
    for j in range(m):
        a_eq[n + j, j::m] = 1.0
    b_eq = np.concatenate([mu, nu])
    res = scipy.optimize.linprog(c, A_eq=a_eq[:-1], b_eq=b_eq[:-1],
                                 bounds=[(0, None)] * (n * m), method="highs")
    if not res.success:
        raise InputError(f"transportation LP failed: {res.message}")
    return float(res.fun)


def _lp_dual(dist, mu, nu) -> float:
    n = len(mu)
    c = -(np.asarray(mu, dtype=float) - np.asarray(nu, dtype=float))
    rows = []
    rhs = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            row = np.zeros(n)
            row[i], row[j] = 1.0, -1.0
            rows.append(row)
            rhs.append(dist[i][j])
    bounds = [(None, None)] * n
    bounds[-1] = (0.0, 0.0)  # fix the free constant shift
    res = scipy.optimize.linprog(c, A_ub=np.asarray(rows), b_ub=np.asarray(rhs),
                                 bounds=bounds, method="highs")
    if not res.success:
        raise InputError(f"dual LP failed: {res.message}")
    return float(-res.fun)


def validate_metric(dist: np.ndarray, slack: float = 1e-12) -> None:
    d = np.asarray(dist, dtype=float)
    n = d.shape[0]
    if d.shape != (n, n) or np.abs(d - d.T).max() > slack or \
            np.abs(np.diag(d)).max() > slack or (d < -slack).any():
        raise InputError("not a symmetric nonnegative matrix with zero diagonal")
    for i, j, k in itertools.permutations(range(n), 3):
        if d[i, j] > d[i, k] + d[k, j] + slack:
            raise InputError(f"triangle inequality fails on ({i},{j},{k})")


def wasserstein_lp(dist, mu, nu) -> float:
    """Optimal transport distance for a metric on finitely many points.

    The primal transportation problem is solved exactly (rational basis
    enumeration) on small instances and by LP otherwise; the dual best-
    Lipschitz-function value is always computed as well and the two are
    required to agree to 1e-9.
    """
    dist = np.asarray(dist, dtype=float)
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    validate_metric(dist)
    n = dist.shape[0]
    if mu.shape != (n,) or nu.shape != (n,):
        raise InputError("measures must match the point count")
    for name, v in (("mu", mu), ("nu", nu)):
        if (v < -1e-12).any() or abs(v.sum() - 1.0) > 1e-9:
            raise InputError(f"{name} is not a probability vector")
    if n * n <= 16:
        primal = float(_exact_transport(dist.tolist(), mu.tolist(), nu.tolist()))
    else:
        primal = _lp_transport(dist.tolist(), mu.tolist(), nu.tolist())
    dual = _lp_dual(dist.tolist(), mu.tolist(), nu.tolist())
    if abs(primal - dual) > 1e-9:
        raise AssertionError(
            f"transport duality gap {abs(primal - dual):.3e} exceeds 1e-9"
        )
    return primal


@dataclass(frozen=True)
class EffectiveMetric:
    matrix: np.ndarray
    metric_ok: bool
    violations: tuple[str, ...]


def effective_metric(t: SpectralTriple, restarts: int = 40,
                     seed: int = 11) -> EffectiveMetric:
    """Distance matrix between point evaluations of a commutative
    truncation.

    Entries are solver distances; unbounded entries (degenerate triples)
    are flagged rather than raised.  The result is checked for the triangle
    inequality with 1e-8 slack.
    """
    alg = t.algebra
    if not getattr(alg, "commutative", False):
        raise InputError("effective metrics need a commutative algebra")
    n = alg.dim
    mat = np.zeros((n, n))
    eye = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            pair = StatePair(alg, eye[i], eye[j], (f"d{i}", f"d{j}"))
            res = connes_distance(t, pair, restarts=restarts, seed=seed)
            mat[i, j] = mat[j, i] = res.distance
    violations = []
    if not np.isfinite(mat).all():
        violations.append("unbounded entries (degenerate seminorm)")
    else:
        for i, j, k in itertools.permutations(range(n), 3):
            if mat[i, j] > mat[i, k] + mat[k, j] + 1e-8:
                violations.append(f"triangle fails on ({i},{j},{k})")
    return EffectiveMetric(mat, not violations, tuple(violations))


@dataclass(frozen=True)
class StabilizationRow:
    pair: tuple[str, str]
    distances: tuple[float, ...]
    differences: tuple[float, ...]
    stabilizing: bool


@dataclass(frozen=True)
class StabilizationReport:
    levels: tuple[int, ...]
    rows: tuple[StabilizationRow, ...]

    def as_json(self) -> dict:
        return {
            "levels": list(self.levels),
            "rows": [
                {
                    "pair": list(r.pair),
                    "distances": list(r.distances),
                    "differences": list(r.differences),
                    "stabilizing": r.stabilizing,
                }
                for r in self.rows
            ],
        }


def lip_stabilization_report(level_builder, levels, restarts: int = 40,
                             seed: int = 11,
                             threshold: float = 1e-3) -> StabilizationReport:
    """Track fixed state pairs across truncation levels.

    ``level_builder(n)`` must return ``(triple, states)`` with ``states`` a
    mapping from label to dual vector; distances are computed per level for
    every label pair, and a pair is flagged stabilizing when its last
    successive difference drops below the threshold.  This is a finite-size
    diagnostic only; it certifies nothing about the limit.
    """
    levels = list(levels)
    per_level = []
    names = None
    for n in levels:
        t, states = level_builder(n)
        if names is None:
            names = sorted(states.keys())
        row = {}
        for a, b in itertools.combinations(names, 2):
            pair = StatePair(t.algebra, states[a], states[b], (a, b))
            row[(a, b)] = connes_distance(t, pair, restarts=restarts,
                                          seed=seed).distance
        per_level.append(row)
    rows = []
    for key in itertools.combinations(names, 2):
        seq = tuple(float(r[key]) for r in per_level)
        diffs = tuple(abs(b - a) for a, b in zip(seq, seq[1:]))
        stab = bool(diffs and diffs[-1] < threshold)
        rows.append(StabilizationRow(key, seq, diffs, stab))
    return StabilizationReport(tuple(levels), tuple(rows))
