"""Finite-dimensional C*-algebras, filtrations, states and GNS data.

A finite-dimensional C*-algebra is a direct sum of full matrix blocks.
Elements are coordinate vectors: the row-major entries of each block,
concatenated in block order.  Nested unital inclusions of such algebras
(stored as explicit linear maps on coordinates) model the finite levels of
an approximately-finite filtration, and a faithful state turns the top
level into a concrete Hilbert space via the GNS construction.  The layer
projections of a filtration inside that GNS space are the building blocks
of the Dirac operators constructed in :func:`ci_dirac`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import matops
from .errors import DegeneracyError, InputError, ScheduleError


@dataclass(frozen=True)
class MultiMatrixAlgebra:
    """Direct sum of full matrix blocks ``M_{d_1} (+) ... (+) M_{d_k}``.

    ``dim`` is the linear dimension ``sum(d_i^2)``.  The algebra is
    commutative exactly when every block is 1x1, in which case it is the
    function algebra on ``len(block_dims)`` points.
    """

    block_dims: tuple[int, ...]
    label: str = ""

    def __post_init__(self):
        if not self.block_dims or any(d < 1 for d in self.block_dims):
            raise InputError("block dimensions must be positive integers")

    @property
    def dim(self) -> int:
        return int(sum(d * d for d in self.block_dims))

    @property
    def commutative(self) -> bool:
        return all(d == 1 for d in self.block_dims)

    @property
    def rep_dim(self) -> int:
        """Dimension of the direct (defining) representation."""
        return int(sum(self.block_dims))

    def block_offsets(self) -> list[int]:
        offs = [0]
        for d in self.block_dims:
            offs.append(offs[-1] + d * d)
        return offs

    def blocks(self, v: np.ndarray) -> list[np.ndarray]:
        v = np.asarray(v, dtype=complex).reshape(self.dim)
        offs = self.block_offsets()
        return [
            v[offs[i]: offs[i + 1]].reshape(d, d)
            for i, d in enumerate(self.block_dims)
        ]

    def from_blocks(self, blocks) -> np.ndarray:
        parts = []
        for d, b in zip(self.block_dims, blocks, strict=True):
            b = np.asarray(b, dtype=complex)
            if b.shape != (d, d):
                raise InputError(f"block of shape {b.shape}, expected {(d, d)}")
            parts.append(b.reshape(-1))
        return np.concatenate(parts)

    def unit(self) -> np.ndarray:
        return self.from_blocks([np.eye(d) for d in self.block_dims])

    def mult(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.from_blocks(
            [a @ b for a, b in zip(self.blocks(u), self.blocks(v))]
        )

    def star(self, v: np.ndarray) -> np.ndarray:
        return self.from_blocks([matops.dagger(b) for b in self.blocks(v)])

    def star_matrix(self) -> np.ndarray:
        """Matrix ``S`` with ``star(v) = S @ conj(v)`` (a transposition
        permutation inside each block)."""
        s = np.zeros((self.dim, self.dim))
        offs = self.block_offsets()
        for k, d in enumerate(self.block_dims):
            for i in range(d):
                for j in range(d):
                    s[offs[k] + i * d + j, offs[k] + j * d + i] = 1.0
        return s

    def norm(self, v: np.ndarray) -> float:
        """The C*-norm: max operator norm over blocks."""
        return max(matops.opnorm(b) for b in self.blocks(v))

    def direct_rep(self, v: np.ndarray) -> np.ndarray:
        """The defining representation on ``C^{sum d_i}`` (block diagonal)."""
        return matops.blockdiag(self.blocks(v))

    def basis_labels(self) -> list[str]:
        out = []
        for k, d in enumerate(self.block_dims):
            for i in range(d):
                for j in range(d):
                    out.append(f"b{k}[{i},{j}]")
        return out


class TensorProductAlgebra:
    """Algebraic tensor product of two coordinate *-algebras.

    Coordinates follow the Kronecker layout: index ``i*dim_b + j`` holds the
    coefficient of ``e_i (x) f_j``.  Only the operations the rest of the
    package needs are implemented (unit, star, multiplication).
    """

    def __init__(self, a, b):
        self.factor_a = a
        self.factor_b = b
        self.dim = a.dim * b.dim
        self.label = f"({getattr(a, 'label', '?')})(x)({getattr(b, 'label', '?')})"

    @property
    def commutative(self) -> bool:
        return bool(
            getattr(self.factor_a, "commutative", False)
            and getattr(self.factor_b, "commutative", False)
        )

    def unit(self) -> np.ndarray:
        return np.kron(self.factor_a.unit(), self.factor_b.unit())

    def star_matrix(self) -> np.ndarray:
        return np.kron(self.factor_a.star_matrix(), self.factor_b.star_matrix())

    def star(self, v: np.ndarray) -> np.ndarray:
        return self.star_matrix() @ np.conj(np.asarray(v, dtype=complex))

    def mult(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        da, db = self.factor_a.dim, self.factor_b.dim
        um = np.asarray(u, dtype=complex).reshape(da, db)
        vm = np.asarray(v, dtype=complex).reshape(da, db)
        out = np.zeros((da, db), dtype=complex)
        for i, j in itertools.product(range(da), range(db)):
            if um[i, j] == 0:
                continue
            ei = np.zeros(da, dtype=complex)
            ei[i] = 1.0
            fj = np.zeros(db, dtype=complex)
            fj[j] = 1.0
            for k, l in itertools.product(range(da), range(db)):
                if vm[k, l] == 0:
                    continue
                ek = np.zeros(da, dtype=complex)
                ek[k] = 1.0
                fl = np.zeros(db, dtype=complex)
                fl[l] = 1.0
                prod_a = self.factor_a.mult(ei, ek)
                prod_b = self.factor_b.mult(fj, fl)
                out += um[i, j] * vm[k, l] * np.outer(prod_a, prod_b)
        return out.reshape(-1)


@dataclass(frozen=True)
class Filtration:
    """Nested unital inclusions ``levels[0] c levels[1] c ...``.

    ``inclusions[i]`` is the coordinate matrix of the unital *-embedding of
    level ``i`` into level ``i+1``.  Level 0 must be the scalars.
    """

    levels: tuple[MultiMatrixAlgebra, ...]
    inclusions: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.inclusions) != len(self.levels) - 1:
            raise InputError("need exactly one inclusion per consecutive level pair")
        if self.levels[0].block_dims != (1,):
            raise InputError("level 0 must be the scalars")
        for i, inc in enumerate(self.inclusions):
            lo, hi = self.levels[i], self.levels[i + 1]
            if inc.shape != (hi.dim, lo.dim):
                raise InputError(
                    f"inclusion {i} has shape {inc.shape}, expected {(hi.dim, lo.dim)}"
                )

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def top(self) -> MultiMatrixAlgebra:
        return self.levels[-1]

    def to_level(self, lo: int, hi: int) -> np.ndarray:
        """Composite inclusion matrix from level ``lo`` into level ``hi``."""
        lo = lo % self.depth
        hi = hi % self.depth
        if hi < lo:
            raise InputError("target level below source level")
        j = np.eye(self.levels[lo].dim, dtype=complex)
        for k in range(lo, hi):
            j = self.inclusions[k] @ j
        return j

    def embed(self, level: int, v: np.ndarray, to: int = -1) -> np.ndarray:
        return self.to_level(level, to) @ np.asarray(v, dtype=complex)

    def validate(self, rtol: float = 1e-12) -> None:
        """Check each inclusion is unital, injective, *-preserving and
        multiplicative on basis products.  Raises :class:`InputError`."""
        for i, inc in enumerate(self.inclusions):
            lo, hi = self.levels[i], self.levels[i + 1]
            scale = max(np.abs(inc).max(), 1.0)
            if np.abs(inc @ lo.unit() - hi.unit()).max() > rtol * scale:
                raise InputError(f"inclusion {i} is not unital")
            if np.linalg.matrix_rank(inc, tol=1e-10) < lo.dim:
                raise InputError(f"inclusion {i} is not injective")
            s_lo, s_hi = lo.star_matrix(), hi.star_matrix()
            if np.abs(inc @ s_lo - s_hi @ np.conj(inc)).max() > rtol * scale:
                raise InputError(f"inclusion {i} does not preserve adjoints")
            eye = np.eye(lo.dim, dtype=complex)
            for a in range(lo.dim):
                for b in range(lo.dim):
                    lhs = inc @ lo.mult(eye[a], eye[b])
                    rhs = hi.mult(inc[:, a], inc[:, b])
                    if np.abs(lhs - rhs).max() > 10 * rtol * max(scale, 1.0):
                        raise InputError(
                            f"inclusion {i} is not multiplicative on basis pair ({a},{b})"
                        )


def cyclic_product_filtration(moduli) -> Filtration:
    """Filtration ``C c C(Z_{m1}) c C(Z_{m1} x Z_{m2}) c ...``.

    Points of level ``k`` are indexed by mixed-radix encoding: the tuple
    ``(x_1, ..., x_k)`` sits at ``x_1 + x_2 m_1 + ... + x_k m_1...m_{k-1}``,
    so the inclusion ``C(X_k) -> C(X_{k+1})`` is periodic tiling.
    """
    moduli = tuple(int(m) for m in moduli)
    if any(m < 2 for m in moduli):
        raise InputError("moduli must be at least 2")
    levels = [MultiMatrixAlgebra((1,), label="C")]
    sizes = [1]
    for k, m in enumerate(moduli):
        sizes.append(sizes[-1] * m)
        levels.append(
            MultiMatrixAlgebra((1,) * sizes[-1], label=f"C(X{k + 1})")
        )
    inclusions = []
    for k in range(len(moduli)):
        lo, hi = sizes[k], sizes[k + 1]
        inc = np.zeros((hi, lo), dtype=complex)
        for idx in range(hi):
            inc[idx, idx % lo] = 1.0
        inclusions.append(inc)
    return Filtration(tuple(levels), tuple(inclusions))


def uhf_filtration(factor_dims) -> Filtration:
    """Filtration ``C c M_{k1} c M_{k1 k2} c ...`` with inclusions
    ``a -> a (x) 1``."""
    factor_dims = tuple(int(k) for k in factor_dims)
    if any(k < 2 for k in factor_dims):
        raise InputError("matrix factor dimensions must be at least 2")
    levels = [MultiMatrixAlgebra((1,), label="C")]
    sizes = [1]
    for k in factor_dims:
        sizes.append(sizes[-1] * k)
        levels.append(MultiMatrixAlgebra((sizes[-1],), label=f"M{sizes[-1]}"))
    inclusions = []
    for i, k in enumerate(factor_dims):
        lo, hi = sizes[i], sizes[i + 1]
        inc = np.zeros((hi * hi, lo * lo), dtype=complex)
        eye = np.eye(k)
        for a in range(lo):
            for b in range(lo):
                e = np.zeros((lo, lo))
                e[a, b] = 1.0
                inc[:, a * lo + b] = np.kron(e, eye).reshape(-1)
        inclusions.append(inc)
    return Filtration(tuple(levels), tuple(inclusions))


@dataclass(frozen=True)
class AlgState:
    """A state given by one positive semidefinite density block per matrix
    block; the total trace must be 1.  Faithful iff every block is strictly
    positive definite."""

    algebra: MultiMatrixAlgebra
    densities: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.densities) != len(self.algebra.block_dims):
            raise InputError("need one density block per algebra block")
        total = 0.0
        for d, rho in zip(self.algebra.block_dims, self.densities):
            rho = np.asarray(rho, dtype=complex)
            if rho.shape != (d, d):
                raise InputError(f"density block of shape {rho.shape}, expected {(d, d)}")
            if matops.hermitian_defect(rho) > 1e-10:
                raise InputError("density block is not Hermitian")
            if np.linalg.eigvalsh(matops.symmetrize(rho)).min() < -1e-12:
                raise InputError("density block is not positive semidefinite")
            total += float(np.trace(rho).real)
        if abs(total - 1.0) > 1e-10:
            raise InputError(f"total trace is {total}, expected 1")

    def value(self, v: np.ndarray) -> complex:
        return complex(
            sum(
                np.trace(rho @ b)
                for rho, b in zip(self.densities, self.algebra.blocks(v))
            )
        )

    def dual_vector(self) -> np.ndarray:
        eye = np.eye(self.algebra.dim, dtype=complex)
        return np.array([self.value(eye[:, i]) for i in range(self.algebra.dim)])

    def faithful_or_raise(self, tol: float = 1e-12) -> None:
        for k, rho in enumerate(self.densities):
            low = np.linalg.eigvalsh(matops.symmetrize(np.asarray(rho, complex))).min()
            if low <= tol:
                raise DegeneracyError(
                    f"state is not faithful: block {k} has minimum eigenvalue {low:.3e}"
                )

    @property
    def faithful(self) -> bool:
        try:
            self.faithful_or_raise()
        except DegeneracyError:
            return False
        return True

    def restrict(self, filtration: Filtration, level: int) -> "AlgState":
        """Pull the state back along the inclusion into the top level."""
        j = filtration.to_level(level, -1)
        alg = filtration.levels[level]
        dual = self.dual_vector() @ j
        # reconstruct density blocks of the restricted functional
        offs = alg.block_offsets()
        dens = []
        for k, d in enumerate(alg.block_dims):
            rho = np.zeros((d, d), dtype=complex)
            for i in range(d):
                for jj in range(d):
                    rho[jj, i] = dual[offs[k] + i * d + jj]
            dens.append(rho)
        return AlgState(alg, tuple(dens))


def uniform_state(algebra: MultiMatrixAlgebra) -> AlgState:
    """Density ``I / sum(d_i)`` on every block.

    For a commutative algebra this is the uniform probability measure; for
    a single matrix block it is the normalized trace.
    """
    total = algebra.rep_dim
    return AlgState(
        algebra, tuple(np.eye(d, dtype=complex) / total for d in algebra.block_dims)
    )


def point_state(algebra: MultiMatrixAlgebra, point: int) -> AlgState:
    """Point evaluation on a commutative algebra."""
    if not algebra.commutative:
        raise InputError("point states require a commutative algebra")
    dens = [np.zeros((1, 1), dtype=complex) for _ in algebra.block_dims]
    dens[point] = np.ones((1, 1), dtype=complex)
    return AlgState(algebra, tuple(dens))


@dataclass
class GNSData:
    """GNS representation of an algebra with respect to a faithful state.

    ``rep_tensor[k]`` is the matrix of left multiplication by the k-th
    basis element in an orthonormal coordinate frame of the GNS space, and
    ``cyclic_vector`` implements the state as a vector state.
    """

    algebra: MultiMatrixAlgebra
    hilbert_dim: int
    rep_tensor: np.ndarray
    cyclic_vector: np.ndarray

    def rep(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=complex).reshape(self.algebra.dim)
        return np.tensordot(v, self.rep_tensor, axes=1)


def gns(algebra: MultiMatrixAlgebra, state: AlgState) -> GNSData:
    """GNS construction for a faithful state.

    The inner product ``<a, b> = phi(a* b)`` on the algebra is represented
    by its Gram matrix ``G`` in coordinates; conjugating left multiplication
    by ``G^{1/2}`` yields a *-representation with respect to the standard
    inner product, with cyclic vector the image of the unit.
    """
    if state.algebra.block_dims != algebra.block_dims:
        raise InputError("state is defined on a different algebra")
    state.faithful_or_raise()
    dim = algebra.dim
    eye = np.eye(dim, dtype=complex)
    gram = np.empty((dim, dim), dtype=complex)
    for i in range(dim):
        si = algebra.star(eye[:, i])
        for j in range(dim):
            gram[i, j] = state.value(algebra.mult(si, eye[:, j]))
    gram = matops.symmetrize(gram)
    eigs, u = np.linalg.eigh(gram)
    if eigs.min() <= 1e-14:
        raise DegeneracyError("GNS inner product is degenerate")
    g_half = (u * np.sqrt(eigs)) @ matops.dagger(u)
    g_half_inv = (u * (1.0 / np.sqrt(eigs))) @ matops.dagger(u)
    rep_tensor = np.empty((dim, dim, dim), dtype=complex)
    for k in range(dim):
        mult_k = np.column_stack(
            [algebra.mult(eye[:, k], eye[:, j]) for j in range(dim)]
        )
        rep_tensor[k] = g_half @ mult_k @ g_half_inv
    xi = g_half @ algebra.unit()
    return GNSData(algebra, dim, rep_tensor, xi)


def _orthonormal_span(columns: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the column span, rank decided by relative
    singular value cutoff."""
    u, s, _ = np.linalg.svd(columns, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return u[:, :0]
    rank = int(np.sum(s > rtol * s[0]))
    return u[:, :rank]


def ortho_layers(filtration: Filtration, gnsdata: GNSData) -> list[np.ndarray]:
    """Orthogonal layer projections of a filtration inside a GNS space.

    Layer ``m`` projects onto the part of ``rep(level m) xi`` orthogonal to
    ``rep(level m-1) xi``; layer 0 is the rank-one projection onto the
    cyclic vector.  The projections are pairwise orthogonal and sum to the
    identity.
    """
    if gnsdata.algebra.block_dims != filtration.top.block_dims:
        raise InputError("GNS data was not built from the top level of the filtration")
    h = gnsdata.hilbert_dim
    xi = gnsdata.cyclic_vector
    projections = []
    prev_proj = np.zeros((h, h), dtype=complex)
    prev_rank = 0
    for m in range(filtration.depth):
        j = filtration.to_level(m, -1)
        span = np.column_stack(
            [gnsdata.rep(j[:, k]) @ xi for k in range(filtration.levels[m].dim)]
        )
        frame = _orthonormal_span(span)
        if frame.shape[1] < filtration.levels[m].dim:
            raise DegeneracyError(
                f"state is rank-deficient on level {m}: "
                f"span has rank {frame.shape[1]} < {filtration.levels[m].dim}"
            )
        proj = frame @ matops.dagger(frame)
        q = matops.symmetrize(proj - prev_proj)
        projections.append(q)
        prev_proj = proj
        prev_rank = frame.shape[1]
    if abs(prev_rank - h) > 0:
        raise DegeneracyError("filtration does not exhaust the GNS space")
    return projections


def layer_ranks(projections) -> list[int]:
    return [int(round(float(np.trace(q).real))) for q in projections]


def default_schedule(ranks, s: float) -> list[float]:
    """Eigenvalue schedule ``lambda_m = (cumulative rank)^{1/s}`` with
    ``lambda_0 = 0``.

    With weights equal to the layer ranks this makes the ``p``-summability
    sums converge for ``p > s`` at truncation scale.  It is a stand-in
    growth profile: any schedule with ``|lambda_m|`` increasing to infinity
    is admissible, and reports flag the choice as such.
    """
    if s <= 0:
        raise InputError("summability target s must be positive")
    out = [0.0]
    cum = ranks[0]
    for r in ranks[1:]:
        cum += r
        out.append(float(cum) ** (1.0 / s))
    return out


def ci_dirac(filtration: Filtration, gnsdata: GNSData, schedule) -> np.ndarray:
    """Dirac operator ``D = sum_m lambda_m Q_m`` over the layer projections.

    The schedule must start at exactly 0 and have strictly increasing
    absolute values; this keeps non-degeneracy checks deterministic.  The
    cyclic vector is always in the kernel of ``D``.
    """
    schedule = [float(x) for x in schedule]
    projections = ortho_layers(filtration, gnsdata)
    if len(schedule) != len(projections):
        raise ScheduleError(
            f"schedule has {len(schedule)} entries for {len(projections)} layers"
        )
    if schedule[0] != 0.0:
        raise ScheduleError("schedule must start at 0")
    mags = [abs(x) for x in schedule]
    if any(b <= a for a, b in zip(mags, mags[1:])):
        raise ScheduleError("absolute values of the schedule must strictly increase")
    d = sum(lam * q for lam, q in zip(schedule, projections))
    return matops.symmetrize(d)


def filtration_to_json(filtration: Filtration, state: AlgState | None = None) -> dict:
    def cx(mat):
        arr = np.asarray(mat, dtype=complex)
        return [[[float(z.real), float(z.imag)] for z in row] for row in arr]

    doc = {
        "levels": [list(lvl.block_dims) for lvl in filtration.levels],
        "inclusions": [cx(inc) for inc in filtration.inclusions],
    }
    if state is not None:
        doc["state"] = {"densities": [cx(rho) for rho in state.densities]}
    return doc


def filtration_from_json(doc: dict) -> tuple[Filtration, AlgState | None]:
    def uncx(rows):
        return np.array([[complex(re, im) for re, im in row] for row in rows])

    levels = tuple(
        MultiMatrixAlgebra(tuple(int(d) for d in dims)) for dims in doc["levels"]
    )
    inclusions = tuple(uncx(inc) for inc in doc["inclusions"])
    filt = Filtration(levels, inclusions)
    state = None
    if "state" in doc:
        dens = tuple(uncx(rho) for rho in doc["state"]["densities"])
        state = AlgState(filt.top, dens)
    return filt, state
