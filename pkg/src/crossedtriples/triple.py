"""Spectral triples as finite data, seminorms and product constructions.

A triple at truncation level is a coordinate *-algebra together with a
linear representation map into matrices and a Hermitian Dirac matrix.  Even
triples additionally carry a grading, and by convention are always stored
in the balanced form: Hilbert space split in equal halves, Dirac operator
off-diagonal with upper-right ``corner`` block, grading ``diag(I, -I)`` and
representation block diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import matops
from .algebra import TensorProductAlgebra
from .errors import CapacityError, InputError, ParityError


@dataclass
class SpectralTriple:
    """Representation + Dirac matrix (+ optional grading) over a coordinate
    algebra.

    ``rep`` maps coordinate vectors to matrices and must be linear.  For
    even triples ``corner`` holds the upper-right Dirac block and ``rep``
    must be block diagonal with two equal halves.
    """

    algebra: object
    rep: Callable[[np.ndarray], np.ndarray]
    dirac: np.ndarray
    parity: str = "odd"
    grading: np.ndarray | None = None
    corner: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.dirac = matops.symmetrize(matops.as_cmatrix(self.dirac))
        if self.parity not in ("odd", "even"):
            raise InputError(f"parity must be 'odd' or 'even', got {self.parity!r}")
        if self.parity == "even" and (self.grading is None or self.corner is None):
            raise ParityError("even triples need a grading and a corner block")

    @property
    def hilbert_dim(self) -> int:
        return self.dirac.shape[0]

    @property
    def half_dim(self) -> int:
        if self.parity != "even":
            raise ParityError("half_dim only makes sense for even triples")
        return self.hilbert_dim // 2

    def rep_halves(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """The two diagonal blocks of the representation of an even triple."""
        m = self.half_dim
        full = self.rep(v)
        return full[:m, :m], full[m:, m:]

    def rep_tensor(self) -> np.ndarray:
        """Dense (dim, H, H) array of the representation on the coordinate
        basis.  Only sensible for small truncations."""
        d = self.algebra.dim
        h = self.hilbert_dim
        eye = np.eye(d, dtype=complex)
        out = np.empty((d, h, h), dtype=complex)
        for i in range(d):
            out[i] = self.rep(eye[:, i])
        return out

    def validate_grading(self, tol: float = 1e-10) -> None:
        """Grading squares to 1, anticommutes with the Dirac operator and
        commutes with the representation on the coordinate basis."""
        if self.parity != "even":
            return
        g = self.grading
        h = self.hilbert_dim
        if matops.opnorm(g @ g - np.eye(h)) > tol:
            raise InputError("grading does not square to the identity")
        if matops.opnorm(g @ self.dirac + self.dirac @ g) > tol * max(
            matops.opnorm(self.dirac), 1.0
        ):
            raise InputError("grading does not anticommute with the Dirac operator")
        eye = np.eye(self.algebra.dim, dtype=complex)
        for i in range(self.algebra.dim):
            r = self.rep(eye[:, i])
            if matops.opnorm(matops.commutator(g, r)) > tol * max(matops.opnorm(r), 1.0):
                raise InputError(f"grading does not commute with basis element {i}")


def even_triple(algebra, rep_half0, rep_half1, corner: np.ndarray,
                meta: dict | None = None) -> SpectralTriple:
    """Assemble an even triple in the balanced convention from its halves."""
    corner = matops.as_cmatrix(corner)
    m = corner.shape[0]
    if corner.shape != (m, m):
        raise InputError("corner block must be square in the balanced convention")
    dirac = np.zeros((2 * m, 2 * m), dtype=complex)
    dirac[:m, m:] = corner
    dirac[m:, :m] = matops.dagger(corner)
    grading = np.diag(np.concatenate([np.ones(m), -np.ones(m)])).astype(complex)

    def rep(v):
        out = np.zeros((2 * m, 2 * m), dtype=complex)
        out[:m, :m] = rep_half0(v)
        out[m:, m:] = rep_half1(v)
        return out

    return SpectralTriple(algebra, rep, dirac, parity="even", grading=grading,
                          corner=corner, meta=meta or {})


def seminorm(t: SpectralTriple, v: np.ndarray) -> float:
    """The commutator seminorm ``||[D, pi(a)]||``."""
    v = np.asarray(v, dtype=complex)
    if v.shape != (t.algebra.dim,):
        raise InputError(
            f"element has {v.shape} coordinates, algebra dimension is {t.algebra.dim}"
        )
    return matops.opnorm(matops.commutator(t.dirac, t.rep(v)))


def commutator_map_columns(t: SpectralTriple, basis: np.ndarray) -> np.ndarray:
    """Stacked columns ``vec([D, pi(b)])`` for each basis element."""
    h = t.hilbert_dim
    cols = np.empty((h * h, basis.shape[1]), dtype=complex)
    for j in range(basis.shape[1]):
        cols[:, j] = matops.commutator(t.dirac, t.rep(basis[:, j])).reshape(-1)
    return cols


def nondegenerate(t: SpectralTriple, basis: np.ndarray | None = None,
                  rtol: float = 1e-8) -> tuple[bool, int]:
    """Whether the representation is injective and the commutator kernel is
    exactly the constants.

    Returns ``(flag, kernel_dim)`` where ``kernel_dim`` is the nullity of
    the linear map ``a -> [D, pi(a)]`` over the given basis (default: the
    coordinate basis).
    """
    if basis is None:
        basis = np.eye(t.algebra.dim, dtype=complex)
    ncols = basis.shape[1]
    cols = commutator_map_columns(t, basis)
    sv = np.linalg.svd(cols, compute_uv=False)
    top = sv[0] if sv.size else 0.0
    rank = int(np.sum(sv > rtol * top)) if top > 0 else 0
    kernel_dim = ncols - rank
    rep_cols = np.column_stack(
        [t.rep(basis[:, j]).reshape(-1) for j in range(ncols)]
    )
    rep_sv = np.linalg.svd(rep_cols, compute_uv=False)
    injective = rep_sv.size > 0 and rep_sv[-1] > rtol * rep_sv[0]
    return (kernel_dim == 1 and injective), kernel_dim


@dataclass(frozen=True)
class SummabilityReport:
    partial_sums: np.ndarray
    tail_exponent: float
    last_increment: float

    @property
    def cauchy(self) -> bool:
        return self.last_increment < 1e-3


def summability_report(eigs, p: float, weights=None) -> SummabilityReport:
    """Partial sums of ``sum_m w_m (1 + lambda_m^2)^{-p/2}`` plus a fitted
    log-log tail exponent of the increments."""
    if p <= 0:
        raise InputError("summability exponent p must be positive")
    eigs = np.asarray(eigs, dtype=float)
    if weights is None:
        weights = np.ones_like(eigs)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != eigs.shape:
        raise InputError("weights must match the eigenvalue list")
    increments = weights * (1.0 + eigs**2) ** (-p / 2.0)
    sums = np.cumsum(increments)
    n = len(increments)
    tail = np.arange(max(1, n // 2), n)
    exponent = float("nan")
    if len(tail) >= 2:
        x = np.log10(tail.astype(float) + 1.0)
        y = np.log10(np.maximum(increments[tail], 1e-300))
        exponent = float(np.polyfit(x, y, 1)[0])
    last = float(increments[-1]) if n else 0.0
    return SummabilityReport(sums, exponent, last)


def tensor_even(ta: SpectralTriple, tb: SpectralTriple,
                max_dim: int = matops.MAX_DIM) -> SpectralTriple:
    """Even triple on the tensor product of two odd triples.

    The Dirac operator has upper-right corner ``D_A (x) 1 - i (x) D_B`` on
    ``H_A (x) H_B``, the representation is diagonal and the grading is
    ``diag(I, -I)``.  Eigenvalues come in pairs ``+-sqrt(l^2 + m^2)`` over
    the eigenpairs of the factors.
    """
    if ta.parity != "odd" or tb.parity != "odd":
        raise ParityError("tensor_even requires two odd triples")
    ha, hb = ta.hilbert_dim, tb.hilbert_dim
    if 2 * ha * hb > max_dim:
        raise CapacityError(f"tensor triple dimension {2 * ha * hb} exceeds {max_dim}")
    corner = np.kron(ta.dirac, np.eye(hb)) - 1j * np.kron(np.eye(ha), tb.dirac)
    alg = TensorProductAlgebra(ta.algebra, tb.algebra)
    da, db = ta.algebra.dim, tb.algebra.dim

    def rep_half(v):
        vm = np.asarray(v, dtype=complex).reshape(da, db)
        out = np.zeros((ha * hb, ha * hb), dtype=complex)
        # expand on the product basis; cheap at truncation scale
        for i in range(da):
            row = vm[i]
            if not np.any(row):
                continue
            ei = np.zeros(da, dtype=complex)
            ei[i] = 1.0
            pa = ta.rep(ei)
            pb = tb.rep(row)
            out += np.kron(pa, pb)
        return out

    return even_triple(alg, rep_half, rep_half, corner,
                       meta={"construction": "tensor_even"})


def product_odd(ta: SpectralTriple, tb: SpectralTriple,
                max_dim: int = matops.MAX_DIM) -> SpectralTriple:
    """Odd triple on the tensor product of an even and an odd triple.

    With corner block ``C`` of the even factor, the Dirac operator is
    ``[[1 (x) D_B, C (x) 1], [C* (x) 1, -1 (x) D_B]]`` on
    ``(H_0 (x) H_B) (+) (H_1 (x) H_B)``; the output carries no grading.
    """
    if ta.parity != "even":
        raise ParityError("first factor must be even (graded)")
    if tb.parity != "odd":
        raise ParityError("second factor must be odd")
    m = ta.half_dim
    hb = tb.hilbert_dim
    if 2 * m * hb > max_dim:
        raise CapacityError(f"product dimension {2 * m * hb} exceeds {max_dim}")
    c = ta.corner
    upper = np.kron(np.eye(m), tb.dirac)
    dirac = np.zeros((2 * m * hb, 2 * m * hb), dtype=complex)
    dirac[: m * hb, : m * hb] = upper
    dirac[m * hb:, m * hb:] = -upper
    dirac[: m * hb, m * hb:] = np.kron(c, np.eye(hb))
    dirac[m * hb:, : m * hb] = np.kron(matops.dagger(c), np.eye(hb))
    alg = TensorProductAlgebra(ta.algebra, tb.algebra)
    da, db = ta.algebra.dim, tb.algebra.dim

    def rep(v):
        vm = np.asarray(v, dtype=complex).reshape(da, db)
        out = np.zeros((2 * m * hb, 2 * m * hb), dtype=complex)
        for i in range(da):
            row = vm[i]
            if not np.any(row):
                continue
            ei = np.zeros(da, dtype=complex)
            ei[i] = 1.0
            p0, p1 = ta.rep_halves(ei)
            pb = tb.rep(row)
            out[: m * hb, : m * hb] += np.kron(p0, pb)
            out[m * hb:, m * hb:] += np.kron(p1, pb)
        return out

    return SpectralTriple(alg, rep, dirac, parity="odd",
                          meta={"construction": "product_odd"})


def spectrum(t: SpectralTriple) -> np.ndarray:
    """Ascending eigenvalues of the Dirac operator."""
    return matops.herm_spectrum(t.dirac)


def spectrum_multiplicities(eigs, tol: float = 1e-9) -> list[tuple[float, int]]:
    """Group a sorted eigenvalue list into (value, multiplicity) pairs."""
    out: list[tuple[float, int]] = []
    for x in np.sort(np.asarray(eigs, dtype=float)):
        if out and abs(x - out[-1][0]) <= tol:
            out[-1] = (out[-1][0], out[-1][1] + 1)
        else:
            out.append((float(x), 1))
    return out


def triple_to_json(t: SpectralTriple) -> dict:
    eigs = spectrum(t)
    return {
        "parity": t.parity,
        "algebra_dim": int(t.algebra.dim),
        "hilbert_dim": int(t.hilbert_dim),
        "spectrum": [float(x) for x in eigs],
        "construction": t.meta.get("construction", "direct"),
    }


def spectrum_csv_rows(eigs, tol: float = 1e-9) -> list[tuple[int, float, int]]:
    """Rows (index, eigenvalue, multiplicity) for CSV export."""
    return [
        (i, val, mult)
        for i, (val, mult) in enumerate(spectrum_multiplicities(eigs, tol))
    ]
