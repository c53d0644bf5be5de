"""Truncated group geometry for Z and Z^d.

Lattice windows enumerate ``[-N, N]^d`` in lexicographic order and carry
the zero-padded truncated shifts.  Length functions come in three kinds:
the signed identity on Z, word lengths on Z with respect to a finite
generating set, and the matrix-valued recursion on Z^d whose blocks square
to ``|n|^2`` times the identity.  Multiplication by a length function gives
the Dirac operator of the group-side triple.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import matops
from .errors import CapacityError, InputError


class LatticeWindow:
    """The finite box ``[-N, N]^d`` with a fixed lexicographic enumeration.

    ``index`` maps a lattice point (tuple of ints) to its position; the
    origin's position is recorded separately.  For ``d = 1`` points are
    stored as 1-tuples but plain ints are accepted wherever a point is
    expected.
    """

    def __init__(self, d: int, N: int):
        if d < 1 or N < 0:
            raise InputError("window needs dimension >= 1 and radius >= 0")
        self.d = int(d)
        self.N = int(N)
        self.points = tuple(
            itertools.product(range(-self.N, self.N + 1), repeat=self.d)
        )
        self.index = {p: i for i, p in enumerate(self.points)}
        self.origin_index = self.index[(0,) * self.d]

    @property
    def size(self) -> int:
        return len(self.points)

    def as_point(self, g) -> tuple[int, ...]:
        if isinstance(g, (int, np.integer)):
            g = (int(g),)
        g = tuple(int(x) for x in g)
        if len(g) != self.d:
            raise InputError(f"point {g} has wrong dimension for a {self.d}-d window")
        return g

    def contains(self, g) -> bool:
        return all(abs(x) <= self.N for x in self.as_point(g))

    def shift_matrix(self, h) -> np.ndarray:
        """Zero-padded truncated translation by ``h``: delta_g -> delta_{g+h}
        when the target stays inside the window, 0 otherwise."""
        h = self.as_point(h)
        s = np.zeros((self.size, self.size), dtype=complex)
        for i, p in enumerate(self.points):
            q = tuple(a + b for a, b in zip(p, h))
            j = self.index.get(q)
            if j is not None:
                s[j, i] = 1.0
        return s

    def interior_indices(self, margin: int) -> np.ndarray:
        """Indices of points at sup-distance at least ``margin`` from the
        boundary."""
        keep = self.N - margin
        return np.array(
            [i for i, p in enumerate(self.points) if all(abs(x) <= keep for x in p)],
            dtype=int,
        )


def length_matrix(d: int, n) -> np.ndarray:
    """Matrix value of the recursive length function on Z^d.

    Size is ``2^ceil(d/2)``.  Base case ``[[0, -i n], [i n, 0]]`` on Z; even
    steps add ``+-n_d`` on the diagonal halves, odd steps double the size
    with the previous value and ``-i n_d`` in the upper-right block.  The
    value is Hermitian with eigenvalues ``+-|n|`` (each half multiplicity).
    """
    if not 1 <= d <= 6:
        raise CapacityError("matrix-valued lengths are supported for 1 <= d <= 6")
    n = np.atleast_1d(np.asarray(n, dtype=int))
    if n.shape != (d,):
        raise InputError(f"expected {d} integer coordinates, got shape {n.shape}")
    mat = np.array([[0.0, -1j * n[0]], [1j * n[0], 0.0]], dtype=complex)
    for k in range(2, d + 1):
        nk = float(n[k - 1])
        half = mat.shape[0] // 2
        if k % 2 == 0:
            bump = np.diag(
                np.concatenate([np.full(half, nk), np.full(half, -nk)])
            ).astype(complex)
            mat = mat + bump
        else:
            size = mat.shape[0]
            eye = np.eye(size, dtype=complex)
            up = mat - 1j * nk * eye
            new = np.zeros((2 * size, 2 * size), dtype=complex)
            new[:size, size:] = up
            new[size:, :size] = matops.dagger(up)
            mat = new
    return mat


@lru_cache(maxsize=None)
def _word_length_table(generators: tuple[int, ...], radius: int) -> dict[int, int]:
    """Breadth-first word lengths on Z out to |g| <= radius."""
    table = {0: 0}
    frontier = [0]
    steps = sorted({s for g in generators for s in (g, -g)})
    # BFS never needs to leave [-radius - max|s|, ...]; expand until stable
    bound = radius + max(abs(s) for s in steps)
    depth = 0
    while frontier:
        depth += 1
        nxt = []
        for x in frontier:
            for s in steps:
                y = x + s
                if abs(y) <= bound and y not in table:
                    table[y] = depth
                    nxt.append(y)
        frontier = nxt
    return table


@dataclass(frozen=True)
class LengthFunction:
    """Proper translation-bounded length data on Z or Z^d.

    kind 'iota' is the signed identity on Z, 'wordlength' the word length
    for a generating set of Z, 'ld' the matrix-valued recursion on Z^d.
    ``l(0) = 0`` in every case.
    """

    kind: str
    generators: tuple[int, ...] = ()
    d: int = 1

    def __post_init__(self):
        if self.kind not in ("iota", "wordlength", "ld"):
            raise InputError(f"unknown length kind {self.kind!r}")
        if self.kind in ("iota", "wordlength") and self.d != 1:
            raise InputError("scalar length functions live on Z")
        if self.kind == "wordlength":
            gens = tuple(abs(int(g)) for g in self.generators)
            if not gens or 0 in gens:
                raise InputError("word length needs nonzero generators")
            if math.gcd(*gens) != 1:
                raise InputError("generators do not generate Z")
        if self.kind == "ld" and not 1 <= self.d <= 6:
            raise CapacityError("matrix-valued lengths are supported for 1 <= d <= 6")

    @property
    def scalar(self) -> bool:
        return self.kind in ("iota", "wordlength")

    @property
    def matrix_size(self) -> int:
        return 1 if self.scalar else 2 ** math.ceil(self.d / 2)

    @property
    def open_case(self) -> bool:
        """Word lengths from generating sets other than {1} have unknown
        Lip behaviour; reports tag them."""
        return self.kind == "wordlength" and set(
            abs(g) for g in self.generators
        ) != {1}

    def value(self, g):
        """Scalar value (float) for scalar kinds, Hermitian matrix for 'ld'."""
        if self.kind == "iota":
            (n,) = _as_int_tuple(g, 1)
            return float(n)
        if self.kind == "wordlength":
            (n,) = _as_int_tuple(g, 1)
            table = _word_length_table(self.generators, abs(n))
            if n not in table:
                raise InputError(f"{n} is not reachable from the generators")
            return float(table[n])
        return length_matrix(self.d, _as_int_tuple(g, self.d))

    def matrix_value(self, g) -> np.ndarray:
        """The value as a matrix regardless of kind (1x1 for scalar kinds)."""
        v = self.value(g)
        if self.scalar:
            return np.array([[v]], dtype=complex)
        return v


def _as_int_tuple(g, d: int) -> tuple[int, ...]:
    if isinstance(g, (int, np.integer)):
        g = (int(g),)
    g = tuple(int(x) for x in g)
    if len(g) != d:
        raise InputError(f"group element {g} has wrong rank, expected {d}")
    return g


def translation_spread(l: LengthFunction, g, window: LatticeWindow) -> float:
    """sup over the window of ``|l(x) - l(g^{-1} x)|`` (operator norm for
    matrix values).

    For the identity length the difference is constantly ``g``, so the exact
    value ``|g|`` is returned without scanning.
    """
    if l.kind == "iota":
        (n,) = _as_int_tuple(g, 1)
        return float(abs(n))
    gg = _as_int_tuple(g, l.d if l.kind == "ld" else 1)
    if any(abs(x) > 2 * window.N for x in gg):
        raise InputError("translation element lies outside twice the window radius")
    best = 0.0
    for p in window.points:
        q = tuple(a - b for a, b in zip(p, gg))
        diff = l.matrix_value(p) - l.matrix_value(q)
        size = float(np.abs(diff[0, 0])) if diff.size == 1 else matops.opnorm(diff)
        best = max(best, size)
    return best


def m_l_operator(l: LengthFunction, window: LatticeWindow) -> np.ndarray:
    """Multiplication by the length function on the window.

    Diagonal for scalar kinds; for matrix values the operator is block
    diagonal with block ``l(x)`` at window point ``x`` (point-major layout
    on ``l^2(window) (x) C^s``).
    """
    if l.scalar:
        if window.d != 1:
            raise InputError("scalar length functions need a 1-d window")
        return np.diag(
            [l.value(p) for p in window.points]
        ).astype(complex)
    if window.d != l.d:
        raise InputError("window dimension does not match the length function")
    return matops.blockdiag([l.matrix_value(p) for p in window.points])


@dataclass(frozen=True)
class PropernessReport:
    histogram: dict[float, int]
    warnings: tuple[str, ...]


def properness_report(l: LengthFunction, window: LatticeWindow,
                      round_tol: float = 1e-9) -> PropernessReport:
    """Histogram of eigenvalue multiplicities of ``M_l`` over the window.

    Properness requires every level set to stay finite; as a finite-window
    heuristic, a value whose count grows by at least the radius when the
    window is doubled is flagged.
    """

    def hist(win: LatticeWindow) -> Counter:
        c: Counter = Counter()
        for p in win.points:
            m = l.matrix_value(p)
            if m.shape == (1, 1):
                vals = [float(m[0, 0].real)]
            else:
                vals = [float(x) for x in np.linalg.eigvalsh(m)]
            for v in vals:
                c[round(v / round_tol) * round_tol] += 1
        return c

    base = hist(window)
    doubled = hist(LatticeWindow(window.d, 2 * window.N))
    warnings = []
    for val, count in sorted(base.items()):
        grown = doubled.get(val, 0) - count
        if grown >= max(2, window.N):
            warnings.append(
                f"eigenvalue {val:g} multiplicity grew from {count} to "
                f"{doubled.get(val, 0)} when doubling the window"
            )
    return PropernessReport({float(k): int(v) for k, v in sorted(base.items())},
                            tuple(warnings))


class GroupWindowAlgebra:
    """Window truncation of the group *-algebra of Z^d.

    Basis elements are the translations ``lam_n`` for ``n`` in the window;
    the star permutes ``n -> -n`` and multiplication is convolution, which
    raises :class:`CapacityError` if it would leave the window.
    """

    def __init__(self, window: LatticeWindow):
        self.window = window
        self.dim = window.size
        self.label = f"C*(Z^{window.d})|N={window.N}"
        self.commutative = True

    def unit(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.window.origin_index] = 1.0
        return v

    def star_matrix(self) -> np.ndarray:
        s = np.zeros((self.dim, self.dim))
        for i, p in enumerate(self.window.points):
            neg = tuple(-x for x in p)
            s[self.window.index[neg], i] = 1.0
        return s

    def star(self, v: np.ndarray) -> np.ndarray:
        return self.star_matrix() @ np.conj(np.asarray(v, dtype=complex))

    def mult(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        out = np.zeros(self.dim, dtype=complex)
        u = np.asarray(u, dtype=complex)
        v = np.asarray(v, dtype=complex)
        for i, p in enumerate(self.window.points):
            if u[i] == 0:
                continue
            for j, q in enumerate(self.window.points):
                if v[j] == 0:
                    continue
                r = tuple(a + b for a, b in zip(p, q))
                k = self.window.index.get(r)
                if k is None:
                    raise CapacityError(
                        f"product support {r} leaves the window (radius {self.window.N})"
                    )
                out[k] += u[i] * v[j]
        return out


def group_window_triple(l: LengthFunction, window: LatticeWindow):
    """Odd triple on the truncated group algebra: translations act by
    zero-padded shifts and the Dirac operator is multiplication by the
    length function.

    Shift truncation and the diagonal Dirac satisfy the commutation rule
    ``[M_l, S_n] = (l - l(. - n)) S_n`` exactly, with no boundary defect.
    """
    from .triple import SpectralTriple  # local import to avoid a cycle

    alg = GroupWindowAlgebra(window)
    dirac = m_l_operator(l, window)
    s = l.matrix_size
    shifts = {p: window.shift_matrix(p) for p in window.points}

    if s == 1:
        def rep(v):
            v = np.asarray(v, dtype=complex)
            out = np.zeros((window.size, window.size), dtype=complex)
            for i, p in enumerate(window.points):
                if v[i] != 0:
                    out += v[i] * shifts[p]
            return out
    else:
        eye_s = np.eye(s, dtype=complex)

        def rep(v):
            v = np.asarray(v, dtype=complex)
            out = np.zeros((window.size, window.size), dtype=complex)
            for i, p in enumerate(window.points):
                if v[i] != 0:
                    out += v[i] * shifts[p]
            return np.kron(out, eye_s)

    return SpectralTriple(alg, rep, dirac, parity="odd",
                          meta={"construction": "group_window",
                                "length_kind": l.kind,
                                "open_case": l.open_case})
