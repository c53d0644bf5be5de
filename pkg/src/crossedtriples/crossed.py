"""Truncated crossed products: covariant representations, Dirac operators,
Fourier coefficients and cut-down estimates.

The covariant representation acts on ``H_A (x) l^2(window)`` with the
coefficient algebra twisted fiberwise by the inverse group element and the
translations realized as zero-padded truncated shifts.  Zero padding keeps
the two commutator identities that drive everything here exact on the
truncation:

* ``[D_A (x) 1, a]`` is block diagonal with blocks ``[D_A, pi(alpha_{-g}(a))]``,
* ``[1 (x) M_l, a lam_h] = (1 (x) M_{l(.) - l(. - h)}) a lam_h``.

Norm evaluations are window truncations; they are exact for suprema that
close up over a period and reported with convergence flags otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import matops
from .dynamics import ActionModel, Certificate, LevelAction, equicontinuity_sup
from .errors import CapacityError, CommutationError, InputError, ParityError
from .groupgeo import LatticeWindow, LengthFunction, m_l_operator
from .triple import SpectralTriple, even_triple, seminorm


@dataclass
class CrossedElement:
    """Finitely supported sum ``sum_g x_g lam_g`` with algebra coefficients.

    Keys are lattice points (ints are accepted for rank one), values are
    coefficient coordinate vectors.  The element itself is window free;
    windows only enter when it is represented.
    """

    coeffs: dict
    d: int = 1

    def __post_init__(self):
        fixed = {}
        for g, v in self.coeffs.items():
            if isinstance(g, (int, np.integer)):
                g = (int(g),)
            g = tuple(int(x) for x in g)
            if len(g) != self.d:
                raise InputError(f"support point {g} has rank != {self.d}")
            fixed[g] = np.asarray(v, dtype=complex)
        self.coeffs = fixed

    @property
    def support(self) -> tuple:
        return tuple(sorted(self.coeffs.keys()))

    @property
    def support_radius(self) -> int:
        if not self.coeffs:
            return 0
        return max(max(abs(x) for x in g) for g in self.coeffs)

    def scale(self, c: complex) -> "CrossedElement":
        return CrossedElement({g: c * v for g, v in self.coeffs.items()}, self.d)

    def to_json(self) -> dict:
        return {
            "terms": [
                {
                    "k": list(g) if self.d > 1 else g[0],
                    "coeff": [[float(z.real), float(z.imag)] for z in v],
                }
                for g, v in sorted(self.coeffs.items())
            ]
        }

    @classmethod
    def from_json(cls, doc: dict, d: int = 1) -> "CrossedElement":
        coeffs = {}
        for term in doc["terms"]:
            k = term["k"]
            v = np.array([complex(re, im) for re, im in term["coeff"]])
            coeffs[tuple(k) if isinstance(k, (list, tuple)) else (int(k),)] = v
        return cls(coeffs, d)


class CrossedAlgebraWindow:
    """Coordinate space of crossed elements supported in a window.

    Coordinates are point major: index ``p * dim_A + i`` is the i-th
    coefficient coordinate at window point ``p``.  The star twists the
    reflected coefficient by the group element, ``(x*)_k = alpha_k((x_{-k})*)``,
    which closes inside a symmetric window; multiplication adds supports and
    raises :class:`CapacityError` if the product leaves the window.
    """

    def __init__(self, coefficient, actions, window: LatticeWindow, level: int = -1):
        if len(actions) != window.d:
            raise InputError("need one Z-action per window dimension")
        self.coefficient = coefficient
        self.actions = list(actions)
        self.level = level
        self.window = window
        self.dim = window.size * coefficient.dim
        self.commutative = False
        self.label = f"({getattr(coefficient, 'label', '?')}) x| Z^{window.d}"

    def point_slice(self, p) -> slice:
        i = self.window.index[self.window.as_point(p)]
        return slice(i * self.coefficient.dim, (i + 1) * self.coefficient.dim)

    def twist(self, p) -> np.ndarray:
        """Coordinate matrix of ``alpha_p`` (positive power convention)."""
        p = self.window.as_point(p)
        out = np.eye(self.coefficient.dim, dtype=complex)
        for x, act in zip(p, self.actions):
            out = act.generator_power(x, self.level) @ out
        return out

    def unit(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.point_slice((0,) * self.window.d)] = self.coefficient.unit()
        return v

    def element(self, x: CrossedElement) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        for g, coeff in x.coeffs.items():
            if not self.window.contains(g):
                raise CapacityError(f"support point {g} outside the window")
            v[self.point_slice(g)] = coeff
        return v

    def as_element(self, v: np.ndarray, tol: float = 0.0) -> CrossedElement:
        v = np.asarray(v, dtype=complex).reshape(self.dim)
        coeffs = {}
        for p in self.window.points:
            block = v[self.point_slice(p)]
            if np.abs(block).max() > tol:
                coeffs[p] = block.copy()
        return CrossedElement(coeffs, self.window.d)

    def star_matrix(self) -> np.ndarray:
        da = self.coefficient.dim
        s_a = self.coefficient.star_matrix()
        s = np.zeros((self.dim, self.dim), dtype=complex)
        for p in self.window.points:
            neg = tuple(-x for x in p)
            s[self.point_slice(p), self.point_slice(neg)] = self.twist(p) @ s_a
        return s

    def star(self, v: np.ndarray) -> np.ndarray:
        return self.star_matrix() @ np.conj(np.asarray(v, dtype=complex))

    def mult(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        x = self.as_element(u)
        y = self.as_element(v)
        out = np.zeros(self.dim, dtype=complex)
        for g, xg in x.coeffs.items():
            tw = self.twist(g)
            for hpt, yh in y.coeffs.items():
                k = tuple(a + b for a, b in zip(g, hpt))
                if not self.window.contains(k):
                    raise CapacityError(
                        f"product support {k} leaves the window (radius {self.window.N})"
                    )
                out[self.point_slice(k)] += self.coefficient.mult(xg, tw @ yh)
        return out


class CovariantRep:
    """Covariant pair ``(pi_tilde, lam)`` on ``H_A (x) l^2(window)``.

    ``pi_tilde(a)`` is block diagonal over window points with block
    ``pi(alpha_{g^{-1}}(a))`` in the fiber over ``g``; ``lam(h)`` is the
    zero-padded truncated shift.  The covariance identity
    ``lam_h pi_tilde(a) lam_h* = pi_tilde(alpha_h(a))`` holds exactly on
    vectors supported ``|h|`` away from the boundary.
    """

    def __init__(self, rep: Callable, h: int, actions, window: LatticeWindow,
                 level: int = -1, boundary: str = "zero-pad"):
        if boundary not in ("zero-pad", "interior-project"):
            raise InputError(f"unknown boundary handling {boundary!r}")
        if len(actions) != window.d:
            raise InputError("need one Z-action per window dimension")
        self.rep = rep
        self.h = h
        self.actions = list(actions)
        self.window = window
        self.level = level
        self.boundary = boundary
        self._shift_cache: dict = {}

    @property
    def half_dim(self) -> int:
        return self.h * self.window.size

    def twist_inv(self, p) -> np.ndarray:
        """Coordinate matrix of ``alpha_{p^{-1}}``."""
        p = self.window.as_point(p)
        out = None
        for x, act in zip(p, self.actions):
            m = act.generator_power(-x, self.level)
            out = m if out is None else m @ out
        return out

    def pi_tilde(self, v: np.ndarray) -> np.ndarray:
        w = self.window.size
        out = np.zeros((self.h * w, self.h * w), dtype=complex)
        for gi, p in enumerate(self.window.points):
            out[gi::w, gi::w] = self.rep(self.twist_inv(p) @ v)
        return out

    def lam(self, hpt) -> np.ndarray:
        hpt = self.window.as_point(hpt)
        if hpt not in self._shift_cache:
            self._shift_cache[hpt] = np.kron(
                np.eye(self.h), self.window.shift_matrix(hpt)
            )
        return self._shift_cache[hpt]

    def interior_compression(self, margin: int) -> np.ndarray:
        """Projection onto vectors supported ``margin`` away from the edge."""
        w = self.window.size
        keep = np.zeros(w)
        keep[self.window.interior_indices(margin)] = 1.0
        return np.kron(np.eye(self.h), np.diag(keep)).astype(complex)

    def assemble(self, x: CrossedElement) -> np.ndarray:
        """Matrix of ``sum_g pi_tilde(x_g) lam_g`` on the half space."""
        out = np.zeros((self.half_dim, self.half_dim), dtype=complex)
        for g, coeff in x.coeffs.items():
            out += self.pi_tilde(coeff) @ self.lam(g)
        return out

    def covariance_defect(self, v: np.ndarray, hpt) -> float:
        """Norm of the covariance identity defect on interior vectors."""
        hpt = self.window.as_point(hpt)
        margin = max(abs(x) for x in hpt)
        lam = self.lam(hpt)
        alpha_h = None
        for x, act in zip(hpt, self.actions):
            m = act.generator_power(x, self.level)
            alpha_h = m if alpha_h is None else m @ alpha_h
        diff = lam @ self.pi_tilde(v) @ matops.dagger(lam) - self.pi_tilde(alpha_h @ v)
        return matops.opnorm(diff @ self.interior_compression(margin))


def covariant_rep(t: SpectralTriple, action: ActionModel, window: LatticeWindow,
                  level: int = -1, boundary: str = "zero-pad") -> CovariantRep:
    """Covariant representation of a coefficient triple over a 1-d window."""
    if window.d != 1:
        raise InputError("single actions pair with 1-d windows")
    return CovariantRep(t.rep, t.hilbert_dim, [action], window, level, boundary)


def _check_capacity(dim: int, max_dim: int) -> None:
    if dim > max_dim:
        raise CapacityError(f"construction dimension {dim} exceeds {max_dim}")


def crossed_dirac_even(t: SpectralTriple, action: ActionModel, l: LengthFunction,
                       window: LatticeWindow, level: int = -1,
                       boundary: str = "zero-pad",
                       max_dim: int = matops.MAX_DIM) -> SpectralTriple:
    """Even triple on the truncated crossed product of an odd triple.

    The Dirac corner is ``D_A (x) 1 - i (x) M_l`` and the crossed element
    ``x`` acts diagonally as ``x (+) x`` through the covariant
    representation.  For the trivial action this is exactly the tensor
    product triple with the group window triple.
    """
    if t.parity != "odd":
        raise ParityError("coefficient triple must be odd")
    if not l.scalar:
        raise InputError("the even construction uses a scalar length function")
    if window.d != 1:
        raise InputError("the even construction runs over a 1-d window")
    h, w = t.hilbert_dim, window.size
    _check_capacity(2 * h * w, max_dim)
    cov = CovariantRep(t.rep, h, [action], window, level, boundary)
    da_full = np.kron(t.dirac, np.eye(w))
    ml_full = np.kron(np.eye(h), m_l_operator(l, window))
    corner = da_full - 1j * ml_full
    alg = CrossedAlgebraWindow(t.algebra, [action], window, level)

    def rep_half(v):
        return cov.assemble(alg.as_element(v))

    out = even_triple(alg, rep_half, rep_half, corner, meta={
        "construction": "crossed_even",
        "covariant": cov,
        "coefficient": t,
        "action": action,
        "level": level,
        "length": l,
        "window": window,
        "da_full": da_full,
        "ml_full": ml_full,
        "boundary": boundary,
    })
    return out


def crossed_dirac_odd(t: SpectralTriple, action: ActionModel, l: LengthFunction,
                      window: LatticeWindow, level: int = -1,
                      boundary: str = "zero-pad",
                      max_dim: int = matops.MAX_DIM) -> SpectralTriple:
    """Odd triple on the truncated crossed product of an even triple.

    With corner block ``C`` of the coefficient triple, the Dirac operator is
    ``[[1 (x) M_l, C (x) 1], [C* (x) 1, -1 (x) M_l]]`` on
    ``(H_0 (x) l^2) (+) (H_1 (x) l^2)``.  The output carries no grading.
    """
    if t.parity != "even":
        raise ParityError("coefficient triple must be even (graded)")
    if not l.scalar:
        raise InputError("the odd construction uses a scalar length function")
    if window.d != 1:
        raise InputError("the odd construction runs over a 1-d window")
    m = t.half_dim
    w = window.size
    _check_capacity(2 * m * w, max_dim)

    def rep0(v):
        return t.rep_halves(v)[0]

    def rep1(v):
        return t.rep_halves(v)[1]

    cov0 = CovariantRep(rep0, m, [action], window, level, boundary)
    cov1 = CovariantRep(rep1, m, [action], window, level, boundary)
    ml = np.kron(np.eye(m), m_l_operator(l, window))
    c_full = np.kron(t.corner, np.eye(w))
    half = m * w
    dirac = np.zeros((2 * half, 2 * half), dtype=complex)
    dirac[:half, :half] = ml
    dirac[half:, half:] = -ml
    dirac[:half, half:] = c_full
    dirac[half:, :half] = matops.dagger(c_full)
    alg = CrossedAlgebraWindow(t.algebra, [action], window, level)

    def rep(v):
        x = alg.as_element(v)
        out = np.zeros((2 * half, 2 * half), dtype=complex)
        out[:half, :half] = cov0.assemble(x)
        out[half:, half:] = cov1.assemble(x)
        return out

    return SpectralTriple(alg, rep, dirac, parity="odd", meta={
        "construction": "crossed_odd",
        "covariant": (cov0, cov1),
        "coefficient": t,
        "action": action,
        "level": level,
        "length": l,
        "window": window,
        "boundary": boundary,
    })


@dataclass(frozen=True)
class CrossedSeminorms:
    """The three commutator norms of a crossed element and their status.

    ``against_da`` is exact (a finite maximum over period residues) for
    single-term elements under periodic actions, window-truncated otherwise;
    ``full`` always satisfies
    ``max(against_da, against_ml) <= full <= against_da + against_ml``.
    """

    against_da: float
    against_ml: float
    full: float
    window_converged: bool
    da_exact: bool
    certificate: Certificate | None


def crossed_half_matrix(ct: SpectralTriple, x: CrossedElement) -> np.ndarray:
    """Half-space matrix of a crossed element in an even crossed triple."""
    cov: CovariantRep = ct.meta["covariant"]
    return cov.assemble(x)


def crossed_seminorms(x: CrossedElement, ct: SpectralTriple,
                      window_bump: int = 4) -> CrossedSeminorms:
    """Evaluate ``||[x, D_A (x) 1]||``, ``||[x, 1 (x) M_l]||`` and
    ``||[D, x (+) x]||`` on the truncation.

    The full norm is recomputed on a window enlarged by ``window_bump`` and
    flagged converged when the change is below 1e-8.  The envelope
    inequality between the three values is asserted.
    """
    if ct.meta.get("construction") != "crossed_even":
        raise InputError("seminorms are evaluated on an even crossed triple")
    window: LatticeWindow = ct.meta["window"]
    if x.support_radius >= window.N:
        raise InputError("element support must lie inside the window interior")
    cov: CovariantRep = ct.meta["covariant"]
    xm = cov.assemble(x)
    da_full = ct.meta["da_full"]
    ml_full = ct.meta["ml_full"]
    against_da = matops.opnorm(matops.commutator(xm, da_full))
    against_ml = matops.opnorm(matops.commutator(xm, ml_full))
    corner = ct.corner
    full = max(
        matops.opnorm(matops.commutator(corner, xm)),
        matops.opnorm(matops.commutator(matops.dagger(corner), xm)),
    )
    scale = max(full, 1.0)
    if max(against_da, against_ml) > full + 1e-9 * scale or \
            full > against_da + against_ml + 1e-9 * scale:
        raise AssertionError("envelope inequality violated; numerical failure")

    action: ActionModel = ct.meta["action"]
    level = ct.meta["level"]
    p = action.levels[level].period
    da_exact = False
    certificate = None
    if p is not None:
        certificate = Certificate("exact-by-period", period=p)
        if len(x.coeffs) == 1:
            ((hpt, _coeff),) = x.coeffs.items()
            da_exact = (2 * window.N + 1 - abs(hpt[0])) >= p
    else:
        certificate = Certificate("window-bounded", range=window.N)

    bigger = crossed_dirac_even(
        ct.meta["coefficient"], action, ct.meta["length"],
        LatticeWindow(1, window.N + window_bump), level,
        boundary=ct.meta["boundary"],
    )
    xm2 = bigger.meta["covariant"].assemble(x)
    corner2 = bigger.corner
    full2 = max(
        matops.opnorm(matops.commutator(corner2, xm2)),
        matops.opnorm(matops.commutator(matops.dagger(corner2), xm2)),
    )
    converged = abs(full2 - full) < 1e-8
    return CrossedSeminorms(against_da, against_ml, full, converged, da_exact,
                            certificate)


def fourier_coefficient(xm: np.ndarray, ct: SpectralTriple, k) -> np.ndarray:
    """Coefficient ``x_k`` read from the matrix of a crossed element.

    Compresses ``x lam_{-k}`` to the fiber over the window origin, i.e. the
    conditional expectation onto the coefficient algebra after shifting,
    then inverts the (faithful) coefficient representation.  Exact for
    elements supported inside the window.
    """
    cov: CovariantRep = ct.meta["covariant"]
    window = cov.window
    kpt = window.as_point(k)
    neg = tuple(-x for x in kpt)
    if not window.contains(neg):
        raise InputError(f"coefficient index {kpt} outside the window")
    w = window.size
    i0 = window.origin_index
    ik = window.index[neg]
    block = np.asarray(xm)[i0::w, ik::w]
    coeff_t: SpectralTriple = ct.meta["coefficient"]
    if "rep_tensor" not in ct.meta:
        ct.meta["rep_tensor"] = coeff_t.rep_tensor()
    tensor = ct.meta["rep_tensor"]
    mat = tensor.reshape(tensor.shape[0], -1).T
    coords, *_ = np.linalg.lstsq(mat, block.reshape(-1), rcond=None)
    return coords


@dataclass(frozen=True)
class CutdownResult:
    truncated: CrossedElement
    residual: float


def cutdown(x: CrossedElement, n_cut: int, ct: SpectralTriple) -> CutdownResult:
    """Keep the Fourier modes with ``|k| <= n_cut`` and report the norm of
    the rest.

    The truncation agrees with the banded compression
    ``sum_{|k| <= n} sum_m P_m x P_{m+k}`` of the element's matrix; both are
    computed and compared to 1e-12 before the residual norm is taken.
    """
    if n_cut < 0:
        raise InputError("cut radius must be nonnegative")
    cov: CovariantRep = ct.meta["covariant"]
    window = cov.window
    if n_cut >= window.N - x.support_radius:
        raise InputError(
            "cut radius must stay below window radius minus support radius"
        )
    xm = cov.assemble(x)
    w = window.size
    band_mask = np.zeros((w, w))
    for i, p in enumerate(window.points):
        for j, q in enumerate(window.points):
            if max(abs(a - b) for a, b in zip(p, q)) <= n_cut:
                band_mask[i, j] = 1.0
    full_mask = np.kron(np.ones((cov.h, cov.h)), band_mask)
    banded = xm * full_mask
    kept = CrossedElement(
        {g: v for g, v in x.coeffs.items() if max(abs(c) for c in g) <= n_cut},
        x.d,
    )
    direct = cov.assemble(kept)
    if np.abs(direct - banded).max() > 1e-12 * max(1.0, np.abs(xm).max()):
        raise AssertionError("banded compression disagrees with the kept modes")
    residual = matops.opnorm(xm - banded)
    return CutdownResult(kept, residual)


@dataclass(frozen=True)
class ActionBoundRow:
    label: str
    value: float
    certificate: Certificate


def commuting_action_bound(t: SpectralTriple, action: ActionModel,
                           other: ActionModel, window: LatticeWindow,
                           l: LengthFunction | None = None, level: int = -1,
                           basis: list[CrossedElement] | None = None,
                           window_range: int = 16,
                           support_radius: int | None = None) -> list[ActionBoundRow]:
    """Suprema ``sup_{g'} ||[D, beta_{g'}(b)]||`` for the canonical extension
    of a commuting action to the crossed truncation.

    The two actions must commute at the coefficient level (checked, with a
    witness in the error).  Each row carries a period or window certificate
    inherited from the second action.
    """
    ga = action.levels[level].generator
    gb = other.levels[level].generator
    defect = np.abs(ga @ gb - gb @ ga).max()
    if defect > 1e-10 * max(1.0, np.abs(ga).max() * np.abs(gb).max()):
        raise CommutationError(
            f"actions do not commute at level {level}: max defect {defect:.3e}"
        )
    l = l or LengthFunction("iota")
    ct = crossed_dirac_even(t, action, l, window, level)
    alg: CrossedAlgebraWindow = ct.algebra
    lift = np.kron(np.eye(window.size), gb)
    p = other.levels[level].period
    if p is not None:
        scan = list(range(p))
        cert = Certificate("exact-by-period", period=p)
    else:
        scan = list(range(-window_range, window_range + 1))
        cert = Certificate("window-bounded", range=window_range)
    if basis is None:
        da = t.algebra.dim
        eye = np.eye(da, dtype=complex)
        reach = min(2, window.N - 1) if support_radius is None else support_radius
        basis = [
            CrossedElement({(g,): eye[:, i]})
            for g in range(-reach, reach + 1)
            for i in range(da)
        ]
        labels = [
            f"lam_{g}*e{i}"
            for g in range(-reach, reach + 1)
            for i in range(da)
        ]
    else:
        labels = [f"x{j}" for j in range(len(basis))]
    rows = []
    powers = {}
    for lbl, b in zip(labels, basis):
        coords = alg.element(b)
        best = 0.0
        for g in scan:
            if g not in powers:
                powers[g] = np.linalg.matrix_power(lift, g) if g >= 0 else \
                    np.linalg.matrix_power(np.linalg.inv(lift), -g)
            best = max(best, seminorm(ct, powers[g] @ coords))
        rows.append(ActionBoundRow(lbl, best, cert))
    return rows


def _pairwise_commutation_check(actions, level: int) -> None:
    for i in range(len(actions)):
        for j in range(i + 1, len(actions)):
            gi = actions[i].levels[level].generator
            gj = actions[j].levels[level].generator
            defect = np.abs(gi @ gj - gj @ gi).max()
            if defect > 1e-10 * max(1.0, np.abs(gi).max() * np.abs(gj).max()):
                raise CommutationError(
                    f"coordinate actions {i} and {j} do not commute: "
                    f"max defect {defect:.3e}"
                )


def iterate_zd(t: SpectralTriple, actions, windows, level: int = -1,
               max_dim: int = matops.MAX_DIM) -> SpectralTriple:
    """Alternate the even and odd crossed constructions over commuting
    Z-actions, one lattice direction at a time.

    Output parity is odd for an even number of directions and even for an
    odd number.  Coordinate order is the caller's; commutation of the
    actions is verified up front and equicontinuity certificates for each
    coordinate action are collected on the coefficient triple.
    """
    actions = list(actions)
    if isinstance(windows, LatticeWindow):
        windows = [windows] * len(actions)
    windows = list(windows)
    if len(windows) != len(actions):
        raise InputError("need one window per action")
    if any(w.d != 1 for w in windows):
        raise InputError("iteration runs over rank-one windows")
    _pairwise_commutation_check(actions, level)
    iota = LengthFunction("iota")
    certificates = []
    eye = np.eye(t.algebra.dim, dtype=complex)
    for i, act in enumerate(actions):
        sups = [
            equicontinuity_sup(t, act, eye[:, j], level=level)
            for j in range(t.algebra.dim)
        ]
        certificates.append({
            "coordinate": i,
            "max_over_basis": max(v for v, _ in sups),
            "certificate": sups[0][1].as_json(),
        })
    current = t
    lifted = [act for act in actions]
    cur_level = level
    for step, win in enumerate(windows):
        act = lifted[step]
        if current.parity == "odd":
            current = crossed_dirac_even(current, act, iota, win, cur_level,
                                         max_dim=max_dim)
        else:
            current = crossed_dirac_odd(current, act, iota, win, cur_level,
                                        max_dim=max_dim)
        # lift the remaining coordinate actions through this crossed layer
        for j in range(step + 1, len(lifted)):
            prev = lifted[j]
            gen = np.kron(np.eye(win.size), prev.levels[cur_level].generator)
            lifted[j] = ActionModel(
                [LevelAction(gen, prev.levels[cur_level].period)],
                label=prev.label + "~",
            )
        cur_level = -1
    current.meta["equicontinuity_chain"] = certificates
    current.meta["construction"] = "iterate_zd"
    return current


def direct_zd_dirac(t: SpectralTriple, actions, window: LatticeWindow,
                    level: int = -1, max_dim: int = matops.MAX_DIM) -> SpectralTriple:
    """One-shot Z^d crossed triple from the matrix-valued length function.

    The Dirac operator is the spinor off-diagonal ``D_A (x) 1`` plus
    ``1 (x) M_l`` for the recursive matrix length on Z^d; it matches the
    iterated construction up to an index permutation.  Parity is odd for
    even d.
    """
    d = window.d
    if len(actions) != d:
        raise InputError("need one Z-action per lattice direction")
    _pairwise_commutation_check(actions, level)
    if t.parity != "odd":
        raise ParityError("coefficient triple must be odd")
    l = LengthFunction("ld", d=d)
    s = l.matrix_size
    h, w = t.hilbert_dim, window.size
    _check_capacity(h * w * s, max_dim)
    flip = np.zeros((s, s))
    flip[: s // 2, s // 2:] = np.eye(s // 2)
    flip[s // 2:, : s // 2] = np.eye(s // 2)
    dirac = np.kron(np.kron(t.dirac, np.eye(w)), flip) + \
        np.kron(np.eye(h), m_l_operator(l, window))
    cov = CovariantRep(t.rep, h, actions, window, level)
    alg = CrossedAlgebraWindow(t.algebra, actions, window, level)
    meta = {
        "construction": "direct_zd",
        "covariant": cov,
        "length": l,
        "window": window,
    }
    if d % 2 == 0:
        eye_s = np.eye(s, dtype=complex)

        def rep(v):
            return np.kron(cov.assemble(alg.as_element(v)), eye_s)

        return SpectralTriple(alg, rep, dirac, parity="odd", meta=meta)
    # odd rank: the length value and the spinor flip are both off-diagonal
    # with respect to the spinor halves, so permuting the spinor index to
    # the outside exposes the balanced even form
    hw = h * w
    half_s = s // 2
    old = np.arange(hw * s).reshape(hw, s)
    order = np.concatenate([old[:, :half_s].reshape(-1),
                            old[:, half_s:].reshape(-1)])
    permuted = dirac[np.ix_(order, order)]
    m = hw * half_s
    if np.abs(permuted[:m, :m]).max() > 1e-12 or np.abs(permuted[m:, m:]).max() > 1e-12:
        raise AssertionError("odd-rank Dirac operator is not spinor off-diagonal")
    corner = permuted[:m, m:]
    eye_half = np.eye(half_s, dtype=complex)

    def rep_half(v):
        return np.kron(cov.assemble(alg.as_element(v)), eye_half)

    return even_triple(alg, rep_half, rep_half, corner, meta=meta)
