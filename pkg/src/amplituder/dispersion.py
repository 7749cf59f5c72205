"""Eigenvalue-branch analysis of the Fourier multiplier ``P(i xi)``.

Locates the resonant integers ``J``, the degeneracy order ``M`` of the
critical branch, the amplitude symbols ``Q_n`` and the eigenvector data
``(w_n, l_n)`` used to project the nonlinearity.

Taylor coefficients of the critical branch are obtained from a complex
contour stencil: the eigenvalue is analytic in ``xi`` near a simple
eigenvalue, so its coefficients are discrete Fourier coefficients of samples
on a small circle (or polydisc) around the critical wavenumber.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.optimize import minimize_scalar

from .symbols import MatrixPolynomial, conjugation_symmetric, differentiate, eval_at, eval_symbol

TOL_CRIT = 1e-9
MARGIN = 1e-6
COND_MAX = 1e8
EIG_SEP_TOL = 1e-8
J_MAX = 16
MAX_ORDER = 8


class DispersionError(Exception):
    """Base class for failed dispersion assumptions."""


class NonDiagonalizable(DispersionError):
    def __init__(self, xi, cond):
        self.xi = np.asarray(xi)
        self.cond = float(cond)
        super().__init__(f"eigenvector matrix condition {cond:.3e} at xi={self.xi.tolist()}")


class BranchAmbiguity(UserWarning):
    """Two branch matchings tie; the smallest-index matching was used."""


class BranchTrackingFailure(DispersionError):
    pass


class EllipticityFailure(DispersionError):
    def __init__(self, witness, value):
        self.witness = np.asarray(witness)
        self.value = value
        super().__init__(f"ellipticity fails at xi={self.witness.tolist()} (Re={value:.6g})")


class EmptyCriticalSet(DispersionError):
    pass


class OrderExceeded(DispersionError):
    pass


class DegenerateEigenvalue(DispersionError):
    pass


class TaylorCrossCheckFailure(DispersionError):
    pass


# --------------------------------------------------------------------------
# branches


@dataclass(frozen=True)
class EigenBranch:
    branch_id: int
    xi: np.ndarray
    values: np.ndarray
    cond: np.ndarray
    ambiguous: np.ndarray

    @property
    def samples(self):
        return list(zip(self.xi, self.values))

    @property
    def max_real(self) -> float:
        return float(np.max(self.values.real))


def _as_grid(grid, d: int) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim == 1 and d == 1:
        g = g[:, None]
    if g.ndim != 2 or g.shape[1] != d or g.shape[0] == 0:
        raise ValueError(f"grid must be a nonempty list of {d}-vectors")
    return g


def _spectrum(P: MatrixPolynomial, xi: np.ndarray, cond_max: float):
    mats = eval_symbol(P, xi)
    vals, vecs = np.linalg.eig(mats)
    if P.m == 1:
        cond = np.ones(len(xi))
    else:
        cond = np.linalg.cond(vecs)
        bad = np.flatnonzero(~(cond <= cond_max))
        if bad.size:
            raise NonDiagonalizable(xi[bad[0]], cond[bad[0]])
    return vals, cond


def _sort_desc(vals: np.ndarray) -> np.ndarray:
    """Per row: descending real part, then descending imaginary part."""
    order = np.lexsort((-vals.imag, -vals.real), axis=-1)
    return np.take_along_axis(vals, order, axis=-1)


def track_branches(
    P: MatrixPolynomial,
    grid,
    mode: str = "continuity",
    cond_max: float = COND_MAX,
    tie_tol: float = 1e-12,
) -> list[EigenBranch]:
    """Split the spectrum of ``P(i xi)`` over ``grid`` into ``m`` branches.

    ``mode="continuity"`` matches consecutive points by the permutation of
    least total distance (ties go to the lexicographically smallest
    permutation and raise a :class:`BranchAmbiguity` warning).
    ``mode="sorted"`` orders eigenvalues pointwise by real part, which keeps
    branch 1 equal to the spectral abscissa everywhere.
    """
    if mode not in ("continuity", "sorted"):
        raise ValueError(f"unknown tracking mode {mode!r}")
    xi = _as_grid(grid, P.d)
    vals, cond = _spectrum(P, xi, cond_max)
    m = P.m
    ambiguous = np.zeros(len(xi), dtype=bool)
    if mode == "sorted" or m == 1:
        out = _sort_desc(vals)
    else:
        out = np.empty_like(vals)
        out[0] = _sort_desc(vals[:1])[0]
        perms = [list(p) for p in itertools.permutations(range(m))]
        for n in range(1, len(xi)):
            prev, cur = out[n - 1], vals[n]
            costs = np.array([np.abs(cur[p] - prev).sum() for p in perms])
            best = int(np.argmin(costs))
            ranked = np.sort(costs)
            if ranked[1] - ranked[0] <= tie_tol * (1.0 + np.abs(prev).max()) and not np.allclose(
                cur[perms[best]], cur[perms[np.argsort(costs)[1]]], atol=tie_tol
            ):
                ambiguous[n] = True
            out[n] = cur[perms[best]]
        if ambiguous.any():
            warnings.warn(
                f"branch matching tied at {int(ambiguous.sum())} grid point(s)", BranchAmbiguity, stacklevel=2
            )
    return [
        EigenBranch(b + 1, xi, out[:, b].copy(), cond, ambiguous) for b in range(m)
    ]


@dataclass(frozen=True)
class StabilityReport:
    max_re_critical: float
    max_re_noncritical: float
    argmax_xi: np.ndarray
    pair_mode: bool
    passed: bool

    def as_dict(self) -> dict:
        return {
            "max_re_critical": self.max_re_critical,
            "max_re_noncritical": self.max_re_noncritical,
            "argmax_xi": np.asarray(self.argmax_xi).tolist(),
            "pair_mode": self.pair_mode,
            "pass": self.passed,
        }


def check_stability(
    branches: list[EigenBranch],
    which_critical: int = 1,
    margin: float = MARGIN,
    tol_crit: float = TOL_CRIT,
) -> StabilityReport:
    """Branch 1 must stay in the closed left half plane, the rest strictly inside.

    Conjugate-pair mode engages when branch 2 attains the same spectral
    abscissa as branch 1; then both are treated as critical.
    """
    if which_critical != 1:
        raise ValueError("the critical branch is branch 1 by construction")
    b1 = branches[0]
    max1 = b1.max_real
    arg = b1.xi[int(np.argmax(b1.values.real))]
    pair = len(branches) > 1 and branches[1].max_real >= max1 - tol_crit and max1 > -margin
    crit = 2 if pair else 1
    rest = branches[crit:]
    max_rest = max((b.max_real for b in rest), default=-np.inf)
    passed = max1 <= tol_crit and max_rest <= -margin
    return StabilityReport(max1, float(max_rest), arg, bool(pair), bool(passed))


# --------------------------------------------------------------------------
# ellipticity


def _shell_points(dim: int, c1: float, samples: int, factor: float = 4.0) -> np.ndarray:
    radii = np.linspace(c1, factor * c1, samples)
    if dim == 1:
        dirs = np.array([[1.0], [-1.0]])
    elif dim == 2:
        ang = np.linspace(0.0, 2 * np.pi, 4 * samples, endpoint=False)
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    else:
        rng = np.random.default_rng(0)
        dirs = rng.standard_normal((8 * samples, dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return (radii[:, None, None] * dirs[None, :, :]).reshape(-1, dim)


def check_ellipticity(symbol: MatrixPolynomial, c1: float, samples: int = 64) -> tuple[float, float]:
    """Largest ``c2`` with ``Re lambda(xi) <= -c2 |xi|^2`` on the shell ``c1 <= |xi| <= 4 c1``."""
    if c1 <= 0:
        raise ValueError("c1 must be positive")
    pts = _shell_points(symbol.d, c1, samples)
    mats = eval_symbol(symbol, pts)
    re = np.linalg.eigvals(mats).real.max(axis=-1)
    ratio = -re / np.sum(pts**2, axis=1)
    n = int(np.argmin(ratio))
    if not ratio[n] > 0:
        raise EllipticityFailure(pts[n], float(re[n]))
    return float(c1), float(ratio[n])


# --------------------------------------------------------------------------
# critical set


def _critical_residual(P: MatrixPolynomial, j: int, k: np.ndarray, omega: float) -> float:
    vals = np.linalg.eigvals(eval_symbol(P, j * k))
    return float(np.min(np.abs(vals - 1j * j * omega)))


def find_critical_set(
    P: MatrixPolynomial, k, omega: float, j_max: int = J_MAX, tol_crit: float = TOL_CRIT
) -> list[int]:
    """Integers ``0 < |j| <= j_max`` for which ``i j omega`` is an eigenvalue of ``P(i j k)``.

    Positive members come first in increasing order, followed by the
    negative members in the order of their positive partners.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if k.shape != (P.d,):
        raise ValueError(f"k must have {P.d} components")
    if omega == 0 and not np.any(k):
        raise ValueError("(omega, k) must not vanish simultaneously")
    if j_max < 1:
        raise ValueError("j_max must be at least 1")
    hits = [j for j in range(-j_max, j_max + 1) if j and _critical_residual(P, j, k, omega) <= tol_crit]
    if not hits:
        raise EmptyCriticalSet(f"no j in [-{j_max}, {j_max}] is critical for omega={omega}, k={k.tolist()}")
    pos = sorted(j for j in hits if j > 0)
    neg = sorted((j for j in hits if j < 0), reverse=True)
    paired = [-j for j in pos if -j in neg]
    lone = [j for j in neg if j not in paired]
    return pos + paired + lone


# --------------------------------------------------------------------------
# Taylor coefficients of the critical branch


def _multi_indices(D: int, order: int):
    """All D-tuples with total degree ``order`` in graded-lex order."""
    out = [b for b in itertools.product(range(order + 1), repeat=D) if sum(b) == order]
    return sorted(out, reverse=True)


@dataclass(frozen=True)
class BranchTaylor:
    coeffs: dict
    error: dict
    radius: float
    noise: dict


def _select_branch(P, center, target, offsets, D):
    """Eigenvalue nearest ``target`` at ``center + offsets``; None if the choice is unsafe."""
    pts = np.tile(center.astype(complex), (len(offsets), 1))
    pts[:, :D] += offsets
    vals = np.linalg.eigvals(eval_at(P, 1j * pts))
    dist = np.abs(vals - target)
    idx = np.argmin(dist, axis=1)
    chosen = vals[np.arange(len(vals)), idx]
    if P.m > 1:
        dist_sorted = np.sort(dist, axis=1)
        c0 = np.sort(np.abs(np.linalg.eigvals(eval_at(P, 1j * center[None].astype(complex)))[0] - target))
        gap = c0[1]
        if np.any(dist_sorted[:, 0] >= gap / 3) or np.any(dist_sorted[:, 1] <= 2 * gap / 3):
            return None
    return chosen


def _contour_coeffs(P, center, target, D, max_order, r):
    if D == 1:
        n = 64
        th = 2 * np.pi * np.arange(n) / n
        offs = (r * np.exp(1j * th))[:, None]
        lam = _select_branch(P, center, target, offs, D)
        if lam is None:
            return None
        c = np.fft.fft(lam) / n
        return {(p,): c[p] / r**p for p in range(max_order + 1)}
    n = 32 if D == 2 else 16
    th = 2 * np.pi * np.arange(n) / n
    grids = np.meshgrid(*([r * np.exp(1j * th)] * D), indexing="ij")
    offs = np.stack([g.ravel() for g in grids], axis=1)
    lam = _select_branch(P, center, target, offs, D)
    if lam is None:
        return None
    c = np.fft.fftn(lam.reshape((n,) * D)) / n**D
    out = {}
    for p in range(max_order + 1):
        for beta in _multi_indices(D, p):
            out[beta] = c[beta] / r**p
    return out


def branch_taylor(
    P: MatrixPolynomial,
    center,
    target: complex,
    D: int,
    max_order: int = MAX_ORDER,
    radius: float = 0.2,
    min_radius: float = 1e-3,
) -> BranchTaylor:
    """Taylor coefficients ``(1/beta!) d^beta lambda`` of the branch through ``target`` at ``center``.

    Derivatives are taken in the first ``D`` coordinates. The radius is
    halved until the branch is cleanly separated on the contour; the
    difference to a half-radius evaluation is reported as an error estimate.
    """
    center = np.asarray(center, dtype=float)
    if not 1 <= D <= P.d:
        raise ValueError(f"D must lie in 1..{P.d}")
    r = radius
    while True:
        big = _contour_coeffs(P, center, target, D, max_order, r)
        small = _contour_coeffs(P, center, target, D, max_order, r / 2) if big is not None else None
        if big is not None and small is not None:
            break
        r /= 2
        if r < min_radius:
            raise BranchTrackingFailure(
                f"critical eigenvalue at xi={center.tolist()} collides with another branch within radius {min_radius}"
            )
    scale = max(1.0, np.max(np.abs(np.linalg.eigvals(eval_symbol(P, center)))))
    eps = np.finfo(float).eps
    noise = {b: 64 * eps * scale / r ** sum(b) for b in big}
    err = {b: abs(big[b] - small[b]) for b in big}
    return BranchTaylor(big, err, r, noise)


def _exact_scalar_taylor(P: MatrixPolynomial, center, D: int, order: int) -> dict:
    x0 = 1j * np.asarray(center, dtype=float)
    out = {}
    for beta in _multi_indices(D, order):
        alpha = tuple(beta) + (0,) * (P.d - D)
        fact = np.prod([factorial(b) for b in beta])
        out[beta] = complex(eval_at(differentiate(P, alpha), x0)[0, 0]) * (1j ** order) / fact
    return out


def degeneracy_order(
    P: MatrixPolynomial,
    j: int,
    k,
    D: int,
    omega: float = 0.0,
    max_order: int = MAX_ORDER,
    tol_crit: float = TOL_CRIT,
    cross_check_tol: float = 1e-8,
) -> tuple[int, dict]:
    """Smallest order ``M`` at which the branch Taylor expansion is nonzero.

    Returns ``(M, taylor)`` where ``taylor`` maps each D-index with
    ``|beta| <= M`` to its coefficient. Scalar symbols are cross-checked
    against exact polynomial derivatives.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    center = j * k
    bt = branch_taylor(P, center, 1j * j * omega, D, max_order)
    M = None
    for p in range(1, max_order + 1):
        betas = _multi_indices(D, p)
        thresh = [max(tol_crit, 100 * bt.noise[b]) for b in betas]
        if any(abs(bt.coeffs[b]) > t for b, t in zip(betas, thresh)):
            M = p
            break
    if M is None:
        raise OrderExceeded(f"all Taylor coefficients up to order {max_order} vanish at j={j}")
    taylor = {b: complex(c) for b, c in bt.coeffs.items() if sum(b) <= M}
    if P.m == 1:
        for p in range(1, M + 1):
            for b, exact in _exact_scalar_taylor(P, center, D, p).items():
                if abs(exact - taylor[b]) > cross_check_tol * max(1.0, abs(exact)):
                    raise TaylorCrossCheckFailure(
                        f"contour coefficient {taylor[b]} vs exact {exact} for beta={b} at j={j}"
                    )
    return M, taylor


def build_Q(taylor: dict, M: int, D: int, chop: float = 1e-12) -> MatrixPolynomial:
    """Amplitude symbol ``Q(x) = sum_{|beta|=M} t_beta (x/i)^beta``."""
    coeffs = {}
    top = [b for b in taylor if sum(b) == M]
    if not top:
        raise ValueError(f"taylor data lacks order-{M} coefficients")
    scale = max(abs(taylor[b]) for b in top)
    for b in top:
        c = complex(taylor[b]) / (1j**M)
        re = c.real if abs(c.real) > chop * scale else 0.0
        im = c.imag if abs(c.imag) > chop * scale else 0.0
        coeffs[tuple(b)] = complex(re, im)
    return MatrixPolynomial.scalar(D, coeffs)


# --------------------------------------------------------------------------
# eigenvectors


def spectral_projection(
    P: MatrixPolynomial, j: int, k, omega: float, eig_sep_tol: float = EIG_SEP_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """Right/left eigenvectors for the eigenvalue ``i j omega`` of ``P(i j k)``.

    ``w`` is scaled so that its first significant entry equals one and
    ``l`` so that ``l . w = 1``.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    A = eval_symbol(P, j * k)
    vals, V = np.linalg.eig(A)
    target = 1j * j * omega
    idx = int(np.argmin(np.abs(vals - target)))
    if P.m > 1:
        sep = np.min(np.abs(np.delete(vals, idx) - vals[idx]))
        if sep < eig_sep_tol:
            raise DegenerateEigenvalue(f"eigenvalue {vals[idx]} not simple (separation {sep:.3e})")
    w = V[:, idx]
    lrow = np.linalg.inv(V)[idx]
    lead = int(np.flatnonzero(np.abs(w) > 1e-12 * np.abs(w).max())[0])
    s = w[lead]
    w = w / s
    w[lead] = 1.0
    l = lrow * s
    return _chop_vec(w), _chop_vec(l)


def _chop_vec(v: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    s = np.abs(v).max()
    re = np.where(np.abs(v.real) > tol * s, v.real, 0.0)
    im = np.where(np.abs(v.imag) > tol * s, v.imag, 0.0)
    return re + 1j * im


# --------------------------------------------------------------------------
# full analysis


@dataclass
class CriticalStructure:
    omega: float
    k: np.ndarray
    D: int
    J: list
    M: list
    w: list
    l: list
    Q: list
    taylor: list = field(repr=False)
    pair_mode: bool = False
    symmetric: bool = False

    @property
    def N(self) -> int:
        return len(self.J)

    @property
    def eta_exponent(self) -> int:
        return min(self.M)

    def eta(self, epsilon: float) -> float:
        return float(epsilon) ** (1.0 / self.eta_exponent)

    def partner(self, n: int) -> int | None:
        """Index of the carrier with wavenumber ``-J[n]`` if present."""
        try:
            return self.J.index(-self.J[n])
        except ValueError:
            return None

    @property
    def n_independent(self) -> int:
        """Number of amplitudes kept in the symmetric reduction."""
        return sum(1 for j in self.J if j > 0) if self.symmetric else self.N


@dataclass
class AnalysisReport:
    critical: CriticalStructure | None
    stability: StabilityReport | None
    ellipticity_P: tuple | None
    ellipticity_Q: list
    residuals: dict
    checks: dict
    messages: list

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def stability_grid(P: MatrixPolynomial, k, points_1d: int = 2001, points_2d: int = 121) -> np.ndarray:
    k = np.atleast_1d(np.asarray(k, dtype=float))
    R = 3.0 * (np.linalg.norm(k) + 1.0)
    if P.d == 1:
        g = np.linspace(-R, R, points_1d)[:, None]
    else:
        n = points_2d if P.d == 2 else max(9, int(round(points_2d ** (2 / P.d))))
        axes = [np.linspace(-R, R, n)] * P.d
        g = np.stack([a.ravel() for a in np.meshgrid(*axes, indexing="ij")], axis=1)
    return np.concatenate([g, k[None], -k[None]])


def analyze(
    P: MatrixPolynomial,
    k,
    omega: float,
    D: int = 1,
    f=None,
    j_max: int = J_MAX,
    tol_crit: float = TOL_CRIT,
    margin: float = MARGIN,
    cond_max: float = COND_MAX,
    eig_sep_tol: float = EIG_SEP_TOL,
    max_order: int = MAX_ORDER,
) -> AnalysisReport:
    """Check every dispersion assumption and assemble the critical structure.

    Hard failures that prevent building the structure (empty ``J``, order
    overflow, degenerate eigenvalue) raise; soft failures are recorded in
    ``checks`` so that callers can report them.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    checks: dict[str, bool] = {}
    messages: list[str] = []

    grid = stability_grid(P, k)
    branches = track_branches(P, grid, mode="sorted", cond_max=cond_max)
    stab = check_stability(branches, margin=margin, tol_crit=tol_crit)
    checks["stability"] = stab.passed

    R = 3.0 * (np.linalg.norm(k) + 1.0)
    try:
        ellP = check_ellipticity(P, R)
        checks["ellipticity_P"] = True
    except EllipticityFailure as exc:
        ellP = None
        checks["ellipticity_P"] = False
        messages.append(str(exc))

    J = find_critical_set(P, k, omega, j_max, tol_crit)
    Ms, Qs, ws, ls, tays, ellQ = [], [], [], [], [], []
    res_right, res_left = [], []
    for j in J:
        M, tay = degeneracy_order(P, j, k, D, omega, max_order, tol_crit)
        Q = build_Q(tay, M, D)
        w, l = spectral_projection(P, j, k, omega, eig_sep_tol)
        A = eval_symbol(P, j * k)
        lam = 1j * j * omega
        res_right.append(float(np.linalg.norm(A @ w - lam * w)))
        res_left.append(float(np.linalg.norm(l @ A - lam * l)))
        try:
            ellQ.append(check_ellipticity(Q, 1.0))
        except EllipticityFailure as exc:
            ellQ.append(None)
            messages.append(f"Q for j={j}: {exc}")
        Ms.append(M)
        Qs.append(Q)
        ws.append(w)
        ls.append(l)
        tays.append(tay)
    checks["ellipticity_Q"] = all(e is not None for e in ellQ)
    checks["eigenvectors"] = max(res_right + res_left) <= 1e-10

    closed = all(-j in J for j in J)
    symmetric = bool(closed and conjugation_symmetric(P) and (f is None or conjugation_symmetric(f)))
    if symmetric:
        ok = True
        for n, j in enumerate(J):
            p = J.index(-j)
            ok &= Ms[n] == Ms[p]
            a, b = Qs[n], Qs[p]
            keys = set(a.coeffs) | set(b.coeffs)
            ok &= all(np.allclose(a[key], b[key], atol=1e-10, rtol=0) for key in keys)
        checks["conjugate_symmetry"] = bool(ok)
    crit = CriticalStructure(
        omega=float(omega), k=k, D=D, J=J, M=Ms, w=ws, l=ls, Q=Qs, taylor=tays,
        pair_mode=stab.pair_mode, symmetric=symmetric,
    )
    residuals = {"eigvec_right": res_right, "eigvec_left": res_left}
    return AnalysisReport(crit, stab, ellP, ellQ, residuals, checks, messages)


def refine_wavenumber(P: MatrixPolynomial, direction, bracket: tuple[float, float], xtol: float = 1e-10) -> float:
    """Magnitude ``|k|`` along ``direction`` maximizing the spectral abscissa in ``bracket``."""
    e = np.atleast_1d(np.asarray(direction, dtype=float))
    e = e / np.linalg.norm(e)

    def neg_abscissa(s):
        return -np.linalg.eigvals(eval_symbol(P, s * e)).real.max()

    res = minimize_scalar(neg_abscissa, bounds=bracket, method="bounded", options={"xatol": xtol})
    return float(res.x)
