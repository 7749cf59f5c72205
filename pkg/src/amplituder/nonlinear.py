"""Fourier-coefficient reduction of a polynomial nonlinearity.

Substituting ``u = sum_n A_n exp(i j_n theta) w_n`` into ``f`` gives a
trigonometric polynomial in the carrier phase ``theta`` whose coefficients
``C_j(A)`` are polynomials in the amplitudes. Projecting the resonant
coefficient onto each carrier's eigenvector gives the reaction terms of the
amplitude system.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .symbols import MultiIndex, PolynomialNonlinearity, eval_nonlinearity, graded_lex_key


class ReducedPolynomial:
    """Polynomial in ``n_vars`` complex amplitudes with scalar or vector coefficients.

    ``target`` is ``None`` for scalar-valued polynomials and ``m`` for
    ``C^m``-valued ones.
    """

    __slots__ = ("n_vars", "target", "_terms")

    def __init__(self, n_vars: int, terms: Mapping[Sequence[int], object] | None = None, target: int | None = None):
        self.n_vars = int(n_vars)
        self.target = target
        shape = () if target is None else (target,)
        acc: dict[MultiIndex, np.ndarray] = {}
        for e, c in (terms or {}).items():
            e = tuple(int(x) for x in e)
            if len(e) != self.n_vars or any(x < 0 for x in e):
                raise ValueError(f"bad exponent vector {e} for {self.n_vars} variables")
            c = np.asarray(c, dtype=complex).reshape(shape)
            acc[e] = acc[e] + c if e in acc else c.copy()
        canon = {e: c for e, c in acc.items() if np.any(c != 0)}
        self._terms = {e: canon[e] for e in sorted(canon, key=graded_lex_key)}

    # access ----------------------------------------------------------------
    @property
    def terms(self) -> dict[MultiIndex, np.ndarray]:
        return dict(self._terms)

    def items(self):
        return iter(self._terms.items())

    def coefficient(self, exps) -> complex | np.ndarray:
        zero = 0j if self.target is None else np.zeros(self.target, dtype=complex)
        c = self._terms.get(tuple(exps))
        if c is None:
            return zero
        return complex(c) if self.target is None else c.copy()

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=0)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def max_abs_imag(self) -> float:
        return max((float(np.max(np.abs(c.imag))) for c in self._terms.values()), default=0.0)

    def __len__(self):
        return len(self._terms)

    # algebra ---------------------------------------------------------------
    def _check(self, other: "ReducedPolynomial"):
        if self.n_vars != other.n_vars or self.target != other.target:
            raise ValueError("incompatible reduced polynomials")

    def __add__(self, other: "ReducedPolynomial") -> "ReducedPolynomial":
        self._check(other)
        acc = dict(self._terms)
        for e, c in other.items():
            acc[e] = acc[e] + c if e in acc else c
        return ReducedPolynomial(self.n_vars, acc, self.target)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s: complex) -> "ReducedPolynomial":
        return ReducedPolynomial(self.n_vars, {e: s * c for e, c in self._terms.items()}, self.target)

    def dot(self, l) -> "ReducedPolynomial":
        """Scalar polynomial ``l . C`` (plain bilinear product, no conjugation)."""
        if self.target is None:
            raise ValueError("dot() needs a vector-valued polynomial")
        l = np.asarray(l, dtype=complex)
        return ReducedPolynomial(self.n_vars, {e: l @ c for e, c in self._terms.items()}, None)

    def substitute(self, mapping: Sequence[int], n_new: int) -> "ReducedPolynomial":
        """Rename variable ``v`` to ``mapping[v]``; merged variables multiply."""
        if len(mapping) != self.n_vars:
            raise ValueError("mapping must list a target for every variable")
        acc: dict[MultiIndex, np.ndarray] = {}
        for e, c in self._terms.items():
            new = [0] * n_new
            for v, p in enumerate(e):
                new[mapping[v]] += p
            new = tuple(new)
            acc[new] = acc[new] + c if new in acc else c
        return ReducedPolynomial(n_new, acc, self.target)

    def derivative(self, var: int) -> "ReducedPolynomial":
        acc = {}
        for e, c in self._terms.items():
            if e[var]:
                ne = list(e)
                ne[var] -= 1
                acc[tuple(ne)] = e[var] * c
        return ReducedPolynomial(self.n_vars, acc, self.target)

    def chop(self, tol: float = 1e-14) -> "ReducedPolynomial":
        """Zero out real/imaginary parts below ``tol`` times the largest coefficient."""
        if not self._terms:
            return self
        scale = max(float(np.max(np.abs(c))) for c in self._terms.values())
        out = {}
        for e, c in self._terms.items():
            re = np.where(np.abs(c.real) > tol * scale, c.real, 0.0)
            im = np.where(np.abs(c.imag) > tol * scale, c.imag, 0.0)
            out[e] = re + 1j * im
        return ReducedPolynomial(self.n_vars, out, self.target)

    def allclose(self, other: "ReducedPolynomial", atol: float = 1e-12) -> bool:
        self._check(other)
        keys = set(self._terms) | set(other._terms)
        return all(np.all(np.abs(np.asarray(self.coefficient(e)) - other.coefficient(e)) <= atol) for e in keys)

    # evaluation ------------------------------------------------------------
    def __call__(self, A) -> np.ndarray:
        return self.evaluate(A)

    def evaluate(self, A) -> np.ndarray:
        """Evaluate at ``A`` of shape ``(n_vars,)`` or ``(n_vars, ...)``.

        Scalar polynomials return shape ``(...)``; vector ones ``(m, ...)``.
        """
        A = np.asarray(A, dtype=complex)
        if A.shape[:1] != (self.n_vars,):
            raise ValueError(f"expected {self.n_vars} amplitudes, got shape {A.shape}")
        rest = A.shape[1:]
        lead = () if self.target is None else (self.target,)
        out = np.zeros(lead + rest, dtype=complex)
        tail = (Ellipsis,) + (None,) * len(rest)
        powers: dict[tuple[int, int], np.ndarray] = {}
        for e, c in self._terms.items():
            mono = np.ones(rest, dtype=complex)
            for v, p in enumerate(e):
                if p:
                    key = (v, p)
                    if key not in powers:
                        powers[key] = A[v] ** p
                    mono = mono * powers[key]
            out += c[tail] * mono
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, ReducedPolynomial):
            return NotImplemented
        return (
            self.n_vars == other.n_vars
            and self.target == other.target
            and list(self._terms) == list(other._terms)
            and all(np.array_equal(c, other._terms[e]) for e, c in self._terms.items())
        )

    def __hash__(self):
        return hash((self.n_vars, self.target, tuple(self._terms)))

    def __repr__(self) -> str:
        return f"ReducedPolynomial({self.n_vars}, {self.to_string()!r}, target={self.target})"

    def to_string(self, names: Sequence[str] | None = None, digits: int = 12) -> str:
        """Human-readable form, e.g. ``A_1 - 3*A_1^2*A_2`` (scalar only)."""
        if self.target is not None:
            return "[" + ", ".join(
                ReducedPolynomial(self.n_vars, {e: c[i] for e, c in self._terms.items()}).to_string(names, digits)
                for i in range(self.target)
            ) + "]"
        names = names or [f"A_{v + 1}" for v in range(self.n_vars)]
        if not self._terms:
            return "0"
        parts = []
        for e, c in self._terms.items():
            c = complex(c)
            mono = "*".join(
                names[v] if p == 1 else f"{names[v]}^{p}" for v, p in enumerate(e) if p
            )
            if c.imag == 0:
                val = c.real
                sign = "-" if val < 0 else "+"
                mag = abs(val)
                coef = "" if mono and mag == 1 else f"{mag:.{digits}g}"
            else:
                sign = "+"
                coef = f"({c.real:.{digits}g}{c.imag:+.{digits}g}j)"
            body = "*".join(x for x in (coef, mono) if x) or "1"
            parts.append((sign, body))
        s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s


def jacobian(polys: Sequence[ReducedPolynomial], A) -> np.ndarray:
    """Exact Jacobian matrix ``d polys[a] / d A_b`` at the point ``A``."""
    A = np.asarray(A, dtype=complex)
    n = len(polys)
    J = np.empty((n, polys[0].n_vars), dtype=complex)
    for a, p in enumerate(polys):
        for b in range(p.n_vars):
            J[a, b] = np.asarray(p.derivative(b).evaluate(A)).item()
    return J


# --------------------------------------------------------------------------
# exact Fourier coefficients


Carrier = tuple  # (j_n, w_n)

# A trigonometric polynomial: {(frequency, exponents): coefficient}
_Trig = dict


def _trig_mul(a: _Trig, b: _Trig) -> _Trig:
    out: _Trig = {}
    for (fa, ea), ca in a.items():
        for (fb, eb), cb in b.items():
            key = (fa + fb, tuple(x + y for x, y in zip(ea, eb)))
            out[key] = out.get(key, 0) + ca * cb
    return out


def _carrier_field(carriers: Sequence[Carrier], m: int) -> list[_Trig]:
    N = len(carriers)
    comps = []
    for c in range(m):
        tp: _Trig = {}
        for n, (j, w) in enumerate(carriers):
            wc = complex(np.asarray(w, dtype=complex).reshape(-1)[c])
            if wc != 0:
                e = tuple(1 if v == n else 0 for v in range(N))
                tp[(int(j), e)] = tp.get((int(j), e), 0) + wc
        comps.append(tp)
    return comps


def support_bound(f: PolynomialNonlinearity, carriers: Sequence[Carrier]) -> int:
    return f.degree * max((abs(int(j)) for j, _ in carriers), default=0)


def fourier_coefficients_exact(f: PolynomialNonlinearity, carriers: Sequence[Carrier]) -> dict[int, ReducedPolynomial]:
    """All nonzero ``C_j`` as vector-valued polynomials in the ``N`` amplitudes."""
    js = [int(j) for j, _ in carriers]
    if len(set(js)) != len(js):
        raise ValueError("carrier integers must be distinct")
    N, m = len(carriers), f.m
    comps = _carrier_field(carriers, m)
    one: _Trig = {(0, (0,) * N): 1.0}
    cache: dict[tuple[int, int], _Trig] = {}

    def power(c: int, p: int) -> _Trig:
        if p == 0:
            return one
        if (c, p) not in cache:
            cache[(c, p)] = _trig_mul(power(c, p - 1), comps[c])
        return cache[(c, p)]

    acc: dict[int, dict] = {}
    for e, coef in f.items():
        tp = one
        for c, p in enumerate(e):
            if p:
                tp = _trig_mul(tp, power(c, p))
        for (freq, ex), val in tp.items():
            slot = acc.setdefault(freq, {})
            slot[ex] = slot.get(ex, np.zeros(m, dtype=complex)) + val * coef
    bound = support_bound(f, carriers)
    out = {}
    for freq in sorted(acc):
        poly = ReducedPolynomial(N, acc[freq], target=m)
        if poly.is_zero:
            continue
        assert abs(freq) <= bound, "support bound violated"
        out[freq] = poly
    return out


def fourier_coefficient_exact(f: PolynomialNonlinearity, carriers: Sequence[Carrier], j: int) -> ReducedPolynomial:
    """Exact ``C_j``; the zero polynomial beyond the support bound."""
    fam = fourier_coefficients_exact(f, carriers)
    return fam.get(int(j), ReducedPolynomial(len(carriers), {}, target=f.m))


def default_quad_points(f: PolynomialNonlinearity, carriers: Sequence[Carrier], j: int) -> int:
    return 4 * (support_bound(f, carriers) + abs(int(j))) + 1


def fourier_coefficient_quadrature(
    f, carriers: Sequence[Carrier], A, j: int, quad_points: int | None = None, m: int | None = None
) -> np.ndarray:
    """Trapezoid-rule ``C_j(A)`` over one carrier period.

    ``f`` is a :class:`PolynomialNonlinearity` or any callable mapping an
    ``(m, Q)`` array to an ``(m, Q)`` array (then ``quad_points`` and ``m``
    are required).
    """
    if isinstance(f, PolynomialNonlinearity):
        m = f.m
        quad_points = quad_points or default_quad_points(f, carriers, j)
        fn = lambda u: eval_nonlinearity(f, u)  # noqa: E731
    else:
        if quad_points is None or m is None:
            raise ValueError("callable f needs explicit quad_points and m")
        fn = f
    A = np.asarray(A, dtype=complex)
    th = 2 * np.pi * np.arange(quad_points) / quad_points
    u = np.zeros((m, quad_points), dtype=complex)
    for n, (jn, w) in enumerate(carriers):
        u += A[n] * np.exp(1j * jn * th)[None, :] * np.asarray(w, dtype=complex).reshape(m, 1)
    F = fn(u)
    return F @ np.exp(-1j * j * th) / quad_points


def project_Rn(Cjn: ReducedPolynomial, l, w=None) -> ReducedPolynomial:
    """Scalar reaction term ``l_n . C_{j_n}`` (so that ``Pi_n C = R_n w_n``)."""
    return Cjn.dot(l).chop()


def symmetric_reduce(R: ReducedPolynomial, J: Sequence[int]) -> ReducedPolynomial:
    """Identify each negative-carrier amplitude with its positive partner.

    Variables are renumbered so the positive carriers come first in the
    order they appear in ``J``.
    """
    J = [int(j) for j in J]
    pos = [j for j in J if j > 0]
    if sorted(pos) != sorted(-j for j in J if j < 0):
        raise ValueError("J is not symmetric under negation")
    mapping = [pos.index(abs(j)) for j in J]
    return R.substitute(mapping, len(pos)).chop()


# --------------------------------------------------------------------------
# symmetry checks


def check_equivariance(
    family: Mapping[int, ReducedPolynomial], J: Sequence[int], thetas, A_samples
) -> float:
    """Max of ``|C_j(e^{i j_n theta} A_n) - e^{i j theta} C_j(A)|``."""
    J = np.asarray(J)
    worst = 0.0
    for A in A_samples:
        A = np.asarray(A, dtype=complex)
        for th in np.atleast_1d(thetas):
            rot = A * np.exp(1j * J * th)
            for j, C in family.items():
                d = np.abs(C.evaluate(rot) - np.exp(1j * j * th) * C.evaluate(A)).max()
                worst = max(worst, float(d))
    return worst


def _swap(J: Sequence[int]) -> list[int]:
    J = list(J)
    return [J.index(-j) for j in J]


def conjugation_form(carriers: Sequence[Carrier], tol: float = 1e-12) -> str:
    """``"plain"`` when ``w_{-n} = w_n``, ``"conjugate"`` when ``w_{-n} = conj(w_n)``."""
    J = [int(j) for j, _ in carriers]
    W = [np.asarray(w, dtype=complex) for _, w in carriers]
    idx = _swap(J)
    if all(np.allclose(W[idx[n]], W[n], atol=tol) for n in range(len(J))):
        return "plain"
    if all(np.allclose(W[idx[n]], np.conj(W[n]), atol=tol) for n in range(len(J))):
        return "conjugate"
    raise ValueError("partner eigenvectors are neither equal nor conjugate")


def check_conjugation(
    family: Mapping[int, ReducedPolynomial], J: Sequence[int], A_samples, form: str = "plain"
) -> float:
    """Max defect of ``C_j(A_+, A_-) = C_{-j}(A_-, A_+)``.

    With ``form="conjugate"`` (partner eigenvectors are complex conjugates)
    the identity checked is ``C_j(A_+, A_-) = conj C_{-j}(conj A_-, conj A_+)``.
    """
    idx = _swap(J)
    worst = 0.0
    for A in A_samples:
        A = np.asarray(A, dtype=complex)
        As = A[idx]
        for j, C in family.items():
            other = family.get(-j)
            lhs = C.evaluate(A)
            if form == "plain":
                rhs = other.evaluate(As) if other is not None else 0 * lhs
            else:
                rhs = np.conj(other.evaluate(np.conj(As))) if other is not None else 0 * lhs
            worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


# --------------------------------------------------------------------------
# amplitude system


@dataclass
class AmplitudeSystem:
    """Amplitude equations ``dA_n/dt = Q_n(d) A_n + eps * R_n(A)``.

    In ``"symmetric"`` mode only the positive carriers are kept and the
    reaction terms are the reduced ``S_n``.
    """

    mode: str
    J: list
    Q: list
    reactions: list
    w: list
    l: list
    M: int
    R_general: list = field(default_factory=list, repr=False)
    C: dict = field(default_factory=dict, repr=False)
    checks: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return len(self.reactions)

    def reaction(self, A) -> np.ndarray:
        A = np.asarray(A, dtype=complex)
        return np.stack([p.evaluate(A) for p in self.reactions])


def derive(critical, f: PolynomialNonlinearity, samples: int = 16, seed: int = 0) -> AmplitudeSystem:
    """Build the amplitude system for ``f`` from a critical structure.

    Also records the equivariance, conjugation and exact-vs-quadrature
    defects on a fixed set of random amplitudes.
    """
    if f.m != len(critical.w[0]):
        raise ValueError(f"nonlinearity has m={f.m}, symbol has m={len(critical.w[0])}")
    J = list(critical.J)
    carriers = list(zip(J, critical.w))
    C = fourier_coefficients_exact(f, carriers)
    N = len(J)
    zero = ReducedPolynomial(N, {}, target=f.m)
    R = [project_Rn(C.get(j, zero), critical.l[n]) for n, j in enumerate(J)]

    rng = np.random.default_rng(seed)
    A = rng.standard_normal((samples, N)) + 1j * rng.standard_normal((samples, N))
    checks: dict[str, float | bool] = {}
    checks["equivariance_defect"] = check_equivariance(C, J, np.linspace(0, 2 * np.pi, 8, endpoint=False), A)
    quad = 0.0
    for a in A[:4]:
        for j in range(-support_bound(f, carriers), support_bound(f, carriers) + 1):
            exact = C[j].evaluate(a) if j in C else np.zeros(f.m)
            quad = max(quad, float(np.abs(exact - fourier_coefficient_quadrature(f, carriers, a, j)).max()))
    checks["quadrature_defect"] = quad

    closed = all(-j in J for j in J)
    if closed:
        form = conjugation_form(carriers)
        checks["conjugation_form"] = form
        checks["conjugation_defect"] = check_conjugation(C, J, A, form)

    if critical.symmetric:
        S_all = [symmetric_reduce(r, J) for r in R]
        idx = _swap(J)
        same = all(S_all[n].allclose(S_all[idx[n]], atol=1e-12) for n in range(N))
        real = all(s.max_abs_imag <= 1e-12 for s in S_all)
        checks["symmetric_consistent"] = bool(same and real)
        if same and real:
            keep = [n for n, j in enumerate(J) if j > 0]
            S = [ReducedPolynomial(s.n_vars, {e: c.real for e, c in s.items()}) for s in (S_all[n] for n in keep)]
            return AmplitudeSystem(
                "symmetric",
                [J[n] for n in keep],
                [critical.Q[n] for n in keep],
                S,
                [critical.w[n] for n in keep],
                [critical.l[n] for n in keep],
                critical.eta_exponent,
                R,
                C,
                checks,
            )
    return AmplitudeSystem("general", J, list(critical.Q), R, list(critical.w), list(critical.l), critical.eta_exponent, R, C, checks)
