"""Matrix-polynomial symbols and polynomial nonlinearities.

A constant-coefficient differential operator ``P(d_1, ..., d_d)`` acting on
``C^m``-valued fields is stored through its symbol

    P(x) = sum_alpha a_alpha x^alpha,    a_alpha in C^{m x m},

and its Fourier multiplier is ``P(i xi)``. Multi-indices are plain tuples of
non-negative ints; coefficient maps are kept in a canonical form (no zero
matrices, graded-lexicographic order) so that equality and serialization are
deterministic.
"""
from __future__ import annotations

from math import factorial, prod
from typing import Iterable, Iterator, Mapping

import numpy as np

MultiIndex = tuple[int, ...]


def graded_lex_key(alpha: MultiIndex) -> tuple:
    """Sort key: total degree first, then lexicographic with x_1 dominant."""
    return (sum(alpha), tuple(-a for a in alpha))


def _check_index(alpha, d: int) -> MultiIndex:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != d:
        raise ValueError(f"multi-index {alpha} has length {len(alpha)}, expected d={d}")
    if any(a < 0 for a in alpha):
        raise ValueError(f"multi-index {alpha} has a negative entry")
    return alpha


def falling_factorial(n: int, k: int) -> int:
    return prod(range(n - k + 1, n + 1)) if k <= n else 0


def multi_factorial(alpha: MultiIndex) -> int:
    return prod(factorial(a) for a in alpha)


class MatrixPolynomial:
    """Polynomial in ``d`` variables with ``m x m`` complex matrix coefficients.

    Instances are immutable; arithmetic returns new objects.
    """

    __slots__ = ("d", "m", "_coeffs")

    def __init__(self, d: int, m: int, coeffs: Mapping[Iterable[int], object] | None = None):
        if d < 0 or m < 1:
            raise ValueError(f"invalid dimensions d={d}, m={m}")
        self.d = int(d)
        self.m = int(m)
        acc: dict[MultiIndex, np.ndarray] = {}
        for alpha, c in (coeffs or {}).items():
            alpha = _check_index(alpha, self.d)
            c = np.array(c, dtype=complex)
            if c.ndim == 0:
                c = c * np.eye(self.m, dtype=complex) if self.m > 1 else c.reshape(1, 1)
            if c.shape != (self.m, self.m):
                raise ValueError(f"coefficient for {alpha} has shape {c.shape}, expected {(self.m, self.m)}")
            acc[alpha] = acc[alpha] + c if alpha in acc else c
        canon = {a: c for a, c in acc.items() if np.any(c != 0)}
        self._coeffs = {a: canon[a] for a in sorted(canon, key=graded_lex_key)}
        for c in self._coeffs.values():
            c.setflags(write=False)

    # construction helpers -------------------------------------------------
    @classmethod
    def scalar(cls, d: int, coeffs: Mapping[Iterable[int], complex]) -> "MatrixPolynomial":
        return cls(d, 1, {a: np.array([[c]], dtype=complex) for a, c in coeffs.items()})

    @classmethod
    def from_entries(cls, d: int, m: int, entries: Iterable[tuple]) -> "MatrixPolynomial":
        """Build from ``(alpha, row, col, re, im)`` records (rows/cols 0-based)."""
        acc: dict[MultiIndex, np.ndarray] = {}
        for alpha, row, col, re, im in entries:
            alpha = _check_index(alpha, d)
            if not (0 <= row < m and 0 <= col < m):
                raise ValueError(f"entry ({row}, {col}) outside a {m}x{m} matrix")
            mat = acc.setdefault(alpha, np.zeros((m, m), dtype=complex))
            mat[row, col] += complex(re, im)
        return cls(d, m, acc)

    @classmethod
    def diagonal(cls, blocks: list["MatrixPolynomial"]) -> "MatrixPolynomial":
        """Block-diagonal assembly of scalar symbols sharing the same ``d``."""
        d = blocks[0].d
        m = len(blocks)
        acc: dict[MultiIndex, np.ndarray] = {}
        for n, b in enumerate(blocks):
            if b.m != 1 or b.d != d:
                raise ValueError("diagonal() expects scalar symbols with a common d")
            for alpha, c in b.items():
                acc.setdefault(alpha, np.zeros((m, m), dtype=complex))[n, n] = c[0, 0]
        return cls(d, m, acc)

    # access ----------------------------------------------------------------
    @property
    def coeffs(self) -> dict[MultiIndex, np.ndarray]:
        return dict(self._coeffs)

    def items(self) -> Iterator[tuple[MultiIndex, np.ndarray]]:
        return iter(self._coeffs.items())

    def __getitem__(self, alpha) -> np.ndarray:
        alpha = _check_index(alpha, self.d)
        return self._coeffs.get(alpha, np.zeros((self.m, self.m), dtype=complex))

    def __len__(self) -> int:
        return len(self._coeffs)

    @property
    def degree(self) -> int:
        return max((sum(a) for a in self._coeffs), default=0)

    @property
    def real_coefficients(self) -> bool:
        return all(not np.any(c.imag) for c in self._coeffs.values())

    @property
    def is_zero(self) -> bool:
        return not self._coeffs

    @property
    def is_diagonal(self) -> bool:
        off = ~np.eye(self.m, dtype=bool)
        return all(not np.any(c[off]) for c in self._coeffs.values())

    def entries(self) -> list[tuple[MultiIndex, int, int, float, float]]:
        out = []
        for alpha, c in self._coeffs.items():
            for i in range(self.m):
                for j in range(self.m):
                    if c[i, j] != 0:
                        out.append((alpha, i, j, float(c[i, j].real), float(c[i, j].imag)))
        return out

    # arithmetic ------------------------------------------------------------
    def _compatible(self, other: "MatrixPolynomial") -> None:
        if (self.d, self.m) != (other.d, other.m):
            raise ValueError(f"incompatible symbols: (d, m)={self.d, self.m} vs {other.d, other.m}")

    def __add__(self, other: "MatrixPolynomial") -> "MatrixPolynomial":
        self._compatible(other)
        acc = {a: c.copy() for a, c in self._coeffs.items()}
        for a, c in other.items():
            acc[a] = acc[a] + c if a in acc else c.copy()
        return MatrixPolynomial(self.d, self.m, acc)

    def __neg__(self) -> "MatrixPolynomial":
        return MatrixPolynomial(self.d, self.m, {a: -c for a, c in self._coeffs.items()})

    def __sub__(self, other: "MatrixPolynomial") -> "MatrixPolynomial":
        return self + (-other)

    def __mul__(self, s: complex) -> "MatrixPolynomial":
        return MatrixPolynomial(self.d, self.m, {a: s * c for a, c in self._coeffs.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatrixPolynomial):
            return NotImplemented
        if (self.d, self.m) != (other.d, other.m) or list(self._coeffs) != list(other._coeffs):
            return False
        return all(np.array_equal(c, other._coeffs[a]) for a, c in self._coeffs.items())

    def __hash__(self):
        return hash((self.d, self.m, tuple(self._coeffs)))

    def __repr__(self) -> str:
        terms = []
        for alpha, c in self._coeffs.items():
            val = c[0, 0] if self.m == 1 else c.tolist()
            terms.append(f"{alpha}: {val}")
        return f"MatrixPolynomial(d={self.d}, m={self.m}, {{{', '.join(terms)}}})"

    def __call__(self, xi) -> np.ndarray:
        return eval_symbol(self, xi)


def _monomials(alphas: list[MultiIndex], z: np.ndarray) -> np.ndarray:
    """Evaluate ``z^alpha`` for every alpha; ``z`` has shape (..., d)."""
    out = np.empty((len(alphas),) + z.shape[:-1], dtype=complex)
    for n, alpha in enumerate(alphas):
        val = np.ones(z.shape[:-1], dtype=complex)
        for axis, a in enumerate(alpha):
            if a:
                val = val * z[..., axis] ** a
        out[n] = val
    return out


def eval_at(P: MatrixPolynomial, x) -> np.ndarray:
    """Evaluate ``P(x)`` at (possibly complex) points ``x`` of shape (d,) or (..., d)."""
    x = np.asarray(x, dtype=complex)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != P.d:
        raise ValueError(f"point has {x.shape[-1]} coordinates, symbol expects d={P.d}")
    out = np.zeros(x.shape[:-1] + (P.m, P.m), dtype=complex)
    if P.is_zero:
        return out
    alphas = list(P._coeffs)
    mono = _monomials(alphas, x)
    for n, alpha in enumerate(alphas):
        out += mono[n][..., None, None] * P._coeffs[alpha]
    return out


def eval_symbol(P: MatrixPolynomial, xi) -> np.ndarray:
    """Fourier multiplier ``P(i xi)``.

    ``xi`` is a real d-vector, or an array of shape (..., d) for batched
    evaluation; the result has shape (..., m, m).
    """
    xi = np.asarray(xi)
    if xi.ndim == 0:
        xi = xi.reshape(1)
    if xi.shape[-1] != P.d:
        raise ValueError(f"xi has {xi.shape[-1]} coordinates, symbol expects d={P.d}")
    return eval_at(P, 1j * xi)


def differentiate(P: MatrixPolynomial, alpha) -> MatrixPolynomial:
    """Exact formal derivative ``d^alpha P / dx^alpha``."""
    alpha = _check_index(alpha, P.d)
    acc = {}
    for beta, c in P.items():
        if all(b >= a for b, a in zip(beta, alpha)):
            scale = prod(falling_factorial(b, a) for b, a in zip(beta, alpha))
            acc[tuple(b - a for b, a in zip(beta, alpha))] = scale * c
    return MatrixPolynomial(P.d, P.m, acc)


class PolynomialNonlinearity:
    """Polynomial map ``f: C^m -> C^m`` stored as exponent vector -> coefficient vector.

    ``f(u) = sum_e c_e * u_1^{e_1} ... u_m^{e_m}`` with ``c_e`` in ``C^m``.
    Problem files only admit real coefficients, which makes ``f`` commute with
    complex conjugation.
    """

    __slots__ = ("m", "_terms")

    def __init__(self, m: int, terms: Mapping[Iterable[int], object]):
        self.m = int(m)
        acc: dict[MultiIndex, np.ndarray] = {}
        for e, c in terms.items():
            e = _check_index(e, self.m)
            c = np.array(c, dtype=complex).reshape(-1)
            if c.shape != (self.m,):
                raise ValueError(f"coefficient for {e} must have length m={self.m}")
            acc[e] = acc[e] + c if e in acc else c
        canon = {e: c for e, c in acc.items() if np.any(c != 0)}
        self._terms = {e: canon[e] for e in sorted(canon, key=graded_lex_key)}
        for c in self._terms.values():
            c.setflags(write=False)

    @classmethod
    def from_entries(cls, m: int, entries: Iterable[tuple]) -> "PolynomialNonlinearity":
        """Build from ``(exponents, component, coefficient)`` records."""
        acc: dict[MultiIndex, np.ndarray] = {}
        for e, comp, coef in entries:
            e = _check_index(e, m)
            if not 0 <= comp < m:
                raise ValueError(f"component {comp} outside 0..{m - 1}")
            acc.setdefault(e, np.zeros(m, dtype=complex))[comp] += coef
        return cls(m, acc)

    @property
    def terms(self) -> dict[MultiIndex, np.ndarray]:
        return dict(self._terms)

    def items(self):
        return iter(self._terms.items())

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=0)

    @property
    def real_coefficients(self) -> bool:
        return all(not np.any(c.imag) for c in self._terms.values())

    def entries(self) -> list[tuple[MultiIndex, int, float]]:
        return [
            (e, i, float(c[i].real))
            for e, c in self._terms.items()
            for i in range(self.m)
            if c[i] != 0
        ]

    def as_table(self) -> tuple[np.ndarray, np.ndarray]:
        """Exponents ``(T, m)`` int and coefficients ``(T, m)`` complex."""
        if not self._terms:
            return np.zeros((0, self.m), dtype=np.int64), np.zeros((0, self.m), dtype=complex)
        exps = np.array(list(self._terms), dtype=np.int64)
        coeffs = np.array(list(self._terms.values()), dtype=complex)
        return exps, coeffs

    def __call__(self, u) -> np.ndarray:
        return eval_nonlinearity(self, u)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolynomialNonlinearity):
            return NotImplemented
        return (
            self.m == other.m
            and list(self._terms) == list(other._terms)
            and all(np.array_equal(c, other._terms[e]) for e, c in self._terms.items())
        )

    def __hash__(self):
        return hash((self.m, tuple(self._terms)))

    def __repr__(self) -> str:
        return f"PolynomialNonlinearity(m={self.m}, {{{', '.join(f'{e}: {c.tolist()}' for e, c in self._terms.items())}}})"


def eval_nonlinearity(f: PolynomialNonlinearity, u) -> np.ndarray:
    """``f(u)`` for ``u`` of shape (m,) or (m, ...) (fields along trailing axes)."""
    u = np.asarray(u, dtype=complex)
    if u.ndim == 0 or u.shape[0] != f.m:
        raise ValueError(f"u must have leading dimension m={f.m}, got shape {u.shape}")
    out = np.zeros(u.shape, dtype=complex)
    tail = (slice(None),) + (None,) * (u.ndim - 1)
    for e, c in f.items():
        mono = np.ones(u.shape[1:], dtype=complex)
        for comp, p in enumerate(e):
            if p:
                mono = mono * u[comp] ** p
        out += c[tail] * mono
    return out


def conjugation_symmetric(obj) -> bool:
    """Exact test of ``P(i xi) = conj P(-i xi)`` or ``f(conj u) = conj f(u)``.

    Both reduce to every stored coefficient being real.
    """
    if isinstance(obj, (MatrixPolynomial, PolynomialNonlinearity)):
        return obj.real_coefficients
    raise TypeError(f"cannot test conjugation symmetry of {type(obj).__name__}")
