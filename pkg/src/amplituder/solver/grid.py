"""Periodic grids, spectral fields and envelope profiles."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np


class CarrierNotPeriodic(ValueError):
    pass


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``prod_i [-L_i/2, L_i/2)``."""

    lengths: tuple
    points: tuple

    def __post_init__(self):
        L = tuple(float(x) for x in np.atleast_1d(self.lengths))
        n = tuple(int(x) for x in np.atleast_1d(self.points))
        if len(L) != len(n) or not L:
            raise ValueError("lengths and points must have the same nonzero length")
        for ni in n:
            if ni < 8 or ni & (ni - 1):
                raise ValueError(f"grid points must be a power of two >= 8, got {ni}")
        if any(li <= 0 for li in L):
            raise ValueError("box lengths must be positive")
        object.__setattr__(self, "lengths", L)
        object.__setattr__(self, "points", n)

    @property
    def ndim(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple:
        return self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    def axis(self, i: int) -> np.ndarray:
        L, n = self.lengths[i], self.points[i]
        return -L / 2 + L * np.arange(n) / n

    def wavenumbers(self, i: int) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.points[i], self.lengths[i] / self.points[i])

    @property
    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*(self.axis(i) for i in range(self.ndim)), indexing="ij")

    @property
    def xi_mesh(self) -> np.ndarray:
        """Wavenumber vectors of every Fourier mode, shape ``(*shape, ndim)``."""
        ks = np.meshgrid(*(self.wavenumbers(i) for i in range(self.ndim)), indexing="ij")
        return np.stack(ks, axis=-1)

    @property
    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule: keep modes with ``|index| < n/3`` on every axis."""
        mask = np.ones(self.shape, dtype=bool)
        for i, n in enumerate(self.points):
            idx = np.abs(np.fft.fftfreq(n, 1.0 / n))
            keep = idx < n / 3
            mask &= keep.reshape([-1 if a == i else 1 for a in range(self.ndim)])
        return mask

    def sub(self, D: int) -> "Grid":
        """Grid formed by the first ``D`` axes (the slow directions)."""
        return Grid(self.lengths[:D], self.points[:D])

    @staticmethod
    def for_problem(critical, points, eta: float, n_periods: int = 1, slow_lengths=None) -> "Grid":
        """Box sized for a critical structure.

        Slow axes get ``n_periods * base * ceil(1/eta)`` where ``base`` is the
        carrier period along the axis (or ``2 pi/|k|`` if ``k`` has no
        component there); the remaining axes hold one carrier period.
        """
        k = np.asarray(critical.k, dtype=float)
        d, D = len(k), critical.D
        points = tuple(np.broadcast_to(np.atleast_1d(points), (d,)))
        knorm = float(np.linalg.norm(k))
        lengths = []
        for i in range(d):
            base = 2 * np.pi / abs(k[i]) if k[i] else (2 * np.pi / knorm if knorm else 2 * np.pi)
            if i < D:
                if slow_lengths is not None:
                    lengths.append(float(np.atleast_1d(slow_lengths)[i]))
                else:
                    lengths.append(n_periods * base * math.ceil(1.0 / eta - 1e-12))
            else:
                lengths.append(base)
        return Grid(tuple(lengths), points)


def check_carriers(grid: Grid, k, J) -> None:
    """Every carrier ``exp(i j k.x)`` must be periodic on the box."""
    k = np.asarray(k, dtype=float)
    for j in J:
        for i in range(grid.ndim):
            cycles = j * k[i] * grid.lengths[i] / (2 * np.pi)
            if abs(cycles - round(cycles)) > 1e-9 * max(1.0, abs(cycles)):
                raise CarrierNotPeriodic(
                    f"carrier j={j} has {cycles:.6g} periods along axis {i} (box length {grid.lengths[i]:.6g})"
                )


def fft(data: np.ndarray) -> np.ndarray:
    """Forward transform over all axes after the leading component axis."""
    return np.fft.fftn(data, axes=tuple(range(1, data.ndim)))


def ifft(data: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(data, axes=tuple(range(1, data.ndim)))


@dataclass
class SpectralField:
    grid: Grid
    data: np.ndarray
    representation: str = "physical"

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim == self.grid.ndim:
            self.data = self.data[None]
        if self.data.shape[1:] != self.grid.shape:
            raise GridMismatch(f"field shape {self.data.shape[1:]} does not match grid {self.grid.shape}")
        if self.representation not in ("physical", "fourier"):
            raise ValueError(f"unknown representation {self.representation!r}")

    @property
    def components(self) -> int:
        return self.data.shape[0]

    def physical(self) -> np.ndarray:
        return self.data if self.representation == "physical" else ifft(self.data)

    def fourier(self) -> np.ndarray:
        return self.data if self.representation == "fourier" else fft(self.data)

    def to_fourier(self) -> "SpectralField":
        return SpectralField(self.grid, self.fourier(), "fourier")

    def to_physical(self) -> "SpectralField":
        return SpectralField(self.grid, self.physical(), "physical")

    def sup_norm(self) -> float:
        return float(np.abs(self.physical()).max())

    def max_imag(self) -> float:
        return float(np.abs(self.physical().imag).max())

    def hermitian_defect(self) -> float:
        """Max ``|u_hat(-xi) - conj u_hat(xi)|`` relative to the largest mode."""
        uh = self.fourier()
        flipped = uh
        for ax in range(1, uh.ndim):
            flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
        scale = max(np.abs(uh).max(), 1e-300)
        return float(np.abs(flipped - np.conj(uh)).max() / scale)


# --------------------------------------------------------------------------
# envelope profiles


def _radius(X: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.asarray(X, dtype=float) ** 2, axis=0))


_KINDS = {
    "constant": (1, lambda X, c: np.full(X.shape[1:], c, dtype=complex)),
    "gaussian": (2, lambda X, a, w: a * np.exp(-(_radius(X) / w) ** 2)),
    "cospack": (2, lambda X, a, q: a * np.cos(q * X[0])),
    "plateau": (3, lambda X, a, h, e: a * 0.5 * (np.tanh((_radius(X) + h) / e) - np.tanh((_radius(X) - h) / e))),
    "tent": (2, lambda X, a, w: a * np.maximum(0.0, 1.0 - _radius(X) / w)),
}


@dataclass(frozen=True)
class Profile:
    """Sum of closed-form envelopes evaluated at slow coordinates ``X``.

    ``X`` has shape ``(D, ...)``. Supported terms: ``constant(c)``,
    ``gaussian(amp, width)``, ``cospack(amp, q)`` (``amp cos(q X_1)``),
    ``plateau(amp, halfwidth, edge)`` (tanh-edged top hat) and
    ``tent(amp, width)`` (piecewise-linear hat).
    """

    terms: tuple

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 0:
            X = X[None]
        out = np.zeros(X.shape[1:], dtype=complex)
        for kind, params in self.terms:
            out = out + _KINDS[kind][1](X, *params)
        return out

    def __add__(self, other: "Profile") -> "Profile":
        return Profile(self.terms + other.terms)

    def scaled(self, s: float) -> "Profile":
        out = []
        for kind, params in self.terms:
            out.append((kind, (params[0] * s,) + tuple(params[1:])))
        return Profile(tuple(out))

    @property
    def is_zero(self) -> bool:
        return all(p[0] == 0 for _, p in self.terms)

    def __str__(self) -> str:
        return " + ".join(f"{k}({', '.join(repr(float(p)) for p in ps)})" for k, ps in self.terms) or "constant(0.0)"


_TERM = re.compile(r"^\s*([a-z]+)\s*\(([^()]*)\)\s*$")


def parse_profile(text: str) -> Profile:
    """Parse ``"constant(0.57) + gaussian(0.05, 1.0)"`` style envelope specs."""
    terms = []
    for piece in _split_sum(text):
        m = _TERM.match(piece)
        if not m:
            raise ValueError(f"malformed profile term {piece!r}")
        kind, args = m.group(1), m.group(2)
        if kind not in _KINDS:
            raise ValueError(f"unknown profile {kind!r}; expected one of {sorted(_KINDS)}")
        params = tuple(float(a) for a in args.split(",")) if args.strip() else ()
        if len(params) != _KINDS[kind][0]:
            raise ValueError(f"{kind} takes {_KINDS[kind][0]} argument(s), got {len(params)}")
        if kind in ("gaussian", "tent") and params[1] <= 0 or kind == "plateau" and params[2] <= 0:
            raise ValueError(f"{kind} width parameters must be positive")
        terms.append((kind, params))
    if not terms:
        raise ValueError("empty profile")
    return Profile(tuple(terms))


def _split_sum(text: str) -> list[str]:
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "+" and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    if cur.strip():
        parts.append(cur)
    return parts


def constant(c: float) -> Profile:
    return Profile((("constant", (float(c),)),))


def gaussian(amp: float, width: float) -> Profile:
    return Profile((("gaussian", (float(amp), float(width))),))


def cospack(amp: float, q: float) -> Profile:
    return Profile((("cospack", (float(amp), float(q))),))


def plateau(amp: float, halfwidth: float, edge: float) -> Profile:
    return Profile((("plateau", (float(amp), float(halfwidth), float(edge))),))


def tent(amp: float, width: float) -> Profile:
    return Profile((("tent", (float(amp), float(width))),))
