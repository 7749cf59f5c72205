"""ETDRK2 time stepping for ``u_t = L u + eps * N(u)`` on a periodic grid."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from . import kernels
from .grid import Grid, fft, ifft
from .propagator import Propagator, linear_propagator


class SolverDivergence(FloatingPointError):
    def __init__(self, time: float):
        self.time = time
        super().__init__(f"non-finite values at t={time:.6g}")


@dataclass(frozen=True)
class SimConfig:
    epsilon: float
    eta: float
    t0: float
    T_end: float
    dt: float
    dealias: bool = True
    snapshot_stride: int = 1

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not self.t0 < self.T_end:
            raise ValueError("t0 must be smaller than T_end")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be at least 1")

    @classmethod
    def create(cls, epsilon: float, M: int, T_end: float | None = None, dt: float | None = None,
               t0: float = 0.0, dealias: bool = True, snapshot_stride: int = 1) -> "SimConfig":
        """Defaults: horizon ``1/eps`` and 200 steps over it."""
        T_end = 1.0 / epsilon if T_end is None else T_end
        dt = (T_end - t0) / 200 if dt is None else dt
        return cls(epsilon, epsilon ** (1.0 / M), t0, T_end, dt, dealias, snapshot_stride)

    @property
    def n_steps(self) -> int:
        return int(round((self.T_end - self.t0) / self.dt))


class NonlinearTerm:
    """Pointwise polynomial ``N(u)`` given as an exponent/coefficient table.

    ``exps`` is ``(T, n_vars)`` and ``coeffs`` is ``(T, c)``; the output has
    ``c`` components.
    """

    def __init__(self, exps: np.ndarray, coeffs: np.ndarray):
        self.exps = np.ascontiguousarray(exps, dtype=np.int64)
        self.coeffs = np.ascontiguousarray(coeffs, dtype=complex)
        if self.coeffs.ndim == 1:
            self.coeffs = self.coeffs[:, None].copy()

    @classmethod
    def from_nonlinearity(cls, f) -> "NonlinearTerm":
        return cls(*f.as_table())

    @classmethod
    def from_reduced(cls, polys) -> "NonlinearTerm":
        """Stack scalar reduced polynomials (one per component)."""
        keys = sorted({e for p in polys for e in p.terms})
        n_vars = polys[0].n_vars
        exps = np.array(keys, dtype=np.int64).reshape(len(keys), n_vars)
        coeffs = np.array([[complex(p.coefficient(e)) for p in polys] for e in keys], dtype=complex)
        return cls(exps, coeffs.reshape(len(keys), len(polys)))

    @property
    def components(self) -> int:
        return self.coeffs.shape[1]

    def __call__(self, u: np.ndarray) -> np.ndarray:
        flat = np.ascontiguousarray(u.reshape(u.shape[0], -1))
        out = np.empty((self.components, flat.shape[1]), dtype=complex)
        kernels.poly_eval(self.exps, self.coeffs, flat, out)
        return out.reshape((self.components,) + u.shape[1:])


@dataclass
class SpectralSystem:
    """Semi-discrete system: linear propagator tables plus a pointwise nonlinearity."""

    grid: Grid
    propagator: Propagator
    nonlinear: Callable[[np.ndarray], np.ndarray]
    epsilon: float
    dealias: bool = True
    _mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._mask = self.grid.dealias_mask if self.dealias else np.ones(self.grid.shape, dtype=bool)

    @classmethod
    def build(cls, symbol, nonlinear, grid: Grid, dt: float, epsilon: float, dealias: bool = True):
        return cls(grid, linear_propagator(symbol, grid, dt), nonlinear, epsilon, dealias)

    @property
    def dt(self) -> float:
        return self.propagator.dt

    def nonlinear_hat(self, uhat: np.ndarray) -> np.ndarray:
        Nh = fft(self.nonlinear(ifft(uhat)))
        Nh *= self._mask
        return Nh


def step(uhat: np.ndarray, system: SpectralSystem, t: float = 0.0) -> np.ndarray:
    """One ETDRK2 step in Fourier space (Cox-Matthews form)."""
    pr = system.propagator
    eps = float(system.epsilon)
    c = uhat.shape[0]
    flat = np.ascontiguousarray(uhat.reshape(c, -1))
    a = np.empty_like(flat)
    out = np.empty_like(flat)
    if eps == 0.0:
        out = pr.apply(uhat).reshape(c, -1)
    else:
        Nu = np.ascontiguousarray(system.nonlinear_hat(uhat).reshape(c, -1))
        if pr.diagonal:
            kernels.etd_stage_diag(pr.E, pr.P1, flat, Nu, eps, a)
            Na = np.ascontiguousarray(system.nonlinear_hat(a.reshape(uhat.shape)).reshape(c, -1))
            kernels.etd_correct_diag(a, pr.P2, Na, Nu, eps, out)
        else:
            kernels.etd_stage(pr.E, pr.P1, flat, Nu, eps, a)
            Na = np.ascontiguousarray(system.nonlinear_hat(a.reshape(uhat.shape)).reshape(c, -1))
            kernels.etd_correct(a, pr.P2, Na, Nu, eps, out)
    if not np.all(np.isfinite(out)):
        raise SolverDivergence(t + system.dt)
    return out.reshape(uhat.shape)


def iterate(system: SpectralSystem, u0: np.ndarray, n_steps: int, t0: float = 0.0) -> Iterator[tuple[float, np.ndarray]]:
    """Yield ``(t, u_hat)`` starting with the initial state."""
    uhat = fft(np.asarray(u0, dtype=complex))
    yield t0, uhat
    for s in range(n_steps):
        t = t0 + s * system.dt
        uhat = step(uhat, system, t)
        yield t0 + (s + 1) * system.dt, uhat


@dataclass
class Snapshot:
    time: float
    data: np.ndarray
    sup_norm: float


@dataclass
class Trajectory:
    snapshots: list

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    @property
    def sup_norms(self) -> np.ndarray:
        return np.array([s.sup_norm for s in self.snapshots])

    def __len__(self):
        return len(self.snapshots)

    def __getitem__(self, i) -> Snapshot:
        return self.snapshots[i]


def simulate(system: SpectralSystem, u0: np.ndarray, config: SimConfig) -> Trajectory:
    """Run from ``config.t0`` to ``config.T_end`` keeping every ``snapshot_stride``-th state."""
    if abs(system.dt - config.dt) > 1e-14 * config.dt:
        raise ValueError("system propagator was built for a different dt")
    snaps = []
    for s, (t, uhat) in enumerate(iterate(system, u0, config.n_steps, config.t0)):
        if s % config.snapshot_stride == 0 or s == config.n_steps:
            u = ifft(uhat)
            snaps.append(Snapshot(t, u, float(np.abs(u).max())))
    return Trajectory(snaps)
