"""Initial-data synthesis, carrier reconstruction and error norms."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .grid import Grid, GridMismatch, SpectralField, check_carriers, fft, ifft


def _carrier_plan(critical, symmetric: bool):
    """List of ``(amplitude_index, carrier_index)`` pairs making up the field."""
    J = critical.J
    if symmetric:
        plan = []
        pos = [n for n, j in enumerate(J) if j > 0]
        for a, n in enumerate(pos):
            plan.append((a, n))
            p = critical.partner(n)
            if p is None:
                raise ValueError(f"carrier j={J[n]} has no negative partner")
            plan.append((a, p))
        return plan, len(pos)
    return [(n, n) for n in range(len(J))], len(J)


def _phase(critical, grid: Grid, j: int, t: float) -> np.ndarray:
    kx = sum(critical.k[i] * X for i, X in enumerate(grid.mesh))
    return np.exp(1j * j * (critical.omega * t + kx))


def slow_coordinates(grid: Grid, D: int, eta: float) -> np.ndarray:
    """``eta * x_hat_1`` on the slow grid, shape ``(D, *slow_shape)``."""
    return eta * np.stack(grid.sub(D).mesh)


def initial_amplitudes(profiles: Sequence, grid: Grid, D: int, eta: float) -> np.ndarray:
    """``A_n(0, x) = v_n(eta x)`` on the slow grid, shape ``(N, *slow_shape)``."""
    X = slow_coordinates(grid, D, eta)
    return np.stack([np.asarray(p(X), dtype=complex) for p in profiles])


def reconstruct(A: np.ndarray, critical, t: float, grid: Grid, symmetric: bool | None = None) -> SpectralField:
    """``sum_n A_n(t, x_hat) exp(i j_n (omega t + k.x)) w_n`` on the full grid."""
    symmetric = critical.symmetric if symmetric is None else symmetric
    plan, n_amp = _carrier_plan(critical, symmetric)
    A = np.asarray(A, dtype=complex)
    slow = grid.sub(critical.D)
    if A.shape != (n_amp,) + slow.shape:
        raise GridMismatch(f"amplitudes have shape {A.shape}, expected {(n_amp,) + slow.shape}")
    check_carriers(grid, critical.k, critical.J)
    pad = (Ellipsis,) + (None,) * (grid.ndim - critical.D)
    m = len(critical.w[0])
    u = np.zeros((m,) + grid.shape, dtype=complex)
    for a, n in plan:
        env = A[a][pad] * _phase(critical, grid, critical.J[n], t)
        u += np.asarray(critical.w[n]).reshape((m,) + (1,) * grid.ndim) * env[None]
    return SpectralField(grid, u, "physical")


def synthesize_initial(profiles: Sequence, critical, grid: Grid, eta: float, symmetric: bool | None = None) -> SpectralField:
    """Initial field ``sum_n exp(i j_n k.x) v_n(eta x_hat) w_n`` (plus partners when symmetric)."""
    A0 = initial_amplitudes(profiles, grid, critical.D, eta)
    return reconstruct(A0, critical, 0.0, grid, symmetric)


def sup_error(u, ua, r: int = 0) -> float:
    """Sup-norm distance; ``r=1`` also includes first spectral derivatives."""
    if r not in (0, 1):
        raise ValueError("r must be 0 or 1")
    grid = u.grid if isinstance(u, SpectralField) else None
    du = (u.physical() if isinstance(u, SpectralField) else np.asarray(u)) - (
        ua.physical() if isinstance(ua, SpectralField) else np.asarray(ua)
    )
    err = float(np.abs(du).max())
    if r == 1:
        if grid is None:
            raise ValueError("r=1 needs SpectralField inputs (grid required)")
        dh = fft(du)
        for i in range(grid.ndim):
            k = grid.wavenumbers(i).reshape([-1 if a == i else 1 for a in range(grid.ndim)])
            err = max(err, float(np.abs(ifft(1j * k[None] * dh)).max()))
    return err
