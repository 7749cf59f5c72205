"""Per-mode exponential propagators ``exp(P(i xi) dt)`` and phi functions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from ..symbols import MatrixPolynomial, eval_symbol
from .grid import Grid

SERIES_CUTOFF = 1e-4
COND_FALLBACK = 1e6
OVERFLOW_TOL = 1e-8


class PropagatorOverflow(ValueError):
    pass


def phi1(z) -> np.ndarray:
    """``(e^z - 1)/z`` with a Taylor series near zero."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < SERIES_CUTOFF
    zs = np.where(small, 1.0, z)
    out = np.expm1(zs) / zs
    s = z[small]
    out[small] = 1 + s / 2 + s**2 / 6 + s**3 / 24 + s**4 / 120 + s**5 / 720
    return out


def phi2(z) -> np.ndarray:
    """``(e^z - 1 - z)/z^2`` with a Taylor series near zero."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < SERIES_CUTOFF
    zs = np.where(small, 1.0, z)
    out = (np.expm1(zs) - zs) / zs**2
    s = z[small]
    out[small] = 0.5 + s / 6 + s**2 / 24 + s**3 / 120 + s**4 / 720 + s**5 / 5040
    return out


@dataclass
class Propagator:
    """Tables ``E = e^{L dt}``, ``P1 = dt phi1(L dt)``, ``P2 = dt phi2(L dt)``.

    Diagonal tables have shape ``(m, n)``; full ones ``(m, m, n)`` with
    ``n`` the flattened mode count.
    """

    E: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    diagonal: bool
    dt: float
    shape: tuple
    fallback_modes: int = 0

    def apply(self, uhat: np.ndarray) -> np.ndarray:
        """``E`` applied to a Fourier field of shape ``(m, *shape)``."""
        flat = uhat.reshape(uhat.shape[0], -1)
        if self.diagonal:
            out = self.E * flat
        else:
            out = np.einsum("rcn,cn->rn", self.E, flat)
        return out.reshape(uhat.shape)

    def matrices(self) -> np.ndarray:
        """``E`` as ``(n, m, m)`` matrices regardless of storage."""
        if self.diagonal:
            m, n = self.E.shape
            out = np.zeros((n, m, m), dtype=complex)
            out[:, np.arange(m), np.arange(m)] = self.E.T
            return out
        return np.moveaxis(self.E, -1, 0)


def _symbol_table(symbol, grid: Grid) -> tuple[np.ndarray, bool]:
    """Multiplier values at every grid mode, ``(n, m, m)``."""
    symbols = symbol if isinstance(symbol, (list, tuple)) else [symbol]
    if len(symbols) > 1:
        symbol = MatrixPolynomial.diagonal(list(symbols))
    else:
        symbol = symbols[0]
    if symbol.d != grid.ndim:
        raise ValueError(f"symbol has d={symbol.d} but grid has {grid.ndim} axes")
    xi = grid.xi_mesh.reshape(-1, grid.ndim)
    return eval_symbol(symbol, xi), symbol.is_diagonal


def _augmented_phi(Z: np.ndarray):
    """``e^Z``, ``phi1(Z)``, ``phi2(Z)`` from one block exponential per mode."""
    n, m, _ = Z.shape
    big = np.zeros((n, 3 * m, 3 * m), dtype=complex)
    eye = np.eye(m)
    big[:, :m, :m] = Z
    big[:, :m, m : 2 * m] = eye
    big[:, m : 2 * m, 2 * m :] = eye
    X = expm(big)
    return X[:, :m, :m], X[:, :m, m : 2 * m], X[:, :m, 2 * m :]


def linear_propagator(symbol, grid: Grid, dt: float, check_overflow: bool = True) -> Propagator:
    """Exact linear propagator for ``u_t = L u`` with ``L = symbol(i xi)``.

    ``symbol`` is a :class:`MatrixPolynomial` or a list of scalar symbols
    (one per component, e.g. the ``Q_n`` of an amplitude system).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    L, diag = _symbol_table(symbol, grid)
    n, m, _ = L.shape
    Z = L * dt
    if diag:
        z = np.diagonal(Z, axis1=1, axis2=2).T.copy()
        if check_overflow and np.any(z.real > np.log1p(OVERFLOW_TOL)):
            raise PropagatorOverflow(f"mode growth factor {np.exp(z.real.max()):.12g} exceeds 1+{OVERFLOW_TOL}")
        return Propagator(np.exp(z), dt * phi1(z), dt * phi2(z), True, dt, grid.shape)

    vals, V = np.linalg.eig(Z)
    if check_overflow and np.any(vals.real > np.log1p(OVERFLOW_TOL)):
        raise PropagatorOverflow(f"mode growth factor {np.exp(vals.real.max()):.12g} exceeds 1+{OVERFLOW_TOL}")
    cond = np.linalg.cond(V)
    bad = ~(cond <= COND_FALLBACK)
    good = ~bad
    E = np.empty_like(Z)
    P1 = np.empty_like(Z)
    P2 = np.empty_like(Z)
    if good.any():
        Vg, lg = V[good], vals[good]
        Vi = np.linalg.inv(Vg)
        for out, fn in ((E, np.exp), (P1, phi1), (P2, phi2)):
            out[good] = np.einsum("nij,nj,njk->nik", Vg, fn(lg), Vi)
    if bad.any():
        E[bad], P1[bad], P2[bad] = _augmented_phi(Z[bad])
    to_table = lambda A: np.ascontiguousarray(np.moveaxis(A, 0, -1))  # noqa: E731
    return Propagator(to_table(E), dt * to_table(P1), dt * to_table(P2), False, dt, grid.shape, int(bad.sum()))
