"""Numpy implementations mirroring the compiled kernels (same signatures)."""
from __future__ import annotations

import numpy as np


def etd_stage_diag(E, P1, u, N, eps, out):
    np.multiply(E, u, out=out)
    out += eps * P1 * N
    return out


def etd_correct_diag(a, P2, Na, Nu, eps, out):
    np.subtract(Na, Nu, out=out)
    out *= eps * P2
    out += a
    return out


def etd_stage(E, P1, u, N, eps, out):
    out[...] = np.einsum("rcn,cn->rn", E, u) + eps * np.einsum("rcn,cn->rn", P1, N)
    return out


def etd_correct(a, P2, Na, Nu, eps, out):
    out[...] = a + eps * np.einsum("rcn,cn->rn", P2, Na - Nu)
    return out


def poly_eval(exps, coeffs, u, out):
    out[...] = 0
    for t in range(exps.shape[0]):
        mono = np.ones(u.shape[1], dtype=complex)
        for v, p in enumerate(exps[t]):
            if p:
                mono = mono * u[v] ** int(p)
        out += coeffs[t][:, None] * mono[None, :]
    return out
