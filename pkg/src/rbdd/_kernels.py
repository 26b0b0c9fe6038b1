"""Hot loops: OU filtering and Bloch-vector propagation.

Two interchangeable backends exist.  The numba backend compiles the loops
with ``@njit``; the numpy backend vectorizes over trajectories instead.  The
backend is chosen once at import from ``RBDD_BACKEND`` (``numba`` or
``numpy``); numba is used when available and not disabled.
"""
from __future__ import annotations

import math
import os

import numpy as np
from scipy.signal import lfilter

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_REQUESTED = os.environ.get("RBDD_BACKEND", "numba").strip().lower()
if _REQUESTED not in ("numba", "numpy"):
    raise ImportError(f"RBDD_BACKEND must be 'numba' or 'numpy', got {_REQUESTED!r}")
BACKEND = "numba" if (_REQUESTED == "numba" and HAVE_NUMBA) else "numpy"

# Fraction of dt below which a grid cell overlap is treated as empty.
_CELL_EPS = 1e-9


def ou_filter_numpy(xi: np.ndarray, decay: float, kick: float, sigma: float) -> np.ndarray:
    """``b_0 = sigma xi_0``, ``b_{n+1} = decay b_n + kick xi_{n+1}`` along the last axis."""
    x = kick * xi
    x[..., 0] = sigma * xi[..., 0]
    return lfilter([1.0], [1.0, -decay], x, axis=-1)


def propagate_numpy(start, dur, amp, cphi, sphi, noise, eps, dt, t1_rate, r0):
    """Propagate ``n_traj`` Bloch vectors through piecewise-constant segments.

    ``r0`` holds one start vector per trajectory.  ``noise`` has shape
    ``(n_traj, n_steps)`` (or ``(n_traj, 0)`` for b = 0); cell ``k`` covers ``[k dt, (k+1) dt)``.
    """
    n_traj = eps.shape[0]
    r = r0.copy()
    has_noise = noise.shape[1] > 0
    zeros = np.zeros(n_traj)
    for s in range(dur.shape[0]):
        t0 = start[s]
        t1 = t0 + dur[s]
        k = int(math.floor(t0 / dt + _CELL_EPS))
        if amp[s] == 0.0:
            phase = np.zeros(n_traj)
            if has_noise:
                while k * dt < t1 - _CELL_EPS * dt:
                    h = min(t1, (k + 1) * dt) - max(t0, k * dt)
                    if h > _CELL_EPS * dt:
                        phase += noise[:, k] * h
                    k += 1
            r = _rotate_numpy(r, zeros, zeros, np.ones(n_traj), phase)
            if t1_rate > 0.0:
                _damp_numpy(r, dur[s] * t1_rate)
            continue
        a = (1.0 + eps) * amp[s]
        fx = a * cphi[s]
        fy = a * sphi[s]
        if not has_noise and t1_rate == 0.0:
            # Constant field: one exact rotation covers the segment.
            norm = np.sqrt(fx * fx + fy * fy)
            r = _rotate_numpy(r, fx / norm, fy / norm, zeros, norm * dur[s])
            continue
        while k * dt < t1 - _CELL_EPS * dt:
            h = min(t1, (k + 1) * dt) - max(t0, k * dt)
            if h > _CELL_EPS * dt:
                fz = noise[:, k] if has_noise else zeros
                norm = np.sqrt(fx * fx + fy * fy + fz * fz)
                r = _rotate_numpy(r, fx / norm, fy / norm, fz / norm, norm * h)
                if t1_rate > 0.0:
                    _damp_numpy(r, h * t1_rate)
            k += 1
    return r


def _rotate_numpy(r, nx, ny, nz, ang):
    """Rodrigues rotation of each row of ``r`` about ``n`` by ``ang``."""
    c, sn = np.cos(ang), np.sin(ang)
    dot = nx * r[:, 0] + ny * r[:, 1] + nz * r[:, 2]
    cx = ny * r[:, 2] - nz * r[:, 1]
    cy = nz * r[:, 0] - nx * r[:, 2]
    cz = nx * r[:, 1] - ny * r[:, 0]
    return np.stack(
        (
            r[:, 0] * c + cx * sn + nx * dot * (1.0 - c),
            r[:, 1] * c + cy * sn + ny * dot * (1.0 - c),
            r[:, 2] * c + cz * sn + nz * dot * (1.0 - c),
        ),
        axis=1,
    )


def _damp_numpy(r, x):
    keep = math.exp(-x)
    r[:, 0] *= math.sqrt(keep)
    r[:, 1] *= math.sqrt(keep)
    r[:, 2] = r[:, 2] * keep + (1.0 - keep)


if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def ou_filter_numba(xi, decay, kick, sigma):
        out = np.empty_like(xi)
        for i in range(xi.shape[0]):
            b = sigma * xi[i, 0]
            out[i, 0] = b
            for n in range(1, xi.shape[1]):
                b = decay * b + kick * xi[i, n]
                out[i, n] = b
        return out

    @njit(cache=True, nogil=True)
    def _damp(r, x):
        keep = math.exp(-x)
        sq = math.sqrt(keep)
        r[0] *= sq
        r[1] *= sq
        r[2] = r[2] * keep + (1.0 - keep)

    @njit(cache=True, nogil=True)
    def _rotate(r, nx, ny, nz, ang):
        c = math.cos(ang)
        sn = math.sin(ang)
        dot = nx * r[0] + ny * r[1] + nz * r[2]
        cx = ny * r[2] - nz * r[1]
        cy = nz * r[0] - nx * r[2]
        cz = nx * r[1] - ny * r[0]
        x = r[0] * c + cx * sn + nx * dot * (1.0 - c)
        y = r[1] * c + cy * sn + ny * dot * (1.0 - c)
        z = r[2] * c + cz * sn + nz * dot * (1.0 - c)
        r[0] = x
        r[1] = y
        r[2] = z

    @njit(cache=True, nogil=True)
    def _propagate_one(start, dur, amp, cphi, sphi, noise, j, eps, dt, t1_rate, r):
        has_noise = noise.shape[1] > 0
        for s in range(dur.shape[0]):
            t0 = start[s]
            t1 = t0 + dur[s]
            k = int(math.floor(t0 / dt + _CELL_EPS))
            if amp[s] == 0.0:
                phase = 0.0
                if has_noise:
                    while k * dt < t1 - _CELL_EPS * dt:
                        h = min(t1, (k + 1) * dt) - max(t0, k * dt)
                        if h > _CELL_EPS * dt:
                            phase += noise[j, k] * h
                        k += 1
                _rotate(r, 0.0, 0.0, 1.0, phase)
                if t1_rate > 0.0:
                    _damp(r, dur[s] * t1_rate)
                continue
            a = (1.0 + eps) * amp[s]
            fx = a * cphi[s]
            fy = a * sphi[s]
            if not has_noise and t1_rate == 0.0:
                norm = math.sqrt(fx * fx + fy * fy)
                _rotate(r, fx / norm, fy / norm, 0.0, norm * dur[s])
                continue
            while k * dt < t1 - _CELL_EPS * dt:
                h = min(t1, (k + 1) * dt) - max(t0, k * dt)
                if h > _CELL_EPS * dt:
                    fz = noise[j, k] if has_noise else 0.0
                    norm = math.sqrt(fx * fx + fy * fy + fz * fz)
                    _rotate(r, fx / norm, fy / norm, fz / norm, norm * h)
                    if t1_rate > 0.0:
                        _damp(r, h * t1_rate)
                k += 1

    @njit(cache=True, nogil=True)
    def propagate_numba(start, dur, amp, cphi, sphi, noise, eps, dt, t1_rate, r0):
        n_traj = eps.shape[0]
        out = np.empty((n_traj, 3))
        r = np.empty(3)
        for j in range(n_traj):
            r[0] = r0[j, 0]
            r[1] = r0[j, 1]
            r[2] = r0[j, 2]
            _propagate_one(start, dur, amp, cphi, sphi, noise, j, eps[j], dt, t1_rate, r)
            out[j, 0] = r[0]
            out[j, 1] = r[1]
            out[j, 2] = r[2]
        return out


def ou_filter(xi, decay, kick, sigma, backend=None):
    xi = np.atleast_2d(np.ascontiguousarray(xi, dtype=float))
    if (backend or BACKEND) == "numba":
        return ou_filter_numba(xi, float(decay), float(kick), float(sigma))
    return ou_filter_numpy(xi.copy(), decay, kick, sigma)


def propagate(start, dur, amp, phase, noise, eps, dt, t1_rate=0.0, r0=(0.0, 0.0, 1.0), backend=None):
    """Dispatch to the selected backend; returns final Bloch vectors ``(n_traj, 3)``."""
    start = np.ascontiguousarray(start, dtype=float)
    dur = np.ascontiguousarray(dur, dtype=float)
    amp = np.ascontiguousarray(amp, dtype=float)
    phase = np.asarray(phase, dtype=float)
    cphi = np.ascontiguousarray(np.cos(phase))
    sphi = np.ascontiguousarray(np.sin(phase))
    eps = np.ascontiguousarray(np.atleast_1d(eps), dtype=float)
    noise = np.ascontiguousarray(noise, dtype=float)
    if noise.ndim != 2 or noise.shape[0] != eps.shape[0]:
        raise ValueError("noise must have shape (n_traj, n_steps)")
    # One start vector for all trajectories, or one per trajectory.
    r0 = np.ascontiguousarray(np.broadcast_to(np.asarray(r0, dtype=float), (eps.shape[0], 3)))
    if (backend or BACKEND) == "numba":
        return propagate_numba(start, dur, amp, cphi, sphi, noise, eps, float(dt), float(t1_rate), r0)
    return propagate_numpy(start, dur, amp, cphi, sphi, noise, eps, float(dt), float(t1_rate), r0)
