"""Dephasing field ``b(t)``, static amplitude errors and T1 relaxation.

The field is modelled as a stationary Ornstein-Uhlenbeck process with
standard deviation ``sigma`` (rad/s) and correlation time ``tau_c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .errors import CalibrationError, InvalidInputError

INV_E = math.exp(-1.0)


@dataclass(frozen=True)
class OUParams:
    sigma: float  # rad/s
    tau_c: float  # s

    def __post_init__(self):
        if not self.sigma >= 0:
            raise InvalidInputError(f"sigma must be >= 0, got {self.sigma}")
        if not self.tau_c > 0:
            raise InvalidInputError(f"tau_c must be > 0, got {self.tau_c}")


@dataclass(frozen=True)
class NoiseTrajectory:
    dt: float
    samples: np.ndarray

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidInputError("dt must be > 0")
        if len(self.samples) < 1:
            raise InvalidInputError("trajectory must hold at least one sample")

    @property
    def duration(self) -> float:
        return self.dt * len(self.samples)


@dataclass(frozen=True)
class AmplitudeErrorModel:
    """Fractional drive-amplitude error, drawn once per shot.

    ``kind`` is ``none``, ``fixed`` (value = epsilon), ``gaussian``
    (value = standard deviation) or ``uniform`` (value = half width).
    """

    kind: str = "none"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "fixed", "gaussian", "uniform"):
            raise InvalidInputError(f"unknown amplitude error model {self.kind!r}")
        if self.kind in ("gaussian", "uniform") and self.value < 0:
            raise InvalidInputError(f"{self.kind} width must be >= 0")


@dataclass(frozen=True)
class RelaxationParams:
    t1: float | None = None  # s; None disables relaxation

    def __post_init__(self):
        if self.t1 is not None and not self.t1 > 0:
            raise InvalidInputError("t1 must be > 0 when enabled")

    @property
    def rate(self) -> float:
        return 0.0 if self.t1 is None else 1.0 / self.t1


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def n_steps(duration: float, dt: float) -> int:
    return max(1, int(math.ceil(duration / dt - 1e-9)))


def ou_samples(p: OUParams, n: int, dt: float, rngs) -> np.ndarray:
    """OU samples of shape ``(len(rngs), n)``, one row per generator."""
    xi = np.empty((len(rngs), n))
    for i, g in enumerate(rngs):
        xi[i] = g.standard_normal(n)
    if p.sigma == 0:
        return np.zeros_like(xi)
    decay = math.exp(-dt / p.tau_c)
    kick = p.sigma * math.sqrt(-math.expm1(-2.0 * dt / p.tau_c))
    return _kernels.ou_filter(xi, decay, kick, p.sigma)


def ou_trajectory(p: OUParams, duration: float, dt: float, seed=None) -> NoiseTrajectory:
    """Sample a stationary OU realization covering ``duration`` at step ``dt``."""
    if not (dt > 0 and duration > 0):
        raise InvalidInputError("duration and dt must be positive")
    if duration < dt:
        raise InvalidInputError("duration must be >= dt")
    samples = ou_samples(p, n_steps(duration, dt), dt, [_rng(seed)])[0]
    return NoiseTrajectory(dt, samples)


def _fid_exponent(p: OUParams, t):
    x = np.asarray(t, dtype=float) / p.tau_c
    return (p.sigma * p.tau_c) ** 2 * (np.expm1(-x) + x)


def _hahn_exponent(p: OUParams, t):
    x = np.asarray(t, dtype=float) / p.tau_c
    return (p.sigma * p.tau_c) ** 2 * (x - 3.0 + 4.0 * np.exp(-x / 2.0) - np.exp(-x))


def fid_coherence_analytic(p: OUParams, t):
    """Free-induction coherence ``exp[-sigma^2 tau_c^2 (e^{-t/tau_c} - 1 + t/tau_c)]``."""
    if np.any(np.asarray(t) < 0):
        raise InvalidInputError("t must be >= 0")
    return np.exp(-_fid_exponent(p, t))


def hahn_coherence_analytic(p: OUParams, t):
    """Echo coherence at total time ``t`` for an ideal pi pulse at ``t/2``."""
    if np.any(np.asarray(t) < 0):
        raise InvalidInputError("t must be >= 0")
    return np.exp(-_hahn_exponent(p, t))


def _one_over_e(f, guess: float) -> float:
    hi = guess
    while f(hi) > INV_E:
        hi *= 2.0
    return brentq(lambda t: f(t) - INV_E, 0.0, hi, xtol=1e-15, rtol=1e-13)


def fid_time(p: OUParams) -> float:
    """1/e time of the analytic FID."""
    if p.sigma == 0:
        return math.inf
    return _one_over_e(lambda t: fid_coherence_analytic(p, t), 1.0 / p.sigma)


def hahn_time(p: OUParams) -> float:
    if p.sigma == 0:
        return math.inf
    return _one_over_e(lambda t: hahn_coherence_analytic(p, t), 1.0 / p.sigma)


def _sigma_for_fid(t2_fid: float, tau_c: float) -> float:
    # The exponent scales as sigma^2, so sigma follows in closed form.
    shape = float(_fid_exponent(OUParams(1.0, tau_c), t2_fid))
    return 1.0 / math.sqrt(shape)


def calibrate(t2_fid_target: float, t2_hahn_target: float) -> OUParams:
    """OU parameters reproducing the given FID and Hahn-echo 1/e times.

    For each ``tau_c`` the FID time fixes ``sigma`` exactly; ``tau_c`` is then
    root-found so that the echo time matches.  The echo/FID ratio grows
    monotonically from 1 (motional narrowing) to infinity (static noise).
    """
    if not (t2_fid_target > 0 and t2_hahn_target > 0):
        raise InvalidInputError("target times must be positive")

    def ratio_gap(log_tau):
        tau = math.exp(log_tau)
        p = OUParams(_sigma_for_fid(t2_fid_target, tau), tau)
        return math.log(hahn_time(p) / t2_hahn_target)

    lo, hi = math.log(1e-4 * t2_fid_target), math.log(1e4 * t2_fid_target)
    g_lo, g_hi = ratio_gap(lo), ratio_gap(hi)
    if not (g_lo < 0 < g_hi):
        best_log = lo if abs(g_lo) < abs(g_hi) else hi
        tau = math.exp(best_log)
        best = OUParams(_sigma_for_fid(t2_fid_target, tau), tau)
        raise CalibrationError(
            f"echo/FID ratio {t2_hahn_target / t2_fid_target:.4g} is not reachable "
            f"(best tau_c={tau:.3g} s gives Hahn time {hahn_time(best):.4g} s)",
            best=best,
            achieved=(fid_time(best), hahn_time(best)),
        )
    log_tau = brentq(ratio_gap, lo, hi, xtol=1e-12)
    tau = math.exp(log_tau)
    return OUParams(_sigma_for_fid(t2_fid_target, tau), tau)


def sample_epsilon(m: AmplitudeErrorModel, seed=None) -> float:
    """One amplitude-error draw; held fixed for a whole shot."""
    if m.kind == "none":
        return 0.0
    if m.kind == "fixed":
        return float(m.value)
    rng = _rng(seed)
    if m.kind == "gaussian":
        return float(rng.normal(0.0, m.value))
    return float(rng.uniform(-m.value, m.value))
