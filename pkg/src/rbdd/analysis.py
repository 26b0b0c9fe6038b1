"""Decay-curve fits and error-per-gate figures."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import FitError, InvalidInputError

STRETCH_STARTS = (0.25, 0.5, 0.75, 1.0)


@dataclass
class FitResult:
    """Fitted decay model.

    ``exponential``: ``A (1-d)^x = A exp(-rate x)`` (params ``A``, ``d``,
    ``rate``); ``stretched``:
    ``A a^(x^k)``; ``quadratic``: ``c2 x^2 + c1 x + c0``.
    """

    model: str
    params: dict
    stderr: dict
    residual_norm: float
    extra: dict = field(default_factory=dict)

    @property
    def time_constant(self) -> float:
        """``1 / rate`` of an exponential fit against time."""
        if self.model != "exponential":
            raise InvalidInputError("time constant is only defined for exponential fits")
        rate = self.params["rate"]
        return math.inf if rate == 0 else 1.0 / rate

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.model == "exponential":
            return p["A"] * np.exp(-p["rate"] * x)
        if self.model == "stretched":
            return p["A"] * p["a"] ** (x ** p["k"])
        return p["c2"] * x**2 + p["c1"] * x + p["c0"]

    def as_dict(self) -> dict:
        return {"model": self.model, "params": dict(self.params), "stderr": dict(self.stderr),
                "residual_norm": self.residual_norm, **self.extra}


def _xy(curve):
    """Accept a DecayCurve or an ``(x, y[, stderr])`` tuple."""
    if hasattr(curve, "x"):
        x, y, e = curve.x, curve.mean, curve.stderr
    else:
        x, y, *rest = curve
        e = rest[0] if rest else None
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if e is None or np.any(np.asarray(e) <= 0):
        w = np.ones_like(y)
    else:
        w = 1.0 / np.asarray(e, dtype=float)
    if x.shape != y.shape:
        raise InvalidInputError("x and y must have equal length")
    return x, y, w


def _solve(fun, starts, n_points, names, bounds):
    best = None
    for p0 in starts:
        try:
            sol = least_squares(fun, p0, bounds=bounds, method="trf", x_scale="jac",
                                xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=500 * (len(p0) + 1))
        except ValueError as exc:
            raise FitError(f"fit failed: {exc}", {"start": list(p0)}) from exc
        if not np.all(np.isfinite(sol.x)):
            continue
        if best is None or sol.cost < best.cost:
            best = sol
    if best is None or best.status < 0:
        raise FitError("least squares did not converge", {"starts": [list(s) for s in starts]})
    dof = n_points - len(best.x)
    res2 = float(best.fun @ best.fun)
    try:
        cov = np.linalg.pinv(best.jac.T @ best.jac) * (res2 / dof if dof > 0 else 1.0)
        err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        err = np.full(len(best.x), np.nan)
    return best, dict(zip(names, err))


def fit_exponential(curve) -> FitResult:
    """Weighted least-squares fit of ``A (1-d)^x``."""
    x, y, w = _xy(curve)
    if len(x) < 3:
        raise InvalidInputError("exponential fit needs at least 3 points")
    # Log-linear estimate on the positive points as starting value.
    pos = y > 0
    if pos.sum() >= 2:
        slope, icpt = np.polyfit(x[pos], np.log(y[pos]), 1)
        start = (math.exp(icpt), max(-slope, 0.0))
    else:
        start = (float(y[0]) or 1.0, 1.0 / max(float(np.ptp(x)), 1e-300))

    def resid(p):
        return w * (p[0] * np.exp(-p[1] * x) - y)

    sol, err = _solve(resid, [start], len(x), ("A", "rate"), ([-np.inf, 0.0], [np.inf, np.inf]))
    a, rate = sol.x
    d = -math.expm1(-rate)
    # d(d)/d(rate) = exp(-rate)
    return FitResult("exponential", {"A": float(a), "d": d, "rate": float(rate)},
                     {"A": float(err["A"]), "d": float(err["rate"] * math.exp(-rate)),
                      "rate": float(err["rate"])},
                     float(np.linalg.norm(a * np.exp(-rate * x) - y)))


def fit_stretched(curve, fix_k: float | None = None, fix_amplitude: float | None = None) -> FitResult:
    """Fit ``A a^(x^k)`` with a multistart over ``k``.

    ``fix_k`` / ``fix_amplitude`` pin a parameter; ``fix_k=1`` reduces the
    model to the exponential one.
    """
    x, y, w = _xy(curve)
    if len(x) < 4:
        raise InvalidInputError("stretched fit needs at least 4 points")
    if np.any(x <= 0):
        raise InvalidInputError("stretched fit needs x > 0")
    names = [n for n, fixed in (("A", fix_amplitude), ("log_a", None), ("k", fix_k)) if fixed is None]

    def unpack(p):
        it = iter(p)
        a_amp = fix_amplitude if fix_amplitude is not None else next(it)
        log_a = next(it)
        k = fix_k if fix_k is not None else next(it)
        return a_amp, log_a, k

    def resid(p):
        a_amp, log_a, k = unpack(p)
        return w * (a_amp * np.exp(log_a * x**k) - y)

    y0 = float(y[0]) if y[0] > 0 else 1.0
    starts = []
    for k0 in ([fix_k] if fix_k is not None else STRETCH_STARTS):
        amp0 = fix_amplitude if fix_amplitude is not None else y0
        ratio = np.clip(y / amp0, 1e-12, None)
        # log_a from the last point given k0
        log_a0 = min(float(np.log(ratio[-1]) / x[-1] ** k0), -1e-12)
        p0 = []
        if fix_amplitude is None:
            p0.append(amp0)
        p0.append(log_a0)
        if fix_k is None:
            p0.append(k0)
        starts.append(p0)
    lower = [-np.inf if n != "k" else 1e-6 for n in names]
    upper = [np.inf if n != "log_a" else 0.0 for n in names]
    sol, err = _solve(resid, starts, len(x), names, (lower, upper))
    a_amp, log_a, k = unpack(sol.x)
    params = {"A": float(a_amp), "a": math.exp(log_a), "k": float(k)}
    stderr = {"A": float(err.get("A", 0.0)), "a": float(err["log_a"] * math.exp(log_a)),
              "k": float(err.get("k", 0.0))}
    resid_norm = float(np.linalg.norm(a_amp * np.exp(log_a * x**k) - y))
    return FitResult("stretched", params, stderr, resid_norm)


def fit_quadratic(curve) -> FitResult:
    """Ordinary least-squares ``c2 x^2 + c1 x + c0``."""
    x, y, _ = _xy(curve)
    if len(x) < 3:
        raise InvalidInputError("quadratic fit needs at least 3 points")
    coef, cov = np.polyfit(x, y, 2, cov="unscaled") if len(x) > 3 else (np.polyfit(x, y, 2), None)
    c2, c1, c0 = (float(c) for c in coef)
    resid = float(np.linalg.norm(np.polyval(coef, x) - y))
    if cov is not None:
        scale = resid**2 / (len(x) - 3)
        err = np.sqrt(np.clip(np.diag(cov) * scale, 0.0, None))
    else:
        err = np.zeros(3)
    return FitResult("quadratic", {"c2": c2, "c1": c1, "c0": c0},
                     dict(zip(("c2", "c1", "c0"), map(float, err))), resid)


def epg_from_fit(f: FitResult) -> tuple[float, float]:
    """Error per gate ``d/2`` and its standard error."""
    if f.model != "exponential":
        raise InvalidInputError("EPG needs an exponential fit")
    return f.params["d"] / 2.0, f.stderr["d"] / 2.0


def epg_limit(tau: float, t2: float) -> float:
    """Error per gate of pure dephasing over a gate of length ``tau``.

    ``(1 - exp(-tau/T2)) / 3``: the transverse components decay by
    ``exp(-tau/T2)`` and the average over input states weighs them 2/3,
    with fidelity ``(1 + r_in.r_out) / 2``.
    """
    if not (tau > 0 and t2 > 0):
        raise InvalidInputError("tau and t2 must be positive")
    return -math.expm1(-tau / t2) / 3.0


def one_over_e_time(curve) -> float:
    """First time at which the mean falls to 1/e, by linear interpolation."""
    x, y, _ = _xy(curve)
    target = math.exp(-1.0)
    below = np.nonzero(y <= target)[0]
    if len(below) == 0:
        raise FitError("curve never decays to 1/e", {"min": float(y.min())})
    i = int(below[0])
    if i == 0:
        raise FitError("curve starts below 1/e", {"first": float(y[0])})
    x0, x1, y0, y1 = x[i - 1], x[i], y[i - 1], y[i]
    return float(x0 + (y0 - target) * (x1 - x0) / (y0 - y1))


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise InvalidInputError("log-log slope needs positive data")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
