"""Command-line front end.

    rbdd rb --scheme bare_bb1 --preset paper-noise
    rbdd table1
    rbdd --config run.yaml --workers 4

Each run writes one or more ``x,mean,stderr`` tables and ``summary.json``
into ``--out-dir``.  Exit codes: 0 success, 1 invalid configuration,
2 calibration or fit failure, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import _kernels
from .analysis import epg_from_fit, epg_limit, fit_exponential, fit_quadratic, fit_stretched, one_over_e_time
from .config import (
    EXPERIMENTS,
    RunConfig,
    apply_preset,
    load_config,
    parse_eps,
    parse_m_values,
    parse_time,
)
from .engine import DecayCurve, run_coherence, run_rb
from .errors import CalibrationError, FitError, InvalidInputError
from .noise import OUParams, calibrate, fid_time, hahn_time
from .pulses import GATE_TIMES, SchemeId, dd_delay, gate_duration

GATE_LABELS = {"bare_bb1": "BB1", "scheme_a": "(a)", "scheme_b": "(b)", "scheme_c": "(c)",
                 "scheme_d": "(d)", "scheme_e": "(e)"}
FIG3_SCHEMES = ("bare_rect", "bare_bb1", "scheme_a", "scheme_b", "scheme_c", "scheme_d", "scheme_e")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rbdd", description="Randomized benchmarking of protected single-qubit gates.")
    p.add_argument("experiment", nargs="?", choices=EXPERIMENTS, help="experiment to run (default: from config, else rb)")
    p.add_argument("--config", help="YAML configuration file (a previous summary.json also works)")
    p.add_argument("--preset", choices=("paper-noise", "ideal"))
    p.add_argument("--scheme", choices=[s.value for s in SchemeId])
    p.add_argument("--m-values", help="'1..80', '1,2,4' or 'paper'")
    p.add_argument("--noise", choices=("off", "paper", "calibrated"))
    p.add_argument("--eps", help="none, gaussian:<sd>, uniform:<half-width> or fixed:<value>")
    p.add_argument("--n-sequences", type=int)
    p.add_argument("--n-noise", type=int, help="noise trajectories per sequence or point")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, help="worker threads (default: RBDD_WORKERS or 1)")
    p.add_argument("--dt", help="integration step with unit, e.g. '100 ns'")
    p.add_argument("--out-dir")
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.preset:
        cfg = apply_preset(cfg, args.preset)
    kw = {}
    if args.experiment:
        kw["experiment"] = args.experiment
    if args.scheme:
        kw["scheme"] = args.scheme
    if args.m_values:
        kw["m_values"] = parse_m_values(args.m_values, "--m-values")
    if args.noise:
        kw["noise"] = args.noise
    if args.eps:
        kw["eps"] = parse_eps(args.eps, "--eps")
    for name in ("n_sequences", "n_noise", "seed", "workers", "out_dir"):
        value = getattr(args, name)
        if value is not None:
            kw[name] = value
    if args.dt:
        kw["dt"] = parse_time(args.dt, "--dt")
    return replace(cfg, **kw).validate()


# ---------------------------------------------------------------- outputs

class _Writer:
    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.files: list[str] = []

    def _path(self, name):
        os.makedirs(self.out_dir, exist_ok=True)
        return os.path.join(self.out_dir, name)

    def text(self, name: str, body: str):
        with open(self._path(name), "w", encoding="utf-8") as fh:
            fh.write(body)
        self.files.append(name)

    def curve(self, name: str, curve: DecayCurve):
        self.text(name, curve.to_csv())


def _noise_dict(noise: OUParams | None):
    if noise is None:
        return None
    return {"sigma_rad_per_s": noise.sigma, "tau_c_s": noise.tau_c,
            "fid_time_s": fid_time(noise), "hahn_time_s": hahn_time(noise)}


def _rb_fits(curve: DecayCurve, tau: float, cfg: RunConfig) -> dict:
    out: dict = {"gate_duration_s": tau}
    if len(curve.x) >= 3:
        exp = fit_exponential(curve)
        epg, err = epg_from_fit(exp)
        out.update(exponential=exp.as_dict(), epg=epg, epg_stderr=err)
    if len(curve.x) >= 4:
        out["stretched"] = fit_stretched(curve, fix_amplitude=1.0).as_dict()
        out["stretched_free_amplitude"] = fit_stretched(curve).as_dict()
    if math.isfinite(tau):
        lim = epg_limit(tau, cfg.t2_limit)
        out["epg_limit"] = {"t2_s": cfg.t2_limit, "value": lim}
        out["epg_limit_long"] = {"t2_s": cfg.t2_limit_long, "value": epg_limit(tau, cfg.t2_limit_long)}
        if "epg" in out:
            out["epg_below_limit"] = bool(out["epg"] < lim)
    return out


def _default_points(cfg: RunConfig):
    if cfg.coherence_points:
        return list(cfg.coherence_points)
    if cfg.coherence_kind == "dd":
        return [1, 2, 4, 8, 16, 32, 64]
    t2 = cfg.t2_fid if cfg.coherence_kind == "fid" else cfg.t2_hahn
    lo = 1.5 * cfg.t_pi if cfg.coherence_kind == "hahn" else 0.0
    return [float(t) for t in np.linspace(max(lo, t2 / 10), 3 * t2, 30)]


def _coherence_summary(curve: DecayCurve) -> dict:
    out: dict = {}
    try:
        out["one_over_e_time_s"] = one_over_e_time(curve)
    except FitError as exc:
        out["one_over_e_time_s"] = None
        out["one_over_e_note"] = str(exc)
    if len(curve.x) >= 3:
        fit = fit_exponential(curve)
        out["exponential"] = {**fit.as_dict(), "time_constant_s": fit.time_constant}
    return out


# ---------------------------------------------------------------- experiments

def exp_rb(cfg, noise, w):
    curve = run_rb(cfg.sim_config(noise))
    w.curve("decay.csv", curve)
    return {"curve": "decay.csv", "scheme": cfg.scheme, **_rb_fits(curve, curve.metadata["gate_duration"], cfg)}


def exp_coherence(cfg, noise, w):
    curve = run_coherence(cfg.coherence_kind, cfg.sim_config(noise), _default_points(cfg),
                          dd_kind=cfg.dd_kind, pulse_style=cfg.pulse_style, tau_delay=cfg.tau_delay)
    w.curve("decay.csv", curve)
    return {"curve": "decay.csv", "kind": cfg.coherence_kind, **_coherence_summary(curve)}


def _fid_hahn(cfg, noise, w, t_fid, t_hahn):
    sim = cfg.sim_config(noise)
    hahn_lo = 1.5 * cfg.t_pi
    fid = run_coherence("fid", sim, np.linspace(t_fid / 20, 3 * t_fid, 40))
    hahn = run_coherence("hahn", sim, np.linspace(max(t_hahn / 20, hahn_lo), 3 * t_hahn, 40))
    w.curve("fid.csv", fid)
    w.curve("hahn.csv", hahn)
    return _coherence_summary(fid), _coherence_summary(hahn)


def exp_calibrate(cfg, noise, w):
    fit = calibrate(cfg.t2_fid, cfg.t2_hahn)
    fid, hahn = _fid_hahn(cfg, fit, w, cfg.t2_fid, cfg.t2_hahn)
    return {"targets_s": {"fid": cfg.t2_fid, "hahn": cfg.t2_hahn}, "calibrated": _noise_dict(fit),
            "simulated": {"fid": fid, "hahn": hahn, "trajectories": cfg.n_noise}}


def exp_table1(cfg, noise, w):
    rows = ["gate,tau_us,EPG_m_1e-4,EPG_M_1e-4"]
    table = []
    for scheme, label in GATE_LABELS.items():
        tau = GATE_TIMES[scheme]
        lo = epg_limit(tau, cfg.t2_limit_long) * 1e4
        hi = epg_limit(tau, cfg.t2_limit) * 1e4
        rows.append(f"{label},{tau * 1e6:.0f},{lo:.1f},{hi:.0f}")
        table.append({"gate": label, "scheme": scheme, "tau_s": tau, "epg_m": lo * 1e-4, "epg_M": hi * 1e-4})
    w.text("table1.csv", "\n".join(rows) + "\n")
    print("\n".join(rows))
    return {"table": table, "t2_short_s": cfg.t2_limit, "t2_long_s": cfg.t2_limit_long}


def exp_fig2(cfg, noise, w):
    noise = noise or calibrate(cfg.t2_fid, cfg.t2_hahn)
    fid, hahn = _fid_hahn(cfg, noise, w, cfg.t2_fid, cfg.t2_hahn)
    tau = GATE_TIMES["bare_bb1"]
    limits = {}
    for name, res in (("fid", fid), ("hahn", hahn)):
        t2 = res["one_over_e_time_s"]
        limits[name] = None if t2 is None else {"t2_s": t2, "epg_limit": epg_limit(tau, t2)}
    return {"noise": _noise_dict(noise), "fid": fid, "hahn": hahn, "bb1_gate_s": tau, "epg_limits": limits}


def exp_fig3(cfg, noise, w):
    out = {}
    for scheme in FIG3_SCHEMES:
        run = replace(cfg, scheme=scheme)
        curve = run_rb(run.sim_config(noise))
        w.curve(f"rb_{scheme}.csv", curve)
        out[scheme] = {"curve": f"rb_{scheme}.csv", **_rb_fits(curve, curve.metadata["gate_duration"], cfg)}
    return {"schemes": out}


def _time_fit(curve: DecayCurve) -> dict:
    fit = fit_exponential(curve)
    return {**fit.as_dict(), "time_constant": fit.time_constant}


def exp_fig4(cfg, noise, w):
    gap = cfg.tau_delay or dd_delay("scheme_d")
    sim = cfg.sim_config(noise, scheme="scheme_d")
    rb = run_rb(sim)
    tau = gate_duration("scheme_d")
    rb_t = DecayCurve(rb.x * tau, rb.mean, rb.stderr, {**rb.metadata, "x_unit": "s"})
    w.curve("rb_scheme_d_time.csv", rb_t)
    horizon = rb_t.x[-1]
    curves = {}
    for kind in ("XY4", "XY16"):
        cycle = (4 if kind == "XY4" else 16) * (cfg.t_pi + gap)
        n_max = max(1, int(horizon // cycle))
        n = sorted({int(v) for v in np.unique(np.geomspace(1, n_max, 12).round())})
        curves[kind] = run_coherence("dd", sim, n, dd_kind=kind, pulse_style="rect", tau_delay=gap)
        w.curve(f"dd_{kind.lower()}.csv", curves[kind])
    ms = 1e3

    def scaled(c):
        return DecayCurve(c.x * ms, c.mean, c.stderr)

    return {
        "dd_delay_s": gap,
        "rb": {"curve": "rb_scheme_d_time.csv", "exponential_ms": _time_fit(scaled(rb_t))},
        "xy4": {"curve": "dd_xy4.csv", "quadratic_ms": fit_quadratic(scaled(curves["XY4"])).as_dict()},
        "xy16": {"curve": "dd_xy16.csv", "exponential_ms": _time_fit(scaled(curves["XY16"]))},
    }


EXPERIMENT_FUNCS = {"rb": exp_rb, "coherence": exp_coherence, "calibrate": exp_calibrate, "table1": exp_table1,
                    "fig2": exp_fig2, "fig3": exp_fig3, "fig4": exp_fig4}


def run(cfg: RunConfig) -> dict:
    w = _Writer(cfg.out_dir)
    t0 = time.perf_counter()
    noise = cfg.noise_params() if cfg.experiment not in ("table1", "calibrate") else None
    result = EXPERIMENT_FUNCS[cfg.experiment](cfg, noise, w)
    summary = {
        "experiment": cfg.experiment,
        "config": cfg.to_dict(),
        "master_seed": cfg.seed,
        "backend": _kernels.BACKEND,
        "noise": _noise_dict(noise),
        "result": result,
        "outputs": list(w.files),
        "wall_time_s": time.perf_counter() - t0,
    }
    w.text("summary.json", json.dumps(summary, indent=2, default=_jsonable) + "\n")
    return summary


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    except InvalidInputError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        summary = run(cfg)
    except (CalibrationError, FitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3
    except InvalidInputError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {', '.join(summary['outputs'])} to {cfg.out_dir} ({summary['wall_time_s']:.1f} s)")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
