"""Monte Carlo propagation of compiled schedules under noise.

Every shot (one random sequence, one noise trajectory, one amplitude-error
draw) is an independent pure function of its seed.  Seeds are derived from
``master_seed`` by position in the (m, sequence, trajectory) grid, and shot
results are reduced in grid order, so results do not depend on how many
worker threads run the shots.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .clifford import CLIFFORD_GROUP, IDENTITY, compose, invert, readout_sign, sample_rb_sequence
from .errors import InvalidInputError
from .noise import AmplitudeErrorModel, NoiseTrajectory, OUParams, RelaxationParams, n_steps, ou_samples
from .pulses import (
    T_PI_DEFAULT,
    PulseSchedule,
    SchemeId,
    SchemeParams,
    compile_sequence,
    gate_duration,
    concatenate,
    dd_cycle,
    delay,
    rectangular,
)
from .su2 import QubitState, Rotation

DEFAULT_M_VALUES = (1, 2, 4, 8, 16, 32, 48, 64, 80)
DEFAULT_DT = T_PI_DEFAULT / 80
TRAJ_CHUNK = 32

_RB_STREAM, _SHOT_STREAM, _COH_STREAM, _MIX_STREAM, _MIX_SHOT_STREAM = 0, 1, 2, 3, 4


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("RBDD_WORKERS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SimConfig:
    dt: float = DEFAULT_DT
    n_noise: int = 1
    n_sequences: int = 32
    m_values: tuple[int, ...] = DEFAULT_M_VALUES
    scheme: SchemeId = SchemeId.BARE_BB1
    noise: OUParams | None = None
    eps_model: AmplitudeErrorModel = field(default_factory=AmplitudeErrorModel)
    relaxation: RelaxationParams = field(default_factory=RelaxationParams)
    master_seed: int = 0
    scheme_params: SchemeParams = field(default_factory=SchemeParams)
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "scheme", SchemeId.parse(self.scheme))
        object.__setattr__(self, "m_values", tuple(int(m) for m in self.m_values))
        if not self.dt > 0:
            raise InvalidInputError("dt must be > 0")
        if self.n_sequences < 1 or self.n_noise < 1:
            raise InvalidInputError("n_sequences and n_noise must be >= 1")
        if any(m < 1 for m in self.m_values):
            raise InvalidInputError("m_values must be >= 1")
        if list(self.m_values) != sorted(set(self.m_values)):
            raise InvalidInputError("m_values must be strictly increasing")
        if self.workers < 1:
            raise InvalidInputError("workers must be >= 1")


@dataclass
class DecayCurve:
    x: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.mean = np.asarray(self.mean, dtype=float)
        self.stderr = np.asarray(self.stderr, dtype=float)
        if not (self.x.shape == self.mean.shape == self.stderr.shape):
            raise InvalidInputError("x, mean and stderr must have equal length")
        if np.any(self.stderr < 0):
            raise InvalidInputError("standard errors must be >= 0")

    @property
    def points(self):
        return list(zip(self.x.tolist(), self.mean.tolist(), self.stderr.tolist()))

    def to_csv(self) -> str:
        """``x,mean,stderr`` table with 10 significant digits."""
        rows = ["x,mean,stderr"]
        rows += [f"{x:.10g},{m:.10g},{e:.10g}" for x, m, e in self.points]
        return "\n".join(rows) + "\n"


def _check_state(r: np.ndarray):
    if np.any(np.linalg.norm(r, axis=-1) > 1.0 + 1e-9):
        raise RuntimeError("Bloch vector left the unit ball")


def propagate(state: QubitState, sched: PulseSchedule, traj: NoiseTrajectory | None, eps: float = 0.0,
              relaxation: RelaxationParams | None = None, dt: float = DEFAULT_DT) -> QubitState:
    """Evolve ``state`` through ``sched`` with field ``traj`` and amplitude error ``eps``.

    Within each step the Hamiltonian is
    ``(1+eps) w1 (cos phi S_x + sin phi S_y) + b S_z``.
    ``traj=None`` means ``b = 0``.
    """
    start, dur, amp, phase = sched.arrays()
    if traj is None:
        noise = np.zeros((1, 0))
    else:
        dt = traj.dt
        if traj.duration < sched.duration - 1e-9 * dt:
            raise InvalidInputError("noise trajectory is shorter than the schedule")
        noise = np.asarray(traj.samples, dtype=float)[None, :]
    rate = (relaxation or RelaxationParams()).rate
    r = _kernels.propagate(start, dur, amp, phase, noise, [eps], dt, rate, state.vector)[0]
    _check_state(r)
    return QubitState(tuple(r))


def _shot_rngs(seed: int, key: tuple, lo: int, hi: int):
    return [np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key + (j,))) for j in range(lo, hi)]


def _draw_eps(model: AmplitudeErrorModel, rngs) -> np.ndarray:
    if model.kind == "none":
        return np.zeros(len(rngs))
    if model.kind == "fixed":
        return np.full(len(rngs), float(model.value))
    if model.kind == "gaussian":
        return np.array([g.normal(0.0, model.value) for g in rngs])
    return np.array([g.uniform(-model.value, model.value) for g in rngs])


def _run_shots(sched: PulseSchedule, cfg: SimConfig, key: tuple, r0) -> np.ndarray:
    """Final Bloch vectors for ``cfg.n_noise`` shots of one schedule."""
    start, dur, amp, phase = sched.arrays()
    steps = n_steps(sched.duration, cfg.dt)
    out = np.empty((cfg.n_noise, 3))
    rate = cfg.relaxation.rate
    for lo in range(0, cfg.n_noise, TRAJ_CHUNK):
        hi = min(cfg.n_noise, lo + TRAJ_CHUNK)
        rngs = _shot_rngs(cfg.master_seed, key, lo, hi)
        eps = _draw_eps(cfg.eps_model, rngs)
        if cfg.noise is None or cfg.noise.sigma == 0:
            noise = np.zeros((hi - lo, 0))
        else:
            noise = ou_samples(cfg.noise, steps, cfg.dt, rngs)
        out[lo:hi] = _kernels.propagate(start, dur, amp, phase, noise, eps, cfg.dt, rate, r0)
    _check_state(out)
    return out


def _rb_task(cfg: SimConfig, i_m: int, i_seq: int) -> np.ndarray:
    m = cfg.m_values[i_m]
    rng = np.random.default_rng(np.random.SeedSequence(cfg.master_seed, spawn_key=(_RB_STREAM, i_m, i_seq)))
    seq = sample_rb_sequence(m, rng)
    sched = compile_sequence(seq, cfg.scheme, cfg.scheme_params)
    r = _run_shots(sched, cfg, (_SHOT_STREAM, i_m, i_seq), (0.0, 0.0, 1.0))
    return readout_sign(seq) * r[:, 2]


def _summarize(shots: np.ndarray):
    """Mean and standard error from a ``(n_sequences, n_noise)`` block."""
    per_seq = shots.mean(axis=1)
    mean = float(per_seq.mean())
    if shots.shape[0] > 1:
        err = float(per_seq.std(ddof=1) / math.sqrt(shots.shape[0]))
    elif shots.shape[1] > 1:
        err = float(shots.std(ddof=1) / math.sqrt(shots.shape[1]))
    else:
        err = 0.0
    return mean, err


def _map(fn, tasks, workers):
    if workers <= 1:
        return [fn(*t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: fn(*t), tasks))


def run_rb(cfg: SimConfig) -> DecayCurve:
    """Randomized benchmarking decay: sign-corrected <S_z> vs number of steps."""
    tasks = [(cfg, i, s) for i in range(len(cfg.m_values)) for s in range(cfg.n_sequences)]
    results = _map(_rb_task, tasks, cfg.workers)
    means, errs = [], []
    for i in range(len(cfg.m_values)):
        block = np.array(results[i * cfg.n_sequences:(i + 1) * cfg.n_sequences])
        mean, err = _summarize(block)
        means.append(mean)
        errs.append(err)
    tau = gate_duration(cfg.scheme, cfg.scheme_params) if cfg.scheme_params.pad_virtual else float("nan")
    return DecayCurve(np.array(cfg.m_values, dtype=float), np.array(means), np.array(errs),
                      {"scheme": cfg.scheme.value, "gate_duration": tau, "x_unit": "gates"})


def coherence_schedule(kind: str, point: float, cfg: SimConfig, dd_kind: str = "XY16",
                       pulse_style: str = "rect", tau_delay: float = 0.0) -> PulseSchedule:
    """Schedule for one point of a coherence experiment.

    ``fid``: free evolution for ``point`` seconds.  ``hahn``: total time
    ``point`` with an x pi pulse in the middle.  ``dd``: ``point`` repeated
    DD cycles.
    """
    w = cfg.scheme_params.omega1
    if kind == "fid":
        if point <= 0:
            raise InvalidInputError("FID times must be > 0")
        return PulseSchedule(tuple(delay(point)), Rotation.identity())
    if kind == "hahn":
        t_pi = math.pi / w
        if point <= t_pi:
            raise InvalidInputError("Hahn echo time must exceed the pi-pulse length")
        half = PulseSchedule(tuple(delay((point - t_pi) / 2)), Rotation.identity())
        return concatenate([half, rectangular(math.pi, 0.0, w), half])
    if kind == "dd":
        n = int(point)
        if n < 1 or n != point:
            raise InvalidInputError("DD points are positive cycle counts")
        cycle = dd_cycle(dd_kind, pulse_style, tau_delay, w)
        return concatenate([cycle] * n)
    raise InvalidInputError(f"unknown coherence experiment {kind!r}")


def _coherence_task(cfg, scheds, arrays, steps, lo, hi):
    rngs = _shot_rngs(cfg.master_seed, (_COH_STREAM,), lo, hi)
    eps = _draw_eps(cfg.eps_model, rngs)
    if cfg.noise is None or cfg.noise.sigma == 0:
        noise = np.zeros((hi - lo, 0))
    else:
        noise = ou_samples(cfg.noise, steps, cfg.dt, rngs)
    out = np.empty((len(scheds), hi - lo))
    for p, (start, dur, amp, phase) in enumerate(arrays):
        r = _kernels.propagate(start, dur, amp, phase, noise, eps, cfg.dt, cfg.relaxation.rate, (1.0, 0.0, 0.0))
        _check_state(r)
        out[p] = r[:, 0]
    return out


def run_coherence(kind: str, cfg: SimConfig, points, dd_kind: str = "XY16", pulse_style: str = "rect",
                  tau_delay: float = 0.0) -> DecayCurve:
    """Coherence <S_x> from a +x start, versus total time.

    Each trajectory is shared by all points, so the curve is one ensemble
    of noise realizations observed at several times.
    """
    points = list(points)
    if not points:
        raise InvalidInputError("no points requested")
    scheds = [coherence_schedule(kind, p, cfg, dd_kind, pulse_style, tau_delay) for p in points]
    arrays = [s.arrays() for s in scheds]
    steps = n_steps(max(s.duration for s in scheds), cfg.dt)
    tasks = [(cfg, scheds, arrays, steps, lo, min(cfg.n_noise, lo + TRAJ_CHUNK))
             for lo in range(0, cfg.n_noise, TRAJ_CHUNK)]
    vals = np.concatenate(_map(_coherence_task, tasks, cfg.workers), axis=1)
    mean = vals.mean(axis=1)
    err = vals.std(axis=1, ddof=1) / math.sqrt(vals.shape[1]) if vals.shape[1] > 1 else np.zeros(len(points))
    x = np.array([s.duration for s in scheds])
    meta = {"kind": kind, "x_unit": "s"}
    if kind == "dd":
        meta.update(dd_kind=dd_kind, pulse_style=pulse_style, tau_delay=tau_delay, n_cycles=list(points))
    return DecayCurve(x, mean, err, meta)


def _interleaved_task(cfg, cycle, n, i_n, i_seq, randomize):
    start, dur, amp, phase = cycle.arrays()
    rng = np.random.default_rng(np.random.SeedSequence(cfg.master_seed, spawn_key=(_MIX_STREAM, i_n, i_seq)))
    gates = [CLIFFORD_GROUP[i] for i in rng.integers(0, len(CLIFFORD_GROUP), n)] if randomize else [IDENTITY] * n
    key = (_MIX_SHOT_STREAM, i_n, i_seq)
    out = np.empty(cfg.n_noise)
    steps = n_steps(n * cycle.duration, cfg.dt)
    for lo in range(0, cfg.n_noise, TRAJ_CHUNK):
        hi = min(cfg.n_noise, lo + TRAJ_CHUNK)
        rngs = _shot_rngs(cfg.master_seed, key, lo, hi)
        eps = _draw_eps(cfg.eps_model, rngs)
        if cfg.noise is None or cfg.noise.sigma == 0:
            noise = np.zeros((hi - lo, 0))
        else:
            noise = ou_samples(cfg.noise, steps, cfg.dt, rngs)
        r = np.tile([1.0, 0.0, 0.0], (hi - lo, 1))
        net = IDENTITY
        for i, g in enumerate(gates):
            r = _kernels.propagate(start + i * cycle.duration, dur, amp, phase, noise, eps, cfg.dt,
                                   cfg.relaxation.rate, r)
            r = r @ g.array().T
            net = compose(g, net)
        r = r @ invert(net).array().T
        _check_state(r)
        out[lo:hi] = r[:, 0]
    return out


def run_interleaved(cfg: SimConfig, n_values, dd_kind: str = "XY4", pulse_style: str = "rect",
                    tau_delay: float = 0.0, randomize: bool = True) -> DecayCurve:
    """DD cycles separated by error-free random Clifford gates.

    Starting from +x, each of ``n`` steps runs one DD cycle (with noise and
    amplitude error) and then an exact, instantaneous random Clifford; an
    exact inverse of the gate product ends the sequence.  The gates reshuffle
    the cycle error from step to step.  With ``randomize=False`` every gate
    is the identity and the curve equals plain repeated DD.  x is the cycle
    count.
    """
    n_values = [int(n) for n in n_values]
    if not n_values or any(n < 1 for n in n_values):
        raise InvalidInputError("cycle counts must be positive")
    cycle = dd_cycle(dd_kind, pulse_style, tau_delay, cfg.scheme_params.omega1)
    tasks = [(cfg, cycle, n, i, s, randomize) for i, n in enumerate(n_values) for s in range(cfg.n_sequences)]
    results = _map(_interleaved_task, tasks, cfg.workers)
    means, errs = [], []
    for i in range(len(n_values)):
        mean, err = _summarize(np.array(results[i * cfg.n_sequences:(i + 1) * cfg.n_sequences]))
        means.append(mean)
        errs.append(err)
    meta = {"kind": "interleaved", "dd_kind": dd_kind, "pulse_style": pulse_style, "tau_delay": tau_delay,
            "randomize": randomize, "cycle_duration": cycle.duration, "x_unit": "cycles"}
    return DecayCurve(np.array(n_values, dtype=float), np.array(means), np.array(errs), meta)
