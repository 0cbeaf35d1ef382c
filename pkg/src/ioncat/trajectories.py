"""Monte Carlo quantum-jump trajectories of the lossy ion-cavity system.

Two samplers are available:

``waiting_time`` (default)
    Draw u ~ U(0, 1) and find the jump time tau* with survival(tau*) = u by
    bisection on the closed-form survival norm. Exact up to the bisection
    tolerance.
``per_step``
    Integrate the no-jump state with RK4 and test for a jump in every step
    with probability ``gamma <n_photon> dt``. It shares nothing with the
    closed form and serves as an independent check.

A jump leaves the motion in ``b |psi>`` with the ion in |g> and the cavity
empty. ``H_eff`` annihilates every |m,0,g>, so no second photon can be
emitted and each trajectory has at most one jump.

Seeds: an ensemble root seed is expanded into per-trajectory integer seeds
with splitmix64; each trajectory then draws from
``numpy.random.default_rng(seed)``. Any single ensemble member can be
rerun alone with :func:`run_trajectory` and its recorded seed.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from . import conditional, oracle
from .exceptions import ParameterError
from .hilbert import GROUND, CompositeState, SystemParams, embed, initial_state, sum_sq
from .lamb_dicke import CouplingKind

BISECTION_TOL = 1e-10
_MASK64 = (1 << 64) - 1


def splitmix64(root: int, n: int) -> list[int]:
    """First ``n`` outputs of the splitmix64 generator started at ``root``."""
    state = root & _MASK64
    out = []
    for _ in range(n):
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        out.append(z ^ (z >> 31))
    return out


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Outcome of one trajectory up to ``tau_max``.

    ``survival_at_end`` is the norm kept by the no-jump evolution of the
    final state: S(tau_max) without a jump, and exactly 1 after one, since
    the post-jump state is dark.
    """

    seed: int
    jump_time: float | None
    final_state: CompositeState
    survival_at_end: float

    @property
    def jumped(self) -> bool:
        return self.jump_time is not None

    @property
    def n_jumps(self) -> int:
        return int(self.jumped)


def _draw_u(seed: int) -> float:
    rng = np.random.default_rng(seed)
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return u


def invert_survival(params: SystemParams, u, tau_max: float, tol: float = BISECTION_TOL) -> np.ndarray:
    """Jump times tau* with survival(tau*) = u, or NaN when survival(tau_max) > u.

    Vectorized bisection over ``u``; survival is nonincreasing in tau.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    s_end = conditional.survival_curve(params, [tau_max])[0]
    jumps = u >= s_end
    lo = np.zeros(u.shape)
    hi = np.full(u.shape, float(tau_max))
    n_iter = max(1, math.ceil(math.log2(tau_max / tol))) if tau_max > 0 else 0
    for _ in range(n_iter):
        mid = (lo + hi) / 2
        above = conditional.survival_curve(params, mid) > u
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return np.where(jumps, hi, np.nan)


def _no_jump_state(params: SystemParams, tau: float) -> CompositeState:
    amps = conditional.amplitudes(params, tau)
    return CompositeState(amps.composite().amplitudes / math.sqrt(conditional.survival_norm(amps)), params.tail)


def _jumped_state(params: SystemParams, tau: float) -> CompositeState:
    return embed(conditional.post_jump_state(params, tau), 0, GROUND)


class _StepPath:
    """No-jump RK4 path on a uniform grid, shared by per-step samplers."""

    def __init__(self, params: SystemParams, tau_max: float, dt: float):
        n = max(1, math.ceil(tau_max / dt - 1e-9))
        self.h = tau_max / n
        self.times = self.h * np.arange(1, n + 1)
        cfg = oracle.IntegratorConfig.for_params(params, min(self.h, oracle.MAX_DT), CouplingKind.LAMB_DICKE)
        states = oracle.integrate_series(params, cfg, self.times)
        self.states = states
        photon = np.array([sum_sq(s.sector(1, GROUND)) for s in states])
        norms = np.array([sum_sq(s.amplitudes) for s in states])
        prev_photon = np.concatenate([[0.0], photon[:-1]])
        prev_norm = np.concatenate([[1.0], norms[:-1]])
        # jump probability of step k, from the normalized state at its start
        self.p_step = params.gamma * prev_photon / prev_norm * self.h
        self.norm_end = norms[-1]

    def first_jump(self, rng: np.random.Generator) -> int | None:
        hits = np.flatnonzero(rng.random(self.p_step.size) < self.p_step)
        return int(hits[0]) if hits.size else None

    def record(self, seed: int, params: SystemParams) -> TrajectoryRecord:
        k = self.first_jump(np.random.default_rng(seed))
        if k is None:
            last = self.states[-1]
            state = CompositeState(last.amplitudes / math.sqrt(self.norm_end), params.tail)
            return TrajectoryRecord(seed, None, state, float(self.norm_end))
        # the photon was emitted from the state at the start of step k
        src = initial_state(params) if k == 0 else self.states[k - 1]
        b = src.sector(1, GROUND)
        if not np.any(b):
            b = self.states[k].sector(1, GROUND)
        motional = conditional.normalize_photon_sector(b, params.tail, float(self.times[k]))
        return TrajectoryRecord(seed, float(self.times[k]), embed(motional, 0, GROUND), 1.0)


def run_trajectory(
    params: SystemParams, tau_max: float, seed: int, method: str = "waiting_time", dt: float = 1e-3
) -> TrajectoryRecord:
    """Sample one trajectory on [0, tau_max]."""
    if not tau_max > 0:
        raise ParameterError(f"tau_max must be positive, got {tau_max}")
    if method == "per_step":
        return _StepPath(params, tau_max, dt).record(seed, params)
    if method != "waiting_time":
        raise ParameterError(f"unknown sampling method {method!r}")
    u = _draw_u(seed)
    tau_star = invert_survival(params, [u], tau_max)[0]
    return _waiting_record(params, seed, tau_star, tau_max)


def _waiting_record(params, seed, tau_star, tau_max, no_jump=None):
    if math.isnan(tau_star):
        state = no_jump if no_jump is not None else _no_jump_state(params, tau_max)
        return TrajectoryRecord(seed, None, state, float(conditional.survival_curve(params, [tau_max])[0]))
    return TrajectoryRecord(seed, float(tau_star), _jumped_state(params, float(tau_star)), 1.0)


def run_ensemble(
    params: SystemParams,
    tau_max: float,
    n_traj: int,
    base_seed: int = 0,
    method: str = "waiting_time",
    dt: float = 1e-3,
) -> list[TrajectoryRecord]:
    """``n_traj`` independent trajectories with seeds expanded from ``base_seed``.

    Record i equals ``run_trajectory(params, tau_max, record.seed, method, dt)``.
    """
    if not tau_max > 0:
        raise ParameterError(f"tau_max must be positive, got {tau_max}")
    seeds = splitmix64(base_seed, n_traj)
    if method == "per_step":
        path = _StepPath(params, tau_max, dt)
        return [path.record(s, params) for s in seeds]
    if method != "waiting_time":
        raise ParameterError(f"unknown sampling method {method!r}")
    u = np.array([_draw_u(s) for s in seeds])
    tau_star = invert_survival(params, u, tau_max)
    no_jump = _no_jump_state(params, tau_max)
    return [_waiting_record(params, s, t, tau_max, no_jump) for s, t in zip(seeds, tau_star)]


def is_dark(params: SystemParams, state: CompositeState) -> bool:
    """True when H_eff annihilates ``state`` (its no-jump evolution is frozen)."""
    cfg = oracle.IntegratorConfig.for_params(params, oracle.MAX_DT)
    return not np.any(oracle.drift(cfg, state).amplitudes)


@dataclass(frozen=True)
class EnsembleTable:
    tau: np.ndarray
    empirical: np.ndarray
    analytic: np.ndarray
    z: np.ndarray
    n_traj: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "empirical_P", "analytic_P", "z"])
        for row in zip(self.tau, self.empirical, self.analytic, self.z):
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def binomial_z(empirical, analytic, n: int) -> np.ndarray:
    """(empirical - analytic) / sqrt(analytic (1 - analytic) / n); 0 where both agree exactly."""
    empirical = np.asarray(empirical, dtype=float)
    analytic = np.asarray(analytic, dtype=float)
    var = analytic * (1 - analytic) / n
    diff = empirical - analytic
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(var > 0, diff / np.sqrt(np.where(var > 0, var, 1.0)), np.where(diff == 0, 0.0, np.inf))
    return z


def ensemble_table(records, params: SystemParams, checkpoints) -> EnsembleTable:
    checkpoints = np.asarray(checkpoints, dtype=float)
    times = np.array([r.jump_time if r.jumped else np.inf for r in records])
    empirical = np.array([np.count_nonzero(times <= t) for t in checkpoints]) / len(records)
    analytic = conditional.jump_probability_curve(params, checkpoints)
    return EnsembleTable(checkpoints, empirical, analytic, binomial_z(empirical, analytic, len(records)), len(records))


def ensemble_cdf(
    params: SystemParams,
    tau_checkpoints,
    n_traj: int,
    base_seed: int = 0,
    method: str = "waiting_time",
    dt: float = 1e-3,
) -> EnsembleTable:
    """Empirical jump fraction versus the analytic P(tau) at each checkpoint."""
    if n_traj < 100:
        raise ParameterError(f"n_traj must be >= 100, got {n_traj}")
    checkpoints = np.asarray(tau_checkpoints, dtype=float)
    tau_max = float(checkpoints.max())
    if tau_max <= 0:
        raise ParameterError("need at least one positive checkpoint")
    records = run_ensemble(params, tau_max, n_traj, base_seed, method, dt)
    return ensemble_table(records, params, checkpoints)


def records_jsonl(records) -> str:
    """One JSON object per line: ``{"seed": ..., "jump_time": ...}``."""
    return "".join(json.dumps({"seed": r.seed, "jump_time": r.jump_time}) + "\n" for r in records)
