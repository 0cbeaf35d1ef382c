"""Brute-force check of the closed forms: fixed-step RK4 on the Schrodinger equation.

The generator is ``H_eff = -i (gamma/2) b^dag b + lambda(m) (sigma_- b^dag + sigma_+ b)``
(``gamma = 0`` gives the lossless carrier Hamiltonian). It conserves m and
couples only |m,0,e> and |m,1,g>::

    d a_m/dtau = -i lambda(m) b_m
    d b_m/dtau = -i lambda(m) a_m - (gamma/2) b_m

and leaves |m,0,g> untouched. ``mode="block"`` integrates these per-m
equations; ``mode="dense"`` builds the full 4M x 4M matrix instead and is
kept as an independent guard against indexing mistakes.

Nothing here uses the closed-form solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import IntegrationError, ParameterError
from .hilbert import BLOCK, EXCITED, GROUND, CompositeState, SystemParams, index, initial_state, sum_sq
from .lamb_dicke import CouplingKind, CouplingProfile

MAX_DT = 0.01
MAX_STEPS = 10**9


@dataclass(frozen=True)
class IntegratorConfig:
    """Step size, coupling profile and cavity loss rate of an RK4 run."""

    dt: float
    coupling: CouplingProfile
    gamma: float = 0.0
    mode: str = "block"

    def __post_init__(self):
        if not (0 < self.dt <= MAX_DT):
            raise ParameterError(f"dt must lie in (0, {MAX_DT}], got {self.dt}")
        if not self.gamma >= 0:
            raise ParameterError(f"gamma must be >= 0, got {self.gamma}")
        if self.mode not in ("block", "dense"):
            raise ParameterError(f"mode must be 'block' or 'dense', got {self.mode!r}")

    @classmethod
    def for_params(cls, params: SystemParams, dt: float = 1e-4, kind=CouplingKind.LAMB_DICKE, mode="block"):
        return cls(dt, CouplingProfile(kind, params.eta), params.gamma, mode)


def generator_matrix(lam: np.ndarray, gamma: float) -> np.ndarray:
    """Dense H_eff on the truncated composite basis.

    |m,1,e> would couple to |m,2,g>, which lies outside the space; it only
    keeps its decay term here, and :func:`integrate` refuses such inputs.
    """
    M = lam.size
    H = np.zeros((BLOCK * M, BLOCK * M), dtype=complex)
    for m in range(M):
        i_e0, i_g1 = index(m, 0, EXCITED), index(m, 1, GROUND)
        H[i_e0, i_g1] = H[i_g1, i_e0] = lam[m]
        H[i_g1, i_g1] = H[index(m, 1, EXCITED), index(m, 1, EXCITED)] = -0.5j * gamma
    return H


def drift(config: IntegratorConfig, state: CompositeState) -> CompositeState:
    """d|psi>/dtau = -i H_eff |psi>."""
    lam = config.coupling.vector(state.M)
    return CompositeState(-1j * (generator_matrix(lam, config.gamma) @ state.amplitudes))


def _segments(taus, dt):
    prev = 0.0
    for tau in taus:
        span = tau - prev
        if span < 0:
            raise ParameterError("output times must be non-decreasing and >= 0")
        n = max(1, math.ceil(span / dt - 1e-9)) if span > 0 else 0
        if n > MAX_STEPS:
            raise IntegrationError(f"{n} steps requested for a span of {span} at dt={dt}")
        yield n, (span / n if n else 0.0)
        prev = tau


def _rk4_blocks(lam, gamma, a, b, taus, dt):
    """Classical RK4 on the per-m pairs; ``lam``, ``gamma``, ``a``, ``b`` broadcast.

    Returns arrays of shape ``(len(taus),) + a.shape``.
    """
    lam = np.asarray(lam, dtype=float)
    g = -1j * lam
    hg = 0.5 * np.asarray(gamma, dtype=float)
    a = np.array(a, dtype=complex)
    b = np.array(b, dtype=complex)
    shape = np.broadcast(a, b, g, hg).shape
    a = np.broadcast_to(a, shape).copy()
    b = np.broadcast_to(b, shape).copy()
    out_a = np.empty((len(taus),) + shape, dtype=complex)
    out_b = np.empty_like(out_a)
    t_now = 0.0
    for k, (n, h) in enumerate(_segments(taus, dt)):
        if n:
            hh = h / 2
            for _ in range(n):
                k1a = g * b
                k1b = g * a - hg * b
                k2a = g * (b + hh * k1b)
                k2b = g * (a + hh * k1a) - hg * (b + hh * k1b)
                k3a = g * (b + hh * k2b)
                k3b = g * (a + hh * k2a) - hg * (b + hh * k2b)
                k4a = g * (b + h * k3b)
                k4b = g * (a + h * k3a) - hg * (b + h * k3b)
                a = a + (h / 6) * (k1a + 2 * k2a + 2 * k3a + k4a)
                b = b + (h / 6) * (k1b + 2 * k2b + 2 * k3b + k4b)
            t_now = taus[k]
            if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
                raise IntegrationError(f"non-finite amplitudes at tau={t_now} (dt={h:g}, steps={n})")
        out_a[k] = a
        out_b[k] = b
    return out_a, out_b


def _rk4_dense(G, psi, taus, dt):
    out = np.empty((len(taus), psi.size), dtype=complex)
    for k, (n, h) in enumerate(_segments(taus, dt)):
        for _ in range(n):
            k1 = G @ psi
            k2 = G @ (psi + (h / 2) * k1)
            k3 = G @ (psi + (h / 2) * k2)
            k4 = G @ (psi + h * k3)
            psi = psi + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(psi)):
            raise IntegrationError(f"non-finite amplitudes at tau={taus[k]} (dt={h:g}, steps={n})")
        out[k] = psi
    return out


def integrate_series(params: SystemParams, config: IntegratorConfig, taus, initial: CompositeState | None = None):
    """States at each of the non-decreasing times ``taus``, in one sweep."""
    if initial is None:
        initial = initial_state(params)
    if initial.M != params.M:
        raise ParameterError(f"initial state has M={initial.M}, params M={params.M}")
    if np.any(initial.sector(1, EXCITED) != 0):
        raise ParameterError("initial state has weight on |m,1,e>, which leaves the n <= 1 space")
    taus = [float(t) for t in np.atleast_1d(taus)]
    lam = config.coupling.vector(params.M)
    if config.mode == "dense":
        G = -1j * generator_matrix(lam, config.gamma)
        rows = _rk4_dense(G, initial.amplitudes.copy(), taus, config.dt)
        return [CompositeState(r, initial.truncation_tail) for r in rows]
    a_t, b_t = _rk4_blocks(lam, config.gamma, initial.sector(0, EXCITED), initial.sector(1, GROUND), taus, config.dt)
    dark = initial.sector(0, GROUND)
    return [
        CompositeState.from_sectors(
            {(0, EXCITED): a, (1, GROUND): b, (0, GROUND): dark}, params.M, initial.truncation_tail
        )
        for a, b in zip(a_t, b_t)
    ]


def integrate(params: SystemParams, config: IntegratorConfig, tau: float, initial: CompositeState | None = None):
    """State at ``tau`` by RK4 from ``initial`` (default |alpha>|0>|e>)."""
    if not tau >= 0:
        raise ParameterError(f"tau must be >= 0, got {tau}")
    return integrate_series(params, config, [tau], initial)[0]


def integrate_sweep(params_list, dt: float, taus, kind=CouplingKind.LAMB_DICKE):
    """Integrate several parameter sets (same M) at once from |alpha>|0>|e>.

    Returns ``(a, b)`` with shape ``(len(taus), len(params_list), M)``.
    Useful for grid checks where one RK4 loop per set would be slow.
    """
    M = {p.M for p in params_list}
    if len(M) != 1:
        raise ParameterError("all parameter sets must share M")
    lam = np.stack([CouplingProfile(kind, p.eta).vector(p.M) for p in params_list])
    gamma = np.array([[p.gamma] for p in params_list])
    a0 = np.stack([initial_state(p).sector(0, EXCITED) for p in params_list])
    IntegratorConfig(dt, CouplingProfile(kind, params_list[0].eta))  # validates dt
    return _rk4_blocks(lam, gamma, a0, np.zeros_like(a0), [float(t) for t in taus], dt)


def convergence_order(params: SystemParams, tau: float, dt: float = 0.01, kind=CouplingKind.LAMB_DICKE) -> float:
    """Empirical order from runs at dt, dt/2 and dt/4 (about 4 for RK4).

    ``log2(|y(dt) - y(dt/2)| / |y(dt/2) - y(dt/4)|)`` with max-abs norms.
    """
    runs = [
        integrate(params, IntegratorConfig(h, CouplingProfile(kind, params.eta), params.gamma), tau).amplitudes
        for h in (dt, dt / 2, dt / 4)
    ]
    e1 = np.max(np.abs(runs[0] - runs[1]))
    e2 = np.max(np.abs(runs[1] - runs[2]))
    return math.log2(e1 / e2)


def norm_history(params: SystemParams, config: IntegratorConfig, taus) -> np.ndarray:
    """Squared norm of the integrated state at each time."""
    return np.array([sum_sq(s.amplitudes) for s in integrate_series(params, config, taus)])
