"""Lossy cavity: evolution conditioned on no photodetection, and the jump.

While no photon is detected the state keeps the form
``sum_m a_m |m,0,e> + b_m |m,1,g>`` and evolves under the non-Hermitian
generator ``H_eff = -i (Gamma/2) b^dag b + lambda(m) (sigma_- b^dag + sigma_+ b)``.
Per phonon number m this is a damped two-level problem with solution::

    a_m = c_m e^{-Gamma tau/4} [C + (Gamma / sqrt(D)) S]
    b_m = -4i c_m e^{-Gamma tau/4} (lambda / sqrt(D)) S
    D = Gamma^2 - 16 lambda^2,  C = cosh(sqrt(D) tau/4),  S = sinh(sqrt(D) tau/4)

``sqrt(D)`` is taken in complex arithmetic, so the underdamped regime
(D < 0) becomes cos/sin without a separate branch. Near the exceptional
point |D| < 1e-12 the Taylor limit is used instead.

A detected photon maps the state to ``b |psi>``; the motion is then left in
the pure state ``sum_m b_m |m> / ||b||`` with the ion in |g> and the cavity
empty. (Written with |e> in some accounts; b acting on |m,1,g> gives |g>.)
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NoPhotonError, ParameterError
from .hilbert import (
    EXCITED,
    GROUND,
    MIN_NORM_SQ,
    CompositeState,
    MotionalState,
    SystemParams,
    initial_coefficients,
    sum_sq,
)
from .lamb_dicke import coupling_ld

#: Below this |D| the closed form switches to its Taylor limit.
EXCEPTIONAL_EPS = 1e-12

# past this the cosh/sinh form overflows before the decay factor can tame it
_EXP_SWITCH = 20.0


def unit_response(lam, gamma: float, tau):
    """Per-m amplitudes (A, B) for c_m = 1; ``lam`` and ``tau`` broadcast."""
    lam = np.asarray(lam, dtype=float)
    tau = np.asarray(tau, dtype=float)
    D = gamma * gamma - 16.0 * lam * lam
    root = np.sqrt(D.astype(complex))
    x = root * tau / 4
    q = gamma * tau / 4
    small = np.abs(D) < EXCEPTIONAL_EPS
    safe_root = np.where(small, 1.0, root)
    decay = np.exp(-q)
    with np.errstate(over="ignore", invalid="ignore"):
        # C e^{-q} and (S / sqrt(D)) e^{-q}
        c_dec = np.cosh(x) * decay
        s_dec = np.sinh(x) * decay / safe_root
    big = x.real > _EXP_SWITCH
    if np.any(big):
        xb, qb = np.broadcast_arrays(x, q)
        xb, qb = xb[big], qb[big]
        up, down = np.exp(xb - qb), np.exp(-xb - qb)
        c_dec = np.array(np.broadcast_to(c_dec, big.shape))
        s_dec = np.array(np.broadcast_to(s_dec, big.shape))
        c_dec[big] = (up + down) / 2
        s_dec[big] = (up - down) / 2 / np.broadcast_to(safe_root, big.shape)[big]
    if np.any(small):
        Dt2 = D * tau * tau
        c_dec = np.where(small, (1 + Dt2 / 32) * np.exp(-q), c_dec)
        s_dec = np.where(small, tau / 4 * (1 + Dt2 / 96) * np.exp(-q), s_dec)
    A = c_dec + gamma * s_dec
    B = -4j * lam * s_dec
    return A, B


@dataclass(frozen=True, eq=False)
class ConditionalAmplitudes:
    """No-detection amplitudes a_m (|m,0,e>) and b_m (|m,1,g>) at time tau."""

    a: np.ndarray
    b: np.ndarray
    tau: float
    truncation_tail: float = 0.0

    def __post_init__(self):
        for name in ("a", "b"):
            arr = np.array(getattr(self, name), dtype=complex)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.a.shape != self.b.shape or self.a.ndim != 1:
            raise ValueError("a and b must be 1-d vectors of equal length")

    @property
    def M(self) -> int:
        return self.a.shape[0]

    def composite(self) -> CompositeState:
        return CompositeState.from_sectors(
            {(0, EXCITED): self.a, (1, GROUND): self.b}, self.M, self.truncation_tail
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "tau": self.tau,
                "truncation_tail": self.truncation_tail,
                "a": [[float(z.real), float(z.imag)] for z in self.a],
                "b": [[float(z.real), float(z.imag)] for z in self.b],
            },
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str) -> "ConditionalAmplitudes":
        d = json.loads(text)
        a = np.array([complex(re, im) for re, im in d["a"]])
        b = np.array([complex(re, im) for re, im in d["b"]])
        return cls(a, b, float(d["tau"]), float(d.get("truncation_tail", 0.0)))


def _check_tau(tau):
    if not (np.all(np.isfinite(tau)) and np.all(np.asarray(tau) >= 0)):
        raise ParameterError(f"tau must be finite and >= 0, got {tau}")


def amplitudes(params: SystemParams, tau: float) -> ConditionalAmplitudes:
    """Closed-form a_m(tau), b_m(tau) from the truncated |alpha>|0>|e>."""
    _check_tau(tau)
    c = initial_coefficients(params)
    A, B = unit_response(coupling_ld(params.eta, np.arange(params.M)), params.gamma, tau)
    return ConditionalAmplitudes(c * A, c * B, float(tau), params.tail)


def survival_norm(amps: ConditionalAmplitudes) -> float:
    """<psi|psi> of the unnormalized no-detection state."""
    return math.fsum([sum_sq(amps.a), sum_sq(amps.b)])


def jump_probability_curve(params: SystemParams, taus) -> np.ndarray:
    """P(tau) = 1 - <psi(tau)|psi(tau)> for every tau in ``taus``.

    Evaluated as sum_m |c_m|^2 (1 - |A_m|^2 - |B_m|^2), which is exactly 0 at
    tau = 0 and avoids subtracting two totals that are both close to 1.
    """
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    _check_tau(taus)
    if params.gamma == 0.0:
        return np.zeros(taus.shape)
    w = np.abs(initial_coefficients(params)) ** 2
    lam = coupling_ld(params.eta, np.arange(params.M))
    A, B = unit_response(lam[None, :], params.gamma, taus[:, None])
    loss = 1.0 - (A.real**2 + A.imag**2) - (B.real**2 + B.imag**2)
    return np.clip(loss @ w, 0.0, 1.0)


def jump_probability(params: SystemParams, tau: float) -> float:
    """Probability that at least one photon has been detected by ``tau``."""
    return float(jump_probability_curve(params, [tau])[0])


def survival_curve(params: SystemParams, taus) -> np.ndarray:
    return 1.0 - jump_probability_curve(params, taus)


def post_jump_state(params: SystemParams, tau: float) -> MotionalState:
    """Normalized motional state after a photon is detected at ``tau``.

    The ion is left in |g> and the cavity in vacuum; use
    ``hilbert.embed(state, 0, GROUND)`` for the full product state.
    """
    _check_tau(tau)
    if tau == 0:
        raise NoPhotonError("no photon can be detected at tau = 0")
    b = amplitudes(params, tau).b
    return normalize_photon_sector(b, params.tail, tau)


def normalize_photon_sector(b: np.ndarray, tail: float, tau: float) -> MotionalState:
    scale = float(np.max(np.abs(b)))
    if scale == 0.0:
        raise NoPhotonError(f"the one-photon sector is empty at tau={tau}")
    scaled = b / scale
    nrm = math.sqrt(sum_sq(scaled))
    if (scale * nrm) ** 2 <= MIN_NORM_SQ:
        raise NoPhotonError(f"the one-photon sector is empty at tau={tau}")
    return MotionalState(scaled / nrm, tail)


@dataclass(frozen=True)
class JumpSample:
    tau: float
    p_jump: float
    survival: float


def jump_timeseries(params: SystemParams, taus) -> list[JumpSample]:
    taus = np.asarray(taus, dtype=float)
    p = jump_probability_curve(params, taus)
    return [JumpSample(float(t), float(pj), float(1.0 - pj)) for t, pj in zip(taus, p)]


def jump_csv(samples) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tau", "P_jump", "survival_norm"])
    for s in samples:
        w.writerow([repr(s.tau), repr(s.p_jump), repr(s.survival)])
    return buf.getvalue()
