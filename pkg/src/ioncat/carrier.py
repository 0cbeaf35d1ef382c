"""Lossless carrier dynamics, motional cat states and the internal-state measurement.

Starting from |alpha>|0>|e>, each Fock component m undergoes a Rabi
oscillation at its own Lamb-Dicke frequency lambda(m)::

    a_m(t) = c_m cos(lambda(m) t)        on |m, 0, e>
    b_m(t) = -i c_m sin(lambda(m) t)     on |m, 1, g>

Since lambda(m) t = omega_eta t - m phi with phi = eta^2 t, the two sectors
are combinations of the cats |Phi+-> = (|alpha e^{i phi}> +- |alpha e^{-i phi}>)/2.
At omega_eta t_k = k pi the state is (-1)^k (|Phi+>|0>|e> + |Phi->|1>|g>).

Time is in units of 1/g throughout.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateStateError, ParameterError
from .hilbert import (
    EXCITED,
    GROUND,
    MIN_NORM_SQ,
    CompositeState,
    MotionalState,
    SystemParams,
    sum_sq,
    coherent_amplitudes,
    fidelity,
    initial_coefficients,
    normalize,
)
from .lamb_dicke import coupling_ld


class CatSign(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"


@dataclass(frozen=True)
class CatSpec:
    alpha: complex
    phi: float
    sign: CatSign = CatSign.PLUS

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "sign", CatSign(self.sign))


def ld_couplings(params: SystemParams) -> np.ndarray:
    return coupling_ld(params.eta, np.arange(params.M))


def cat_phase(params: SystemParams, t: float) -> float:
    """phi = eta^2 t, the rotation separating the two coherent components."""
    return params.eta**2 * t


def evolve_ideal(params: SystemParams, t: float) -> CompositeState:
    """State at time ``t`` under the lossless carrier Hamiltonian from |alpha>|0>|e>."""
    c = initial_coefficients(params)
    theta = ld_couplings(params) * t
    return CompositeState.from_sectors(
        {(0, EXCITED): c * np.cos(theta), (1, GROUND): -1j * c * np.sin(theta)},
        params.M,
        params.tail,
    )


def cat_state(spec: CatSpec, M: int, normalized: bool = True) -> MotionalState:
    """|Phi+-> = (|alpha e^{i phi}> +- |alpha e^{-i phi}>) / 2.

    With ``normalized=False`` the divisor 2 is kept as is, so the vector is
    generally not of unit norm. The normalized minus cat at phi = 0 mod pi
    vanishes and raises :class:`DegenerateStateError`.
    """
    if M < 1:
        raise ParameterError(f"M must be >= 1, got {M}")
    base = coherent_amplitudes(spec.alpha, M)
    mphi = np.arange(M) * spec.phi
    if spec.sign is CatSign.PLUS:
        amps = base.amplitudes * np.cos(mphi)
    else:
        amps = 1j * base.amplitudes * np.sin(mphi)
    state = MotionalState(amps, base.truncation_tail)
    if not normalized:
        return state
    if sum_sq(amps) <= MIN_NORM_SQ or _degenerate_minus(spec):
        raise DegenerateStateError(f"the {spec.sign.value} cat at phi={spec.phi} is the zero vector")
    return normalize(state)


def _degenerate_minus(spec: CatSpec) -> bool:
    # sin(m phi) is only rounding noise when phi is a multiple of pi
    if spec.sign is not CatSign.MINUS:
        return False
    k = round(spec.phi / math.pi)
    return abs(spec.phi - k * math.pi) <= 1e-14 * max(1.0, abs(spec.phi))


def tk_time(params: SystemParams, k: int) -> float:
    """Interaction time with omega_eta t = k pi, in units of 1/g."""
    return k * math.pi / (1.0 - params.eta**2 / 2)


def state_at_tk(params: SystemParams, k: int) -> CompositeState:
    """Lossless state at t_k, where it equals (-1)^k (|Phi+>|0>|e> + |Phi->|1>|g>)."""
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    return evolve_ideal(params, tk_time(params, k))


def measure_internal(state: CompositeState, outcome: int) -> tuple[MotionalState, float]:
    """Project on the internal level ``outcome`` (GROUND or EXCITED).

    Returns the normalized motional state and the outcome probability. The
    cavity must be in a definite photon number after the projection, which
    holds for every state generated from |alpha>|0>|e>.
    """
    if outcome not in (GROUND, EXCITED):
        raise ParameterError(f"outcome must be GROUND (0) or EXCITED (1), got {outcome}")
    total = sum_sq(state.amplitudes)
    if total <= MIN_NORM_SQ:
        raise DegenerateStateError("cannot measure the zero state")
    weights = [sum_sq(state.sector(n, outcome)) for n in (0, 1)]
    prob = math.fsum(weights) / total
    if prob <= MIN_NORM_SQ:
        raise DegenerateStateError(f"outcome {outcome} has zero probability")
    n_major = int(weights[1] > weights[0])
    if weights[1 - n_major] > 1e-12 * weights[n_major]:
        raise ValueError("cavity and motion stay entangled after the measurement; no pure motional state")
    return normalize(MotionalState(state.sector(n_major, outcome), state.truncation_tail)), prob


@dataclass(frozen=True)
class CarrierSample:
    t: float
    p_excited: float
    p_ground: float
    fidelity_plus: float
    fidelity_minus: float


def _sector_fidelity(sector: np.ndarray, spec: CatSpec, M: int) -> float:
    try:
        cat = cat_state(spec, M, normalized=False)
        return fidelity(MotionalState(sector), cat)
    except DegenerateStateError:
        return math.nan


def carrier_timeseries(params: SystemParams, times) -> list[CarrierSample]:
    """Level populations and cat fidelities of both sectors along ``times``.

    ``fidelity_plus`` compares the |0>|e> sector with |Phi+> and
    ``fidelity_minus`` the |1>|g> sector with |Phi->, both at phi = eta^2 t.
    Both reach 1 at every t_k. Undefined fidelities (a vanishing sector or
    cat) are NaN.
    """
    out = []
    for t in np.asarray(times, dtype=float):
        psi = evolve_ideal(params, float(t))
        phi = cat_phase(params, float(t))
        pe = sum_sq(psi.sector(0, EXCITED))
        pg = sum_sq(psi.sector(1, GROUND))
        out.append(
            CarrierSample(
                float(t),
                pe,
                pg,
                _sector_fidelity(psi.sector(0, EXCITED), CatSpec(params.alpha, phi, CatSign.PLUS), params.M),
                _sector_fidelity(psi.sector(1, GROUND), CatSpec(params.alpha, phi, CatSign.MINUS), params.M),
            )
        )
    return out


def timeseries_csv(samples) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "P(e)", "P(g)", "fidelity_plus", "fidelity_minus"])
    for s in samples:
        w.writerow([repr(s.t), repr(s.p_excited), repr(s.p_ground), repr(s.fidelity_plus), repr(s.fidelity_minus)])
    return buf.getvalue()
