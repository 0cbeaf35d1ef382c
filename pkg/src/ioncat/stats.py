"""Phonon-number statistics of motional states.

The Fano factor here is the normalized variance ``<m^2>/<m> - <m>``: 1 for
a coherent state, below 1 for sub-Poissonian and above 1 for
super-Poissonian statistics.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .conditional import normalize_photon_sector, unit_response
from .exceptions import NoPhotonError, ParameterError
from .hilbert import MotionalState, SystemParams, initial_coefficients, sum_sq
from .lamb_dicke import coupling_ld

NORM_TOL = 1e-6
CLASSIFY_TOL = 1e-9

# relative gap below which neighbouring probabilities count as one plateau
_PLATEAU_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class PhononDistribution:
    p: np.ndarray
    mean: float
    second_moment: float
    fano: float

    @property
    def variance(self) -> float:
        return self.second_moment - self.mean**2

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "P_m"])
        for m, pm in enumerate(self.p):
            w.writerow([m, repr(float(pm))])
        return buf.getvalue()


def distribution_from_probabilities(p) -> PhononDistribution:
    """Moments and Fano factor of a probability vector (renormalized to sum 1).

    The Fano factor is NaN when the mean vanishes (vacuum).
    """
    p = np.asarray(p, dtype=float).copy()
    if np.any(p < -1e-15):
        raise ParameterError("probabilities must be non-negative")
    p[p < 0] = 0.0
    total = math.fsum(p.tolist())
    if total <= 0:
        raise ParameterError("empty distribution")
    p /= total
    m = np.arange(p.size, dtype=float)
    mean = math.fsum((m * p).tolist())
    second = math.fsum((m * m * p).tolist())
    fano = second / mean - mean if mean > 0 else math.nan
    p.flags.writeable = False
    return PhononDistribution(p, mean, second, fano)


def phonon_distribution(state: MotionalState) -> PhononDistribution:
    """P_m = |<m|state>|^2 with moments; ``state`` must be normalized."""
    nsq = sum_sq(state.amplitudes)
    if abs(nsq - 1.0) > NORM_TOL:
        raise ParameterError(f"state is not normalized (norm^2 = {nsq!r})")
    amps = state.amplitudes
    return distribution_from_probabilities(amps.real**2 + amps.imag**2)


def classify(fano: float, tol: float = CLASSIFY_TOL) -> str:
    """'sub', 'poissonian' or 'super'."""
    if fano < 1 - tol:
        return "sub"
    if fano > 1 + tol:
        return "super"
    return "poissonian"


@dataclass(frozen=True)
class FanoSeries:
    """Fano factor of the post-jump motional state on a time grid.

    ``skipped`` lists the grid times where no photon can be detected
    (tau = 0, or an empty one-photon sector).
    """

    tau: np.ndarray
    fano: np.ndarray
    skipped: tuple = field(default=())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "fano"])
        for t, f in zip(self.tau, self.fano):
            w.writerow([repr(float(t)), repr(float(f))])
        return buf.getvalue()


def fano_timeseries(params: SystemParams, tau_grid) -> FanoSeries:
    """Fano factor of the state left behind by a detection at each tau."""
    c = initial_coefficients(params)
    lam = coupling_ld(params.eta, np.arange(params.M))
    taus, fanos, skipped = [], [], []
    for tau in np.asarray(tau_grid, dtype=float):
        if not tau > 0:
            skipped.append(float(tau))
            continue
        _, B = unit_response(lam, params.gamma, tau)
        try:
            state = normalize_photon_sector(c * B, params.tail, tau)
        except NoPhotonError:
            skipped.append(float(tau))
            continue
        taus.append(float(tau))
        fanos.append(phonon_distribution(state).fano)
    return FanoSeries(np.array(taus), np.array(fanos), tuple(skipped))


def _plateaus(p: np.ndarray):
    """Split ``p`` into runs of (relatively) equal values: [(start, stop, value)]."""
    runs = []
    start = 0
    for i in range(1, p.size + 1):
        if i == p.size or not math.isclose(p[i], p[start], rel_tol=_PLATEAU_RTOL, abs_tol=0.0):
            runs.append((start, i - 1, float(p[start:i].max())))
            start = i
    return runs


def count_interior_maxima(dist: PhononDistribution, m_window=(0, 12), floor: float = 1e-4) -> int:
    """Number of interior local maxima of P_m with m in the inclusive window.

    A maximum is a value (or a run of equal values, as for a Poisson law
    with integer mean) strictly above both neighbours and above ``floor``.
    Edge points of the full distribution never count.
    """
    lo, hi = m_window
    p = dist.p
    if lo < 0 or hi >= p.size or hi < lo:
        raise ParameterError(f"window {m_window} outside [0, {p.size})")
    runs = _plateaus(p)
    count = 0
    for k in range(1, len(runs) - 1):
        start, stop, value = runs[k]
        if value <= floor:
            continue
        if runs[k - 1][2] < value > runs[k + 1][2] and lo <= start and stop <= hi:
            count += 1
    return count
