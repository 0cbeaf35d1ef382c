"""Ion-field coupling constants: exact Laguerre form and the Lamb-Dicke expansion.

The exact carrier coupling for phonon number m is
``<m|cos eta(a + a^dag)|m> = exp(-eta^2/2) L_m(eta^2)``; to second order in
eta it becomes ``1 - eta^2 (1 + 2m) / 2``. :func:`validity_grid` tabulates
their ratio R(eta, m).
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError

#: Lamb-Dicke couplings at or below this make the ratio meaningless.
LD_FLOOR = 1e-6

#: Band around R = 1 reported as the valid region. The physics only asks
#: for "R close to 1"; the numbers are our choice.
VALID_BAND = (0.99, 1.01)


def laguerre(m: int, x):
    """Laguerre polynomial L_m(x) by the three-term recurrence.

    ``(k+1) L_{k+1} = (2k+1-x) L_k - k L_{k-1}``. ``x`` may be a scalar or
    an array.
    """
    if m < 0:
        raise ParameterError(f"Laguerre order must be >= 0, got {m}")
    prev = np.ones_like(x, dtype=float) if np.ndim(x) else 1.0
    if m == 0:
        return prev
    cur = 1.0 - x
    for k in range(1, m):
        prev, cur = cur, ((2 * k + 1 - x) * cur - k * prev) / (k + 1)
    return cur


def laguerre_table(M: int, x: float) -> np.ndarray:
    """L_0(x), ..., L_{M-1}(x) in one pass of the recurrence."""
    out = np.empty(M)
    out[0] = 1.0
    if M > 1:
        out[1] = 1.0 - x
    for k in range(1, M - 1):
        out[k + 1] = ((2 * k + 1 - x) * out[k] - k * out[k - 1]) / (k + 1)
    return out


def laguerre_series(m: int, x: float) -> float:
    """L_m(x) from the explicit sum over C(m, k) (-x)^k / k!, in exact rationals.

    Slow; used to cross-check :func:`laguerre`.
    """
    from fractions import Fraction

    xf = Fraction(x)
    total = sum(Fraction(math.comb(m, k)) * (-xf) ** k / math.factorial(k) for k in range(m + 1))
    return float(total)


def coupling_exact(eta: float, m):
    """Full nonlinear carrier coupling exp(-eta^2/2) L_m(eta^2)."""
    _check_eta(eta)
    x = eta * eta
    if np.ndim(m):
        m = np.asarray(m)
        table = laguerre_table(int(m.max()) + 1, x)
        return math.exp(-x / 2) * table[m]
    return math.exp(-x / 2) * laguerre(int(m), x)


def coupling_ld(eta: float, m):
    """Lamb-Dicke coupling 1 - eta^2 (1 + 2m) / 2."""
    _check_eta(eta)
    if np.ndim(m):
        m = np.asarray(m, dtype=float)
    return 1.0 - eta * eta * (1 + 2 * m) / 2


def _check_eta(eta):
    if not eta > 0:
        raise ParameterError(f"eta must be positive, got {eta}")


class CouplingKind(enum.Enum):
    EXACT = "exact"
    LAMB_DICKE = "lamb-dicke"


@dataclass(frozen=True)
class CouplingProfile:
    """Phonon-number dependent coupling lambda(m) of a given kind."""

    kind: CouplingKind
    eta: float

    def __post_init__(self):
        object.__setattr__(self, "kind", CouplingKind(self.kind))
        _check_eta(self.eta)

    def __call__(self, m):
        if self.kind is CouplingKind.EXACT:
            return coupling_exact(self.eta, m)
        return coupling_ld(self.eta, m)

    def vector(self, M: int) -> np.ndarray:
        """lambda(0), ..., lambda(M-1)."""
        return np.asarray(self(np.arange(M)), dtype=float)


@dataclass(frozen=True)
class ValidityGrid:
    """R(eta, m) = exact / Lamb-Dicke coupling on a rectangular grid.

    ``ratio[i, j]`` belongs to ``etas[i]`` and ``ms[j]``; cells where the
    Lamb-Dicke coupling is not safely positive hold NaN.
    """

    etas: np.ndarray
    ms: np.ndarray
    ratio: np.ndarray

    @property
    def flagged(self) -> np.ndarray:
        return np.isnan(self.ratio)

    def valid_mask(self, band=VALID_BAND) -> np.ndarray:
        lo, hi = band
        with np.errstate(invalid="ignore"):
            return (self.ratio >= lo) & (self.ratio <= hi)

    def rows(self):
        for i, eta in enumerate(self.etas):
            for j, m in enumerate(self.ms):
                yield float(eta), int(m), float(self.ratio[i, j])

    def to_csv(self, fh=None) -> str:
        """CSV with header ``eta,m,R``; flagged cells are written as ``nan``."""
        buf = io.StringIO() if fh is None else fh
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["eta", "m", "R"])
        for eta, m, r in self.rows():
            writer.writerow([repr(eta), m, "nan" if math.isnan(r) else repr(r)])
        return buf.getvalue() if fh is None else ""


def eta_axis(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive grid start, start+step, ..., stop (rounded to the step)."""
    if step <= 0 or stop < start:
        raise ParameterError(f"bad grid: start={start}, stop={stop}, step={step}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def validity_grid(eta_range=(0.01, 0.5, 0.01), m_range=(0, 30)) -> ValidityGrid:
    """Tabulate R(eta, m) for ``eta_range = (start, stop, step)`` and inclusive ``m_range``."""
    etas = eta_axis(*eta_range)
    if etas[0] <= 0:
        raise ParameterError("eta grid must be strictly positive")
    m_lo, m_hi = m_range
    if m_lo < 0 or m_hi < m_lo:
        raise ParameterError(f"bad m range {m_range}")
    ms = np.arange(m_lo, m_hi + 1)
    ratio = np.full((etas.size, ms.size), np.nan)
    for i, eta in enumerate(etas):
        exact = coupling_exact(float(eta), ms)
        ld = coupling_ld(float(eta), ms)
        ok = ld > LD_FLOOR
        ratio[i, ok] = exact[ok] / ld[ok]
    return ValidityGrid(etas, ms, ratio)
