"""Truncated Fock space for one ion, one cavity mode and two internal levels.

Basis ordering of a :class:`CompositeState` is m-major, then the cavity
photon number n in {0, 1}, then the internal level q in {g=0, e=1}::

    index(m, n, q) = 4*m + 2*n + q

Keeping only n <= 1 is exact here, not an approximation: the initial state
|alpha>|0>|e> carries one excitation, the carrier interaction conserves the
number of excitations, and the only jump (photon loss) removes one.

Times are dimensionless, tau = g*t, and hbar = 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

from .exceptions import DegenerateStateError, DimensionMismatchError, ParameterError

GROUND = 0
EXCITED = 1
N_CAVITY = 2
N_LEVELS = 2
BLOCK = N_CAVITY * N_LEVELS

#: Bound on eta**2 * (|alpha| + 3)**2 that keeps the Lamb-Dicke coupling
#: positive over the occupied part of the phonon distribution.
LD_SAFETY_BOUND = 0.5

#: Smallest squared norm that may still be normalized.
MIN_NORM_SQ = 1e-300


def index(m: int, n: int, q: int) -> int:
    """Position of |m, n, q> in a composite amplitude vector."""
    return BLOCK * m + N_LEVELS * n + q


def min_truncation(alpha: complex) -> int:
    """Smallest M that keeps the coherent-state tail mass below ~1e-12."""
    r = abs(alpha)
    return math.ceil(r * r + 8 * r + 20)


def truncation_tail(alpha: complex, M: int) -> float:
    """Probability mass of |alpha> above the cutoff, P(n >= M) for Poisson(|alpha|^2).

    Uses the regularized incomplete gamma function, so tiny tails are not
    lost to cancellation as they would be with ``1 - sum(|c_m|^2)``.
    """
    mu = abs(alpha) ** 2
    if mu == 0.0:
        return 0.0
    return float(gammainc(M, mu))


def _frozen(values, dtype=complex) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


def sum_sq(x: np.ndarray) -> float:
    # compensated so that unit-norm checks hold to ~1e-16 even for long vectors
    return math.fsum((x.real * x.real + x.imag * x.imag).ravel().tolist())


@dataclass(frozen=True)
class SystemParams:
    """Dimensionless parameters of the ion-cavity system.

    Attributes:
        g: ion-field coupling; sets the unit of time (tau = g*t).
        eta: Lamb-Dicke parameter.
        gamma: cavity decay rate in units of g (kappa/g).
        alpha: initial coherent amplitude of the motion.
        M: number of vibrational Fock levels kept.
        truncation: ``"raise"`` or ``"warn"`` when M is below
            :func:`min_truncation`.
    """

    g: float = 1.0
    eta: float = 0.05
    gamma: float = 1.0
    alpha: complex = 2.0
    M: int = 40
    truncation: str = "raise"

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        if not (math.isfinite(self.g) and self.g > 0):
            raise ParameterError(f"g must be positive and finite, got {self.g}")
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise ParameterError(f"eta must be positive, got {self.eta}")
        r = abs(self.alpha)
        if not math.isfinite(r):
            raise ParameterError(f"alpha must be finite, got {self.alpha}")
        ld = self.eta**2 * (r * r + 6 * r + 9)
        if ld >= LD_SAFETY_BOUND:
            raise ParameterError(
                f"eta={self.eta}, |alpha|={r:g} violate the Lamb-Dicke bound "
                f"eta^2 (|alpha|+3)^2 = {ld:.4g} >= {LD_SAFETY_BOUND}"
            )
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise ParameterError(f"gamma must be >= 0, got {self.gamma}")
        if int(self.M) != self.M or self.M < 1:
            raise ParameterError(f"M must be an integer >= 1, got {self.M}")
        object.__setattr__(self, "M", int(self.M))
        if self.truncation not in ("raise", "warn"):
            raise ParameterError(f"truncation must be 'raise' or 'warn', got {self.truncation!r}")
        need = min_truncation(self.alpha)
        if self.M < need:
            msg = f"M={self.M} is below the recommended truncation {need} for |alpha|={r:g}"
            if self.truncation == "raise":
                raise ParameterError(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=3)

    @property
    def omega_eta(self) -> float:
        """Carrier frequency g(1 - eta^2/2) shared by all Fock components."""
        return self.g * (1.0 - self.eta**2 / 2)

    @property
    def tail(self) -> float:
        return truncation_tail(self.alpha, self.M)

    def as_dict(self) -> dict:
        return {
            "g": self.g,
            "eta": self.eta,
            "gamma": self.gamma,
            "alpha": self.alpha,
            "M": self.M,
            "truncation": self.truncation,
        }


@dataclass(frozen=True, eq=False)
class MotionalState:
    """Amplitudes over the vibrational Fock states |0>, ..., |M-1>."""

    amplitudes: np.ndarray
    truncation_tail: float = 0.0

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 1:
            raise DimensionMismatchError("motional amplitudes must be one-dimensional")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def M(self) -> int:
        return self.amplitudes.shape[0]

    def __len__(self):
        return self.M


@dataclass(frozen=True, eq=False)
class CompositeState:
    """Amplitudes over |m>_v |n>_c |q>_ion, laid out as described in the module doc."""

    amplitudes: np.ndarray
    truncation_tail: float = 0.0

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 1 or amps.shape[0] % BLOCK:
            raise DimensionMismatchError(
                f"composite amplitudes must be a flat vector of length 4*M, got shape {amps.shape}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def M(self) -> int:
        return self.amplitudes.shape[0] // BLOCK

    def __len__(self):
        return self.amplitudes.shape[0]

    def sector(self, n: int, q: int) -> np.ndarray:
        """Read-only view of the amplitudes of |m, n, q> for m = 0..M-1."""
        return self.amplitudes[N_LEVELS * n + q :: BLOCK]

    @classmethod
    def zeros(cls, M: int) -> "CompositeState":
        return cls(np.zeros(BLOCK * M, dtype=complex))

    @classmethod
    def basis(cls, M: int, m: int, n: int, q: int) -> "CompositeState":
        amps = np.zeros(BLOCK * M, dtype=complex)
        amps[index(m, n, q)] = 1.0
        return cls(amps)

    @classmethod
    def from_sectors(cls, sectors: dict, M: int, truncation_tail: float = 0.0) -> "CompositeState":
        """Build a state from ``{(n, q): vector over m}``; missing sectors are zero."""
        amps = np.zeros((M, N_CAVITY, N_LEVELS), dtype=complex)
        for (n, q), vec in sectors.items():
            vec = np.asarray(vec, dtype=complex)
            if vec.shape != (M,):
                raise DimensionMismatchError(f"sector {(n, q)} has shape {vec.shape}, expected ({M},)")
            amps[:, n, q] = vec
        return cls(amps.ravel(), truncation_tail)


def coherent_amplitudes(alpha: complex, M: int) -> MotionalState:
    """Fock amplitudes exp(-|a|^2/2) a^m / sqrt(m!) of |alpha> for m < M.

    The sequence is built by the recurrence c_m = c_{m-1} * alpha / sqrt(m).
    The result is not renormalized; its ``truncation_tail`` holds the
    missing probability mass.
    """
    if M < 1:
        raise ParameterError(f"M must be >= 1, got {M}")
    alpha = complex(alpha)
    steps = np.empty(M, dtype=complex)
    steps[0] = math.exp(-abs(alpha) ** 2 / 2)
    steps[1:] = alpha / np.sqrt(np.arange(1, M))
    return MotionalState(np.cumprod(steps), truncation_tail(alpha, M))


def initial_coefficients(params: SystemParams) -> np.ndarray:
    """Truncated coherent amplitudes c_m(0), renormalized to unit norm."""
    c = coherent_amplitudes(params.alpha, params.M).amplitudes
    return c / math.sqrt(sum_sq(c))


def initial_state(params: SystemParams) -> CompositeState:
    """|alpha>_v |0>_c |e> in the truncated space (unit norm)."""
    return CompositeState.from_sectors(
        {(0, EXCITED): initial_coefficients(params)}, params.M, params.tail
    )


def embed(state: MotionalState, n: int = 0, q: int = GROUND) -> CompositeState:
    """Product state |phi>_v |n>_c |q>."""
    return CompositeState.from_sectors({(n, q): state.amplitudes}, state.M, state.truncation_tail)


def annihilate_cavity(state: CompositeState) -> CompositeState:
    """Apply the photon annihilation operator b; the result is not normalized."""
    amps = np.zeros((state.M, N_CAVITY, N_LEVELS), dtype=complex)
    amps[:, 0, :] = state.amplitudes.reshape(state.M, N_CAVITY, N_LEVELS)[:, 1, :]
    return CompositeState(amps.ravel(), state.truncation_tail)


def _check_same(x, y):
    if type(x) is not type(y):
        raise DimensionMismatchError(f"cannot combine {type(x).__name__} with {type(y).__name__}")
    if x.amplitudes.shape != y.amplitudes.shape:
        raise DimensionMismatchError(
            f"dimension mismatch: {x.amplitudes.shape[0]} vs {y.amplitudes.shape[0]}"
        )


def inner(x, y) -> complex:
    """<x|y>, conjugate-linear in the first argument."""
    _check_same(x, y)
    return complex(np.vdot(x.amplitudes, y.amplitudes))


def norm_sq(x) -> float:
    return sum_sq(x.amplitudes)


def normalize(x):
    """Return ``x`` scaled to unit norm (same type)."""
    amps = x.amplitudes
    scale = float(np.max(np.abs(amps))) if amps.size else 0.0
    if scale == 0.0 or not math.isfinite(scale):
        raise DegenerateStateError("cannot normalize a zero vector")
    # rescale first so that tiny but nonzero vectors do not underflow
    scaled = amps / scale
    nrm = scale * math.sqrt(sum_sq(scaled))
    if nrm * nrm <= MIN_NORM_SQ:
        raise DegenerateStateError(f"cannot normalize a vector of squared norm {nrm * nrm:.3g}")
    return type(x)(scaled / math.sqrt(sum_sq(scaled)), x.truncation_tail)


def fidelity(x, y) -> float:
    """|<x|y>|^2 / (|x|^2 |y|^2); insensitive to global phase."""
    _check_same(x, y)
    nx, ny = norm_sq(x), norm_sq(y)
    if nx <= MIN_NORM_SQ or ny <= MIN_NORM_SQ:
        raise DegenerateStateError("fidelity with a zero vector is undefined")
    return abs(inner(x, y)) ** 2 / (nx * ny)
