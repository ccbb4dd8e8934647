"""Statistical instruments: Kuiper uniformity test, binned mutual
information with Miller-Madow correction, error-rate counting."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import phase_math as pm
from .errors import InsufficientSampleError, InvalidArgumentError

MIN_KUIPER_SAMPLES = 50
PHASE = "phase"


@dataclass(frozen=True)
class UniformityReport:
    statistic: float  # Kuiper V_n
    n: int
    passed: bool
    significance: float
    modified: float  # V_n * (sqrt(n) + 0.155 + 0.24/sqrt(n))
    critical: float
    p_value: float


def kuiper_statistic(samples):
    """Kuiper's V_n of phases against the uniform law on [0, 2pi)."""
    u = np.sort(np.asarray(pm.wrap(np.asarray(samples, dtype=float))).ravel()) / pm.TWO_PI
    n = u.size
    i = np.arange(n)
    d_plus = np.max((i + 1) / n - u)
    d_minus = np.max(u - i / n)
    return float(d_plus + d_minus)


def kuiper_tail(lam):
    """Asymptotic upper-tail probability of the modified Kuiper statistic."""
    if lam < 0.4:
        return 1.0
    j = np.arange(1, 101)
    t = 2.0 * (4.0 * j**2 * lam**2 - 1.0) * np.exp(-2.0 * j**2 * lam**2)
    return float(min(1.0, max(0.0, t.sum())))


@lru_cache(maxsize=64)
def kuiper_critical(significance):
    """Modified-statistic threshold whose asymptotic tail equals ``significance``."""
    if not 0.0 < significance < 1.0:
        raise InvalidArgumentError("significance must lie in (0, 1)")
    if kuiper_tail(0.4) <= significance:
        return 0.4
    return brentq(lambda lam: kuiper_tail(lam) - significance, 0.4, 10.0, xtol=1e-12)


def kuiper_uniformity(samples, significance=0.01):
    """Kuiper test of circular uniformity.

    The test is invariant to rotating all samples by a constant, which is
    why it is used for phases rather than Kolmogorov-Smirnov.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < MIN_KUIPER_SAMPLES:
        raise InsufficientSampleError(
            f"Kuiper test needs at least {MIN_KUIPER_SAMPLES} samples, got {x.size}")
    v = kuiper_statistic(x)
    rn = np.sqrt(x.size)
    lam = v * (rn + 0.155 + 0.24 / rn)
    crit = kuiper_critical(float(significance))
    return UniformityReport(statistic=v, n=int(x.size), passed=bool(lam < crit),
                            significance=float(significance), modified=float(lam),
                            critical=float(crit), p_value=kuiper_tail(lam))


@dataclass(frozen=True)
class MIEstimate:
    bits: float  # corrected, floored at 0
    bins: tuple
    n: int
    bias_correction: float
    plug_in: float

    @property
    def raw_corrected(self):
        return self.plug_in - self.bias_correction


def _bin_index(v, nbins, value_range):
    v = np.asarray(v, dtype=float).ravel()
    if isinstance(value_range, str):
        if value_range != PHASE:
            raise InvalidArgumentError(f"unknown range {value_range!r}")
        v = np.asarray(pm.wrap(v))
        lo, hi = 0.0, pm.TWO_PI
    elif value_range is None:
        lo, hi = float(v.min()), float(v.max())
    else:
        lo, hi = map(float, value_range)
    if not hi > lo:
        return np.zeros(v.size, dtype=np.int64)
    idx = np.floor((v - lo) / (hi - lo) * nbins).astype(np.int64)
    return np.clip(idx, 0, nbins - 1)


def _entropy_bits(counts, n):
    c = np.sort(counts[counts > 0].astype(float))
    return float(np.log2(n) - np.sum(c * np.log2(c)) / n)


def estimate_mi_binned(x, y, bins=(16, 16), x_range=None, y_range=None):
    """Mutual information between two samples, in bits.

    Equal-width bins over ``x_range``/``y_range``: a ``(lo, hi)`` pair,
    ``"phase"`` for [0, 2pi) after wrapping, or ``None`` for the data's
    own span.  The plug-in estimate is reduced by the Miller-Madow bias
    ``(Bx-1)(By-1) / (2 n ln 2)`` and floored at zero.
    """
    bx, by = (int(b) for b in bins)
    x = np.asarray(x).ravel()
    y = np.asarray(y).ravel()
    if x.size != y.size:
        raise InvalidArgumentError("x and y must have the same length")
    n = x.size
    if bx < 1 or by < 1:
        raise InvalidArgumentError("bin counts must be positive")
    if n < 10 * bx * by:
        raise InvalidArgumentError(
            f"{n} samples are too few for {bx}x{by} bins (need {10 * bx * by})")
    ix = _bin_index(x, bx, x_range)
    iy = _bin_index(y, by, y_range)
    joint = np.bincount(ix * by + iy, minlength=bx * by)
    hx = _entropy_bits(np.bincount(ix, minlength=bx), n)
    hy = _entropy_bits(np.bincount(iy, minlength=by), n)
    hxy = _entropy_bits(joint, n)
    plug_in = (hx + hy) - hxy
    bias = (bx - 1) * (by - 1) / (2.0 * n * np.log(2.0))
    return MIEstimate(bits=max(0.0, plug_in - bias), bins=(bx, by), n=int(n),
                      bias_correction=float(bias), plug_in=float(plug_in))


def phase_mi(x, y, bins=(16, 16)):
    """:func:`estimate_mi_binned` with both variables binned on [0, 2pi)."""
    return estimate_mi_binned(x, y, bins, x_range=PHASE, y_range=PHASE)


def bit_error_rate(a, b):
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.size != b.size:
        raise InvalidArgumentError("bit sequences differ in length")
    if a.size == 0:
        raise InvalidArgumentError("bit_error_rate() needs at least one bit")
    return float(np.count_nonzero(a != b) / a.size)


def circular_correlation(a, b):
    """|E[exp(j(a - b))]|: near 0 for independent uniform phases."""
    return float(np.abs(np.mean(np.exp(1j * (np.asarray(a) - np.asarray(b))))))


def signed_spread(a, b):
    """Standard deviation of the signed wrapped difference ``a - b``."""
    return float(np.std(pm.signed(pm.sub(a, b))))
