"""Gray-coded 2**m-PSK mapping on phases.

Bit groups are read most-significant bit first.  For QPSK the mapping is
``00 -> 0``, ``01 -> pi/2``, ``11 -> pi``, ``10 -> 3pi/2``.
"""

import numpy as np

from .. import phase_math as pm
from ..errors import FramingError, InvalidArgumentError


def _check_m(m):
    if int(m) != m or m < 1:
        raise InvalidArgumentError("bits per symbol m must be a positive integer")
    return int(m)


def gray(g):
    g = np.asarray(g, dtype=np.int64)
    return g ^ (g >> 1)


def gray_inverse(v):
    v = np.asarray(v, dtype=np.int64)
    g = v.copy()
    shift = v >> 1
    while np.any(shift):
        g ^= shift
        shift >>= 1
    return g


def _pack(bits, m):
    b = np.asarray(bits, dtype=np.int64)
    if b.shape[-1] % m:
        raise FramingError(f"{b.shape[-1]} bits do not split into {m}-bit symbols")
    groups = b.reshape(b.shape[:-1] + (-1, m))
    weights = 1 << np.arange(m - 1, -1, -1)
    return groups @ weights


def _unpack(values, m):
    v = np.asarray(values, dtype=np.int64)
    shifts = np.arange(m - 1, -1, -1)
    bits = (v[..., None] >> shifts) & 1
    return bits.reshape(v.shape[:-1] + (-1,)).astype(np.uint8)


def psk_map(bits, m):
    """Constellation phases for a bit sequence (last axis)."""
    m = _check_m(m)
    g = gray_inverse(_pack(bits, m))
    return g * (pm.TWO_PI / (1 << m))


def psk_demap(phases, m):
    """Nearest-point hard decision, back to bits."""
    m = _check_m(m)
    size = 1 << m
    y = np.asarray(pm.wrap(np.asarray(phases, dtype=float)))
    g = np.rint(y / (pm.TWO_PI / size)).astype(np.int64) % size
    return _unpack(gray(g), m)


def psk_llr(residuals, m, noise_std=None):
    """Max-log bit LLRs from residual phases (positive favours bit 0).

    Metrics are squared angular distances to each constellation point,
    scaled by ``1 / (2 noise_std**2)`` when a noise level is given.
    Output has ``m`` values per phase, on the last axis.
    """
    m = _check_m(m)
    size = 1 << m
    y = np.asarray(residuals, dtype=float)
    points = np.arange(size) * (pm.TWO_PI / size)
    d2 = pm.circular_distance(y[..., None], points) ** 2
    labels = _unpack(gray(np.arange(size))[None, :], m).reshape(size, m)
    llr = np.empty(y.shape + (m,))
    for j in range(m):
        one = labels[:, j] == 1
        llr[..., j] = d2[..., one].min(axis=-1) - d2[..., ~one].min(axis=-1)
    if noise_std:
        llr = llr / (2.0 * noise_std**2)
    return llr.reshape(y.shape[:-1] + (-1,)) if y.ndim else llr
