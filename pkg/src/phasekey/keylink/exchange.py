"""Key transport over masked PSK.

The master draws ``L`` random bits, FEC-encodes them to ``L + r`` bits,
maps them onto ``N_p`` PSK symbols and rotates symbol ``t`` by its own copy
of shared phase ``t``.  The slave de-rotates with its copy and soft-decodes.
"""

from dataclasses import dataclass

import numpy as np

from .. import adversary
from .. import phase_math as pm
from ..errors import (FramingError, InsufficientKeyMaterialError,
                      InvalidArgumentError, PhaseReuseError)
from .fec import fec_decode_hard, fec_decode_llr, fec_encode
from .psk import psk_llr, psk_map


def mask(x, phi):
    return pm.add(x, phi)


def unmask(y, phi):
    return pm.sub(y, phi)


@dataclass(frozen=True)
class KeyExchangeParams:
    L: int
    r: int
    m: int
    N_p: int

    def __post_init__(self):
        if self.m < 1:
            raise InvalidArgumentError("m must be >= 1")
        if self.L < 1 or self.r < 0 or self.N_p < 1:
            raise InvalidArgumentError("L, N_p must be positive and r non-negative")
        if self.L + self.r != self.m * self.N_p:
            raise FramingError(
                f"L + r = {self.L + self.r} but m * N_p = {self.m * self.N_p}")

    @classmethod
    def for_key(cls, L, r, m=2):
        if (L + r) % m:
            raise FramingError(f"L + r = {L + r} is not a multiple of m = {m}")
        return cls(L, r, m, (L + r) // m)

    @property
    def rate(self):
        return self.L / (self.L + self.r)


@dataclass(frozen=True)
class KeyOutcome:
    master_bits: np.ndarray
    slave_bits: np.ndarray
    agreed: bool
    eve_bits: np.ndarray
    phases_consumed: int


class PhasePool:
    """Aligned shared-phase streams handed out exactly once each."""

    def __init__(self, master, slave):
        self.master = np.asarray(master, dtype=float).ravel()
        self.slave = np.asarray(slave, dtype=float).ravel()
        if self.master.size != self.slave.size:
            raise InvalidArgumentError("master and slave streams differ in length")
        self.position = 0

    @property
    def remaining(self):
        return self.master.size - self.position

    def take(self, count):
        if count > self.remaining:
            raise InsufficientKeyMaterialError(
                f"need {count} shared phases, {self.remaining} left")
        lo, self.position = self.position, self.position + count
        return self.master[lo:self.position], self.slave[lo:self.position]


def _check_streams(params, master, slave):
    master = np.asarray(master, dtype=float)
    slave = np.asarray(slave, dtype=float)
    if master.shape != slave.shape or master.shape[-1] != params.N_p:
        raise InsufficientKeyMaterialError(
            f"need {params.N_p} aligned shared phases per exchange, got "
            f"{master.shape} and {slave.shape}")
    flat = master.reshape(-1)
    if np.unique(flat).size != flat.size:
        raise PhaseReuseError("a shared phase appears more than once")
    return master, slave


def exchange_keys(params, master_phases, slave_phases, symbol_noise_std=0.0,
                  rng=None, eve_obs=None):
    """Batch of independent exchanges; phase arrays have shape ``(B, N_p)``.

    Returns ``(master_bits, slave_bits, eve_bits)``, each ``(B, L)``.
    """
    master, slave = _check_streams(params, np.atleast_2d(master_phases),
                                   np.atleast_2d(slave_phases))
    rng = np.random.default_rng() if rng is None else rng
    B = master.shape[0]
    bits = rng.integers(0, 2, size=(B, params.L), dtype=np.uint8)
    coded = fec_encode(bits, params.r)
    x = psk_map(coded, params.m)
    y = mask(x, master)
    received = y
    if symbol_noise_std > 0:
        received = pm.wrap(y + rng.normal(0.0, symbol_noise_std, y.shape))
    residual = unmask(received, slave)
    slave_bits = fec_decode_llr(psk_llr(residual, params.m), params.L, params.r)
    eve_coded = adversary.eve_demodulate(y.ravel(), eve_obs, params.m).reshape(B, -1)
    eve_bits = fec_decode_hard(eve_coded, params.L, params.r)
    return bits, slave_bits, eve_bits


def exchange_key(params, master_phases, slave_phases, symbol_noise_std=0.0,
                 rng=None, eve_obs=None):
    """One end-to-end key exchange consuming exactly ``N_p`` shared phases."""
    master_bits, slave_bits, eve_bits = exchange_keys(
        params, np.asarray(master_phases)[None, :], np.asarray(slave_phases)[None, :],
        symbol_noise_std, rng, eve_obs)
    return KeyOutcome(
        master_bits=master_bits[0],
        slave_bits=slave_bits[0],
        agreed=bool(np.array_equal(master_bits[0], slave_bits[0])),
        eve_bits=eve_bits[0],
        phases_consumed=params.N_p,
    )


def fec_decode(received, L, r, m=2, hard=False, noise_std=None):
    """Decode one block or a batch.

    Soft mode takes residual phases after unmasking (``N_p`` per block);
    ``hard=True`` takes the ``L + r`` demodulated bits instead.
    """
    if hard:
        return fec_decode_hard(received, L, r)
    return fec_decode_llr(psk_llr(received, m, noise_std), L, r)
