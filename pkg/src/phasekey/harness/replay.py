"""Replay of measured I/Q traces: LOS removal, low-energy discard, phases."""

import csv
from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np

from .. import phase_math as pm
from ..errors import InsufficientSampleError, InvalidArgumentError

MIN_RECORDS = 100
HEADER = ("state", "i", "q")


@dataclass(frozen=True)
class IQTrace:
    states: np.ndarray
    samples: np.ndarray  # complex
    source: str = ""

    def __post_init__(self):
        if len(self.states) != len(self.samples):
            raise InvalidArgumentError("states and samples differ in length")

    def __len__(self):
        return len(self.samples)


def read_trace(path):
    """Read a ``state,i,q`` CSV (UTF-8, header row required)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header is None or tuple(h.strip().lower() for h in header) != HEADER:
            raise InvalidArgumentError(f"{path}: expected header 'state,i,q'")
        states, iq = [], []
        for lineno, row in enumerate(rows, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise InvalidArgumentError(f"{path}:{lineno}: expected 3 fields")
            try:
                states.append(row[0].strip())
                iq.append(complex(float(row[1]), float(row[2])))
            except ValueError:
                raise InvalidArgumentError(f"{path}:{lineno}: bad number") from None
    return IQTrace(np.array(states, dtype=object), np.array(iq, dtype=complex), str(path))


def write_trace(trace, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for s, z in zip(trace.states, trace.samples):
            w.writerow([s, repr(float(z.real)), repr(float(z.imag))])


def synthetic_trace(count, seed, bias=5 + 0j, noise_std=0.05):
    """Fading constellation around a constant LOS bias.

    Each state contributes a circularly symmetric complex Gaussian draw
    (uniform phase, Rayleigh envelope, unit mean power) plus receiver
    noise, all offset by ``bias``.
    """
    rng = np.random.default_rng([seed, 0x7ACE])
    z = (rng.standard_normal(count) + 1j * rng.standard_normal(count)) / np.sqrt(2)
    z = z + noise_std * (rng.standard_normal(count) + 1j * rng.standard_normal(count))
    return IQTrace(np.arange(count).astype(str).astype(object), z + bias,
                   f"synthetic(seed={seed}, bias={bias})")


def survivor_count(count, discard_fraction):
    # exact rational arithmetic so 0.2 * 10 is 2, not 1.9999...
    return count - math.floor(Fraction(str(discard_fraction)) * count)


def replay_ingest(trace, discard_fraction=0.20):
    """Phases of the samples that survive LOS removal and low-energy discard.

    The empirical complex mean is subtracted first; samples are then
    stably sorted by magnitude and the lowest ``discard_fraction`` dropped.
    Survivors keep their input order.
    """
    if not 0.0 <= discard_fraction < 1.0:
        raise InvalidArgumentError("discard_fraction must lie in [0, 1)")
    z = np.asarray(trace.samples, dtype=complex)
    if z.size < MIN_RECORDS:
        raise InsufficientSampleError(f"replay needs >= {MIN_RECORDS} records, got {z.size}")
    if not np.all(np.isfinite(z)):
        raise InvalidArgumentError("trace contains non-finite samples")
    centred = z - z.mean()
    order = np.argsort(np.abs(centred), kind="stable")
    keep = np.sort(order[z.size - survivor_count(z.size, discard_fraction):])
    return pm.wrap(np.angle(centred[keep]))
