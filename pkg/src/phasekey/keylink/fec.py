"""Rate-1/2, constraint-length-7 convolutional code (171, 133 octal).

The encoder is zero-terminated: six tail bits flush the register.  The
mother codeword of ``2 (L + 6)`` bits is then punctured down to the
``L + r`` bits the key budget allows, deleting evenly spaced positions.
Decoding is max-log soft Viterbi, batched over blocks.
"""

import numpy as np

from ..errors import FramingError, InvalidArgumentError

GENERATORS = (0o171, 0o133)
CONSTRAINT = 7
MEMORY = CONSTRAINT - 1
N_STATES = 1 << MEMORY


def _parity(x):
    x = np.asarray(x, dtype=np.int64)
    p = np.zeros_like(x)
    while np.any(x):
        p ^= x & 1
        x = x >> 1
    return p


def _trellis():
    # register = input bit at position MEMORY, previous inputs below it
    state = np.arange(N_STATES)
    out = np.empty((N_STATES, 2, 2), dtype=np.int64)
    nxt = np.empty((N_STATES, 2), dtype=np.int64)
    for u in (0, 1):
        reg = (u << MEMORY) | state
        for j, g in enumerate(GENERATORS):
            out[:, u, j] = _parity(reg & g)
        nxt[:, u] = reg >> 1
    return out, nxt


_OUT, _NEXT = _trellis()
# predecessors of next-state ns: s = ((ns << 1) & mask) | b, input u = ns >> 5
_NS = np.arange(N_STATES)
_PRED = np.stack([((_NS << 1) & (N_STATES - 1)) | b for b in (0, 1)], axis=1)
_INPUT = _NS >> (MEMORY - 1)
_PRED_OUT = _OUT[_PRED, _INPUT[:, None]]  # (ns, b, 2)
_SIGN = 1.0 - 2.0 * _PRED_OUT


def mother_length(L):
    return 2 * (L + MEMORY)


def puncture_positions(L, r):
    """Indices of mother-code bits deleted to fit ``L + r`` coded bits."""
    total = mother_length(L)
    keep = L + r
    if L < 1 or r < 0:
        raise FramingError("need L >= 1 and r >= 0")
    if keep > total:
        raise FramingError(
            f"L + r = {keep} exceeds the terminated rate-1/2 length {total}")
    drop = total - keep
    if drop > (L + MEMORY) // 2:
        raise FramingError(f"r = {r} is too small for a rate-1/2 mother code")
    if drop == 0:
        return np.zeros(0, dtype=np.int64)
    return np.floor((np.arange(drop) + 0.5) * total / drop).astype(np.int64)


def conv_encode(bits):
    """Zero-terminated mother codeword (``2 (L + 6)`` bits) for ``bits`` on the last axis."""
    b = np.asarray(bits, dtype=np.int64)
    if b.size and not np.isin(b, (0, 1)).all():
        raise InvalidArgumentError("bits must be 0 or 1")
    padded = np.concatenate([b, np.zeros(b.shape[:-1] + (MEMORY,), dtype=np.int64)], axis=-1)
    state = np.zeros(b.shape[:-1], dtype=np.int64)
    out = np.empty(padded.shape + (2,), dtype=np.uint8)
    for t in range(padded.shape[-1]):
        u = padded[..., t]
        out[..., t, :] = _OUT[state, u]
        state = _NEXT[state, u]
    return out.reshape(b.shape[:-1] + (-1,))


def fec_encode(bits, r):
    """Encode ``L`` bits into exactly ``L + r`` coded bits."""
    b = np.asarray(bits)
    L = b.shape[-1]
    mother = conv_encode(b)
    return np.delete(mother, puncture_positions(L, r), axis=-1)


def depuncture(llr, L, r):
    """Re-insert zero-confidence LLRs at the punctured positions."""
    llr = np.asarray(llr, dtype=float)
    if llr.shape[-1] != L + r:
        raise FramingError(f"expected {L + r} soft values, got {llr.shape[-1]}")
    full = np.zeros(llr.shape[:-1] + (mother_length(L),))
    keep = np.ones(mother_length(L), dtype=bool)
    keep[puncture_positions(L, r)] = False
    full[..., keep] = llr
    return full


def viterbi_decode(llr, L):
    """Max-log Viterbi on mother-code LLRs (positive favours bit 0).

    ``llr`` has shape ``(..., 2 (L + 6))``; returns the ``L`` information
    bits of the best terminated path.
    """
    llr = np.asarray(llr, dtype=float)
    if llr.shape[-1] != mother_length(L):
        raise FramingError(f"expected {mother_length(L)} mother-code LLRs")
    batch = llr.shape[:-1]
    pairs = llr.reshape((-1, L + MEMORY, 2))
    nb = pairs.shape[0]
    steps = L + MEMORY
    metric = np.full((nb, N_STATES), np.inf)
    metric[:, 0] = 0.0
    choice = np.empty((steps, nb, N_STATES), dtype=np.uint8)
    for t in range(steps):
        # branch cost = -0.5 * sum(llr * (1 - 2 * out)); lower is better
        cost = -0.5 * np.einsum("bj,nkj->bnk", pairs[:, t, :], _SIGN)
        cand = metric[:, _PRED] + cost
        pick = np.argmin(cand, axis=-1)
        choice[t] = pick
        metric = np.take_along_axis(cand, pick[..., None], axis=-1)[..., 0]
        metric -= metric.min(axis=-1, keepdims=True)
    state = np.zeros(nb, dtype=np.int64)
    decoded = np.empty((nb, steps), dtype=np.uint8)
    rows = np.arange(nb)
    for t in range(steps - 1, -1, -1):
        decoded[:, t] = _INPUT[state]
        state = _PRED[state, choice[t, rows, state]]
    return decoded[:, :L].reshape(batch + (L,))


def fec_decode_llr(llr, L, r):
    """Decode punctured-codeword LLRs of length ``L + r``."""
    return viterbi_decode(depuncture(llr, L, r), L)


def fec_decode_hard(bits, L, r):
    """Hard-decision fallback: decode ``L + r`` received bits."""
    b = np.asarray(bits, dtype=float)
    return fec_decode_llr(1.0 - 2.0 * b, L, r)
