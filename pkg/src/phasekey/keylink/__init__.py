"""Masked-PSK key transport: Gray PSK, convolutional FEC, key exchange."""

from .psk import psk_demap, psk_llr, psk_map
from .fec import fec_decode_hard, fec_decode_llr, fec_encode
from .exchange import (KeyExchangeParams, KeyOutcome, PhasePool, exchange_key, fec_decode,
                       exchange_keys, mask, unmask)

__all__ = [
    "psk_map", "psk_demap", "psk_llr",
    "fec_encode", "fec_decode", "fec_decode_llr", "fec_decode_hard",
    "KeyExchangeParams", "KeyOutcome", "PhasePool",
    "exchange_key", "exchange_keys", "mask", "unmask",
]
