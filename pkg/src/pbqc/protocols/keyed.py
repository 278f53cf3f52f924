"""Keyed two-qubit messages for schemes A and B.

Qubit i carries ``H**k1 |msg_i ^ k0>`` for the 2-bit key ``k0k1``: the first
key bit is a one-time pad, the second picks the conjugate basis. Anyone
without the key sees a maximally mixed state; an intercept in the wrong
basis garbles the bit with probability 1/2.
"""

from __future__ import annotations

from typing import Hashable, Optional, Sequence

import numpy as np

from .. import quantum as qc
from ..lab import Lab
from ..quantum import BellLabel, LabelLike, StateVector, label


def _bits(msg: LabelLike) -> tuple[int, int]:
    m = label(msg)
    return m.ui, m.uj


def encode_keyed_message(msg: LabelLike, key: LabelLike) -> StateVector:
    k0, k1 = _bits(key)
    state = StateVector.from_bits([b ^ k0 for b in _bits(msg)])
    if k1:
        for q in range(2):
            state = qc.apply_hadamard(state, q)
    return state


def decode_keyed_message(
    state: StateVector,
    key: LabelLike,
    rng: Optional[np.random.Generator] = None,
) -> BellLabel:
    k0, k1 = _bits(key)
    bits = []
    for q in range(2):
        if k1:
            state = qc.apply_hadamard(state, q)
        b, state = qc.measure_z(state, q, rng)
        bits.append(b ^ k0)
    return label(bits)


def send_keyed(lab: Lab, owner: str, qids: Sequence[Hashable], msg: LabelLike, key: LabelLike) -> None:
    """Prepare keyed message qubits in ``lab`` under ``owner``."""
    lab.prepare_qubits(list(qids), encode_keyed_message(msg, key), owner)


def read_keyed(lab: Lab, owner: str, qids: Sequence[Hashable], key: LabelLike) -> BellLabel:
    k0, k1 = _bits(key)
    return label([lab.measure(owner, q, basis=k1) ^ k0 for q in qids])
