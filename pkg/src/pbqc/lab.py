"""Per-run quantum medium: who holds which qubit, and the backend behind it.

Two backends:

* ``"state"`` keeps exact state vectors. Unentangled groups of qubits live
  in separate registers that are merged only when an operation couples them.
* ``"labels"`` tracks Bell pairs as labels only (see :mod:`pbqc.bell`).
  Qubits that are not part of a Bell pair (BB84 photons, keyed messages)
  still go to state-vector registers.

Operations are performed on behalf of a party and fail if that party does
not currently hold the qubits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Optional

import numpy as np

from . import quantum as qc
from .bell import PairRegistry
from .quantum import BellLabel, LabelLike, StateVector, label

IN_FLIGHT = "in-flight"


class OwnershipError(PermissionError):
    pass


@dataclass(frozen=True)
class QubitRef:
    """Reference to a qubit carried in a message payload."""

    qid: Hashable

    def to_json(self) -> str:
        return f"q{self.qid}"


class _Registers:
    def __init__(self) -> None:
        self.states: dict[int, StateVector] = {}
        self.members: dict[int, list[Hashable]] = {}
        self.where: dict[Hashable, int] = {}
        self._next = 0

    def alloc(self, qids: list[Hashable], state: StateVector) -> None:
        for q in qids:
            if q in self.where:
                raise ValueError(f"qubit {q!r} already allocated")
        rid = self._next
        self._next += 1
        self.states[rid] = state
        self.members[rid] = list(qids)
        for q in qids:
            self.where[q] = rid

    def __contains__(self, q: Hashable) -> bool:
        return q in self.where

    def locate(self, q: Hashable) -> tuple[int, int]:
        rid = self.where[q]
        return rid, self.members[rid].index(q)

    def join(self, qa: Hashable, qb: Hashable) -> int:
        ra, rb = self.where[qa], self.where[qb]
        if ra == rb:
            return ra
        # ra's qubits stay at the low positions
        self.states[ra] = qc.tensor(self.states.pop(rb), self.states[ra])
        moved = self.members.pop(rb)
        self.members[ra].extend(moved)
        for q in moved:
            self.where[q] = ra
        return ra


class Lab:
    def __init__(self, rng: np.random.Generator, backend: str = "state") -> None:
        if backend not in ("state", "labels"):
            raise ValueError(f"unknown backend {backend!r}")
        self.rng = rng
        self.backend = backend
        self.registers = _Registers()
        self.pairs = PairRegistry() if backend == "labels" else None
        self.owner: dict[Hashable, str] = {}

    # -- possession -------------------------------------------------------

    def hold(self, actor: str, *qids: Hashable) -> None:
        for q in qids:
            if self.owner.get(q) != actor:
                raise OwnershipError(f"{actor} does not hold qubit {q!r} (held by {self.owner.get(q)})")

    def give(self, qid: Hashable, actor: str) -> None:
        if qid not in self.owner:
            raise KeyError(f"unknown qubit {qid!r}")
        self.owner[qid] = actor

    def check_payload(self, payload: dict, actor: str) -> None:
        """Fail unless ``actor`` holds every qubit it is about to send."""
        for ref in _refs(payload):
            self.hold(actor, ref.qid)

    def transfer(self, payload: dict, actor: str) -> None:
        """Hand every QubitRef found in a payload to ``actor``."""
        for ref in _refs(payload):
            self.give(ref.qid, actor)

    # -- preparation ------------------------------------------------------

    def _claim(self, qids: Iterable[Hashable], owners: Iterable[str]) -> None:
        for q, o in zip(qids, owners):
            if q in self.owner:
                raise ValueError(f"qubit {q!r} already exists")
            self.owner[q] = o

    def prepare_pair(self, q1: Hashable, q2: Hashable, lbl: LabelLike, owners: tuple[str, str]) -> None:
        self._claim((q1, q2), owners)
        if self.pairs is not None:
            self.pairs.add(q1, q2, lbl)
        else:
            self.registers.alloc([q1, q2], qc.make_bell(lbl))

    def prepare_qubits(self, qids: list[Hashable], state: StateVector, owner: str) -> None:
        """Fresh free qubits (not part of any Bell pair)."""
        if state.num_qubits != len(qids):
            raise ValueError("qubit ids do not match the state")
        self._claim(qids, [owner] * len(qids))
        self.registers.alloc(list(qids), state)

    # -- operations -------------------------------------------------------

    def _in_pairs(self, q: Hashable) -> bool:
        return self.pairs is not None and q not in self.registers

    def bsm(self, actor: str, qa: Hashable, qb: Hashable, outcome: Optional[LabelLike] = None) -> BellLabel:
        self.hold(actor, qa, qb)
        if self._in_pairs(qa) and self._in_pairs(qb):
            if self.pairs.label_of(qa, qb) is not None:
                lbl = self.pairs.label_of(qa, qb)
                if outcome is not None and label(outcome) != lbl:
                    raise qc.BranchError(f"Bell outcome {label(outcome)} has zero probability")
                if outcome is None:
                    # one draw, as the state backend's Born-rule sample makes
                    qc.sample_index([1.0 if l == lbl else 0.0 for l in qc.LABELS], self.rng)
                return self.pairs.measure_pair(qa, qb)
            return self.pairs.bsm(qa, qb, self.rng, outcome)
        if self._in_pairs(qa) or self._in_pairs(qb):
            raise ValueError("label backend cannot couple a Bell-pair qubit with a free qubit")
        rid = self.registers.join(qa, qb)
        _, ia = self.registers.locate(qa)
        _, ib = self.registers.locate(qb)
        m, post = qc.bsm(self.registers.states[rid], ia, ib, self.rng, outcome)
        self.registers.states[rid] = post
        return m

    def pauli(self, actor: str, q: Hashable, which: str) -> None:
        self.hold(actor, q)
        if self._in_pairs(q):
            self.pairs.apply_pauli(q, which)
            return
        self._gate(q, lambda s, i: qc.apply_pauli(s, i, which))

    def dense_encode(self, actor: str, q: Hashable, msg: LabelLike) -> None:
        self.pauli(actor, q, qc.pauli_for(msg))

    def hadamard(self, actor: str, q: Hashable) -> None:
        self.hold(actor, q)
        self._free_only(q)
        self._gate(q, qc.apply_hadamard)

    def rotate(self, actor: str, q: Hashable, theta: float) -> None:
        self.hold(actor, q)
        self._free_only(q)
        self._gate(q, lambda s, i: qc.apply_rotation(s, i, theta))

    def measure(self, actor: str, q: Hashable, basis: int = 0) -> int:
        """Measure in Z (basis 0) or X (basis 1); the qubit is left collapsed."""
        self.hold(actor, q)
        self._free_only(q)
        rid, i = self.registers.locate(q)
        bit, post = qc.measure_in_basis(self.registers.states[rid], i, basis, self.rng)
        self.registers.states[rid] = post
        return bit

    def _free_only(self, q: Hashable) -> None:
        if self._in_pairs(q):
            raise ValueError("label backend supports only Bell operations on paired qubits")

    def _gate(self, q: Hashable, fn) -> None:
        rid, i = self.registers.locate(q)
        self.registers.states[rid] = fn(self.registers.states[rid], i)

    # -- inspection (test oracle / referee only) --------------------------

    def label_of(self, q1: Hashable, q2: Hashable) -> Optional[BellLabel]:
        if self._in_pairs(q1) and self._in_pairs(q2):
            return self.pairs.label_of(q1, q2)
        if q1 not in self.registers or q2 not in self.registers:
            return None
        if self.registers.where[q1] != self.registers.where[q2]:
            return None
        rid, i1 = self.registers.locate(q1)
        _, i2 = self.registers.locate(q2)
        return qc.bell_label_of(self.registers.states[rid], i1, i2)

    def num_qubits(self) -> int:
        return len(self.owner)


def _refs(payload) -> Iterable[QubitRef]:
    if isinstance(payload, QubitRef):
        yield payload
    elif isinstance(payload, dict):
        for v in payload.values():
            yield from _refs(v)
    elif isinstance(payload, (list, tuple)) and not hasattr(payload, "_fields"):
        for v in payload:
            yield from _refs(v)
