"""Bell-label algebra for chains of Bell pairs.

Entanglement swapping on labeled pairs never needs amplitudes: if pairs
labeled ``a`` and ``b`` are joined by a Bell measurement with outcome ``m``,
the two untouched qubits end up labeled ``a ^ b ^ m``. The test suite
certifies that rule against the state-vector engine for all 64 cases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Hashable, Iterable, Optional, Sequence

import numpy as np

from .quantum import LABELS, BellLabel, LabelLike, label, sample_index

UNIFORM = (0.25, 0.25, 0.25, 0.25)


class RegistryError(KeyError):
    """Unknown, consumed or already-paired qubit."""


class DegenerateBSM(ValueError):
    """Both measured qubits belong to the same pair."""


def swap_label(a: LabelLike, b: LabelLike, m: LabelLike) -> BellLabel:
    """Residual label after swapping pairs ``a`` and ``b`` with outcome ``m``."""
    return label(a) ^ label(b) ^ label(m)


def _xor_all(labels: Iterable[LabelLike]) -> BellLabel:
    return reduce(lambda x, y: x ^ y, (label(v) for v in labels), BellLabel(0, 0))


def chain_label(pair_labels: Sequence[LabelLike], bsm_outcomes: Sequence[LabelLike]) -> BellLabel:
    """Endpoint label of a chain of pairs joined by interior Bell measurements."""
    if not pair_labels:
        raise ValueError("empty chain")
    if len(bsm_outcomes) != len(pair_labels) - 1:
        raise ValueError(
            f"{len(pair_labels)} pairs need {len(pair_labels) - 1} outcomes, got {len(bsm_outcomes)}"
        )
    return _xor_all(list(pair_labels) + list(bsm_outcomes))


def infer_hidden(
    known_pairs: Sequence[LabelLike],
    known_outcomes: Sequence[LabelLike],
    observed_endpoint: LabelLike,
) -> BellLabel:
    """Solve a chain for its single unknown interior outcome.

    Always succeeds; consistency has to be checked by the caller against
    whatever the other side announces.
    """
    if len(known_outcomes) != len(known_pairs) - 2:
        raise ValueError("exactly one outcome of the chain must be unknown")
    return _xor_all(list(known_pairs) + list(known_outcomes) + [observed_endpoint])


@dataclass
class Pair:
    first: Hashable
    second: Hashable
    label: BellLabel

    def other(self, q: Hashable) -> Hashable:
        return self.second if q == self.first else self.first


@dataclass
class PairRegistry:
    """Live Bell pairs keyed by pair id, with exact labels only."""

    pairs: dict[int, Pair] = field(default_factory=dict)
    consumed: set[int] = field(default_factory=set)
    _owner: dict[Hashable, int] = field(default_factory=dict)
    _next_id: int = 0

    def add(self, q1: Hashable, q2: Hashable, lbl: LabelLike) -> int:
        if q1 == q2:
            raise RegistryError(f"pair needs two qubits, got {q1!r} twice")
        for q in (q1, q2):
            if q in self._owner:
                raise RegistryError(f"qubit {q!r} already belongs to pair {self._owner[q]}")
        pid = self._next_id
        self._next_id += 1
        self.pairs[pid] = Pair(q1, q2, label(lbl))
        self._owner[q1] = pid
        self._owner[q2] = pid
        return pid

    def pair_of(self, q: Hashable) -> int:
        try:
            return self._owner[q]
        except KeyError:
            raise RegistryError(f"qubit {q!r} is not in a live pair") from None

    def label_of(self, q1: Hashable, q2: Hashable) -> Optional[BellLabel]:
        """Label of (q1, q2) if they currently form a live pair, else None."""
        pid = self._owner.get(q1)
        if pid is None or self._owner.get(q2) != pid:
            return None
        return self.pairs[pid].label

    def partner(self, q: Hashable) -> Hashable:
        return self.pairs[self.pair_of(q)].other(q)

    def live(self) -> list[tuple[Hashable, Hashable, BellLabel]]:
        return [(p.first, p.second, p.label) for pid, p in sorted(self.pairs.items())]

    def _consume(self, pid: int) -> Pair:
        pair = self.pairs.pop(pid)
        self.consumed.add(pid)
        del self._owner[pair.first]
        del self._owner[pair.second]
        return pair

    def apply_pauli(self, q: Hashable, which: str) -> None:
        shift = {"I": "00", "X": "01", "Z": "10", "XZ": "11"}[which]
        pair = self.pairs[self.pair_of(q)]
        pair.label = pair.label ^ shift

    def bsm(
        self,
        qa: Hashable,
        qb: Hashable,
        rng: Optional[np.random.Generator] = None,
        outcome: Optional[LabelLike] = None,
    ) -> BellLabel:
        """Entanglement swap between the pairs holding qa and qb."""
        pa, pb = self.pair_of(qa), self.pair_of(qb)
        if pa == pb:
            raise DegenerateBSM(f"qubits {qa!r} and {qb!r} are in the same pair")
        if outcome is None:
            if rng is None:
                raise ValueError("rng required when the outcome is not forced")
            m = LABELS[sample_index(UNIFORM, rng)]
        else:
            m = label(outcome)
        a, b = self._consume(pa), self._consume(pb)
        self.add(a.other(qa), b.other(qb), swap_label(a.label, b.label, m))
        return m

    def measure_pair(self, q1: Hashable, q2: Hashable) -> BellLabel:
        """Bell-measure both halves of one pair: deterministic, consumes it."""
        pid = self.pair_of(q1)
        if self._owner.get(q2) != pid:
            raise RegistryError(f"qubits {q1!r} and {q2!r} are not paired")
        return self._consume(pid).label


def bsm_label(reg: PairRegistry, qa: Hashable, qb: Hashable, rng: np.random.Generator) -> BellLabel:
    return reg.bsm(qa, qb, rng)


def emit_table() -> list[tuple[BellLabel, BellLabel, BellLabel, BellLabel]]:
    """All 64 swap cases as (u1u3, u2u4, u1u2, u3u4) rows."""
    return [(a, b, m, swap_label(a, b, m)) for a in LABELS for b in LABELS for m in LABELS]


def render_table() -> str:
    """Plain-text form of :func:`emit_table`, plus the compact four-row swap layout."""
    lines = [
        "# entanglement swapping: pairs (1,3),(2,4) -> BSM on (1,2) -> pair (3,4)",
        "# u1u3 u2u4 | u1u2 u3u4",
    ]
    for a, b, m, r in emit_table():
        lines.append(f"{a}   {b}   | {m}   {r}")
    lines.append("# compact layout: initial u1u3u2u4 (left) share the outcomes u1u2u3u4 (right)")
    for parity in LABELS:
        left = [f"{a}{b}" for a in LABELS for b in LABELS if a ^ b == parity]
        right = [f"{m}{swap_label(parity, '00', m)}" for m in LABELS]
        lines.append(" ".join(left) + "   " + " ".join(right))
    return "\n".join(lines) + "\n"
