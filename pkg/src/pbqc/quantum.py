"""Exact state-vector engine.

Qubits are little-endian: qubit 0 is the least-significant bit of the
amplitude index. Bell states follow the convention

    beta(ui, uj) = (|0>|uj> + (-1)**ui |1>|1^uj>) / sqrt(2)

where the first ket belongs to the first qubit of the pair. Every operation
returns a new StateVector; inputs are never mutated.
"""

from __future__ import annotations

import math
from typing import Iterable, NamedTuple, Optional, Sequence, Union

import numpy as np

MAX_QUBITS = 16
NORM_ATOL = 1e-9
ZERO_PROB = 1e-12

SQRT1_2 = 1.0 / math.sqrt(2.0)


class CapacityError(ValueError):
    """Register would exceed MAX_QUBITS."""


class BranchError(RuntimeError):
    """A zero-probability measurement branch was selected."""


class BellLabel(NamedTuple):
    """Two-bit Bell label; ``str(label)`` gives ``"uiuj"``."""

    ui: int
    uj: int

    @classmethod
    def parse(cls, value: "LabelLike") -> "BellLabel":
        if isinstance(value, BellLabel):
            return value
        if isinstance(value, str):
            if len(value) != 2 or any(c not in "01" for c in value):
                raise ValueError(f"bad Bell label {value!r}")
            return cls(int(value[0]), int(value[1]))
        if isinstance(value, (int, np.integer)):
            if not 0 <= value < 4:
                raise ValueError(f"bad Bell label index {value}")
            return cls(int(value) >> 1, int(value) & 1)
        ui, uj = value
        if ui not in (0, 1) or uj not in (0, 1):
            raise ValueError(f"bad Bell label {value!r}")
        return cls(int(ui), int(uj))

    @property
    def index(self) -> int:
        return 2 * self.ui + self.uj

    def __xor__(self, other: "LabelLike") -> "BellLabel":  # type: ignore[override]
        o = BellLabel.parse(other)
        return BellLabel(self.ui ^ o.ui, self.uj ^ o.uj)

    __rxor__ = __xor__

    def __str__(self) -> str:
        return f"{self.ui}{self.uj}"


LabelLike = Union[BellLabel, str, int, Sequence[int]]

LABELS = tuple(BellLabel.parse(i) for i in range(4))


def label(value: LabelLike) -> BellLabel:
    return BellLabel.parse(value)


class StateVector:
    """Normalized pure state on ``num_qubits`` qubits."""

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, num_qubits: int, amplitudes) -> None:
        if not 1 <= num_qubits <= MAX_QUBITS:
            raise CapacityError(f"{num_qubits} qubits outside 1..{MAX_QUBITS}")
        amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != 1 << num_qubits:
            raise ValueError("amplitude count does not match qubit count")
        self.num_qubits = num_qubits
        self.amplitudes = amps

    @classmethod
    def zeros(cls, num_qubits: int) -> "StateVector":
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "StateVector":
        """Computational basis state; ``bits[q]`` is the value of qubit q."""
        index = sum(int(b) << q for q, b in enumerate(bits))
        amps = np.zeros(1 << len(bits), dtype=np.complex128)
        amps[index] = 1.0
        return cls(len(bits), amps)

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def allclose(self, other: "StateVector", atol: float = 1e-12, up_to_phase: bool = False) -> bool:
        if self.num_qubits != other.num_qubits:
            return False
        if up_to_phase:
            return abs(abs(self.inner(other)) - 1.0) <= atol
        return bool(np.allclose(self.amplitudes, other.amplitudes, atol=atol, rtol=0))

    def __repr__(self) -> str:
        return f"StateVector(num_qubits={self.num_qubits})"


# ---------------------------------------------------------------------------
# gates
# ---------------------------------------------------------------------------

I2 = np.eye(2, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
H = np.array([[1, 1], [1, -1]], dtype=np.complex128) * SQRT1_2

PAULIS = {"I": I2, "X": X, "Z": Z, "XZ": X @ Z}


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _check_qubit(state: StateVector, q: int) -> None:
    if not 0 <= q < state.num_qubits:
        raise IndexError(f"qubit {q} out of range for {state.num_qubits}-qubit register")


def apply_gate(state: StateVector, q: int, matrix: np.ndarray) -> StateVector:
    """Apply a 2x2 matrix to qubit q."""
    _check_qubit(state, q)
    n = state.num_qubits
    psi = state.amplitudes.reshape(1 << (n - q - 1), 2, 1 << q)
    out = np.einsum("ab,ibj->iaj", matrix, psi)
    return StateVector(n, out.reshape(-1))


def apply_pauli(state: StateVector, q: int, which: str) -> StateVector:
    """Apply I, X, Z or XZ (the product X*Z, i.e. Z first) to qubit q."""
    try:
        matrix = PAULIS[which]
    except KeyError:
        raise ValueError(f"unknown Pauli {which!r}") from None
    return apply_gate(state, q, matrix)


def apply_hadamard(state: StateVector, q: int) -> StateVector:
    return apply_gate(state, q, H)


def apply_rotation(state: StateVector, q: int, theta: float) -> StateVector:
    """Real rotation [[cos, -sin], [sin, cos]] in the {|0>, |1>} plane."""
    return apply_gate(state, q, rotation_matrix(theta))


def pauli_for(msg: LabelLike) -> str:
    """Pauli that shifts a Bell label by ``msg`` when applied to either half."""
    m = label(msg)
    return {(0, 0): "I", (0, 1): "X", (1, 0): "Z", (1, 1): "XZ"}[(m.ui, m.uj)]


def dense_encode(state: StateVector, q: int, msg: LabelLike) -> StateVector:
    """Superdense-coding encoder: Z**ui then X**uj on qubit q."""
    return apply_pauli(state, q, pauli_for(msg))


# ---------------------------------------------------------------------------
# composition
# ---------------------------------------------------------------------------


def make_bell(lbl: LabelLike) -> StateVector:
    ui, uj = label(lbl)
    amps = np.zeros(4, dtype=np.complex128)
    # index = q0 + 2*q1, q0 carries the first ket
    amps[0 + 2 * uj] = SQRT1_2
    amps[1 + 2 * (1 ^ uj)] = SQRT1_2 * (-1) ** ui
    return StateVector(2, amps)


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Kronecker product a (x) b.

    b keeps the low qubit numbers 0..nb-1 and a's qubits move up by nb, so
    ``tensor(psi, |0>)`` interleaves psi's amplitudes with zeros.
    """
    n = a.num_qubits + b.num_qubits
    if n > MAX_QUBITS:
        raise CapacityError(f"tensor product needs {n} qubits, capacity is {MAX_QUBITS}")
    return StateVector(n, np.kron(a.amplitudes, b.amplitudes))


def _as_tensor(state: StateVector) -> np.ndarray:
    # numpy axis k holds qubit n-1-k
    return state.amplitudes.reshape((2,) * state.num_qubits)


def _axis(state: StateVector, q: int) -> int:
    return state.num_qubits - 1 - q


# ---------------------------------------------------------------------------
# measurement
# ---------------------------------------------------------------------------


def sample_index(probs: Sequence[float], rng: np.random.Generator) -> int:
    """Inverse-CDF draw from one uniform variate.

    Both backends draw branches through this helper so a shared seed picks the
    same branch whenever the branch weights agree.
    """
    u = rng.random()
    acc = 0.0
    last = None
    for i, p in enumerate(probs):
        if p <= ZERO_PROB:
            continue
        last = i
        acc += p
        if u < acc:
            return i
    if last is None:
        raise BranchError("all branches have zero probability")
    return last


def _bell_matrix(lbl: BellLabel) -> np.ndarray:
    # B[x1, x2] = amplitude of |x1>_first |x2>_second
    amps = make_bell(lbl).amplitudes
    return np.array([[amps[0], amps[2]], [amps[1], amps[3]]])


_BELL_MATRICES = tuple(_bell_matrix(lbl) for lbl in LABELS)


def _pair_components(state: StateVector, q1: int, q2: int) -> np.ndarray:
    """Unnormalized remainder vectors <beta_L|_(q1,q2) |psi> for the four labels."""
    _check_qubit(state, q1)
    _check_qubit(state, q2)
    if q1 == q2:
        raise ValueError("Bell measurement needs two distinct qubits")
    t = np.moveaxis(_as_tensor(state), [_axis(state, q1), _axis(state, q2)], [0, 1])
    t = t.reshape(4, -1)
    bm = np.stack([m.reshape(-1) for m in _BELL_MATRICES])
    return bm.conj() @ t


def bsm_probabilities(state: StateVector, q1: int, q2: int) -> np.ndarray:
    comps = _pair_components(state, q1, q2)
    return np.real(np.einsum("ij,ij->i", comps.conj(), comps))


def _project_pair(state: StateVector, q1: int, q2: int, comp: np.ndarray, lbl: BellLabel) -> StateVector:
    n = state.num_qubits
    bm = _BELL_MATRICES[lbl.index]
    rest_shape = (2,) * (n - 2)
    t = bm.reshape(2, 2, *([1] * (n - 2))) * comp.reshape(1, 1, *rest_shape)
    t = np.moveaxis(t, [0, 1], [_axis(state, q1), _axis(state, q2)])
    amps = t.reshape(-1)
    return StateVector(n, amps / np.linalg.norm(amps))


def bsm(
    state: StateVector,
    q1: int,
    q2: int,
    rng: Optional[np.random.Generator] = None,
    outcome: Optional[LabelLike] = None,
) -> tuple[BellLabel, StateVector]:
    """Bell-state measurement on (q1, q2).

    The outcome is drawn by the Born rule unless ``outcome`` forces a branch.
    The measured pair stays in the register, projected onto the outcome state.
    """
    comps = _pair_components(state, q1, q2)
    probs = np.real(np.einsum("ij,ij->i", comps.conj(), comps))
    if outcome is None:
        if rng is None:
            raise ValueError("rng required when the outcome is not forced")
        lbl = LABELS[sample_index(probs, rng)]
    else:
        lbl = label(outcome)
    if probs[lbl.index] <= ZERO_PROB:
        raise BranchError(f"Bell outcome {lbl} has zero probability")
    return lbl, _project_pair(state, q1, q2, comps[lbl.index], lbl)


def measure_z(
    state: StateVector,
    q: int,
    rng: Optional[np.random.Generator] = None,
    outcome: Optional[int] = None,
) -> tuple[int, StateVector]:
    """Computational-basis measurement of qubit q with collapse."""
    _check_qubit(state, q)
    n = state.num_qubits
    psi = state.amplitudes.reshape(1 << (n - q - 1), 2, 1 << q)
    probs = [float(np.sum(np.abs(psi[:, b, :]) ** 2)) for b in (0, 1)]
    if outcome is None:
        if rng is None:
            raise ValueError("rng required when the outcome is not forced")
        bit = sample_index(probs, rng)
    else:
        bit = int(outcome)
    if probs[bit] <= ZERO_PROB:
        raise BranchError(f"outcome {bit} on qubit {q} has zero probability")
    out = np.zeros_like(psi)
    out[:, bit, :] = psi[:, bit, :] / math.sqrt(probs[bit])
    return bit, StateVector(n, out.reshape(-1))


def measure_in_basis(
    state: StateVector, q: int, basis: int, rng: np.random.Generator
) -> tuple[int, StateVector]:
    """Measure in Z (basis 0) or X (basis 1); the post-state is left in that basis."""
    if basis:
        state = apply_hadamard(state, q)
    bit, state = measure_z(state, q, rng)
    if basis:
        state = apply_hadamard(state, q)
    return bit, state


def bell_label_of(state: StateVector, q1: int, q2: int, atol: float = NORM_ATOL) -> Optional[BellLabel]:
    """Label of (q1, q2) if that pair is in a pure Bell state, else None."""
    probs = bsm_probabilities(state, q1, q2)
    best = int(np.argmax(probs))
    if probs[best] >= 1.0 - atol:
        return LABELS[best]
    return None


def bell_coefficients(state: StateVector, pairs: Sequence[tuple[int, int]]) -> dict[tuple[BellLabel, ...], complex]:
    """Expansion coefficients of ``state`` in a product Bell basis.

    ``pairs`` must cover every qubit exactly once. Keys are label tuples in the
    order of ``pairs``.
    """
    covered = sorted(q for pair in pairs for q in pair)
    if covered != list(range(state.num_qubits)):
        raise ValueError("pairs must cover every qubit exactly once")
    out: dict[tuple[BellLabel, ...], complex] = {}
    for combo in _label_products(len(pairs)):
        basis = _bell_product(state.num_qubits, pairs, combo)
        out[combo] = basis.inner(state)
    return out


def _label_products(k: int) -> Iterable[tuple[BellLabel, ...]]:
    if k == 0:
        yield ()
        return
    for head in LABELS:
        for rest in _label_products(k - 1):
            yield (head,) + rest


def _bell_product(n: int, pairs: Sequence[tuple[int, int]], labels: Sequence[BellLabel]) -> StateVector:
    t = np.ones((1,) * 0, dtype=np.complex128)
    order: list[int] = []
    for (q1, q2), lbl in zip(pairs, labels):
        t = np.multiply.outer(t, _BELL_MATRICES[lbl.index])
        order.extend([q1, q2])
    # t axes follow ``order``; move them to the register's axis layout
    dest = [n - 1 - q for q in order]
    t = np.moveaxis(t, list(range(n)), dest)
    return StateVector(n, t.reshape(-1))
