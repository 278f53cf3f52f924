"""Key accumulation over verified rounds, and rotation-cipher authentication.

Each accepted round of scheme A or B leaves two 2-bit secrets per verifier:
``v`` (the verifier's private BSM outcome) and ``p`` (the prover's). Strung
together over N rounds they give the 2N-bit keys K_V and K_P.

Authentication runs three passes over 2N single qubits:

1. P sends R(s_i theta_P)|0>,
2. V adds R(t_i theta_V) and returns the state,
3. P strips its own rotation and applies R((p_i ^ m_i) pi/2),

after which V strips R(t_i theta_V) and reads p_i ^ m_i in the Z basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import quantum as qc
from .quantum import StateVector, label

VERIFIERS = ("V0", "V1")


@dataclass(frozen=True)
class KeyPair:
    K_V: Optional[tuple[int, ...]]
    K_P: tuple[int, ...]
    N: int

    def hex(self) -> dict:
        return {"K_V": bits_to_hex(self.K_V) if self.K_V is not None else None, "K_P": bits_to_hex(self.K_P), "N": self.N}


def bits_to_hex(bits: Sequence[int]) -> str:
    """Hex export, most significant bit first; the bit length travels separately."""
    if not bits:
        return ""
    value = int("".join(str(int(b)) for b in bits), 2)
    return format(value, "0{}x".format((len(bits) + 3) // 4))


def _bits(lbl) -> tuple[int, int]:
    b = label(lbl)
    return (b.ui, b.uj)


def accumulate_keys(transcripts: Iterable, side: str = "verifier") -> dict[str, KeyPair]:
    """Concatenate per-round secrets into K_V and K_P for each verifier.

    ``side`` picks whose view to read: ``"verifier"`` or ``"prover"``. A
    scheme-A prover never learns ``v``, so its K_V is None.
    """
    if side not in ("verifier", "prover"):
        raise ValueError(f"side must be 'verifier' or 'prover', not {side!r}")
    transcripts = list(transcripts)
    schemes = {t.scheme for t in transcripts}
    if len(schemes) > 1:
        raise ValueError(f"transcripts mix schemes {sorted(schemes)}")
    kv: dict[str, Optional[list[int]]] = {v: [] for v in VERIFIERS}
    kp: dict[str, list[int]] = {v: [] for v in VERIFIERS}
    for i, t in enumerate(transcripts):
        if not t.accepted:
            raise ValueError(f"transcript {i} (seed {t.seed}) was rejected; only accepted rounds yield keys")
        if t.round_keys is None:
            raise ValueError(f"scheme {t.scheme!r} does not establish keys")
        for v in VERIFIERS:
            secrets = t.round_keys[side][v]
            kp[v].extend(_bits(secrets["p"]))
            if "v" in secrets and kv[v] is not None:
                kv[v].extend(_bits(secrets["v"]))
            else:
                kv[v] = None
    n = len(transcripts)
    return {v: KeyPair(tuple(kv[v]) if kv[v] is not None else None, tuple(kp[v]), n) for v in VERIFIERS}


# -- authentication ------------------------------------------------------


def theta_for(z: int) -> float:
    if z < 1:
        raise ValueError("z must be a positive integer")
    return math.pi / 4**z


@dataclass
class AuthSession:
    """One authentication exchange over ``len(M)`` qubits.

    S belongs to P, T to the verifier. Each party picks its own z.
    """

    z_P: int
    z_V: int
    S: list[int]
    T: list[int]
    M: list[int]
    key: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        n = len(self.M)
        if len(self.S) != n or len(self.T) != n:
            raise ValueError("S, T and M must have the same length")
        if n > qc.MAX_QUBITS:
            raise qc.CapacityError(f"{n} qubits exceeds the {qc.MAX_QUBITS}-qubit limit")

    @property
    def n(self) -> int:
        return len(self.M)

    @property
    def theta_P(self) -> float:
        return theta_for(self.z_P)

    @property
    def theta_V(self) -> float:
        return theta_for(self.z_V)

    @classmethod
    def random(
        cls,
        rng: np.random.Generator,
        n: int,
        z_P: int,
        z_V: int,
        key: Optional[Sequence[int]] = None,
        message: Optional[Sequence[int]] = None,
    ) -> "AuthSession":
        # s_i, t_i in [0, 4^z): one full period of the rotation step
        S = [int(s) for s in rng.integers(0, 4**z_P, size=n)]
        T = [int(t) for t in rng.integers(0, 4**z_V, size=n)]
        M = list(message) if message is not None else [int(b) for b in rng.integers(0, 2, size=n)]
        K = list(key) if key is not None else [int(b) for b in rng.integers(0, 2, size=n)]
        return cls(z_P, z_V, S, T, M, K)


def _rotate_all(state: StateVector, angles: Sequence[float]) -> StateVector:
    for q, a in enumerate(angles):
        if a:
            state = qc.apply_rotation(state, q, a)
    return state


def auth_encode_s(session: AuthSession) -> StateVector:
    state = StateVector.zeros(session.n)
    return _rotate_all(state, [s * session.theta_P for s in session.S])


def auth_counter_encode(session: AuthSession, state: StateVector) -> StateVector:
    return _rotate_all(state, [t * session.theta_V for t in session.T])


def auth_strip_s(session: AuthSession, state: StateVector) -> StateVector:
    return _rotate_all(state, [-s * session.theta_P for s in session.S])


def _check_key(session: AuthSession, key: Sequence[int]) -> None:
    if len(key) != session.n:
        raise ValueError(f"key has {len(key)} bits, session needs {session.n}")


def auth_encrypt_message(session: AuthSession, state: StateVector, key: Sequence[int]) -> StateVector:
    _check_key(session, key)
    return _rotate_all(state, [(int(p) ^ int(m)) * math.pi / 2 for p, m in zip(key, session.M)])


def auth_decode_verify(
    session: AuthSession,
    state: StateVector,
    key: Sequence[int],
    rng: Optional[np.random.Generator] = None,
) -> list[int]:
    """Strip T, read each qubit in Z, XOR with the key bit."""
    _check_key(session, key)
    state = _rotate_all(state, [-t * session.theta_V for t in session.T])
    out = []
    for q, p in enumerate(key):
        bit, state = qc.measure_z(state, q, rng)
        out.append(bit ^ int(p))
    return out


def run_auth(session: AuthSession, rng: Optional[np.random.Generator] = None, verifier_key: Optional[Sequence[int]] = None) -> list[int]:
    """Full exchange; returns the message the verifier decodes."""
    psi = auth_encode_s(session)
    psi = auth_counter_encode(session, psi)
    psi = auth_strip_s(session, psi)
    psi = auth_encrypt_message(session, psi, session.key)
    return auth_decode_verify(session, psi, session.key if verifier_key is None else verifier_key, rng)


# -- distinguishability --------------------------------------------------


def rotated_state(s: int, theta: float) -> StateVector:
    return qc.apply_rotation(StateVector.zeros(1), 0, s * theta)


def fidelity(s: int, s2: int, z: int) -> float:
    """|<psi_s|psi_s2>| for single-qubit rotation states."""
    theta = theta_for(z)
    return abs(rotated_state(s, theta).inner(rotated_state(s2, theta)))


def nearest_neighbor_distance(z: int) -> float:
    """sqrt(1 - |<psi_s|psi_{s+1}>|^2), independent of s.

    Computed as the norm of psi_{s+1}'s component orthogonal to psi_s, which
    equals the square root above but keeps full precision for large z.
    """
    theta = theta_for(z)
    a, b = rotated_state(0, theta), rotated_state(1, theta)
    rest = b.amplitudes - a.inner(b) * a.amplitudes
    return float(np.linalg.norm(rest))
