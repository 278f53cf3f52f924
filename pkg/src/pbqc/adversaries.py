"""Adversary strategies bound to channel taps.

A strategy is bound to one protocol round at a time. It may place its own
parties (E0, E1) on the line, prepare its own Bell pairs, and tap channels;
everything else it learns arrives through intercepted payloads. The lab's
ownership checks stop it from touching qubits it does not hold.
"""

from __future__ import annotations

from typing import Callable, Optional

from .lab import QubitRef
from .quantum import label, pauli_for
from .spacetime import JAM, Message, transit_time


def _midpoint(rnd, a: str, b: str) -> float:
    return (rnd.world.x(a) + rnd.world.x(b)) / 2.0


class Adversary:
    name = "adversary"

    def __init__(self) -> None:
        self.obs: dict = {}
        self.rnd = None

    def bind(self, rnd) -> None:
        self.rnd = rnd
        self.obs = {}
        self.setup(rnd)

    def setup(self, rnd) -> None:
        raise NotImplementedError

    def report(self) -> dict:
        return dict(self.obs)

    def station(self, actor: str, a: str, b: str) -> float:
        """Place ``actor`` midway between a and b (unless already placed)."""
        if actor not in self.rnd.world.positions:
            self.rnd.world.place(actor, _midpoint(self.rnd, a, b))
        return self.rnd.world.x(actor)

    def tap(self, actor: str, a: str, b: str, handler: Callable[[Message, float], object]) -> None:
        lo, hi = sorted((self.rnd.world.x(a), self.rnd.world.x(b)))
        x = self.rnd.world.x(actor)
        if lo < x < hi:
            self.rnd.net.add_tap(a, b, actor, handler, coord=x)


class ForwardingTap(Adversary):
    """Sits on every prover channel and forwards everything untouched."""

    name = "forward"

    def setup(self, rnd) -> None:
        self.station("E0", "V0", "P")
        self.station("E1", "V1", "P")
        for actor, v in (("E0", "V0"), ("E1", "V1")):
            self.tap(actor, v, "P", lambda msg, now: msg.payload)


class PassiveCollector(Adversary):
    """Records every classical field it sees; forwards everything."""

    name = "passive"

    def setup(self, rnd) -> None:
        self.obs["seen"] = []
        self.station("E0", "V0", "P")
        self.station("E1", "V1", "P")
        for actor, a, b in (("E0", "V0", "P"), ("E1", "V1", "P"), ("E0", "V0", "V1"), ("E1", "V0", "V1")):
            self.tap(actor, a, b, self._collect)

    def _collect(self, msg: Message, now: float):
        plain = {k: v for k, v in msg.payload.items() if k not in ("qubit", "qubits")}
        if plain:
            self.obs["seen"].append({"from": msg.src, "to": msg.dst, **plain})
        return msg.payload


class InterceptResend(Adversary):
    """Measures qubits heading to the prover and forwards the collapsed state.

    ``basis_policy`` is ``"random"`` (a fresh basis per qubit) or ``"fixed"``
    (always Z).
    """

    name = "intercept-resend"

    def __init__(self, basis_policy: str = "random", targets: tuple[str, ...] = ("V0",)) -> None:
        super().__init__()
        if basis_policy not in ("random", "fixed"):
            raise ValueError(f"unknown basis policy {basis_policy!r}")
        self.basis_policy = basis_policy
        self.targets = targets

    def setup(self, rnd) -> None:
        self.obs["reads"] = []
        for v in self.targets:
            actor = "E0" if v == "V0" else "E1"
            self.station(actor, v, "P")
            self.tap(actor, v, "P", self._handler(actor))

    def _handler(self, actor: str):
        def handle(msg: Message, now: float):
            if msg.dst != "P":
                return msg.payload
            refs = msg.payload.get("qubits") or ([msg.payload["qubit"]] if "qubit" in msg.payload else [])
            for ref in refs:
                basis = self.rnd.bit() if self.basis_policy == "random" else 0
                bit = self.rnd.lab.measure(actor, ref.qid, basis)
                self.rnd.sched.record(actor, "measure", {"qubit": ref.qid, "basis": basis, "bit": bit})
                self.obs["reads"].append({"from": msg.src, "qubit": ref.qid, "basis": basis, "bit": bit})
            return msg.payload

        return handle


class KeyGuesser(Adversary):
    """Impersonates P in scheme I without the key: blocks the challenges and
    answers each round with a coin flip, timed to look like P."""

    name = "key-guesser"

    def setup(self, rnd) -> None:
        self.obs["guesses"] = []
        self._guess: dict[int, int] = {}
        self.station("E0", "V0", "P")
        self.station("E1", "V1", "P")
        self.tap("E0", "V0", "P", self._handler("E0", "V0"))
        self.tap("E1", "V1", "P", self._handler("E1", "V1"))

    def _handler(self, actor: str, verifier: str):
        def handle(msg: Message, now: float):
            if msg.src != verifier:
                return msg.payload
            i = msg.payload["round"]
            if i not in self._guess:
                self._guess[i] = self.rnd.bit()
                self.obs["guesses"].append(self._guess[i])
            back = msg.sent_at + self.rnd.round_trip(verifier) - transit_time(self.rnd.world, actor, verifier)
            self.rnd.net.send(actor, verifier, {"round": i, "bit": self._guess[i]}, at=back)
            return JAM

        return handle


class SchemeIIIAttack(Adversary):
    """Substitute-and-repair attack on scheme III.

    E0 holds (5,6) and qubit 7; E1 holds qubit 8, with (7,8) in 00 (qubit 7
    was handed to E0 before the round). They swap their own halves 6 and 8
    in for the verifiers' qubits 2 and 3, so P's BSM entangles 5 with 7.
    When V1 ships qubit 4 to V0, E0 measures (5,7), which repeats P's
    result, rotates the captured qubit 2 so that (1,2) carries that label,
    and passes qubit 2 off as qubit 4.
    """

    name = "scheme-iii-attack"

    def __init__(self, fixup: bool = True) -> None:
        super().__init__()
        self.fixup = fixup

    def setup(self, rnd) -> None:
        self.station("E0", "V0", "P")
        self.station("E1", "V1", "P")
        rnd.lab.prepare_pair(5, 6, "00", ("E0", "E0"))
        rnd.lab.prepare_pair(7, 8, "00", ("E0", "E1"))
        self.tap("E0", "V0", "P", self._e0_prover_leg)
        self.tap("E1", "V1", "P", self._e1_prover_leg)
        self.tap("E0", "V0", "V1", self._e0_verifier_leg)

    def _e0_prover_leg(self, msg: Message, now: float):
        if msg.src == "V0" and "qubit" in msg.payload:
            self.obs["captured_v0"] = msg.payload["qubit"].qid
            return {"qubit": QubitRef(6)}
        if msg.src == "P" and "label" in msg.payload:
            self.obs["prover_label"] = label(msg.payload["label"])
        return msg.payload

    def _e1_prover_leg(self, msg: Message, now: float):
        if msg.src == "V1" and "qubit" in msg.payload:
            self.obs["captured_v1"] = msg.payload["qubit"].qid
            return {"qubit": QubitRef(8)}
        return msg.payload

    def _e0_verifier_leg(self, msg: Message, now: float):
        if msg.src != "V1" or "qubit" not in msg.payload:
            return msg.payload
        r = self.rnd.bsm("E0", 5, 7)
        self.obs["recovered"] = r
        if self.fixup:
            # (1,2) is publicly 11
            fix = pauli_for(label("11") ^ r)
            self.rnd.lab.pauli("E0", 2, fix)
            self.rnd.sched.record("E0", "encode", {"qubit": 2, "pauli": fix})
        return {**msg.payload, "qubit": QubitRef(2)}


class SchemeIVAttack(Adversary):
    """Message-stealing attack on scheme IV.

    E0 holds (7,8), E1 holds (9,10), both in 00. They read V0's public
    swap result, substitute qubits 7 and 9 for the dense-coded qubits 1 and
    6, and once P's BSM results pass by, measure their retained pairs (8,1)
    and (10,6) to decode both messages. P's replies are jammed and replaced
    by the replies the verifiers expect.
    """

    name = "scheme-iv-attack"

    def setup(self, rnd) -> None:
        self.station("E0", "V0", "P")
        self.station("E1", "V1", "P")
        rnd.lab.prepare_pair(7, 8, "00", ("E0", "E0"))
        rnd.lab.prepare_pair(9, 10, "00", ("E1", "E1"))
        self.obs["recovered"] = [None, None]
        self.tap("E0", "V0", "V1", self._read_announcement)
        self.tap("E0", "V0", "P", self._leg("E0", "V0", own=7, keep=8, slot=0))
        self.tap("E1", "V1", "P", self._leg("E1", "V1", own=9, keep=10, slot=1))

    def _read_announcement(self, msg: Message, now: float):
        if "announce" in msg.payload:
            self.obs["announcement"] = label(msg.payload["label"])
        return msg.payload

    def _leg(self, actor: str, verifier: str, own: int, keep: int, slot: int):
        captured: dict[str, int] = {}

        def handle(msg: Message, now: float):
            if msg.src == verifier and "qubit" in msg.payload:
                captured["q"] = msg.payload["qubit"].qid
                return {"qubit": QubitRef(own)}
            if msg.src == "P" and "bsm" in msg.payload and "q" in captured:
                announced = label(msg.payload["bsm"])
                r = self.rnd.bsm(actor, keep, captured["q"])
                # label of the verifier's encoded pair, then strip the known pair label
                encoded = r ^ announced ^ label("00")
                pair = label("00") if slot == 0 else label("00") ^ label("11") ^ self.obs.get("announcement", label("00"))
                message = encoded ^ pair
                self.obs["recovered"][slot] = message
                self.obs.setdefault("prover_labels", [None, None])[slot] = announced
                self.obs.setdefault("retained", [None, None])[slot] = r
                # P's reply stops here; the verifier gets the answer it expects
                return {"bsm": message ^ pair}
            return msg.payload

        return handle


class EntanglingIntercept(Adversary):
    """Swap attack on scheme B's travelling chain endpoint.

    E0 holds (13,14) in 00, captures qubit 1, Bell-measures (1,13) and sends
    14 on to P. E1 mirrors this on qubit 11 with (15,16).
    """

    name = "entangling-intercept"

    PLAN = {"V0": ("E0", 13, 14), "V1": ("E1", 15, 16)}

    def __init__(self, targets: tuple[str, ...] = ("V0",)) -> None:
        super().__init__()
        self.targets = targets

    def setup(self, rnd) -> None:
        for v in self.targets:
            actor, keep, send = self.PLAN[v]
            self.station(actor, v, "P")
            rnd.lab.prepare_pair(keep, send, "00", (actor, actor))
            self.tap(actor, v, "P", self._handler(v, actor, keep, send))

    def _handler(self, verifier: str, actor: str, keep: int, send: int):
        def handle(msg: Message, now: float):
            if msg.src == verifier and "qubit" in msg.payload:
                r = self.rnd.bsm(actor, msg.payload["qubit"].qid, keep)
                self.obs[f"bsm_{verifier}"] = r
                return {"qubit": QubitRef(send)}
            return msg.payload

        return handle


def scheme_iii_attack(fixup: bool = True) -> SchemeIIIAttack:
    return SchemeIIIAttack(fixup)


def scheme_iv_attack() -> SchemeIVAttack:
    return SchemeIVAttack()


def intercept_resend(basis_policy: str = "random", targets: tuple[str, ...] = ("V0",)) -> InterceptResend:
    return InterceptResend(basis_policy, targets)


def entangling_intercept(targets: tuple[str, ...] = ("V0",)) -> EntanglingIntercept:
    return EntanglingIntercept(targets)


STRATEGIES: dict[str, Callable[[], Optional[Adversary]]] = {
    "none": lambda: None,
    "forward": ForwardingTap,
    "passive": PassiveCollector,
    "intercept-resend": lambda: InterceptResend("random"),
    "intercept-resend-fixed": lambda: InterceptResend("fixed"),
    "intercept-resend-both": lambda: InterceptResend("random", ("V0", "V1")),
    "key-guesser": KeyGuesser,
    "scheme-iii-attack": SchemeIIIAttack,
    "scheme-iii-attack-no-fixup": lambda: SchemeIIIAttack(fixup=False),
    "scheme-iv-attack": SchemeIVAttack,
    "entangling-intercept": EntanglingIntercept,
    "entangling-intercept-v1": lambda: EntanglingIntercept(("V1",)),
    "entangling-intercept-both": lambda: EntanglingIntercept(("V0", "V1")),
}


def make_adversary(strategy_id: Optional[str]) -> Optional[Adversary]:
    if strategy_id is None:
        return None
    try:
        return STRATEGIES[strategy_id]()
    except KeyError:
        raise ValueError(f"unknown adversary {strategy_id!r}; choose from {sorted(STRATEGIES)}") from None
