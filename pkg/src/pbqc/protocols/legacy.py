"""Prior position-verification schemes: PV_BB84 and schemes I-IV.

All runs use the canonical line V0 -- P -- V1 unless a world is given.
Challenges leave the verifiers at t = 0 so that they reach P together.
"""

from __future__ import annotations

from typing import Mapping, Optional

from ..lab import QubitRef
from ..quantum import StateVector, label
from ..spacetime import DEFAULT_TOLERANCE, WorldLine, transit_time
from .base import Round, Transcript, max_round_trip


def _bind(adversary, rnd: Round) -> None:
    if adversary is not None:
        adversary.bind(rnd)


def _report(adversary, rnd: Round) -> None:
    if adversary is not None:
        rnd.detail["adversary"] = {"id": adversary.name, **adversary.report()}


def _send_times(rnd: Round) -> tuple[float, float]:
    """Send times that make both verifiers' signals reach P at the same moment."""
    t0 = rnd.world.d
    t1 = abs(rnd.world.x("V1") - rnd.world.x("P"))
    arrive = max(t0, t1)
    return arrive - t0, arrive - t1


def run_pv_bb84(
    world: Optional[WorldLine] = None,
    seed: int = 0,
    adversary=None,
    *,
    backend: str = "state",
    tolerance: float = DEFAULT_TOLERANCE,
    bits: Optional[tuple[int, int]] = None,
) -> Transcript:
    """One PV_BB84 round: V0 sends H^y|x>, V1 sends y, P answers the bit."""
    rnd = Round("pv-bb84", seed, world, backend=backend, tolerance=tolerance)
    x, y = bits if bits is not None else (rnd.bit(), rnd.bit())
    rnd.detail.update({"x": x, "y": y})
    rnd.lab.prepare_qubits(["q"], StateVector.from_bits([x]), "V0")
    if y:
        rnd.lab.hadamard("V0", "q")
    rnd.sched.record("V0", "encode", {"qubit": "q"})
    _bind(adversary, rnd)

    s0, s1 = _send_times(rnd)
    inbox: dict[str, dict] = {}
    replies = [
        rnd.expect_reply("V0", s0, lambda p: p.get("bit") == x),
        rnd.expect_reply("V1", s1, lambda p: p.get("bit") == x),
    ]

    def prover(msg, now):
        inbox[msg.src] = msg.payload
        if len(inbox) < 2:
            return
        qref = inbox["V0"]["qubit"]
        b = rnd.lab.measure("P", qref.qid, basis=inbox["V1"]["y"])
        rnd.sched.record("P", "measure", {"qubit": qref.qid, "basis": inbox["V1"]["y"], "bit": b})
        rnd.detail["prover_bit"] = b
        rnd.net.send("P", "V0", {"bit": b}, on_deliver=replies[0][1])
        rnd.net.send("P", "V1", {"bit": b}, on_deliver=replies[1][1])

    rnd.net.send("V0", "P", {"qubit": QubitRef("q")}, at=s0, on_deliver=prover)
    rnd.net.send("V1", "P", {"y": y}, at=s1, on_deliver=prover)
    rnd.sched.run()
    _report(adversary, rnd)
    recs = [r for r, _ in replies]
    return rnd.transcript(all(r.ok for r in recs), max_round_trip(recs))


def run_scheme_i(
    world: Optional[WorldLine] = None,
    seed: int = 0,
    N: int = 8,
    adversary=None,
    *,
    backend: str = "state",
    tolerance: float = DEFAULT_TOLERANCE,
    key: Optional[list[int]] = None,
) -> Transcript:
    """N classical rounds; P answers key bit k[4i + 2x_i + y_i] (i from 0)."""
    if N < 1:
        raise ValueError("scheme I needs at least one round")
    rnd = Round("i", seed, world, backend=backend, tolerance=tolerance)
    if key is None:
        key = [rnd.bit() for _ in range(4 * N)]
    if len(key) != 4 * N:
        raise ValueError("pre-shared key must have 4N bits")
    xs = [rnd.bit() for _ in range(N)]
    ys = [rnd.bit() for _ in range(N)]
    rnd.detail.update({"N": N})
    _bind(adversary, rnd)

    s0, s1 = _send_times(rnd)
    period = max(rnd.round_trip("V0"), rnd.round_trip("V1"))
    inbox: dict[int, dict] = {}
    replies = []
    for i in range(N):
        want = key[4 * i + 2 * xs[i] + ys[i]]
        r0 = rnd.expect_reply("V0", s0 + i * period, lambda p, want=want, i=i: p.get("round") == i and p.get("bit") == want, f"round {i}", match=lambda p, i=i: p.get("round") == i)
        r1 = rnd.expect_reply("V1", s1 + i * period, lambda p, i=i: p.get("round") == i, f"round {i}", match=lambda p, i=i: p.get("round") == i)
        replies.append((r0, r1))

    def prover(msg, now):
        i = msg.payload["round"]
        got = inbox.setdefault(i, {})
        got.update(msg.payload)
        if "x" in got and "y" in got:
            b = key[4 * i + 2 * got["x"] + got["y"]]
            rnd.net.send("P", "V0", {"round": i, "bit": b}, on_deliver=replies[i][0][1])
            rnd.net.send("P", "V1", {"round": i, "bit": b}, on_deliver=replies[i][1][1])

    for i in range(N):
        rnd.net.send("V0", "P", {"round": i, "x": xs[i]}, at=s0 + i * period, on_deliver=prover)
        rnd.net.send("V1", "P", {"round": i, "y": ys[i]}, at=s1 + i * period, on_deliver=prover)
    rnd.sched.run()
    _report(adversary, rnd)
    recs = [r for pair in replies for r, _ in pair]
    rnd.detail["rounds_passed"] = sum(a.ok and b.ok for (a, _), (b, _) in replies)
    return rnd.transcript(all(r.ok for r in recs), max_round_trip(recs))


def run_scheme_ii(
    world: Optional[WorldLine] = None,
    seed: int = 0,
    adversary=None,
    *,
    backend: str = "state",
    tolerance: float = DEFAULT_TOLERANCE,
) -> Transcript:
    """EPR variant of PV_BB84: V0 keeps half of beta_00 and measures it last."""
    rnd = Round("ii", seed, world, backend="state", tolerance=tolerance)
    y = rnd.bit()
    rnd.detail["y"] = y
    # which Bell state V0 prepares is not fixed by the protocol; beta_00 is used
    rnd.lab.prepare_pair("a", "b", "00", ("V0", "V0"))
    _bind(adversary, rnd)

    s0, s1 = _send_times(rnd)
    inbox: dict[str, dict] = {}
    v0_bit: dict[str, int] = {}

    def v0_validate(p):
        b = rnd.lab.measure("V0", "a", basis=y)
        rnd.sched.record("V0", "measure", {"qubit": "a", "basis": y, "bit": b})
        v0_bit["bit"] = b
        return p.get("bit") == b

    replies = [
        rnd.expect_reply("V0", s0, v0_validate),
        rnd.expect_reply("V1", s1, lambda p: "bit" in p),
    ]

    def prover(msg, now):
        inbox[msg.src] = msg.payload
        if len(inbox) < 2:
            return
        qref = inbox["V0"]["qubit"]
        b = rnd.lab.measure("P", qref.qid, basis=inbox["V1"]["y"])
        rnd.sched.record("P", "measure", {"qubit": qref.qid, "basis": inbox["V1"]["y"], "bit": b})
        rnd.detail["prover_bit"] = b
        rnd.net.send("P", "V0", {"bit": b}, on_deliver=replies[0][1])
        rnd.net.send("P", "V1", {"bit": b}, on_deliver=replies[1][1])

    rnd.net.send("V0", "P", {"qubit": QubitRef("b")}, at=s0, on_deliver=prover)
    rnd.net.send("V1", "P", {"y": y}, at=s1, on_deliver=prover)
    rnd.sched.run()
    rnd.detail["verifier_bit"] = v0_bit.get("bit")
    _report(adversary, rnd)
    recs = [r for r, _ in replies]
    return rnd.transcript(all(r.ok for r in recs), max_round_trip(recs))


def run_scheme_iii(
    world: Optional[WorldLine] = None,
    seed: int = 0,
    attacked: bool = False,
    adversary=None,
    *,
    backend: str = "state",
    tolerance: float = DEFAULT_TOLERANCE,
    forced: Optional[Mapping] = None,
) -> Transcript:
    """Entanglement-swapping check with the confirming BSM done by V0.

    Pairs (1,2) at V0 and (3,4) at V1 both start in 11. P swaps the qubits
    it receives; V1 ships qubit 4 to V0, whose BSM must repeat P's result.
    Branch keys for ``forced``: P's swap (e.g. ``"2,3"``), V0's check
    (``"1,4"``).
    """
    if attacked and adversary is None:
        from ..adversaries import scheme_iii_attack

        adversary = scheme_iii_attack()
    rnd = Round("iii", seed, world, backend=backend, tolerance=tolerance, forced=forced)
    lab = rnd.lab
    lab.prepare_pair(1, 2, "11", ("V0", "V0"))
    lab.prepare_pair(3, 4, "11", ("V1", "V1"))
    _bind(adversary, rnd)

    t0, t1 = _send_times(rnd)
    inbox: dict[str, dict] = {}
    arrivals: dict[str, float] = {}
    announced: dict[str, object] = {}
    result: dict[str, object] = {}

    def v0_final(msg, now):
        q = msg.payload["qubit"].qid
        m = rnd.bsm("V0", 1, q)
        result["v0_check"] = m
        result["T1"] = msg.payload["T1"]
        result["v1_label"] = msg.payload["label"]

    def v1_announce(msg, now):
        arrivals["V1"] = now
        announced["V1"] = msg.payload["label"]
        rnd.net.send("V1", "V0", {"qubit": QubitRef(4), "T1": now, "label": msg.payload["label"]}, on_deliver=v0_final)

    def v0_announce(msg, now):
        arrivals["V0"] = now
        announced["V0"] = msg.payload["label"]

    def prover(msg, now):
        inbox[msg.src] = msg.payload
        if len(inbox) < 2:
            return
        qa, qb = inbox["V0"]["qubit"].qid, inbox["V1"]["qubit"].qid
        m = rnd.bsm("P", qa, qb)
        rnd.detail["prover_label"] = m
        rnd.net.send("P", "V0", {"label": m}, on_deliver=v0_announce)
        rnd.net.send("P", "V1", {"label": m}, on_deliver=v1_announce)

    rnd.net.send("V0", "P", {"qubit": QubitRef(2)}, at=t0, on_deliver=prover)
    rnd.net.send("V1", "P", {"qubit": QubitRef(3)}, at=t1, on_deliver=prover)

    deadline = max(t0 + rnd.round_trip("V0"), t1 + rnd.round_trip("V1")) + 2 * rnd.world.d + rnd.tolerance
    verdict: dict[str, bool] = {}

    def verify(ev):
        ok_t0 = "V0" in arrivals and abs(arrivals["V0"] - t0 - rnd.round_trip("V0")) <= rnd.tolerance
        ok_t1 = "T1" in result and abs(result["T1"] - t1 - rnd.round_trip("V1")) <= rnd.tolerance
        consistent = (
            "v0_check" in result
            and result["v0_check"] == announced.get("V0")
            and result["v1_label"] == announced.get("V0")
        )
        verdict["ok"] = ok_t0 and ok_t1 and consistent
        ev.payload.update({"timing_ok": ok_t0 and ok_t1, "consistent": consistent, "ok": verdict["ok"]})

    rnd.sched.schedule(max(deadline, rnd.sched.now), "V0", "verify", {"check": "swap"}, verify)
    rnd.sched.run()
    rnd.detail["v0_check"] = result.get("v0_check")
    _report(adversary, rnd)
    trips = []
    if "V0" in arrivals:
        trips.append(arrivals["V0"] - t0)
    if "T1" in result:
        trips.append(result["T1"] - t1)
    return rnd.transcript(verdict.get("ok", False), max(trips) if trips else float("nan"))


def run_scheme_iv(
    world: Optional[WorldLine] = None,
    seed: int = 0,
    attacked: bool = False,
    adversary=None,
    *,
    backend: str = "state",
    tolerance: float = DEFAULT_TOLERANCE,
    forced: Optional[Mapping] = None,
    messages: Optional[tuple] = None,
) -> Transcript:
    """Superdense-coded challenges over pairs swapped into place by V0.

    (1,2) and (3,4) are shared V0-P in 00, (5,6) V0-V1 in 11. V0's BSM on
    (3,5) links P's qubit 4 with V1's qubit 6; V0 tells V1 (and, the channel
    being public, P) the outcome. Both verifiers then dense-code a 2-bit
    message and P answers with its two BSM results. Branch keys: ``"3,5"``
    and P's decoding BSMs (``"1,2"``, ``"4,6"``, or whatever qubits it holds).
    """
    if attacked and adversary is None:
        from ..adversaries import scheme_iv_attack

        adversary = scheme_iv_attack()
    d = WorldLine.canonical().d if world is None else world.d
    rnd = Round("iv", seed, world, backend=backend, tolerance=tolerance, forced=forced, start=-2.0 * d)
    lab = rnd.lab
    lab.prepare_pair(1, 2, "00", ("V0", "P"))
    lab.prepare_pair(3, 4, "00", ("V0", "P"))
    lab.prepare_pair(5, 6, "11", ("V0", "V1"))
    public = {"12": label("00"), "34": label("00"), "56": label("11")}
    _bind(adversary, rnd)

    if messages is None:
        messages = (rnd.two_bits(), rnd.two_bits())
    msg0, msg1 = label(messages[0]), label(messages[1])
    rnd.detail["messages"] = [msg0, msg1]

    m35 = rnd.bsm("V0", 3, 5)
    v0_knows_46 = public["34"] ^ public["56"] ^ m35
    known: dict[str, object] = {}

    def learn(party):
        def on(msg, now):
            known[party] = public["34"] ^ public["56"] ^ msg.payload["label"]
        return on

    t_ann = rnd.sched.now
    rnd.net.send("V0", "V1", {"announce": "3,5", "label": m35}, at=t_ann, on_deliver=learn("V1"))
    rnd.net.send("V0", "P", {"announce": "3,5", "label": m35}, at=t_ann, on_deliver=learn("P"))

    t0, t1 = _send_times(rnd)
    replies = [
        rnd.expect_reply("V0", t0, lambda p: p.get("bsm") is not None and label(p["bsm"]) ^ public["12"] == msg0),
        rnd.expect_reply("V1", t1, lambda p: p.get("bsm") is not None and "V1" in known and label(p["bsm"]) ^ known["V1"] == msg1),
    ]
    inbox: dict[str, dict] = {}

    def prover(msg, now):
        inbox[msg.src] = msg.payload
        if len(inbox) < 2:
            return
        l0 = rnd.bsm("P", inbox["V0"]["qubit"].qid, 2)
        l1 = rnd.bsm("P", 4, inbox["V1"]["qubit"].qid)
        rnd.detail["prover_labels"] = [l0, l1]
        rnd.detail["prover_decoded"] = [l0 ^ public["12"], l1 ^ known["P"] if "P" in known else None]
        rnd.net.send("P", "V0", {"bsm": l0}, on_deliver=replies[0][1])
        rnd.net.send("P", "V1", {"bsm": l1}, on_deliver=replies[1][1])

    def v0_encode(ev):
        lab.dense_encode("V0", 1, msg0)
        rnd.net.send("V0", "P", {"qubit": QubitRef(1)}, at=t0, on_deliver=prover)

    def v1_encode(ev):
        if "V1" not in known:
            ev.payload["skipped"] = "no announcement"
            return
        lab.dense_encode("V1", 6, msg1)
        rnd.net.send("V1", "P", {"qubit": QubitRef(6)}, at=t1, on_deliver=prover)

    # V1 can only encode once the announcement has reached it
    start = max(t0, t1, t_ann + transit_time(rnd.world, "V0", "V1"))
    rnd.sched.schedule(start, "V0", "encode", {"qubit": 1, "msg": msg0}, v0_encode)
    rnd.sched.schedule(start, "V1", "encode", {"qubit": 6, "msg": msg1}, v1_encode)
    rnd.sched.run()
    rnd.detail["pair_46"] = v0_knows_46
    _report(adversary, rnd)
    recs = [r for r, _ in replies]
    return rnd.transcript(all(r.ok for r in recs), max_round_trip(recs))
