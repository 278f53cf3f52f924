"""Schemes A and B: position checks over untrusted channels.

Both schemes turn publicly labeled Bell pairs into 2-bit secrets that only
the prover and one verifier can compute, then challenge the prover with a
message keyed by that secret. Round keys:

* ``v``: the verifier's own private BSM outcome,
* ``p``: the prover's BSM outcome the verifier can compute (the message key).

In scheme A the prover learns only ``p``; in scheme B both sides learn both.
"""

from __future__ import annotations

from typing import Mapping, Optional

from ..bell import infer_hidden, swap_label
from ..lab import QubitRef
from ..quantum import label
from ..spacetime import DEFAULT_TOLERANCE, WorldLine, transit_time
from .base import Round, Transcript, max_round_trip
from .keyed import read_keyed, send_keyed
from .legacy import _bind, _report, _send_times

SCHEME_A_PAIRS = {
    (2, 5): ("01", ("V0", "P")),
    (3, 7): ("01", ("V0", "P")),
    (1, 9): ("11", ("V0", "V1")),
    (4, 12): ("11", ("V0", "V1")),
    (6, 10): ("01", ("P", "V1")),
    (8, 11): ("01", ("P", "V1")),
}

SCHEME_B_PAIRS = {
    (1, 2): ("11", ("V0", "V0")),
    (3, 4): ("01", ("V0", "P")),
    (5, 6): ("00", ("P", "P")),
    (7, 8): ("00", ("P", "P")),
    (9, 10): ("01", ("P", "V1")),
    (11, 12): ("11", ("V1", "V1")),
}

# chain of public pair labels from each verifier's endpoint to P's
CHAIN_V0 = ("11", "01", "00")  # (1,2), (3,4), (5,6)
CHAIN_V1 = ("00", "01", "11")  # (7,8), (9,10), (11,12)


def _prepare(rnd: Round, inventory) -> dict:
    public = {}
    for (q1, q2), (lbl, owners) in inventory.items():
        rnd.lab.prepare_pair(q1, q2, lbl, owners)
        public[(q1, q2)] = label(lbl)
    return public


def _messages(rnd: Round, messages) -> tuple:
    if messages is None:
        return rnd.two_bits(), rnd.two_bits()
    return label(messages[0]), label(messages[1])


def _qids(prefix: str, who: str) -> list[str]:
    return [f"{prefix}{who}.{i}" for i in range(2)]


def run_scheme_a(
    world: Optional[WorldLine] = None,
    seed: int = 0,
    adversary=None,
    *,
    backend: str = "state",
    tolerance: float = DEFAULT_TOLERANCE,
    forced: Optional[Mapping] = None,
    messages: Optional[tuple] = None,
) -> Transcript:
    """One round of scheme A.

    Setup BSMs happen at t = -2d so that the public announcements have
    crossed the line by t = 0, when the keyed challenges leave. Branch keys
    for ``forced``: ``"1,2"``, ``"11,12"`` (private), ``"3,4"``, ``"9,10"``
    (announced), ``"5,6"``, ``"7,8"`` (prover).
    """
    d = WorldLine.canonical().d if world is None else world.d
    rnd = Round("a", seed, world, backend=backend, tolerance=tolerance, forced=forced, start=-2.0 * d)
    public = _prepare(rnd, SCHEME_A_PAIRS)
    _bind(adversary, rnd)
    msg0, msg1 = _messages(rnd, messages)
    rnd.detail["messages"] = [msg0, msg1]

    v0_private = rnd.bsm("V0", 1, 2)  # (5,9)
    v1_private = rnd.bsm("V1", 11, 12)  # (4,8)
    v0_public = rnd.bsm("V0", 3, 4)  # (7,8)
    v1_public = rnd.bsm("V1", 9, 10)  # (5,6)

    heard: dict[str, object] = {}

    def hear(who):
        def on(msg, now):
            heard[who] = msg.payload["label"]
        return on

    t_ann = rnd.sched.now
    for src, dst, qubits, lbl in (
        ("V0", "V1", "3,4", v0_public),
        ("V0", "P", "3,4", v0_public),
        ("V1", "V0", "9,10", v1_public),
        ("V1", "P", "9,10", v1_public),
    ):
        rnd.net.send(src, dst, {"announce": qubits, "label": lbl}, at=t_ann, on_deliver=hear(dst) if dst != "P" else None)
        rnd.sched.record(src, "announce", {"qubits": qubits, "label": lbl, "to": dst})

    t0, t1 = _send_times(rnd)
    ready = max(t0, t1, t_ann + transit_time(rnd.world, "V0", "V1"))
    keys: dict[str, object] = {}
    prover_keys: dict[str, object] = {}
    replies: dict[str, tuple] = {}

    def prover_answers(verifier, pair, msg, now):
        k = rnd.bsm("P", *pair)
        prover_keys[verifier] = k
        got = read_keyed(rnd.lab, "P", [r.qid for r in msg.payload["qubits"]], k)
        rnd.sched.record("P", "measure", {"from": verifier, "decoded": got})
        echo = _qids("e", verifier)
        send_keyed(rnd.lab, "P", echo, got, k)
        rnd.net.send("P", verifier, {"qubits": [QubitRef(q) for q in echo]}, on_deliver=replies[verifier][1])

    def challenge(verifier, sent_at, msg, pair):
        def fire(ev):
            if verifier == "V0":
                if "V0" not in heard:
                    ev.payload["skipped"] = "no announcement"
                    return
                k59 = swap_label(public[(1, 9)], public[(2, 5)], v0_private)
                key = swap_label(k59, public[(6, 10)], heard["V0"])
            else:
                if "V1" not in heard:
                    ev.payload["skipped"] = "no announcement"
                    return
                k48 = swap_label(public[(4, 12)], public[(8, 11)], v1_private)
                key = swap_label(public[(3, 7)], k48, heard["V1"])
            keys[verifier] = key
            qids = _qids("m", verifier)
            send_keyed(rnd.lab, verifier, qids, msg, key)

            def validate(p):
                got = read_keyed(rnd.lab, verifier, [r.qid for r in p["qubits"]], key)
                return got == msg

            replies[verifier] = rnd.expect_reply(verifier, sent_at, validate, "echo")
            rnd.net.send(
                verifier,
                "P",
                {"qubits": [QubitRef(q) for q in qids]},
                at=sent_at,
                on_deliver=lambda m, now: prover_answers(verifier, pair, m, now),
            )

        return fire

    rnd.sched.schedule(ready, "V0", "encode", {"key_from": "5,6"}, challenge("V0", max(t0, ready), msg0, (5, 6)))
    rnd.sched.schedule(ready, "V1", "encode", {"key_from": "7,8"}, challenge("V1", max(t1, ready), msg1, (7, 8)))
    rnd.sched.run()

    recs = [r for r, _ in replies.values()]
    accepted = len(recs) == 2 and all(r.ok for r in recs)
    rnd.detail["challenge_keys"] = dict(keys)
    rnd.detail["keys_agree"] = {v: keys.get(v) == prover_keys.get(v) for v in ("V0", "V1")}
    _report(adversary, rnd)
    round_keys = None
    if accepted:
        round_keys = {
            "verifier": {
                "V0": {"v": v0_private, "p": keys["V0"]},
                "V1": {"v": v1_private, "p": keys["V1"]},
            },
            "prover": {"V0": {"p": prover_keys["V0"]}, "V1": {"p": prover_keys["V1"]}},
        }
    return rnd.transcript(accepted, max_round_trip(recs), round_keys)


def run_scheme_b(
    world: Optional[WorldLine] = None,
    seed: int = 0,
    adversary=None,
    *,
    backend: str = "state",
    tolerance: float = DEFAULT_TOLERANCE,
    forced: Optional[Mapping] = None,
    messages: Optional[tuple] = None,
) -> Transcript:
    """One round of scheme B, verified twice.

    Stage 4: P's announced swap results must come back in time, and each
    verifier's inference of P's hidden outcome must agree with it. Stage 7:
    a keyed challenge must be echoed correctly and in time. Stage 7 only
    runs after stage 4 passed. Branch keys: ``"2,3"``, ``"4,6"``, ``"8,9"``,
    ``"10,12"`` (step 2), ``"1,5"``, ``"7,11"`` (P's announced results).
    """
    rnd = Round("b", seed, world, backend=backend, tolerance=tolerance, forced=forced)
    _prepare(rnd, SCHEME_B_PAIRS)
    _bind(adversary, rnd)
    msg0, msg1 = _messages(rnd, messages)
    rnd.detail["messages"] = [msg0, msg1]

    own = {
        "V0": rnd.bsm("V0", 2, 3),
        "P0": rnd.bsm("P", 4, 6),
        "P1": rnd.bsm("P", 8, 9),
        "V1": rnd.bsm("V1", 10, 12),
    }
    chain = {"V0": CHAIN_V0, "V1": CHAIN_V1}
    hidden_p = {"V0": own["P0"], "V1": own["P1"]}
    t0, t1 = _send_times(rnd)

    stage4: dict[str, tuple] = {}
    stage7: dict[str, tuple] = {}
    inferred_by_v: dict[str, object] = {}
    inferred_by_p: dict[str, object] = {}
    consistent: dict[str, bool] = {}
    prover_msgs: dict[str, object] = {}

    def prover_echo(verifier, msg, now):
        k = hidden_p[verifier]
        got = read_keyed(rnd.lab, "P", [r.qid for r in msg.payload["qubits"]], k)
        prover_msgs[verifier] = got
        rnd.sched.record("P", "measure", {"from": verifier, "decoded": got})
        echo = _qids("e", verifier)
        send_keyed(rnd.lab, "P", echo, got, k)
        rnd.net.send("P", verifier, {"qubits": [QubitRef(q) for q in echo]}, on_deliver=stage7[verifier][1])

    def on_announcement(verifier, msg_plain):
        deliver_stage4 = stage4[verifier][1]

        def on(msg, now):
            deliver_stage4(msg, now)
            a = label(msg.payload["bsm"])
            guess = infer_hidden(chain[verifier], [own[verifier]], a)
            inferred_by_v[verifier] = guess
            ok = guess == hidden_p[verifier]
            consistent[verifier] = ok
            timely = abs(now - stage4[verifier][0].sent_at - rnd.round_trip(verifier)) <= rnd.tolerance
            rnd.sched.record(verifier, "verify", {"stage": 4, "inferred": guess, "consistent": ok, "timing_ok": timely})
            if not (ok and timely):
                return
            qids = _qids("m", verifier)
            send_keyed(rnd.lab, verifier, qids, msg_plain, guess)
            stage7[verifier] = rnd.expect_reply(
                verifier,
                now,
                lambda p: read_keyed(rnd.lab, verifier, [r.qid for r in p["qubits"]], guess) == msg_plain,
                "stage 7",
            )
            rnd.net.send(verifier, "P", {"qubits": [QubitRef(q) for q in qids]}, on_deliver=lambda m, t: prover_echo(verifier, m, t))

        return on

    inbox: dict[str, QubitRef] = {}

    def prover(msg, now):
        if "qubit" not in msg.payload:
            return
        inbox[msg.src] = msg.payload["qubit"]
        if len(inbox) < 2:
            return
        a0 = rnd.bsm("P", inbox["V0"].qid, 5)
        a1 = rnd.bsm("P", 7, inbox["V1"].qid)
        inferred_by_p["V0"] = infer_hidden(CHAIN_V0, [own["P0"]], a0)
        inferred_by_p["V1"] = infer_hidden(CHAIN_V1, [own["P1"]], a1)
        rnd.detail["announced"] = [a0, a1]
        rnd.net.send("P", "V0", {"bsm": a0}, on_deliver=on_announcement("V0", msg0))
        rnd.net.send("P", "V1", {"bsm": a1}, on_deliver=on_announcement("V1", msg1))

    stage4["V0"] = rnd.expect_reply("V0", t0, lambda p: consistent.get("V0", False), "stage 4")
    stage4["V1"] = rnd.expect_reply("V1", t1, lambda p: consistent.get("V1", False), "stage 4")
    rnd.net.send("V0", "P", {"qubit": QubitRef(1)}, at=t0, on_deliver=prover)
    rnd.net.send("V1", "P", {"qubit": QubitRef(11)}, at=t1, on_deliver=prover)
    rnd.sched.run()

    s4 = [stage4[v][0] for v in ("V0", "V1")]
    s7 = [stage7[v][0] for v in ("V0", "V1") if v in stage7]
    stage4_ok = all(r.ok for r in s4)
    stage7_ok = stage4_ok and len(s7) == 2 and all(r.ok for r in s7)
    rnd.detail.update(
        {
            "own": dict(own),
            "inferred_by_verifier": dict(inferred_by_v),
            "inferred_by_prover": dict(inferred_by_p),
            "stage4_ok": stage4_ok,
            "stage7_ok": stage7_ok,
            "stage4_detected": {v: not consistent.get(v, False) for v in ("V0", "V1")},
        }
    )
    _report(adversary, rnd)
    round_keys = None
    if stage7_ok:
        round_keys = {
            "verifier": {
                "V0": {"v": own["V0"], "p": inferred_by_v["V0"]},
                "V1": {"v": own["V1"], "p": inferred_by_v["V1"]},
            },
            "prover": {
                "V0": {"v": inferred_by_p["V0"], "p": own["P0"]},
                "V1": {"v": inferred_by_p["V1"], "p": own["P1"]},
            },
        }
    return rnd.transcript(stage7_ok, max_round_trip(s4 + s7), round_keys)
