"""Shared round machinery: context, transcripts, reply bookkeeping."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Mapping, Optional

import numpy as np

from ..lab import Lab
from ..quantum import BellLabel, LabelLike, label
from ..spacetime import DEFAULT_TOLERANCE, Event, Network, Scheduler, WorldLine, jsonable, transit_time, verify_timing

TRANSCRIPT_VERSION = 1

SCHEMES = ("pv-bb84", "i", "ii", "iii", "iv", "a", "b")


@dataclass
class Transcript:
    scheme: str
    seed: int
    events: list[Event]
    accepted: bool
    detected_adversary: bool
    elapsed: float
    round_keys: Optional[dict] = None
    detail: dict = field(default_factory=dict)

    def outcome(self) -> dict:
        out = {
            "accepted": self.accepted,
            "detected_adversary": self.detected_adversary,
            "elapsed": self.elapsed,
        }
        if self.round_keys is not None:
            out["round_keys"] = self.round_keys
        return out

    def to_dict(self) -> dict:
        return {
            "v": TRANSCRIPT_VERSION,
            "scheme": self.scheme,
            "seed": self.seed,
            "events": [ev.to_dict() for ev in self.events],
            "outcome": jsonable(self.outcome()),
            "detail": jsonable(self.detail),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def parse_forced(forced: Optional[Mapping]) -> dict[frozenset, BellLabel]:
    """Forced Bell outcomes keyed by the measured qubit pair, in any order.

    Keys may be ``"1,2"`` strings or 2-tuples.
    """
    out: dict[frozenset, BellLabel] = {}
    for key, value in (forced or {}).items():
        if isinstance(key, str):
            parts = [p.strip() for p in key.split(",")]
            qids = frozenset(int(p) if p.lstrip("-").isdigit() else p for p in parts)
        else:
            qids = frozenset(key)
        if len(qids) != 2:
            raise ValueError(f"forced branch key {key!r} must name two qubits")
        out[qids] = label(value)
    return out


@dataclass
class Reply:
    verifier: str
    sent_at: float
    arrived_at: Optional[float] = None
    payload: Optional[dict] = None
    timing_ok: bool = False
    valid: bool = False

    @property
    def ok(self) -> bool:
        return self.timing_ok and self.valid

    @property
    def round_trip(self) -> Optional[float]:
        return None if self.arrived_at is None else self.arrived_at - self.sent_at


class Round:
    """Everything one protocol round owns: clock, network, lab, PRNG."""

    def __init__(
        self,
        scheme: str,
        seed: int,
        world: Optional[WorldLine] = None,
        *,
        backend: str = "state",
        tolerance: float = DEFAULT_TOLERANCE,
        forced: Optional[Mapping] = None,
        start: float = 0.0,
    ) -> None:
        self.scheme = scheme
        self.seed = int(seed)
        base = world if world is not None else WorldLine.canonical()
        self.world = WorldLine(dict(base.positions))
        self.world.check_prover_between()
        self.rng = np.random.default_rng(self.seed)
        self.sched = Scheduler(start)
        self.lab = Lab(self.rng, backend)
        self.net = Network(self.world, self.sched, possession=self.lab.transfer, holds=self.lab.check_payload)
        self.tolerance = tolerance
        self.forced = parse_forced(forced)
        self.detail: dict[str, Any] = {}

    @property
    def d(self) -> float:
        return self.world.d

    def bit(self) -> int:
        return int(self.rng.integers(2))

    def two_bits(self) -> BellLabel:
        return label(int(self.rng.integers(4)))

    def bsm(self, actor: str, qa: Hashable, qb: Hashable) -> BellLabel:
        m = self.lab.bsm(actor, qa, qb, self.forced.get(frozenset((qa, qb))))
        self.sched.record(actor, "bsm", {"qubits": [qa, qb], "outcome": m})
        return m

    def round_trip(self, verifier: str) -> float:
        return 2.0 * transit_time(self.world, verifier, "P")

    def expect_reply(
        self,
        verifier: str,
        sent_at: float,
        validate: Callable[[dict], bool],
        tag: str = "",
        match: Optional[Callable[[dict], bool]] = None,
    ) -> tuple[Reply, Callable]:
        """Track one challenge/response leg.

        Returns the Reply record and the ``on_deliver`` callback to attach to
        the response message. A verify event fires at the deadline whether or
        not anything arrived, so jamming shows up as a timeout. With ``match``
        the verifier also takes matching messages that arrive without a
        callback, i.e. ones injected by a third party.
        """
        reply = Reply(verifier, sent_at)
        expected = self.round_trip(verifier)

        def on_deliver(msg, now):
            if reply.arrived_at is None:
                reply.arrived_at = now
                reply.payload = msg.payload

        if match is not None:
            self.net.listen(verifier, lambda msg, now: on_deliver(msg, now) if match(msg.payload) else None)

        def check(ev: Event) -> None:
            if reply.arrived_at is None:
                ev.payload.update({"ok": False, "reason": "timeout"})
                return
            reply.timing_ok = verify_timing(expected, reply.arrived_at - sent_at, self.tolerance)
            reply.valid = bool(validate(reply.payload))
            ev.payload.update({"ok": reply.ok, "timing_ok": reply.timing_ok, "valid": reply.valid})

        deadline = sent_at + expected + self.tolerance
        self.sched.schedule(deadline, verifier, "verify", {"check": tag or "reply"}, check)
        return reply, on_deliver

    def transcript(self, accepted: bool, elapsed: float, round_keys: Optional[dict] = None, detected: Optional[bool] = None) -> Transcript:
        return Transcript(
            scheme=self.scheme,
            seed=self.seed,
            events=list(self.sched.log),
            accepted=accepted,
            detected_adversary=(not accepted) if detected is None else detected,
            elapsed=elapsed,
            round_keys=round_keys,
            detail=self.detail,
        )


def max_round_trip(replies) -> float:
    trips = [r.round_trip for r in replies if r.round_trip is not None]
    return max(trips) if trips else float("nan")
