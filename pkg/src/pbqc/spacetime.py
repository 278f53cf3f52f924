"""1-D geometry, light-speed channels and a deterministic event scheduler.

Units: c = 1, coordinates in light-seconds, times in seconds. Honest parties
and adversaries both process instantly.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

C = 1.0
DEFAULT_TOLERANCE = 1e-6

EVENT_KINDS = frozenset(
    {"send", "deliver", "intercept", "jam", "bsm", "measure", "encode", "announce", "verify"}
)


class GeometryError(ValueError):
    pass


class CausalityError(RuntimeError):
    pass


@dataclass
class WorldLine:
    """Party coordinates on a line, clocks synchronized (skew fixed at 0)."""

    positions: dict[str, float]
    clock_skew: float = 0.0

    @classmethod
    def canonical(cls, d: float = 1.0) -> "WorldLine":
        """V0 at 0, P at d, V1 at 2d."""
        if d <= 0:
            raise GeometryError("distance must be positive")
        return cls({"V0": 0.0, "P": d, "V1": 2.0 * d})

    def x(self, party: str) -> float:
        try:
            return self.positions[party]
        except KeyError:
            raise GeometryError(f"party {party!r} is not placed") from None

    def place(self, party: str, coord: float) -> None:
        self.positions[party] = float(coord)

    @property
    def d(self) -> float:
        """Prover-to-V0 distance."""
        return abs(self.x("P") - self.x("V0"))

    def check_prover_between(self) -> None:
        lo, hi = sorted((self.x("V0"), self.x("V1")))
        if not lo < self.x("P") < hi:
            raise GeometryError("prover must lie strictly between the verifiers")


def transit_time(world: WorldLine, a: str, b: str) -> float:
    return abs(world.x(a) - world.x(b)) / C


def verify_timing(expected: float, observed: float, tol: float = DEFAULT_TOLERANCE) -> bool:
    if tol < 0:
        raise ValueError("tolerance must be non-negative")
    return abs(expected - observed) <= tol


@dataclass
class Event:
    time: float
    actor: str
    kind: str
    payload: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"t": self.time, "actor": self.actor, "kind": self.kind, "payload": jsonable(self.payload)}


def jsonable(obj: Any) -> Any:
    """Plain-JSON view of event payloads."""
    if hasattr(obj, "to_json"):
        return obj.to_json()
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, tuple) and hasattr(obj, "_fields"):
        return str(obj)
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, float) or isinstance(obj, (int, str, bool)) or obj is None:
        return obj
    if hasattr(obj, "item"):
        return obj.item()
    return str(obj)


class Scheduler:
    """Min-heap of pending events.

    At equal times deliveries go first, so whatever arrives at t is
    available to local actions at t. Remaining ties go to the earliest
    scheduled.
    """

    def __init__(self, start: float = 0.0) -> None:
        self.now = start
        self.log: list[Event] = []
        self._heap: list[tuple[float, int, int, Event, Optional[Callable[[Event], None]]]] = []
        self._seq = 0

    def schedule(
        self,
        time: float,
        actor: str,
        kind: str,
        payload: Optional[dict] = None,
        action: Optional[Callable[[Event], None]] = None,
    ) -> Event:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        if time < self.now - 1e-12:
            raise CausalityError(f"event at {time} scheduled in the past (now={self.now})")
        ev = Event(time, actor, kind, payload or {})
        heapq.heappush(self._heap, (time, 0 if kind == "deliver" else 1, self._seq, ev, action))
        self._seq += 1
        return ev

    def record(self, actor: str, kind: str, payload: Optional[dict] = None) -> Event:
        """Log an instantaneous local action at the current time."""
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        ev = Event(self.now, actor, kind, payload or {})
        self.log.append(ev)
        return ev

    def advance_to(self, time: float) -> None:
        if self._heap and self._heap[0][0] < time:
            raise CausalityError("cannot skip over pending events")
        if time < self.now:
            raise CausalityError("clock cannot run backwards")
        self.now = time

    def run(self) -> None:
        while self._heap:
            time, _, _, ev, action = heapq.heappop(self._heap)
            self.now = time
            self.log.append(ev)
            if action is not None:
                action(ev)

    def pending(self) -> int:
        return len(self._heap)


@dataclass
class Message:
    src: str
    dst: str
    payload: dict
    sent_at: float
    msg_id: int


class _Jam:
    def __repr__(self) -> str:
        return "JAM"


JAM = _Jam()

# handler(message, now) -> payload to pass on (same object forwards, a new one
# replaces) or JAM
TapHandler = Callable[[Message, float], Any]


@dataclass
class Tap:
    actor: str
    coord: float
    handler: TapHandler


@dataclass
class Channel:
    endpoints: tuple[str, str]
    taps: list[Tap] = field(default_factory=list)


class Network:
    """Untrusted channels between placed parties.

    Every channel carries qubits and classical data at speed c. Taps sit at a
    coordinate strictly between the endpoints and see traffic in both
    directions, in the order a signal would reach them.
    """

    def __init__(
        self,
        world: WorldLine,
        sched: Scheduler,
        possession: Optional[Callable[[dict, str], None]] = None,
        holds: Optional[Callable[[dict, str], None]] = None,
    ):
        self.world = world
        self.sched = sched
        self.channels: dict[frozenset, Channel] = {}
        self.listeners: dict[str, list[Callable[[Message, float], None]]] = {}
        self._possession = possession
        self._holds = holds
        self._next_id = 0

    def listen(self, actor: str, fn: Callable[[Message, float], None]) -> None:
        """Receive messages addressed to ``actor`` that carry no callback of their own."""
        self.listeners.setdefault(actor, []).append(fn)

    def channel(self, a: str, b: str) -> Channel:
        key = frozenset((a, b))
        if key not in self.channels:
            self.channels[key] = Channel((a, b))
        return self.channels[key]

    def add_tap(self, a: str, b: str, actor: str, handler: TapHandler, coord: Optional[float] = None) -> Tap:
        xa, xb = self.world.x(a), self.world.x(b)
        if coord is None:
            coord = (xa + xb) / 2.0
        lo, hi = sorted((xa, xb))
        if not lo < coord < hi:
            raise GeometryError(f"tap at {coord} is not strictly between {a} and {b}")
        tap = Tap(actor, float(coord), handler)
        self.channel(a, b).taps.append(tap)
        return tap

    def _check_holds(self, payload: dict, actor: str) -> None:
        if self._holds is not None:
            self._holds(payload, actor)

    def _hand_over(self, payload: dict, owner: str) -> None:
        if self._possession is not None:
            self._possession(payload, owner)

    def send(
        self,
        src: str,
        dst: str,
        payload: dict,
        at: Optional[float] = None,
        on_deliver: Optional[Callable[[Message, float], None]] = None,
    ) -> Message:
        """Transmit ``payload``; delivery is at ``at + |x_src - x_dst|``."""
        at = self.sched.now if at is None else at
        msg = Message(src, dst, payload, at, self._next_id)
        self._next_id += 1
        x0 = self.world.x(src)
        taps = sorted(self.channel(src, dst).taps, key=lambda t: abs(t.coord - x0))
        arrival = at + transit_time(self.world, src, dst)

        def deliver(ev: Event) -> None:
            self._hand_over(msg.payload, dst)
            if on_deliver is not None:
                on_deliver(msg, ev.time)
            else:
                for fn in self.listeners.get(dst, ()):
                    fn(msg, ev.time)

        def hop(k: int) -> None:
            if k == len(taps):
                self.sched.schedule(arrival, dst, "deliver", {"from": src, "id": msg.msg_id, **msg.payload}, deliver)
                return
            tap = taps[k]

            def intercept(ev: Event) -> None:
                self._hand_over(msg.payload, tap.actor)
                result = tap.handler(msg, ev.time)
                if result is JAM:
                    self.sched.record(tap.actor, "jam", {"id": msg.msg_id})
                    return
                if result is not msg.payload:
                    self._check_holds(result, tap.actor)
                    self.sched.record(tap.actor, "send", {"to": dst, "id": msg.msg_id, "replaces": True, **result})
                    msg.payload = result
                self._hand_over(msg.payload, "in-flight")
                hop(k + 1)

            t_tap = at + abs(tap.coord - x0) / C
            self.sched.schedule(t_tap, tap.actor, "intercept", {"from": src, "to": dst, "id": msg.msg_id}, intercept)

        def launch(ev: Event) -> None:
            self._check_holds(msg.payload, src)
            self._hand_over(msg.payload, "in-flight")

        self.sched.schedule(at, src, "send", {"to": dst, "id": msg.msg_id, **payload}, launch)
        hop(0)
        return msg


def round_trip_ok(world: WorldLine, verifier: str, sent: float, received: Optional[float], tol: float) -> bool:
    if received is None or math.isnan(received):
        return False
    return verify_timing(2.0 * transit_time(world, verifier, "P"), received - sent, tol)
