"""Batch statistics over transcripts."""

from __future__ import annotations

import math
from collections import Counter
from typing import Hashable, Iterable, Optional, Sequence

from .quantum import label


def binomial_sigma(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


def mutual_information(xs: Sequence[Hashable], ys: Sequence[Hashable]) -> float:
    """Plug-in estimate of I(X;Y) in bits from paired samples."""
    if len(xs) != len(ys):
        raise ValueError("samples must be paired")
    n = len(xs)
    if n == 0:
        return 0.0
    joint = Counter(zip(xs, ys))
    px = Counter(xs)
    py = Counter(ys)
    total = 0.0
    for (x, y), c in joint.items():
        total += c * math.log2(c * n / (px[x] * py[y]))
    return max(0.0, total / n)


def mi_bias(n_x: int, n_y: int, n: int) -> float:
    """Leading-order upward bias of the plug-in estimate for independent X, Y."""
    return (n_x - 1) * (n_y - 1) / (2.0 * n * math.log(2))


def _observation(adv: dict, verifier: str) -> Optional[tuple]:
    reads = adv.get("reads")
    if reads is not None:
        mine = [(r["basis"], r["bit"]) for r in reads if r["from"] == verifier]
        return tuple(mine) if mine else None
    seen = adv.get("seen")
    if seen is not None:
        return tuple(sorted(str(label(s["label"])) for s in seen if "label" in s))
    return None


def key_information(transcripts: Iterable) -> dict:
    """What a tapping adversary learned about each verifier's challenge key.

    Pairs the adversary's per-round observation (the bases and bits it
    measured, or the public labels it read) with the key the verifier
    actually used that round.
    """
    samples: dict[str, tuple[list, list]] = {}
    for t in transcripts:
        adv = t.detail.get("adversary")
        keys = t.detail.get("challenge_keys")
        if not adv or not keys:
            continue
        for v, k in keys.items():
            obs = _observation(adv, v)
            if obs is None:
                continue
            xs, ys = samples.setdefault(v, ([], []))
            xs.append(obs)
            ys.append(str(label(k)))
    out = {}
    for v, (xs, ys) in sorted(samples.items()):
        out[v] = {
            "samples": len(xs),
            "mutual_information_bits": mutual_information(xs, ys),
            "bias_bits": mi_bias(len(set(xs)), len(set(ys)), len(xs)),
        }
    return out


def branch_counts(transcripts: Iterable) -> dict[str, dict[str, int]]:
    counts: dict[str, Counter] = {}
    for t in transcripts:
        for ev in t.events:
            if ev.kind != "bsm":
                continue
            qa, qb = ev.payload["qubits"]
            key = f"{ev.actor}:{qa},{qb}"
            counts.setdefault(key, Counter())[str(label(ev.payload["outcome"]))] += 1
    return {k: dict(sorted(c.items())) for k, c in sorted(counts.items())}


def stats(transcripts: Sequence) -> dict:
    """Acceptance and detection rates, timing, branch counts, adversary info."""
    transcripts = list(transcripts)
    if not transcripts:
        raise ValueError("stats needs at least one transcript")
    n = len(transcripts)
    accepted = sum(t.accepted for t in transcripts)
    detected = sum(t.detected_adversary for t in transcripts)
    elapsed = [t.elapsed for t in transcripts if not math.isnan(t.elapsed)]
    report = {
        "n": n,
        "acceptance_rate": accepted / n,
        "detection_rate": detected / n,
        "mean_elapsed": sum(elapsed) / len(elapsed) if elapsed else None,
        "branches": branch_counts(transcripts),
        "adversary": {},
    }
    ids = sorted({t.detail["adversary"]["id"] for t in transcripts if "adversary" in t.detail})
    if ids:
        report["adversary"] = {"id": ids[0] if len(ids) == 1 else ids, "spoof_rate": accepted / n}
        info = key_information(transcripts)
        if info:
            report["adversary"]["key_information"] = info
    return report
