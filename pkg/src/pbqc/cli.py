"""Command-line runner.

    pbqc run --scheme a --rounds 10 --seed 7
    pbqc run --scheme iii --adversary scheme-iii-attack --trials 1000
    pbqc run --emit-table

Transcripts go to stdout (or --out) as JSON lines; the summary goes to
stderr. Exit codes: 0 when the declared expectation holds, 1 when it does
not, 2 for usage or config errors, 3 when an internal invariant breaks.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Iterator, Optional, TextIO

import numpy as np

from . import keyauth
from .adversaries import STRATEGIES, make_adversary
from .bell import RegistryError, render_table
from .config import ConfigError, ScenarioConfig
from .lab import OwnershipError
from .protocols import RUNNERS, SCHEMES, TRANSCRIPT_VERSION, Transcript
from .quantum import MAX_QUBITS, BranchError, CapacityError
from .spacetime import CausalityError, jsonable
from .stats import stats

SEED_ENV = "PBQC_SEED"

EXIT_OK, EXIT_EXPECTATION, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3

INTERNAL_ERRORS = (OwnershipError, CausalityError, BranchError, RegistryError, CapacityError, AssertionError)


def derive_seed(master: int, *path: int) -> int:
    """64-bit seed for one trial/round, independent of how many others run."""
    ss = np.random.SeedSequence(master, spawn_key=tuple(path))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class TrialResult:
    index: int
    transcripts: list[Transcript]
    keys: Optional[dict] = None
    auth: Optional[dict] = None

    @property
    def accepted(self) -> bool:
        return all(t.accepted for t in self.transcripts)

    @property
    def detected(self) -> bool:
        return any(t.detected_adversary for t in self.transcripts)


@dataclass
class BatchResult:
    config: ScenarioConfig
    trials: list[TrialResult] = field(default_factory=list)

    @property
    def transcripts(self) -> list[Transcript]:
        return [t for trial in self.trials for t in trial.transcripts]

    def expectation_met(self) -> bool:
        want = self.config.expectation()
        if want == "accept":
            return all(t.accepted for t in self.trials)
        if want == "detect":
            return all(t.detected for t in self.trials)
        return True


def _run_one(cfg: ScenarioConfig, seed: int) -> Transcript:
    kwargs = dict(
        world=cfg.world(),
        seed=seed,
        adversary=make_adversary(cfg.adversary),
        backend=cfg.backend,
        tolerance=cfg.timing_tolerance,
    )
    if cfg.scheme == "i":
        kwargs["N"] = cfg.rounds
    return RUNNERS[cfg.scheme](**kwargs)


def _authenticate(cfg: ScenarioConfig, trial: int, prover_keys: dict, verifier_keys: dict) -> dict:
    """Authenticate a random 2N-bit message from P to each verifier with K_P.

    Qubits are independent, so long keys are processed in blocks.
    """
    out = {}
    for i, v in enumerate(("V0", "V1")):
        rng = np.random.default_rng(derive_seed(cfg.seed, trial, cfg.rounds, i))
        kp, kv = prover_keys[v].K_P, verifier_keys[v].K_P
        message = [int(b) for b in rng.integers(0, 2, size=len(kp))]
        decoded: list[int] = []
        for lo in range(0, len(kp), MAX_QUBITS):
            block = slice(lo, lo + MAX_QUBITS)
            session = keyauth.AuthSession.random(rng, len(message[block]), cfg.auth.z_P, cfg.auth.z_V, key=kp[block], message=message[block])
            decoded.extend(keyauth.run_auth(session, rng, verifier_key=kv[block]))
        out[v] = {"bits": len(kp), "decoded_ok": decoded == message}
    return out


def run_batch(cfg: ScenarioConfig) -> BatchResult:
    cfg.validate()
    result = BatchResult(cfg)
    per_trial = 1 if cfg.scheme == "i" else cfg.rounds
    for trial in range(cfg.trials):
        transcripts = [_run_one(cfg, derive_seed(cfg.seed, trial, r)) for r in range(per_trial)]
        tr = TrialResult(trial, transcripts)
        if cfg.scheme in ("a", "b") and tr.accepted:
            verifier = keyauth.accumulate_keys(transcripts, "verifier")
            prover = keyauth.accumulate_keys(transcripts, "prover")
            tr.keys = {"verifier": {v: k.hex() for v, k in verifier.items()}, "prover": {v: k.hex() for v, k in prover.items()}}
            if cfg.auth.enabled:
                tr.auth = _authenticate(cfg, trial, prover, verifier)
        result.trials.append(tr)
    return result


def records(result: BatchResult) -> Iterator[dict]:
    for trial in result.trials:
        for r, t in enumerate(trial.transcripts):
            yield {"record": "transcript", "trial": trial.index, "round": r, **t.to_dict()}
        if trial.keys is not None:
            rec = {"v": TRANSCRIPT_VERSION, "record": "keys", "trial": trial.index, **trial.keys}
            if trial.auth is not None:
                rec["auth"] = trial.auth
            yield rec


def write_stream(result: BatchResult, out: TextIO) -> None:
    for rec in records(result):
        out.write(json.dumps(jsonable(rec), sort_keys=True, separators=(",", ":")))
        out.write("\n")


def summary_line(result: BatchResult) -> str:
    cfg = result.config
    rep = stats(result.transcripts)
    trials = result.trials
    parts = [
        f"scheme={cfg.scheme}",
        f"adversary={cfg.adversary}",
        f"trials={len(trials)}",
        f"rounds={cfg.rounds}",
        f"transcripts={rep['n']}",
        f"acceptance={rep['acceptance_rate']:.3f}",
        f"detection={rep['detection_rate']:.3f}",
        f"trial_acceptance={sum(t.accepted for t in trials) / len(trials):.3f}",
        f"trial_detection={sum(t.detected for t in trials) / len(trials):.3f}",
    ]
    if rep["mean_elapsed"] is not None:
        parts.append(f"mean_elapsed={rep['mean_elapsed']:.6f}")
    if rep["adversary"]:
        parts.append(f"spoof-rate={rep['adversary']['spoof_rate']:.3f}")
        for v, info in rep["adversary"].get("key_information", {}).items():
            parts.append(f"mi_{v}={info['mutual_information_bits']:.4f}")
    auth = [a for t in trials if t.auth for a in t.auth.values()]
    if auth:
        parts.append(f"auth_ok={sum(a['decoded_ok'] for a in auth)}/{len(auth)}")
    parts.append(f"expectation={cfg.expectation()}:{'met' if result.expectation_met() else 'FAILED'}")
    return " ".join(parts)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pbqc", description="Position-based quantum cryptography simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario and stream transcripts")
    run.add_argument("--scheme", choices=SCHEMES)
    run.add_argument("--adversary", choices=sorted(STRATEGIES), help="strategy id, or 'none'")
    run.add_argument("--rounds", type=int, help="successive rounds per trial")
    run.add_argument("--trials", type=int, help="independent repetitions")
    run.add_argument("--seed", type=int, help=f"master seed (default: ${SEED_ENV} or 0)")
    run.add_argument("--d", type=float, help="prover-verifier distance in light-seconds")
    run.add_argument("--tolerance", type=float, help="timing tolerance in seconds")
    run.add_argument("--backend", choices=("state", "labels"))
    run.add_argument("--expect", choices=("auto", "accept", "detect", "any"))
    run.add_argument("--auth-z", type=int, metavar="Z", help="authenticate with z_P=Z, z_V=Z+1 after key accumulation")
    run.add_argument("--config", help="JSON scenario file; flags override it")
    run.add_argument("--out", help="write the stream here instead of stdout")
    run.add_argument("--emit-table", action="store_true", help="print the 64-case swap table and exit")
    run.add_argument("--quiet", action="store_true", help="no summary on stderr")
    return parser


def config_from_args(args: argparse.Namespace, environ=os.environ) -> ScenarioConfig:
    data = ScenarioConfig.load(args.config).to_dict() if args.config else {}
    if "seed" not in data and environ.get(SEED_ENV):
        try:
            data["seed"] = int(environ[SEED_ENV])
        except ValueError:
            raise ConfigError(f"${SEED_ENV} must be an integer") from None
    flags = {
        "scheme": args.scheme,
        "adversary": args.adversary,
        "rounds": args.rounds,
        "trials": args.trials,
        "seed": args.seed,
        "d": args.d,
        "timing_tolerance": args.tolerance,
        "backend": args.backend,
        "expect": args.expect,
    }
    data.update({k: v for k, v in flags.items() if v is not None})
    if args.auth_z is not None:
        data["auth"] = {"enabled": True, "z_P": args.auth_z, "z_V": args.auth_z + 1}
    return ScenarioConfig.from_dict(data)


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out: TextIO = sys.stdout
    try:
        if args.emit_table:
            text = render_table()
            if args.out:
                with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return EXIT_OK
        cfg = config_from_args(args)
        result = run_batch(cfg)
    # OwnershipError is an OSError subclass, so internal errors go first
    except INTERNAL_ERRORS as exc:
        print(f"pbqc: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (ConfigError, OSError) as exc:
        print(f"pbqc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            write_stream(result, fh)
    else:
        try:
            write_stream(result, out)
            out.flush()
        except BrokenPipeError:
            # reader went away (e.g. piped into head); silence the flush at exit
            sys.stdout = open(os.devnull, "w")
    if not args.quiet:
        print(summary_line(result), file=sys.stderr)
    return EXIT_OK if result.expectation_met() else EXIT_EXPECTATION


if __name__ == "__main__":
    sys.exit(main())
