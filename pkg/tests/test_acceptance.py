"""Acceptance criteria, one check per criterion.

Each ``check_N`` returns ``(ok, detail)``. The pytest wrappers assert on it
and record a PASS/FAIL line that conftest prints in the terminal summary.
Running this file directly prints the same lines:

    python3 tests/test_acceptance.py
"""

import io
import itertools
import math
import time
from pathlib import Path

import numpy as np
import pytest

from pbqc import quantum as qc
from pbqc.adversaries import make_adversary
from pbqc.bell import emit_table, render_table
from pbqc.cli import derive_seed, run_batch, write_stream
from pbqc.config import ScenarioConfig
from pbqc.keyauth import AuthSession, nearest_neighbor_distance, run_auth
from pbqc.protocols import run_pv_bb84, run_scheme_a, run_scheme_b, run_scheme_iii, run_scheme_iv
from pbqc.quantum import label
from pbqc.stats import binomial_sigma, key_information

GOLDEN = Path(__file__).parent / "data" / "table1.txt"

RESULTS: dict[int, tuple[bool, str]] = {}


def _swap_by_state(a, b, m):
    # a on qubits (0,2), b on (1,3); BSM (0,1) forced to m; classify (2,3)
    amps = qc.tensor(qc.make_bell(b), qc.make_bell(a)).amplitudes.reshape(2, 2, 2, 2)
    state = qc.StateVector(4, np.transpose(amps, (0, 2, 1, 3)).reshape(-1))
    _, post = qc.bsm(state, 0, 1, outcome=m)
    return qc.bell_label_of(post, 2, 3)


def check_1():
    start = time.perf_counter()
    rows = emit_table()
    mismatches = sum(r != _swap_by_state(a, b, m) for a, b, m, r in rows)
    cases = {(a, b, m) for a, b, m, _ in rows}
    golden = render_table().encode() == GOLDEN.read_bytes()
    elapsed = time.perf_counter() - start
    ok = len(cases) == 64 and mismatches == 0 and golden and elapsed < 1.0
    return ok, f"64 cases, {mismatches} mismatches, golden match={golden}, {elapsed:.3f}s"


def check_2():
    # qubits 1..4: beta01 on (1,3), beta00 on (2,4)
    amps = qc.tensor(qc.make_bell("00"), qc.make_bell("01")).amplitudes.reshape(2, 2, 2, 2)
    state = qc.StateVector(4, np.transpose(amps, (0, 2, 1, 3)).reshape(-1))
    coeffs = qc.bell_coefficients(state, [(0, 1), (2, 3)])
    want = {("00", "01"): 0.5, ("01", "00"): 0.5, ("10", "11"): -0.5, ("11", "10"): -0.5}
    coeff_err = max(abs(c - want.get((str(a), str(b)), 0.0)) for (a, b), c in coeffs.items())
    prob_err = float(np.max(np.abs(qc.bsm_probabilities(state, 0, 1) - 0.25)))
    ok = coeff_err <= 1e-12 and prob_err <= 1e-9
    return ok, f"max coefficient error {coeff_err:.1e}, max probability error {prob_err:.1e}"


def check_3(n=1000):
    start = time.perf_counter()
    ts = [run_scheme_iii(seed=derive_seed(3, i), attacked=True) for i in range(n)]
    elapsed = time.perf_counter() - start
    acc = sum(t.accepted for t in ts) / n
    det = sum(t.detected_adversary for t in ts) / n
    rec = sum(t.detail["adversary"]["recovered"] == t.detail["adversary"]["prover_label"] for t in ts)
    ok = acc == 1.0 and det == 0.0 and rec == n and elapsed < 10.0
    return ok, f"acceptance {acc:.3f}, detection {det:.3f}, recovered {rec}/{n}, {elapsed:.2f}s"


def check_4(n=1000):
    ts = [run_scheme_iv(seed=derive_seed(4, i), attacked=True) for i in range(n)]
    rec = sum(t.detail["adversary"]["recovered"] == t.detail["messages"] for t in ts)
    forced = run_scheme_iv(seed=0, attacked=True, forced={"3,5": "01", "7,2": "01", "9,4": "10"}, messages=("10", "11"))
    got = forced.detail["adversary"]["recovered"]
    ok = rec == n and got == [label("10"), label("11")]
    return ok, f"recovered both messages in {rec}/{n} runs, worked branch -> ({got[0]}, {got[1]})"


def check_5(n=1000):
    ts = [run_scheme_a(seed=derive_seed(5, i)) for i in range(n)]
    acc = sum(t.accepted for t in ts) / n
    worst = max(abs(t.elapsed - 2.0) for t in ts)
    forced = run_scheme_a(seed=0, forced={"1,2": "10", "11,12": "00", "3,4": "11", "9,10": "10"})
    k0 = forced.round_keys["verifier"]["V0"]["p"]
    k1 = forced.round_keys["verifier"]["V1"]["p"]
    agree = forced.round_keys["prover"]["V0"]["p"] == k0 and forced.round_keys["prover"]["V1"]["p"] == k1
    ok = acc == 1.0 and worst <= 1e-6 and k0 == label("11") and k1 == label("00") and agree
    return ok, f"acceptance {acc:.3f}, max |elapsed-2d| {worst:.1e}, worked-branch keys V0={k0} V1={k1}"


def check_6():
    t = run_scheme_b(seed=0, forced={"2,3": "01", "4,6": "11", "8,9": "01", "10,12": "10"})
    d = t.detail
    ok = (
        d["announced"] == [label("00"), label("01")]
        and d["inferred_by_verifier"] == {"V0": label("11"), "V1": label("01")}
        and d["inferred_by_prover"] == {"V0": label("01"), "V1": label("10")}
        and d["stage4_ok"]
        and d["stage7_ok"]
        and t.accepted
    )
    a0, a1 = d["announced"]
    iv, ip = d["inferred_by_verifier"], d["inferred_by_prover"]
    return ok, (
        f"announced ({a0}, {a1}), V0 infers {iv['V0']}, V1 infers {iv['V1']}, "
        f"P infers ({ip['V0']}, {ip['V1']}), stages ok={d['stage4_ok'] and d['stage7_ok']}"
    )


def check_7(n=10_000, trials=1000):
    single = run_batch(ScenarioConfig(scheme="b", adversary="entangling-intercept", trials=n, seed=71))
    rate = sum(t.detected for t in single.trials) / n
    sigma = binomial_sigma(0.75, n)
    multi = run_batch(ScenarioConfig(scheme="b", adversary="entangling-intercept", rounds=10, trials=trials, seed=72))
    rate10 = sum(t.detected for t in multi.trials) / trials
    ok = abs(rate - 0.75) <= 3 * sigma and rate10 >= 0.999
    return ok, f"single-round detection {rate:.4f} (0.75 +- {3 * sigma:.4f}), 10-round detection {rate10:.4f}"


def check_8(n=10_000):
    ts = [run_scheme_a(seed=derive_seed(8, i), adversary=make_adversary("intercept-resend-both")) for i in range(n)]
    info = key_information(ts)
    mi = {v: x["mutual_information_bits"] for v, x in info.items()}
    ok = set(mi) == {"V0", "V1"} and all(x["samples"] == n for x in info.values()) and max(mi.values()) <= 0.01
    bias = info["V0"]["bias_bits"]
    return ok, f"I(obs;key) V0={mi['V0']:.4f} V1={mi['V1']:.4f} bits over {n} rounds (estimator bias ~{bias:.4f})"


def check_9(sessions=1000, n_qubits=4):
    rng = np.random.default_rng(9)
    errors = 0
    for z_P, z_V in itertools.product(range(1, 9), repeat=2):
        for _ in range(sessions):
            s = AuthSession.random(rng, n_qubits, z_P, z_V)
            errors += run_auth(s, rng) != s.M
    ds = [nearest_neighbor_distance(z) for z in range(1, 9)]
    monotone = all(a > b for a, b in zip(ds, ds[1:]))
    ok = errors == 0 and abs(ds[0] - math.sqrt(2) / 2) <= 1e-9 and ds[-1] < 1e-4 and monotone
    return ok, f"{errors} decode errors over 64x{sessions} sessions, distance(1)={ds[0]:.9f}, distance(8)={ds[-1]:.2e}, monotone={monotone}"


def check_10(honest=1000, n=100_000):
    acc = sum(run_pv_bb84(seed=derive_seed(10, i)).accepted for i in range(honest)) / honest
    errs = sum(not run_pv_bb84(seed=derive_seed(11, i), adversary=make_adversary("intercept-resend")).accepted for i in range(n))
    rate = errs / n
    sigma = binomial_sigma(0.25, n)
    ok = acc == 1.0 and abs(rate - 0.25) <= 3 * sigma
    return ok, f"honest acceptance {acc:.3f}, intercept-resend error rate {rate:.4f} (0.25 +- {3 * sigma:.4f})"


DETERMINISM_SCENARIOS = [
    dict(scheme="pv-bb84", adversary="intercept-resend", trials=20),
    dict(scheme="i", adversary="key-guesser", rounds=3, trials=10),
    dict(scheme="ii", adversary="intercept-resend", trials=20),
    dict(scheme="iii", adversary="scheme-iii-attack", trials=20),
    dict(scheme="iv", adversary="scheme-iv-attack", trials=20),
    dict(scheme="a", rounds=5, trials=4, auth={"enabled": True, "z_P": 3, "z_V": 4}),
    dict(scheme="b", adversary="entangling-intercept-both", rounds=3, trials=10, backend="labels"),
]


def _stream(scenario, seed):
    buf = io.StringIO()
    write_stream(run_batch(ScenarioConfig.from_dict({**scenario, "seed": seed})), buf)
    return buf.getvalue()


def check_11():
    same = 0
    for scenario in DETERMINISM_SCENARIOS:
        same += _stream(scenario, 1234) == _stream(scenario, 1234)
    ok = same == len(DETERMINISM_SCENARIOS)
    return ok, f"{same}/{len(DETERMINISM_SCENARIOS)} scenarios byte-identical on re-run"


CHECKS = {
    1: ("swap table equivalence", check_1),
    2: ("Bell decomposition", check_2),
    3: ("scheme III attack", check_3),
    4: ("scheme IV attack", check_4),
    5: ("scheme A honest", check_5),
    6: ("scheme B worked branch", check_6),
    7: ("scheme B entangling intercept", check_7),
    8: ("keyed-message secrecy", check_8),
    9: ("authentication", check_9),
    10: ("PV_BB84 baseline", check_10),
    11: ("determinism", check_11),
}


def format_line(num, ok, detail):
    return f"{'PASS' if ok else 'FAIL'} criterion {num:2d} ({CHECKS[num][0]}): {detail}"


SLOW = {7, 8, 9, 10}


@pytest.mark.parametrize("num", [pytest.param(n, marks=pytest.mark.slow) if n in SLOW else n for n in sorted(CHECKS)])
def test_criterion(num):
    ok, detail = CHECKS[num][1]()
    RESULTS[num] = (ok, detail)
    print(format_line(num, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    for num, (_, fn) in sorted(CHECKS.items()):
        print(format_line(num, *fn()), flush=True)
