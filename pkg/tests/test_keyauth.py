import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pbqc import quantum as qc
from pbqc.keyauth import (
    AuthSession,
    KeyPair,
    accumulate_keys,
    auth_counter_encode,
    auth_decode_verify,
    auth_encode_s,
    auth_encrypt_message,
    auth_strip_s,
    bits_to_hex,
    fidelity,
    nearest_neighbor_distance,
    run_auth,
    theta_for,
)
from pbqc.protocols import run_scheme_a, run_scheme_b, run_scheme_iii
from pbqc.quantum import StateVector, label


def product_state(angles):
    """Direct product of cos/sin single-qubit states, built without gates."""
    amps = np.array([1.0 + 0j])
    for a in angles:
        amps = np.kron(np.array([math.cos(a), math.sin(a)]), amps)
    return StateVector(len(angles), amps)


class TestAccumulate:
    def test_empty(self):
        keys = accumulate_keys([])
        assert keys["V0"] == KeyPair((), (), 0)

    def test_scheme_b_both_sides_agree(self):
        ts = [run_scheme_b(seed=s) for s in range(5)]
        v = accumulate_keys(ts, "verifier")
        p = accumulate_keys(ts, "prover")
        for who in ("V0", "V1"):
            assert len(v[who].K_P) == len(v[who].K_V) == 10
            assert v[who] == p[who]

    def test_scheme_a_prover_lacks_kv(self):
        ts = [run_scheme_a(seed=s) for s in range(4)]
        v = accumulate_keys(ts, "verifier")
        p = accumulate_keys(ts, "prover")
        assert p["V0"].K_V is None
        assert v["V0"].K_V is not None and len(v["V0"].K_V) == 8
        assert v["V0"].K_P == p["V0"].K_P

    def test_forced_concatenation(self):
        branches = [
            {"1,2": "10", "11,12": "00", "3,4": "11", "9,10": "10"},
            {"1,2": "00", "11,12": "01", "3,4": "00", "9,10": "11"},
            {"1,2": "11", "11,12": "11", "3,4": "01", "9,10": "00"},
        ]
        ts = [run_scheme_a(seed=i, forced=f) for i, f in enumerate(branches)]
        expected = []
        for t in ts:
            expected.extend(t.round_keys["prover"]["V0"]["p"])
        assert list(accumulate_keys(ts, "prover")["V0"].K_P) == expected
        assert expected[:2] == [1, 1]

    def test_rejected_transcript(self):
        from pbqc.adversaries import make_adversary

        t = next(t for s in range(50) if not (t := run_scheme_b(seed=s, adversary=make_adversary("entangling-intercept"))).accepted)
        with pytest.raises(ValueError):
            accumulate_keys([t])

    def test_mixed_or_keyless(self):
        with pytest.raises(ValueError):
            accumulate_keys([run_scheme_a(seed=0), run_scheme_b(seed=0)])
        with pytest.raises(ValueError):
            accumulate_keys([run_scheme_iii(seed=0)])

    def test_hex(self):
        assert bits_to_hex([1, 0, 1, 1]) == "b"
        assert bits_to_hex([0, 0, 0, 0, 0, 1]) == "01"
        assert bits_to_hex([]) == ""


def session(S, T, M, K, z_P=1, z_V=2):
    return AuthSession(z_P, z_V, list(S), list(T), list(M), list(K))


class TestAuthSteps:
    def test_zero_s(self):
        s = session([0, 0], [0, 0], [0, 0], [0, 0])
        assert auth_encode_s(s).allclose(StateVector.zeros(2))

    def test_single_qubit(self):
        s = session([1], [0], [0], [0], z_P=1)
        out = auth_encode_s(s)
        assert np.allclose(out.amplitudes, [math.cos(math.pi / 4), math.sin(math.pi / 4)])

    def test_strip_s_inverts(self):
        s = session([3, 1, 2], [0, 0, 0], [0, 0, 0], [0, 0, 0], z_P=2)
        assert auth_strip_s(s, auth_encode_s(s)).allclose(StateVector.zeros(3), atol=1e-12)

    def test_zero_t(self):
        s = session([3, 1], [0, 0], [0, 0], [0, 0], z_P=2)
        psi = auth_encode_s(s)
        assert auth_counter_encode(s, psi).allclose(psi)

    def test_composite_angle(self):
        s = session([3, 7], [5, 1], [0, 0], [0, 0], z_P=2, z_V=3)
        psi = auth_counter_encode(s, auth_encode_s(s))
        want = product_state([si * s.theta_P + ti * s.theta_V for si, ti in zip(s.S, s.T)])
        assert psi.allclose(want, atol=1e-12)

    def test_strip_leaves_t(self):
        s = session([3, 7], [5, 1], [0, 0], [0, 0], z_P=2, z_V=3)
        psi = auth_strip_s(s, auth_counter_encode(s, auth_encode_s(s)))
        assert psi.allclose(product_state([t * s.theta_V for t in s.T]), atol=1e-12)

    def test_xor_zero_means_no_rotation(self):
        s = session([0, 0], [2, 3], [1, 0], [1, 0], z_V=2)
        psi = auth_counter_encode(s, StateVector.zeros(2))
        assert auth_encrypt_message(s, psi, s.key).allclose(psi)

    def test_flip_on_unrotated_qubit(self):
        s = session([0], [0], [1], [0])
        assert auth_encrypt_message(s, StateVector.zeros(1), s.key).allclose(StateVector.from_bits([1]), atol=1e-15)

    def test_key_length_checked(self):
        s = session([0, 0], [0, 0], [0, 0], [0, 0])
        with pytest.raises(ValueError):
            auth_encrypt_message(s, StateVector.zeros(2), [0])

    @pytest.mark.parametrize("seed", range(20))
    def test_pipeline_matches_closed_form(self, seed):
        rng = np.random.default_rng(seed)
        s = AuthSession.random(rng, 4, int(rng.integers(1, 9)), int(rng.integers(1, 9)))
        psi = auth_encrypt_message(s, auth_strip_s(s, auth_counter_encode(s, auth_encode_s(s))), s.key)
        want = product_state([(p ^ m) * math.pi / 2 + t * s.theta_V for p, m, t in zip(s.key, s.M, s.T)])
        assert psi.allclose(want, atol=1e-12)

    def test_order_of_rotations_irrelevant(self):
        rng = np.random.default_rng(3)
        s = AuthSession.random(rng, 3, 2, 3)
        a = auth_counter_encode(s, auth_encode_s(s))
        b = auth_encode_s(s)
        # apply T first, then S, on a fresh register
        b = auth_counter_encode(s, StateVector.zeros(3))
        for q, si in enumerate(s.S):
            b = qc.apply_rotation(b, q, si * s.theta_P)
        assert a.allclose(b, atol=1e-12)


class TestDecode:
    def test_wrong_key_bit_flips(self):
        rng = np.random.default_rng(0)
        s = session([1, 2], [3, 1], [1, 0], [0, 1], z_P=2, z_V=2)
        good = run_auth(s, rng)
        bad = run_auth(s, rng, verifier_key=[1, 1])
        assert good == [1, 0]
        assert bad == [0, 0]

    def test_message_equals_key(self):
        rng = np.random.default_rng(1)
        s = session([1, 2, 3], [3, 1, 0], [1, 0, 1], [1, 0, 1], z_P=2, z_V=2)
        psi = auth_encrypt_message(s, auth_strip_s(s, auth_counter_encode(s, auth_encode_s(s))), s.key)
        # with M = K_P every p_i ^ m_i is 0, so the decoder's raw bits are all zero
        assert auth_decode_verify(s, psi, [0, 0, 0], rng) == [0, 0, 0]
        assert auth_decode_verify(s, psi, s.key, rng) == s.M

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**32 - 1))
    def test_exact_decode(self, z_P, z_V, seed):
        rng = np.random.default_rng(seed)
        s = AuthSession.random(rng, 6, z_P, z_V)
        psi = auth_strip_s(s, auth_counter_encode(s, auth_encode_s(s)))
        psi = auth_encrypt_message(s, psi, s.key)
        # stripped state is a basis state up to float leakage
        stripped = psi
        for q, t in enumerate(s.T):
            stripped = qc.apply_rotation(stripped, q, -t * s.theta_V)
        assert np.max(np.abs(stripped.amplitudes)) ** 2 >= 1 - 1e-9
        assert auth_decode_verify(s, psi, s.key, rng) == s.M

    def test_range_of_s_and_t(self):
        rng = np.random.default_rng(0)
        S, T = [], []
        for _ in range(20):
            s = AuthSession.random(rng, 16, 2, 3)
            S += s.S
            T += s.T
        assert min(S) == 0 and max(S) == 15
        assert min(T) >= 0 and max(T) < 64

    def test_capacity(self):
        with pytest.raises(qc.CapacityError):
            AuthSession.random(np.random.default_rng(0), 17, 1, 2)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            AuthSession(1, 1, [0], [0, 0], [0], [0])


class TestDistance:
    def test_z1(self):
        assert nearest_neighbor_distance(1) == pytest.approx(math.sqrt(2) / 2, abs=1e-12)

    def test_z8(self):
        assert nearest_neighbor_distance(8) < 1e-4

    def test_matches_sine(self):
        for z in range(1, 13):
            assert nearest_neighbor_distance(z) == pytest.approx(abs(math.sin(math.pi / 4**z)), rel=1e-9)

    def test_monotone(self):
        ds = [nearest_neighbor_distance(z) for z in range(1, 12)]
        assert all(a > b for a, b in zip(ds, ds[1:]))

    @pytest.mark.parametrize("s,s2,z", list(itertools.product(range(0, 5), range(0, 5), (1, 2, 3))))
    def test_fidelity_closed_form(self, s, s2, z):
        assert fidelity(s, s2, z) == pytest.approx(abs(math.cos((s - s2) * theta_for(z))), abs=1e-12)

    def test_bad_z(self):
        with pytest.raises(ValueError):
            nearest_neighbor_distance(0)
