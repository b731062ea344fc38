"""CRT-RSA key material and gcd factor recovery, checked against brute force."""

import math
import random

import pytest
import sympy

from pmbus_sim.crypto import CrtRsaKey, crt_combine, lenstra_recover


def test_from_primes_consistency(small_key):
    k = small_key
    assert k.n == 209
    assert (k.e * k.d) % math.lcm(k.p - 1, k.q - 1) == 1
    assert k.dp == k.d % (k.p - 1) and k.dq == k.d % (k.q - 1)
    assert (k.q * k.qinv) % k.p == 1


def test_sign_verify_roundtrip(small_key):
    for m in range(small_key.n):
        sig = small_key.sign(m)
        assert pow(sig, small_key.e, small_key.n) == m


def test_generate_is_deterministic():
    a = CrtRsaKey.generate(512, random.Random(42))
    b = CrtRsaKey.generate(512, random.Random(42))
    c = CrtRsaKey.generate(512, random.Random(43))
    assert a == b and a != c
    assert sympy.isprime(a.p) and sympy.isprime(a.q) and a.p != a.q
    assert a.n.bit_length() in (511, 512)


def test_crt_combine_matches_direct_exponentiation():
    key = CrtRsaKey.generate(128, random.Random(7))
    for m in (2, 1234, key.n - 5):
        sp = pow(m, key.dp, key.p)
        sq = pow(m, key.dq, key.q)
        assert crt_combine(sp, sq, key.p, key.q, key.qinv) == pow(m, key.d, key.n)


def test_recovery_brute_force_oracle(small_key):
    """Exhaustively check gcd recovery over every possible single-branch fault."""
    k, m = small_key, 42
    truth = k.sign(m)
    assert lenstra_recover(k.n, k.e, m, truth) is None

    checked = 0
    for faulty in range(k.n):
        if faulty == truth:
            continue
        fault_in_q = faulty % k.p == truth % k.p  # mod-p half still correct
        fault_in_p = faulty % k.q == truth % k.q
        recovered = lenstra_recover(k.n, k.e, m, faulty)
        if fault_in_q:
            assert recovered == k.p
            checked += 1
        elif fault_in_p:
            assert recovered == k.q
            checked += 1
        else:
            assert recovered not in (k.p, k.q) or recovered is None
    # every congruence class mod one prime was exercised
    assert checked == (k.q - 1) + (k.p - 1)


def test_recovery_on_generated_key():
    key = CrtRsaKey.generate(256, random.Random(3))
    m = 0xC0FFEE
    truth = key.sign(m)
    sq = pow(m, key.dq, key.q) ^ 1  # fault the mod-q branch
    faulty = crt_combine(pow(m, key.dp, key.p), sq, key.p, key.q, key.qinv)
    # the untouched mod-p branch is what leaks: gcd pulls out p
    assert lenstra_recover(key.n, key.e, m, faulty) == key.p


def test_double_branch_fault_leaks_nothing():
    key = CrtRsaKey.generate(256, random.Random(3))
    m = 0xC0FFEE
    sp = pow(m, key.dp, key.p) ^ 1
    sq = pow(m, key.dq, key.q) ^ 1
    faulty = crt_combine(sp, sq, key.p, key.q, key.qinv)
    assert lenstra_recover(key.n, key.e, m, faulty) is None
