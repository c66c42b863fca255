from collections import Counter
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compeq.crypto import (
    IdealPermutation,
    OracleAccessError,
    PermutationHandle,
    QueryBudgetExceeded,
    commit,
    commit_string,
    hiding_advantage_bound,
    reveal,
    reveal_string,
)
from compeq.rng import (
    RandomTape,
    ReplayTape,
    TapeExhausted,
    WeightedSampler,
    default_seed,
    derive_seed,
    mix64,
    uniform_int,
)

# chi-square critical values at p = 0.001
CHI2_001 = {1: 10.83, 2: 13.82, 3: 16.27, 7: 24.32, 23: 49.73}


def chi2(counts, expected):
    return sum((counts.get(k, 0) - e) ** 2 / e for k, e in expected.items())


# Seeding

def test_mix64_is_the_splitmix64_finalizer():
    # first outputs of splitmix64 seeded with 0: finalizer of k * golden gamma
    gamma = 0x9E3779B97F4A7C15
    assert mix64(gamma) == 0xE220A8397B1DCDAF
    assert mix64(2 * gamma & (2**64 - 1)) == 0x6E789E6AA1B965F4


def test_derive_seed_is_stable_and_sensitive():
    a = derive_seed(7, "exp", 16, 3)
    assert a == derive_seed(7, "exp", 16, 3)
    assert len({a, derive_seed(7, "exp", 16, 4), derive_seed(7, "exp", 32, 3), derive_seed(8, "exp", 16, 3),
                derive_seed(7, "other", 16, 3)}) == 5
    assert 0 <= a < 2**64


def test_default_seed_env(monkeypatch):
    monkeypatch.setenv("COMPGAME_SEED", "99")
    assert default_seed() == 99
    assert default_seed(5) == 5
    monkeypatch.delenv("COMPGAME_SEED")
    assert default_seed() == 0


def test_tape_records_consumed_bits_and_replays():
    t = RandomTape(123)
    a, b, c = t.read(3), t.read(70), t.read(1)
    val, length = t.consumed()
    assert length == 74
    r = ReplayTape(val, length)
    assert (r.read(3), r.read(70), r.read(1)) == (a, b, c)
    with pytest.raises(TapeExhausted):
        r.read(1)
    assert RandomTape(123).read(74) == val
    assert t.fork("x").read(64) == RandomTape(123).fork("x").read(64)
    assert t.fork("x").read(64) != t.fork("y").read(64)


def test_uniform_int_is_uniform():
    t = RandomTape(5)
    counts = Counter(uniform_int(t, 3) for _ in range(30_000))
    assert chi2(counts, {k: 10_000 for k in range(3)}) < CHI2_001[2]
    assert uniform_int(t, 1) == 0
    with pytest.raises(ValueError):
        uniform_int(t, 0)


def test_weighted_sampler_exact_cuts_and_law():
    s = WeightedSampler([("a", Fraction(1, 3)), ("b", Fraction(0)), ("c", Fraction(2, 3))])
    assert s.items == ("a", "c") and s.cuts == (1, 3) and s.denom == 3
    t = RandomTape(9)
    counts = Counter(s.draw(t) for _ in range(30_000))
    assert chi2(counts, {"a": 10_000, "c": 20_000}) < CHI2_001[1]
    with pytest.raises(ValueError):
        WeightedSampler([("a", Fraction(1, 2))])


# The permutation

@pytest.mark.parametrize("k", [1, 2, 5, 8])
def test_permutation_is_bijective(k):
    p = IdealPermutation(k * 1000)
    ys = [p.forward(k, x) for x in range(2**k)]
    assert sorted(ys) == list(range(2**k))
    assert all(p.inverse(k, y) == x for x, y in enumerate(ys))
    assert p.known_points(k) == 2**k


def test_inverse_first_then_forward_consistent():
    p = IdealPermutation(3)
    xs = [p.inverse(6, y) for y in range(64)]
    assert sorted(xs) == list(range(64))
    assert all(p.forward(6, x) == y for y, x in enumerate(xs))


def test_permutation_law_uniform_at_k2():
    counts = Counter()
    trials = 24 * 600
    for s in range(trials):
        p = IdealPermutation(derive_seed("perm-law", s))
        counts[tuple(p.forward(2, x) for x in range(4))] += 1
    assert set(counts) <= set(permutations(range(4)))
    assert chi2(counts, {perm: trials / 24 for perm in permutations(range(4))}) < CHI2_001[23]


def test_forward_many_equals_sequential():
    a, b = IdealPermutation(77), IdealPermutation(77)
    a.forward(12, 5)
    b.forward(12, 5)
    xs = np.array([9, 5, 100, 4095, 0], dtype=np.uint64)
    many = a.forward_many(12, xs)
    assert [int(v) for v in many] == [b.forward(12, int(x)) for x in xs]
    # duplicates fall back to the loop
    assert [int(v) for v in a.forward_many(12, np.array([3, 3]))] == [b.forward(12, 3)] * 2


def test_wide_widths():
    p = IdealPermutation(1)
    y = p.forward(130, 2**129 + 7)
    assert 0 <= y < 2**130
    assert p.inverse(130, y) == 2**129 + 7
    with pytest.raises(ValueError):
        p.forward(4, 16)


# Budgets

def test_handle_budget_and_inverse_rule():
    h = PermutationHandle(IdealPermutation(0), budget=3)
    h.forward(8, 1)
    h.forward_many(8, [2, 3])
    assert h.remaining() == 0
    with pytest.raises(QueryBudgetExceeded):
        h.forward(8, 4)
    with pytest.raises(OracleAccessError):
        PermutationHandle(IdealPermutation(0)).inverse(8, 1)
    assert PermutationHandle(IdealPermutation(0), privileged=True).inverse(8, 1) in range(256)


def test_reveal_scan_charges_like_a_loop():
    perm = IdealPermutation(4)
    c = commit(10, 1, RandomTape(2), PermutationHandle(perm))
    loop = PermutationHandle(perm)
    found = None
    for s in range(512):
        if loop.reveal(10, c.string, s) is not None:
            found = (s, 1)
            break
    scan = PermutationHandle(perm)
    assert scan.reveal_scan(10, c.string, range(512)) == found
    assert scan.queries == loop.queries == c.key + 1
    short = PermutationHandle(perm, budget=c.key)
    with pytest.raises(QueryBudgetExceeded):
        short.reveal_scan(10, c.string, range(512))
    miss = PermutationHandle(perm)
    assert miss.reveal_scan(10, c.string, range(c.key)) is None
    assert miss.queries == c.key


# Commitments

@pytest.mark.parametrize("k", range(2, 9))
def test_perfect_binding_exhaustive(k):
    perm = IdealPermutation(derive_seed("binding", k))
    h = PermutationHandle(perm)
    for c in range(2**k):
        openings = [(s, b) for s in range(2 ** (k - 1)) if (b := reveal(k, c, s, h)) is not None]
        assert len(openings) == 1
        assert openings[0] == perm.opening(k, c)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 40), st.integers(0, 1), st.integers(0, 2**63))
def test_commit_then_reveal(k, b, seed):
    perm = IdealPermutation(seed)
    h = PermutationHandle(perm)
    c = commit(k, b, RandomTape(seed ^ 1), h)
    assert reveal(k, c.string, c.key, h) == b
    wrong = (c.key + 1) % 2 ** (k - 1)
    if wrong != c.key:
        assert reveal(k, c.string, wrong, h) is None
    assert len(c.hex()) == -(-k // 4) and c.hex() == c.hex().lower()
    assert int(c.hex(), 16) == c.string


def test_commit_string_round_trip():
    perm = IdealPermutation(8)
    h = PermutationHandle(perm)
    cs = commit_string(16, [1, 0, 1, 1], RandomTape(1), h)
    assert reveal_string(16, [c.string for c in cs], [c.key for c in cs], h) == [1, 0, 1, 1]
    with pytest.raises(ValueError):
        commit_string(16, [], RandomTape(1), h)
    with pytest.raises(ValueError):
        commit(1, 0, RandomTape(1), h)


def test_hiding_bound_formula():
    assert hiding_advantage_bound(32, 2**10) == Fraction(2**10, 2**31)
    assert hiding_advantage_bound(4, 100) == 1
