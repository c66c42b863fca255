from collections import Counter

import pytest

from compeq.experiments.commitment import (
    CommitmentRepresentation,
    KnownKeyMatcher,
    LowEntropyCommitter,
    pure_profile,
    uniform_open,
)
from compeq.indist import (
    BoundedInverter,
    CommitmentSampler,
    Constant,
    FirstBit,
    ReachFloorError,
    ReplayKnownKey,
    Sample,
    ViewSampler,
    canonical_partition,
    check_consistent_partition,
    estimate_advantage,
    estimate_suite,
    hiding_rows,
    sample_view_ensemble,
    singleton_partition,
    standard_suite,
)
from compeq.crypto import IdealPermutation


@pytest.fixture(scope="module")
def rep():
    return CommitmentRepresentation()


def test_constant_has_no_advantage():
    rows = estimate_suite([Constant(0), Constant(1)], CommitmentSampler(0), CommitmentSampler(1), 16, 200, 1)
    assert [r.advantage for r in rows] == [0, 0]
    assert rows[1].p_x == rows[1].p_y == 1


def test_exhaustive_inverter_always_wins():
    row = estimate_advantage(BoundedInverter(2**7), CommitmentSampler(0), CommitmentSampler(1), 8, 300, 2)
    assert row.p_x == 0 and row.p_y == 1 and row.advantage == 1


def test_inverter_advantage_tracks_its_budget():
    # q = 2^5 of 2^7 keys: a quarter of commitments to 0 are found
    row = estimate_advantage(BoundedInverter(32), CommitmentSampler(0), CommitmentSampler(1), 8, 4000, 3)
    assert abs(row.advantage - 0.25) < 3 * row.radius


def test_hiding_rows_within_bound():
    rows = hiding_rows(standard_suite(q=2**8), 24, 2000, 4)
    assert {r.distinguisher for r in rows} >= {"first-bit", "bounded-inverter", "replay-known-key"}
    assert all(r.passed for r in rows), rows


def test_replay_catches_known_key():
    perm = IdealPermutation(1)
    fixed = Sample(perm, ((12, perm.forward(12, 0)),))
    honest = Sample(perm, ((12, perm.forward(12, 77 << 1)),))
    from compeq.indist import _decide
    assert _decide(ReplayKnownKey(), 12, fixed, 0) == 1
    assert _decide(ReplayKnownKey(), 12, honest, 0) == 0
    assert _decide(FirstBit(), 12, Sample(perm, ()), 0) == 0


def test_budget_overrun_counts_as_zero():
    class Hungry(BoundedInverter):
        def budget(self, n):
            return 1

        def decide(self, n, sample, tape, oracle):
            oracle.forward(8, 0)
            oracle.forward(8, 2)
            return 1

    row = estimate_advantage(Hungry(1), CommitmentSampler(0), CommitmentSampler(1), 8, 20, 0)
    assert row.p_x == row.p_y == 0


def test_view_sampler_frequencies(rep):
    machines = rep.lift_profile(uniform_open(rep.game))
    sampler = ViewSampler(rep, machines, [("c0",), ("c1",)])
    counts = Counter(sampler(10, s).image for s in range(2000))
    chi2 = sum((c - 1000) ** 2 / 1000 for c in counts.values())
    assert set(counts) == {("c0",), ("c1",)}
    assert chi2 < 10.83
    one = ViewSampler(rep, machines, [("c1", "g0")])
    for s in range(400):
        smp = one(10, s)
        assert smp.image == ("c1", "g0") and smp.view.player == 1
    assert abs(one.reach_estimate - 0.25) < 0.05


def test_view_sampler_unreachable_target(rep):
    machines = rep.lift_profile(pure_profile(0, 0))
    with pytest.raises(ReachFloorError):
        sample_view_ensemble(rep, rep.family, machines, ("c1",), 8, 50, 0)
    with pytest.raises(ValueError):
        sample_view_ensemble(rep, rep.family, machines, [], 8, 50, 0)
    smp = sample_view_ensemble(rep, rep.family, machines, ("c0",), 8, 50, 0)
    assert smp.strings[0][0] == 8


def test_partitions(rep):
    can = canonical_partition(rep.game)
    assert [lab for lab, _ in can[2]] == ["guess"]
    assert dict(can[2])["guess"] == frozenset({("c0",), ("c1",)})
    single = singleton_partition(rep.game)
    assert all(len(cell) == 1 for cells in single.values() for _, cell in cells)
    assert sum(len(c) for c in single.values()) == len(rep.game.player_fn)


def test_honest_lift_is_consistent(rep):
    machines = rep.lift_profile(uniform_open(rep.game))
    report = check_consistent_partition(rep, machines, None, standard_suite(), [10, 14], 600, 0.05, seed=1)
    assert report.rows and report.passed, report.rows
    assert all(r.distinguisher.startswith("max:") for r in report.rows)
    assert "evidence" in report.footer


def test_low_entropy_cheat_is_caught(rep):
    cheat = {1: LowEntropyCommitter(), 2: KnownKeyMatcher()}
    report = check_consistent_partition(rep, cheat, None, standard_suite(), [10, 14], 300, 0.05, seed=1)
    assert not report.passed
    worst = max(report.rows, key=lambda r: r.advantage)
    assert worst.distinguisher == "max:replay-known-key" and worst.advantage > 0.9


def test_rare_cells_are_skipped(rep):
    machines = rep.lift_profile(pure_profile(0, 0))
    report = check_consistent_partition(rep, machines, None, standard_suite(), [8, 10], 100, 0.05, seed=0)
    assert report.rows == []
    assert report.skipped and all("below floor" in why for _, _, why in report.skipped)
    assert check_consistent_partition(rep, machines, singleton_partition(rep.game), standard_suite(),
                                      [8, 10], 100, 0.05).rows == []
    with pytest.raises(ValueError):
        check_consistent_partition(rep, machines, None, standard_suite(), [10, 8], 100, 0.05)
