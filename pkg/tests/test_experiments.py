import math
from collections import Counter
from fractions import Fraction

import pytest

from compeq.compgame import run_game
from compeq.experiments.commitment import (
    COORDINATION,
    ZERO_SUM,
    build_variant_prime,
    cheat_demonstration,
    payoff,
)
from compeq.experiments.corr import (
    CorrRepresentation,
    NiceCCNE,
    NotNiceError,
    a_label,
    b_label,
    build_corr_game,
    certificate_passes,
    choose_punishment,
    coordination_instance,
    corr_battery,
    empty_threat_instance,
    nf_outcome_distribution,
    open_action,
    slack_decay,
    three_ne_instance,
)
from compeq.experiments.registry import CORR_INSTANCES, REPRESENTATIONS, representation
from compeq.experiments.separation import (
    SeparationConfig,
    build_separation_family,
    decode_first,
    encode_first,
    extraction_identity,
    forced_epsilon,
    run_separation_experiment,
    stateful_control,
    stateless_candidates,
)
from compeq.equilibria import check_computational_ne
from compeq.game import behavioral
from compeq.game.analysis import check_epsilon_ne, outcome_distribution

F = Fraction


# Envelope game payoffs

@pytest.mark.parametrize("a,b", [(0, 0), (0, 1), (1, 0), (1, 1)])
def test_payoff_tables(a, b):
    assert payoff(ZERO_SUM, a, b, True) == ((1, -1) if a != b else (-1, 1))
    assert payoff(ZERO_SUM, a, b, False) == (-1, 1)
    assert payoff(COORDINATION, a, b, True) == ((1, 1) if a == b else (0, 0))
    assert payoff(COORDINATION, a, b, False) == (-1, -1)


def test_cheat_beats_what_the_variant_allows():
    game, family, rep, cheat = build_variant_prime()
    rows = {r["profile"]: r for r in cheat_demonstration(rep, 16, 300, seed=1)}
    assert rows["NE both-0"]["match"] == 1 and rows["NE both-0"]["p1_seal_0"] == 1
    assert rows["best p2 reply to a uniform seal"]["match"] == F(1, 2)
    demo = rows["low-entropy cheat"]
    assert demo["match"] == 1
    assert abs(float(demo["p1_seal_0"]) - 0.5) < 3 * math.sqrt(math.log(2e6) / 600)


# Stateless separation

def test_length_field_round_trip():
    for n in (16, 33):
        for L in (1, 5, n - 1):
            assert decode_first(n, encode_first(n, L, (1 << L) | 1)) == (L, (1 << L) | 1)


def test_separation_config_bounds():
    cfg = SeparationConfig()
    for n in (16, 32, 64):
        cfg.check(n)
        assert cfg.defender_budget(n) / 2 ** (cfg.kappa(n) - 1) <= 2 / n
    with pytest.raises(ValueError):
        cfg.check(8)


def test_identities_against_floats():
    for n in range(2, 65):
        lhs = 1 - (1 - 1 / n) ** (n * n)
        assert extraction_identity(n) == (lhs > 1 - 2 / n)
        assert extraction_identity(n)
        eps = forced_epsilon(n)
        assert F(3, 2) - F(3, n) - 2 * eps == 1


def test_every_stateless_candidate_is_defeated():
    cfg = SeparationConfig()
    rows = run_separation_experiment(cfg, stateless_candidates(cfg), [16], 200, 3)
    defeated = [r for r in rows if r.metric == "min:defeated"]
    assert len(defeated) == 5 and all(r.value == 1 for r in defeated)
    control = [r for r in rows if r.subject == "stateful-control"]
    assert control and all(r.passed for r in control)


def test_stateful_candidates_rejected():
    cfg = SeparationConfig()
    _, rep = build_separation_family(cfg)
    with pytest.raises(ValueError):
        run_separation_experiment(cfg, {"x": stateful_control(rep)}, [16], 10, 0)


# Correlation without a mediator

def test_nice_combination_validation():
    nf, pi = coordination_instance()
    L = ({"L": F(1)}, {"L": F(1)})
    R = ({"R": F(1)}, {"R": F(1)})
    with pytest.raises(NotNiceError):
        NiceCCNE(nf, ((0.5, L), (0.5, R)))
    with pytest.raises(NotNiceError):
        NiceCCNE(nf, ((F(1, 2), L), (F(1, 3), R)))
    with pytest.raises(NotNiceError):
        NiceCCNE(nf, ((F(1), ({"L": F(1)}, {"R": F(1)})),))
    with pytest.raises(NotNiceError):
        NiceCCNE(nf, ())


@pytest.mark.parametrize("make,ell,d", [(coordination_instance, 2, 2), (three_ne_instance, 3, 2)])
def test_envelope_size_and_ordering(make, ell, d):
    nf, pi = make()
    assert pi.ell == ell and pi.d == d
    assert 2 ** (d - 1) <= ell < 2 ** d
    counts = Counter(pi.ordering)
    assert {j: F(c, ell) for j, c in counts.items()} == {j: w for j, (w, _) in enumerate(pi.components)}


def test_single_equilibrium_still_gets_a_real_choice():
    nf, pi, _ = empty_threat_instance()
    assert pi.lcd == 1 and pi.ell == 2 and pi.ordering == [0, 0]


@pytest.mark.parametrize("make", [coordination_instance, three_ne_instance])
def test_sum_mod_ell_is_uniform_whatever_one_side_does(make):
    nf, pi = make()
    corr = build_corr_game(nf, pi)
    ell = pi.ell
    # fix player 2 to any single b: the selected index stays uniform
    for b in range(ell):
        sigma = dict(corr.sigma)
        sigma[2] = behavioral(2, {**corr.sigma[2].dists, "pick": {b_label(b): 1}})
        idx = Counter()
        for z, p in outcome_distribution(corr.game, sigma).items():
            a = int(z[0][1:])
            idx[(a + b) % ell] += p
        assert all(v == F(1, ell) for v in idx.values()) and len(idx) == ell


@pytest.mark.parametrize("make", [coordination_instance, three_ne_instance])
def test_exact_play_matches_pi(make):
    nf, pi = make()
    corr = build_corr_game(nf, pi)
    assert nf_outcome_distribution(corr, nf) == pi.distribution()
    assert check_epsilon_ne(corr.game, corr.sigma, 0).passed
    assert certificate_passes(corr).passed
    assert slack_decay(corr) < F(1, 4)


def test_empty_threat_fails_the_decay_check():
    nf, pi, pun = empty_threat_instance()
    corr = build_corr_game(nf, pi, pun)
    assert pun == ({"T": 1}, {"R": 1})
    assert slack_decay(corr) > 1
    # the equilibrium punishment is credible
    good = build_corr_game(nf, pi)
    assert good.punishment == ({"T": 1}, {"L": 1})


def test_punishment_tie_break_is_deterministic():
    nf, pi = coordination_instance()
    # both pure equilibria and the mixed one: the mixed one is worst for player 1
    pun = choose_punishment(nf, pi)
    assert pun == choose_punishment(nf, pi)
    assert nf.expected_payoff(pun)[0] == F(1, 2)
    nf3, pi3 = three_ne_instance()
    assert nf3.is_nash(choose_punishment(nf3, pi3))


def test_lifted_play_opens_and_follows_the_index():
    nf, pi = three_ne_instance()
    rep = CorrRepresentation(nf, pi)
    machines = rep.lift_profile(rep.sigma)
    acts = ("A", "B", "C")
    for s in range(60):
        res = run_game(rep.family, 8, machines, s)
        img = rep.history_map(8, res.history, res.perm)
        a, b = int(img[0][1:]), int(img[1][1:])
        assert img[2] == open_action(a, b) and img[0] == a_label(a)
        x = acts[pi.ordering[(a + b) % 3]]
        assert rep.family.cell(8, res.history) == (x, x)


def test_wrong_key_does_not_pay():
    nf, pi = coordination_instance()
    rep = CorrRepresentation(nf, pi)
    bat = corr_battery(nf)
    report = check_computational_ne(rep.family, rep.lift_profile(rep.sigma), bat, [8, 10], 400, 0.05, seed=2)
    wrong = [r for r in report.rows if r.deviation == "wrong-key"]
    assert wrong and all(r.gain <= 0.05 for r in wrong)
    assert report.passed


# Registry

def test_registry_names():
    assert set(CORR_INSTANCES) == {"coordination", "three-ne", "empty-threat"}
    for name in REPRESENTATIONS:
        assert representation(name).game is not None
    with pytest.raises(KeyError):
        representation("nope")
