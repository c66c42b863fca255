"""Independent reference computations used by the tests.

Nothing here calls into ``compeq.game.analysis``: outcomes are found by
walking the tree directly, and best responses by enumerating every pure
strategy from scratch.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from compeq.game.tree import GameTree, leaf, node


def children(g: GameTree, h):
    return [x[-1] for x in g.histories if len(x) == len(h) + 1 and x[:-1] == h]


def infosets_of(g: GameTree, player: int) -> dict[str, list[str]]:
    out = {}
    for h in g.histories:
        if g.player_fn.get(h) == player and h not in g.utilities:
            out.setdefault(g.infosets[h], children(g, h))
    return out


def all_pure(g: GameTree, player: int) -> list[dict[str, str]]:
    sets = infosets_of(g, player)
    labels = sorted(sets)
    return [dict(zip(labels, combo)) for combo in itertools.product(*(sets[lab] for lab in labels))]


def walk(g: GameTree, pure: dict[int, dict[str, str]]):
    h = ()
    while h not in g.utilities:
        h = h + (pure[g.player_fn[h]][g.infosets[h]],)
    return h


def mixed_outcome(g: GameTree, mixed: dict[int, list[tuple[Fraction, dict[str, str]]]]) -> dict:
    """Outcome law of independent mixed strategies by full enumeration."""
    out: dict = {}
    players = sorted(mixed)
    for combo in itertools.product(*(mixed[i] for i in players)):
        w = Fraction(1)
        for p, _ in combo:
            w *= p
        z = walk(g, {i: s for i, (_, s) in zip(players, combo)})
        out[z] = out.get(z, Fraction(0)) + w
    return out


def behavioral_outcome(g: GameTree, beh: dict[int, dict[str, dict[str, Fraction]]]) -> dict:
    """Outcome law of behavioral strategies by recursive descent."""
    out: dict = {}

    def go(h, p):
        if h in g.utilities:
            out[h] = out.get(h, Fraction(0)) + p
            return
        dist = beh[g.player_fn[h]][g.infosets[h]]
        for a in children(g, h):
            q = Fraction(dist.get(a, 0))
            if q:
                go(h + (a,), p * q)

    go((), Fraction(1))
    return out


def value(g: GameTree, dist: dict, player: int) -> Fraction:
    return sum((p * g.utilities[z][player - 1] for z, p in dist.items()), Fraction(0))


def brute_gains(g: GameTree, beh: dict[int, dict[str, dict[str, Fraction]]]) -> dict[int, Fraction]:
    """Double loop: every player, every pure strategy of that player."""
    base = behavioral_outcome(g, beh)
    gains = {}
    for i in range(1, g.num_players + 1):
        own = value(g, base, i)
        best = own
        for s in all_pure(g, i):
            dev = dict(beh)
            dev[i] = {lab: {a: Fraction(1)} for lab, a in s.items()}
            best = max(best, value(g, behavioral_outcome(g, dev), i))
        gains[i] = best - own
    return gains


def random_small_game(rng: random.Random, shared_p2: bool | None = None) -> GameTree:
    """Two-player perfect-recall game with at most six pure strategies each.

    Player 1 picks one of two moves, player 2 answers (knowing the move or
    not), and on one branch player 1 may get a second move.
    """
    shared = rng.random() < 0.5 if shared_p2 is None else shared_p2
    p2_width = rng.choice([2, 3]) if shared else 2
    second = rng.randrange(3)  # 2 means no second move for player 1
    u = lambda: leaf(Fraction(rng.randint(-4, 4), rng.choice([1, 2])),  # noqa: E731
                     Fraction(rng.randint(-4, 4), rng.choice([1, 2])))
    kids = []
    for a in range(2):
        label = "J" if shared else f"J{a}"
        replies = []
        for b in range(p2_width):
            act = f"y{b}" if shared else f"y{a}{b}"
            if second == a and b == 0:
                sub = node(1, f"K{a}", [(f"z{a}0", u()), (f"z{a}1", u())])
            else:
                sub = u()
            replies.append((act, sub))
        kids.append((f"x{a}", node(2, label, replies)))
    return GameTree.from_root(node(1, "I", kids), 2, name="random")


def random_behavioral(g: GameTree, rng: random.Random, player: int, support_zero: bool = True):
    out = {}
    for lab, acts in infosets_of(g, player).items():
        w = [rng.randint(0 if support_zero else 1, 3) for _ in acts]
        if not sum(w):
            w[0] = 1
        tot = sum(w)
        out[lab] = {a: Fraction(x, tot) for a, x in zip(acts, w)}
    return out
