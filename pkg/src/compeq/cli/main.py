"""``compeq`` command line.

Every subcommand builds a list of result rows, writes them as CSV once all
work is done, and exits 0 only if every row passes. Exit status 1 means at
least one row failed, 2 a usage error, 3 an input or output error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from ..reports import RESULT_HEADER, ResultRow, write_csv
from ..rng import default_seed
from ..stats import hoeffding_radius

USAGE, IOERR = 2, 3


@dataclass
class ExperimentConfig:
    name: str
    n_list: list[int]
    trials: int
    seed: int
    tol: float
    out: str = "-"
    mode: str | None = None
    workers: int = 1
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.n_list:
            raise ValueError("n_list is empty")
        if self.n_list != sorted(set(self.n_list)):
            raise ValueError("n_list must be strictly ascending")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def _n_list(text: str) -> list[int]:
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}") from None
    if not out or any(n < 1 for n in out):
        raise argparse.ArgumentTypeError("n values must be positive")
    if out != sorted(set(out)):
        raise argparse.ArgumentTypeError("n values must be strictly ascending")
    return out


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


# Pipelines

def run_commitment_game(cfg: ExperimentConfig) -> list[ResultRow]:
    from ..compgame.representation import verify_ug4a, verify_ug4b
    from ..equilibria import check_computational_ne
    from ..experiments.commitment import (
        abstract_profiles,
        build_commitment_game,
        envelope_battery,
        non_ne_control,
        uniform_open,
    )

    exp = cfg.name
    if len(cfg.n_list) < 2:
        raise _Usage("the gain ladder needs at least two n values")
    game, family, rep = build_commitment_game()
    rows = _ug23_rows(exp, rep, cfg.n_list[0], cfg.mode, cfg.trials, cfg.seed)
    close = verify_ug4a(rep, abstract_profiles(game), cfg.n_list, cfg.trials, cfg.extra.get("closeness_tol", 0.02),
                        seed=cfg.seed, workers=cfg.workers)
    rows += [ResultRow(exp, r.n, "l1-closeness", r.profile, r.l1, r.radius, r.threshold) for r in close.rows]
    sigma = uniform_open(game)
    top = cfg.n_list[-1]
    for i in (1, 2):
        ib = verify_ug4b(rep, sigma[i], top, cfg.trials, seed=cfg.seed, others=sigma)
        rows.append(ResultRow(exp, top, "interpreter-mismatches", f"p{i}", ib.mismatches, 0.0, 0.0))
        rows.append(ResultRow(exp, top, "min:interpreter-views", f"p{i}", ib.views, 0.0, 1.0))
    battery = envelope_battery(game, family)
    machines = rep.lift_profile(sigma)
    ne = check_computational_ne(family, machines, battery, cfg.n_list, cfg.trials, cfg.tol, seed=cfg.seed,
                                workers=cfg.workers, experiment=f"{exp}:ne")
    rows += [ResultRow(exp, g.n, "ne-gain", f"p{g.player}:{g.deviation}", g.gain, g.radius, g.threshold)
             for g in ne.rows]
    ctl = check_computational_ne(family, non_ne_control(rep), battery, cfg.n_list, cfg.trials, cfg.tol,
                                 seed=cfg.seed, workers=cfg.workers, experiment=f"{exp}:control")
    worst = max((g for g in ctl.rows if g.n == top), key=lambda g: g.gain)
    rows.append(ResultRow(exp, top, "min:control-gain", f"p{worst.player}:{worst.deviation}", worst.gain,
                          worst.radius, 1.0))
    return rows


def run_variant_prime(cfg: ExperimentConfig) -> list[ResultRow]:
    from ..experiments.commitment import build_variant_prime, cheat_demonstration

    exp = cfg.name
    game, family, rep, cheat = build_variant_prime()
    top = cfg.n_list[-1]
    demo = cheat_demonstration(rep, top, cfg.trials, cfg.seed)
    r = hoeffding_radius(cfg.trials)
    rows = []
    for d in demo:
        if d["source"] == "exact":
            if d["u1"] is not None:
                rows.append(ResultRow(exp, 0, "equilibrium-match", d["profile"], float(d["match"]), 0.0, 1.0))
            else:
                rows.append(ResultRow(exp, 0, "best-reply-match", d["profile"], float(d["match"]), 0.0, 0.5))
        else:
            rows.append(ResultRow(exp, top, "min:cheat-match", d["profile"], float(d["match"]), r, 1 - cfg.tol))
            rows.append(ResultRow(exp, top, "cheat-seal-bias", d["profile"], abs(float(d["p1_seal_0"]) - 0.5), r,
                                  cfg.tol + 3 * r))
    rows += _consistency_rows(exp, rep, cheat, "canonical", cfg, cheat=True)
    return rows


def run_separation(cfg: ExperimentConfig) -> list[ResultRow]:
    from ..experiments.separation import (
        SeparationConfig,
        extraction_identity,
        forced_epsilon,
        run_separation_experiment,
        stateless_candidates,
    )

    exp = cfg.name
    sc = SeparationConfig()
    for n in cfg.n_list:
        try:
            sc.check(n)
        except ValueError as e:
            raise _Usage(str(e)) from None
    rows = run_separation_experiment(sc, stateless_candidates(sc), cfg.n_list, cfg.trials, cfg.seed, tol=cfg.tol,
                                     workers=cfg.workers)
    ident = all(extraction_identity(n) for n in range(2, 65))
    eps = all(forced_epsilon(n) >= Fraction(1, 4) - Fraction(3, 2 * n) for n in range(2, 65))
    rows.append(ResultRow(exp, 0, "min:extraction-identity", "n=2..64", float(ident), 0.0, 1.0))
    rows.append(ResultRow(exp, 0, "min:forced-epsilon-identity", "n=2..64", float(eps), 0.0, 1.0))
    return rows


def run_corr(cfg: ExperimentConfig) -> list[ResultRow]:
    from ..experiments.corr import corr_battery, run_corr_experiment
    from ..experiments.registry import CORR_INSTANCES

    nf, pi, *rest = CORR_INSTANCES[cfg.extra.get("instance", "coordination")]()
    return run_corr_experiment(nf, pi, corr_battery(nf), cfg.n_list, cfg.trials, cfg.seed, tol=cfg.tol,
                               seq_trials=cfg.extra.get("seq_trials"), workers=cfg.workers,
                               punishment=rest[0] if rest else None)


def _ug23_rows(exp: str, rep, n: int, mode: str | None, trials: int, seed: int) -> list[ResultRow]:
    from ..compgame.representation import verify_ug2, verify_ug3

    mode = mode or ("exhaustive" if n <= 10 else "sampled")
    out = []
    for check in (verify_ug2, verify_ug3):
        rep_ = check(rep, rep.family, n, mode, trials=trials, seed=seed)
        out.append(ResultRow(exp, n, f"{rep_.check.lower()}-failures", mode, rep_.failure_count, 0.0, 0.0))
    return out


def _consistency_rows(exp: str, rep, machines, partition: str, cfg: ExperimentConfig, cheat: bool = False
                      ) -> list[ResultRow]:
    from ..indist import canonical_partition, check_consistent_partition, singleton_partition, standard_suite

    part = {"canonical": canonical_partition, "singleton": singleton_partition}[partition](rep.game)
    report = check_consistent_partition(rep, machines, part, standard_suite(), cfg.n_list, cfg.trials, cfg.tol,
                                        seed=cfg.seed, experiment=f"{exp}:consistency")
    if not cheat:
        return [ResultRow(exp, r.n, "advantage", f"{r.cell}:{r.distinguisher}", r.advantage, r.radius, r.bound)
                for r in report.rows]
    top = [r for r in report.rows if r.n == cfg.n_list[-1]]
    if not top:
        return [ResultRow(exp, cfg.n_list[-1], "min:cheat-advantage", "no cell reached", 0.0, 0.0, 0.9)]
    worst = max(top, key=lambda r: r.advantage)
    return [ResultRow(exp, worst.n, "min:cheat-advantage", f"{worst.cell}:{worst.distinguisher}",
                      worst.advantage, worst.radius, 0.9)]


# Thin wrappers

def _load_game(path: str, validate: bool = True):
    from .gamefile import GameFileError, parse_game_file

    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise _IOProblem(str(e)) from None
    try:
        return parse_game_file(text, name=path, validate=validate)
    except GameFileError as e:
        raise _IOProblem(f"{path}: {e}") from None


def _named_profile(game, name: str):
    """``uniform`` fits any game; the envelope profiles fit games with its labels."""
    from ..experiments.commitment import abstract_profiles
    from ..game.strategies import MissingStrategyError, as_behavioral, uniform_profile

    if name == "uniform":
        return uniform_profile(game)
    prof = abstract_profiles(game).get(name)
    if prof is None:
        raise _Usage(f"unknown profile {name!r}")
    try:
        for s in prof.values():
            if set(as_behavioral(game, s).dists) != set(game.player_infosets(s.player)):
                raise MissingStrategyError(name)
    except (MissingStrategyError, KeyError):
        raise _Usage(f"profile {name!r} does not fit this game") from None
    return prof


def run_validate_game(cfg: ExperimentConfig) -> list[ResultRow]:
    from ..game.tree import has_perfect_recall, validate_game

    g = _load_game(cfg.extra["file"], validate=False)
    report = validate_game(g)
    rows = [ResultRow(cfg.name, 0, "violations", v.rule, 1.0, 0.0, 0.0) for v in report.violations]
    rows.append(ResultRow(cfg.name, 0, "violation-count", g.name, len(report.violations), 0.0, 0.0))
    rows.append(ResultRow(cfg.name, 0, "min:perfect-recall", g.name, float(has_perfect_recall(g)), 0.0, 1.0))
    return rows


def run_check_ne(cfg: ExperimentConfig) -> list[ResultRow]:
    from ..game.analysis import check_epsilon_ne

    g = _load_game(cfg.extra["file"])
    eps = Fraction(cfg.extra.get("eps") or "0")
    report = check_epsilon_ne(g, _named_profile(g, cfg.extra["profile"]), eps)
    return [ResultRow(cfg.name, 0, "gain", f"p{i}", float(gain), 0.0, float(eps))
            for i, gain in sorted(report.gains.items())]


def run_check_seqeq(cfg: ExperimentConfig) -> list[ResultRow]:
    from ..game.analysis import check_sequential_certificate, default_certificate

    g = _load_game(cfg.extra["file"])
    prof = _named_profile(g, cfg.extra["profile"])
    ks = cfg.n_list
    cert = default_certificate(g, prof, ks)
    scale = cfg.extra.get("delta_scale")
    if scale is not None:
        cert = [(s, Fraction(scale) / k) for (s, _), k in zip(cert, ks)]
    report = check_sequential_certificate(g, prof, cert)
    rows = [ResultRow(cfg.name, k, "slack", f"delta={d}", float(s), 0.0, float(d))
            for k, s, d in zip(ks, report.slacks, report.deltas)]
    rows.append(ResultRow(cfg.name, 0, "min:delta-monotone", "certificate", float(report.delta_monotone), 0.0, 1.0))
    rows.append(ResultRow(cfg.name, 0, "min:distance-monotone", "certificate", float(report.distance_monotone),
                          0.0, 1.0))
    return rows


def run_verify_representation(cfg: ExperimentConfig) -> list[ResultRow]:
    rep = _representation(cfg.extra["family"])
    return _ug23_rows(cfg.name, rep, cfg.n_list[0], cfg.mode, cfg.trials, cfg.seed)


def run_indist_test(cfg: ExperimentConfig) -> list[ResultRow]:
    rep = _representation(cfg.extra["family"])
    which = cfg.extra.get("profile", "honest")
    if which == "honest":
        return _consistency_rows(cfg.name, rep, rep.lift_profile(_sigma(rep)), cfg.extra["partition"], cfg)
    if which == "cheat":
        from ..experiments.commitment import CommitmentRepresentation, KnownKeyMatcher, LowEntropyCommitter

        if not isinstance(rep, CommitmentRepresentation):
            raise _Usage("the cheat profile exists only for the commitment games")
        cheat = {1: LowEntropyCommitter(), 2: KnownKeyMatcher()}
        return _consistency_rows(cfg.name, rep, cheat, cfg.extra["partition"], cfg, cheat=True)
    raise _Usage(f"unknown profile {which!r}")


def _representation(name: str):
    from ..experiments.registry import representation

    try:
        return representation(name)
    except KeyError as e:
        raise _Usage(str(e.args[0])) from None


def _sigma(rep):
    from ..experiments.commitment import CommitmentRepresentation, uniform_open
    from ..experiments.corr import CorrRepresentation
    from ..experiments.separation import SeparationRepresentation

    if isinstance(rep, CorrRepresentation):
        return rep.sigma
    if isinstance(rep, (CommitmentRepresentation, SeparationRepresentation)):
        return uniform_open(rep.game)
    return rep.default_profile()


class _Usage(Exception):
    pass


class _IOProblem(Exception):
    pass


@dataclass(frozen=True)
class Command:
    run: Callable[[ExperimentConfig], list[ResultRow]]
    n_list: str
    trials: int
    tol: float
    help: str


COMMANDS = {
    "commitment-game": Command(run_commitment_game, "8,16,32", 2000, 0.05,
                               "envelope game: representation checks, lifted NE and a non-NE control"),
    "variant-prime": Command(run_variant_prime, "16,24,32", 2000, 0.05,
                             "coordination variant: low-entropy cheat and the replay distinguisher"),
    "stateless-separation": Command(run_separation, "16,32", 1000, 0.05,
                                    "attacks on stateless candidates and on the stateful control"),
    "corr-eq": Command(run_corr, "8,16", 2000, 0.05, "correlated equilibrium without a mediator"),
    "validate-game": Command(run_validate_game, "1", 1, 0.0, "parse and validate a game file"),
    "check-ne": Command(run_check_ne, "1", 1, 0.0, "exact epsilon-Nash check of a named profile"),
    "check-seqeq": Command(run_check_seqeq, "2,4,8,16,32", 1, 0.0,
                           "trembling certificate check; --n-list gives the tremble indices k"),
    "verify-representation": Command(run_verify_representation, "8", 10_000, 0.0,
                                     "UG2/UG3 structure checks of a registered family"),
    "indist-test": Command(run_indist_test, "16,32", 2000, 0.05, "consistent-partition check of a registered family"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n-list", type=_n_list, help="comma-separated ascending n values")
    common.add_argument("--n", type=_positive, help="single n (same as --n-list N)")
    common.add_argument("--trials", type=_positive, help="Monte-Carlo trials per n (>= 1)")
    common.add_argument("--seed", type=_seed, help="64-bit master seed (default: $COMPGAME_SEED, else 0)")
    common.add_argument("--tol", type=float, help="decay tolerance")
    common.add_argument("--out", default="-", help="CSV destination, '-' for standard output")
    common.add_argument("--mode", choices=("exhaustive", "sampled"), help="structure-check mode")
    common.add_argument("--workers", type=_positive, default=1, help="worker processes")

    p = argparse.ArgumentParser(prog="compeq", description="Computational game experiments and checks.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    parsers = {}
    for name, cmd in COMMANDS.items():
        parsers[name] = sub.add_parser(name, parents=[common], help=cmd.help, description=cmd.help)
    parsers["commitment-game"].add_argument("--closeness-tol", type=float, default=0.02)
    parsers["corr-eq"].add_argument("--instance", choices=("coordination", "three-ne", "empty-threat"),
                                    default="coordination")
    parsers["corr-eq"].add_argument("--seq-trials", type=_positive, help="trials for the gain checks")
    for name in ("validate-game", "check-ne", "check-seqeq"):
        parsers[name].add_argument("file", help="game file")
    for name in ("check-ne", "check-seqeq"):
        parsers[name].add_argument("--profile", default="uniform-open")
    parsers["check-ne"].add_argument("--eps", default="0", help="rational epsilon")
    parsers["check-seqeq"].add_argument("--delta-scale", help="use delta_k = scale/k instead of measured slack")
    for name in ("verify-representation", "indist-test"):
        parsers[name].add_argument("family", help="registered family name")
    parsers["indist-test"].add_argument("--partition", choices=("canonical", "singleton"), default="canonical")
    parsers["indist-test"].add_argument("--profile", choices=("honest", "cheat"), default="honest")
    return p


_EXTRA = ("closeness_tol", "instance", "seq_trials", "file", "profile", "eps", "delta_scale", "family", "partition")


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cmd = COMMANDS[args.command]
    if args.n is not None and args.n_list is not None:
        raise _Usage("give --n or --n-list, not both")
    n_list = [args.n] if args.n is not None else (args.n_list or _n_list(cmd.n_list))
    extra = {k: getattr(args, k) for k in _EXTRA if getattr(args, k, None) is not None}
    return ExperimentConfig(args.command, n_list, args.trials or cmd.trials, default_seed(args.seed),
                            cmd.tol if args.tol is None else args.tol, args.out, args.mode, args.workers, extra)


def dispatch(cfg: ExperimentConfig) -> tuple[int, list[ResultRow]]:
    rows = COMMANDS[cfg.name].run(cfg)
    return (0 if all(r.passed for r in rows) else 1), rows


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        status, rows = dispatch(cfg)
    except (_Usage, ValueError) as e:
        parser.error(str(e))
    except _IOProblem as e:
        print(f"compeq: {e}", file=sys.stderr)
        return IOERR
    try:
        if cfg.out == "-":
            write_csv(rows, RESULT_HEADER, sys.stdout)
            sys.stdout.flush()
        else:
            with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
                write_csv(rows, RESULT_HEADER, fh)
    except OSError as e:
        print(f"compeq: cannot write {cfg.out}: {e}", file=sys.stderr)
        return IOERR
    failed = sum(not r.passed for r in rows)
    print(f"compeq {cfg.name}: {len(rows)} rows, {failed} failed", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
