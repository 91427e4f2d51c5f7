"""Command-line front end.

    solve      exact value of a tree plus one optimal line of play
    verify     exhaustive bound sweep over all trees up to a size
    families   path/star/near-path values and the general envelope
    lemma4     sampled delayed-game score-bound suite
    enumerate  stream all trees of a given size, one per line
    reduce     show the engine's reduction chain for a position
    play       interactive/scripted game against the engine

Trees and positions are given inline or as a path to a file holding the
same text.  Verification subcommands exit nonzero when any row fails.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Iterator

from .enumeration import all_trees
from .game import (
    DelayedGame,
    FormatError,
    Player,
    apply_move,
    classify,
    final_score,
    format_board,
    format_game,
    fresh_game,
    initial_state,
    legal_moves,
    parse_game,
    parse_tree,
    score_now,
    set_of,
)
from .reductions import certificate_to_text, final_case_bound, score_bound_or_zero
from .solver import DEFAULT_EDGE_LIMIT, SearchLimitError, Solver, optimal_move, u
from .strategy import CaseTag, IsolatorSession, StrategyState, phase2_case

PROG = "toucher-isolator"


def _load_text(arg: str) -> str:
    if os.path.exists(arg):
        with open(arg, encoding="utf-8") as fh:
            return fh.read().strip()
    return arg


def _fail(message: str) -> int:
    print(f"{PROG}: {message}", file=sys.stderr)
    return 1


# ---------------------------------------------------------------------------
# solve


def _principal_line(tree, limit: int) -> str:
    state = initial_state(fresh_game(tree))
    parts = []
    while legal_moves(state):
        e = optimal_move(state, limit=limit)
        uu, vv = tree.edges[e]
        parts.append(f"{state.mover.value}:{uu}-{vv}")
        state = apply_move(state, e)
    return " ".join(parts)


def _cmd_solve(args) -> int:
    try:
        tree = parse_tree(_load_text(args.tree))
    except (FormatError, ValueError) as exc:
        return _fail(f"bad tree: {exc}")
    try:
        value = u(tree, limit=args.limit, pruned=True)
    except SearchLimitError as exc:
        return _fail(str(exc))
    print(f"u = {value}")
    print(f"principal: {_principal_line(tree, args.limit)}")
    return 0


# ---------------------------------------------------------------------------
# verification suites


def _emit_report(report, out: str | None) -> int:
    print(report.to_text(), end="")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv_text())
        print(f"csv written to {out}")
    return 0 if report.all_passed else 1


def _cmd_verify(args) -> int:
    from .verify import verify_theorem1

    report = verify_theorem1(args.n_max, strategy_n_max=args.strategy_n_max)
    return _emit_report(report, args.out)


def _cmd_families(args) -> int:
    from .verify import verify_families

    report = verify_families(args.n_max, envelope_n_max=args.envelope_n_max)
    return _emit_report(report, args.out)


def _cmd_lemma4(args) -> int:
    from .verify import verify_lemma4

    report = verify_lemma4(args.n_max, args.samples, args.seed)
    return _emit_report(report, args.out)


def _cmd_enumerate(args) -> int:
    try:
        for tree in all_trees(args.n):
            print(format_board(tree))
    except ValueError as exc:
        return _fail(str(exc))
    return 0


# ---------------------------------------------------------------------------
# reduce


def _cmd_reduce(args) -> int:
    text = _load_text(args.position)
    try:
        game = parse_game(text)
    except (FormatError, ValueError) as exc:
        return _fail(f"bad position: {exc}")
    if game.isolator != 0:
        return _fail("reduction inspection expects no pre-claimed Isolator edges")
    expected_x = game.board.leaf_mask | (game.board.degree_zero_mask & game.excluded)
    if game.excluded != expected_x:
        return _fail("reduction inspection expects the leaves to be excluded")
    print(f"position: {format_game(game)}")
    print(f"score bound: {score_bound_or_zero(game)}")
    engine = StrategyState(game)
    step = 0
    while True:
        match = phase2_case(engine.inner)
        if match.tag in (CaseTag.C1, CaseTag.C2, CaseTag.C3, CaseTag.C4):
            before = len(engine.certificates)
            try:
                if match.tag is CaseTag.C1:
                    engine._case1_certs(match)
                elif match.tag is CaseTag.C2:
                    engine._case2_certs(match)
                elif match.tag is CaseTag.C3:
                    engine._case3_certs(match)
                else:
                    engine._case4_certs(match)
            except AssertionError as exc:
                print(f"stopped: {exc}")
                return 0
            for cert in engine.certificates[before:]:
                step += 1
                print(f"-- step {step} ({match.tag.value}) " + "-" * 30)
                print(certificate_to_text(cert))
            continue
        if match.tag is CaseTag.TERMINAL:
            print("dispatch: no case applies")
            if engine.stack:
                print("(closing bound evaluated on the reduced position)")
                print(f"reduced: {format_game(engine.inner)}")
                print(f"score bound: {score_bound_or_zero(engine.inner)}")
            else:
                from .game import Tree

                tree = Tree(game.board.n, game.board.edges)
                result = final_case_bound(tree, set_of(game.toucher))
                print(f"closing bound certified: {result.certified} "
                      f"(numerator {result.numerator}, score {result.score})")
        else:
            print(f"dispatch: {match.tag.value} {match.detail} run={match.data}")
        return 0


# ---------------------------------------------------------------------------
# play


def _read_script(path: str) -> Iterator[str]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            yield line.rstrip("\n")


def _cmd_play(args) -> int:
    try:
        tree = parse_tree(_load_text(args.tree))
    except (FormatError, ValueError) as exc:
        return _fail(f"bad tree: {exc}")
    human = Player.TOUCHER if args.side == "toucher" else Player.ISOLATOR
    engine_side = human.opponent

    session: IsolatorSession | None = None
    solver_mode = args.opponent == "optimal"
    if not solver_mode and engine_side is Player.TOUCHER:
        return _fail("the constructive strategy plays Isolator only; "
                     "use --opponent optimal when you take Isolator")
    if solver_mode and len(tree.edges) > DEFAULT_EDGE_LIMIT:
        return _fail("tree too large for the optimal opponent; use --opponent strategy")

    game = fresh_game(tree)
    state = initial_state(game)
    if not solver_mode:
        session = IsolatorSession(game)

    script = iter(_read_script(args.script)) if args.script else None

    def human_move() -> int | None:
        while True:
            if script is not None:
                try:
                    line = next(script)
                except StopIteration:
                    return None
                print(f"> {line}")
            else:
                try:
                    line = input("> ")
                except EOFError:
                    return None
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line in ("q", "quit"):
                return None
            try:
                a, _, b = line.partition("-")
                e = tree.edge_index(int(a), int(b))
            except ValueError:
                print("enter an edge as u-v")
                continue
            if e not in legal_moves(state):
                print(f"edge {line} is not available")
                continue
            return e

    print(f"board: {format_board(tree)}")
    print(f"you play {human.value}, engine plays {engine_side.value}")
    while legal_moves(state):
        if state.mover is human:
            e = human_move()
            if e is None:
                print("session ended early")
                return 0
            state = apply_move(state, e)
            if session is not None:
                session.observe(e, human)
        else:
            if solver_mode:
                e = optimal_move(state)
            else:
                assert session is not None
                e = session.propose()
            uu, vv = tree.edges[e]
            state = apply_move(state, e)
            print(f"engine claims {uu}-{vv}")
        cls = classify(state.as_game())
        print(f"  I={sorted(set_of(cls.isolated))} O={sorted(set_of(cls.occupied))} "
              f"U={sorted(set_of(cls.unoccupied))} isolated={score_now(state)}")
    print(f"final isolated = {final_score(state)}")
    return 0


# ---------------------------------------------------------------------------
# argument wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="exact value of a tree")
    p.add_argument("--tree", required=True, help="tree text or file path")
    p.add_argument("--limit", type=int, default=DEFAULT_EDGE_LIMIT)
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("verify", help="exhaustive bound sweep")
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--strategy-n-max", type=int, default=None)
    p.add_argument("--out", default=None, help="write the CSV report here")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("families", help="named family values and the envelope")
    p.add_argument("--n-max", type=int, default=13)
    p.add_argument("--envelope-n-max", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_families)

    p = sub.add_parser("lemma4", help="sampled delayed-game score-bound suite")
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_lemma4)

    p = sub.add_parser("enumerate", help="stream all trees of a size")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(fn=_cmd_enumerate)

    p = sub.add_parser("reduce", help="show the reduction chain for a position")
    p.add_argument("--position", required=True, help="position text or file path")
    p.set_defaults(fn=_cmd_reduce)

    p = sub.add_parser("play", help="play against the engine")
    p.add_argument("--tree", required=True)
    p.add_argument("--as", dest="side", choices=("toucher", "isolator"),
                   required=True)
    p.add_argument("--opponent", choices=("strategy", "optimal"),
                   default="strategy")
    p.add_argument("--script", default=None,
                   help="read moves from this file instead of stdin")
    p.set_defaults(fn=_cmd_play)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
