"""Exact game values by exhaustive search.

The reference path is plain full-depth minimax with a transposition table
keyed on the two claim masks (the side to move is derived from the claim
counts, so it is not part of the key).  An optional pruned mode adds
fail-soft alpha-beta with bound entries plus static score bounds; it must
and does agree with the reference everywhere, it is just faster on the
larger sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .game import (
    Board,
    DelayedGame,
    GameOverError,
    PlayState,
    Player,
    apply_move,
    bit,
    final_score,
    fresh_game,
    initial_state,
    iter_bits,
    legal_moves,
)

DEFAULT_EDGE_LIMIT = 22

_INF = 1 << 20


class SearchLimitError(RuntimeError):
    """Position has more free edges than the configured search limit."""


class StrategyMoveError(RuntimeError):
    """An Isolator policy returned an illegal move."""

    def __init__(self, message: str, state: PlayState):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class SolveResult:
    value: int
    nodes: int
    best_move: int | None


class Solver:
    """Exhaustive solve of one delayed game.

    The memo table is confined to this instance; solves of distinct
    positions are independent.
    """

    def __init__(self, game: DelayedGame, limit: int = DEFAULT_EDGE_LIMIT,
                 pruned: bool = False, memo: bool = True):
        free = game.free_mask.bit_count()
        if free > limit:
            raise SearchLimitError(f"{free} free edges exceeds limit {limit}")
        self.game = game
        self.pruned = pruned
        self.memo = memo
        self.nodes = 0
        board = game.board
        self._all = board.all_edges_mask
        self._x = game.excluded
        self._inc = board.incident_masks
        self._scoring = [v for v in range(board.n) if not (game.excluded >> v) & 1]
        self._base_count = (game.toucher | game.isolator).bit_count()
        self._table: dict[tuple[int, int], int] = {}
        self._bounds: dict[tuple[int, int], tuple[int, int]] = {}

    # -- helpers ----------------------------------------------------------

    def _mover(self, t: int, i: int) -> Player:
        made = t.bit_count() + i.bit_count() - self._base_count
        return self.game.mover if made % 2 == 0 else self.game.mover.opponent

    def _terminal(self, t: int) -> int:
        inc = self._inc
        return sum(1 for v in self._scoring if inc[v] & t == 0)

    def _static_bounds(self, t: int, i: int) -> tuple[int, int]:
        """(already isolated, already isolated + still isolatable)."""
        inc = self._inc
        lo = hi = 0
        for v in self._scoring:
            m = inc[v]
            if m & t:
                continue
            if m & ~i == 0:
                lo += 1
                hi += 1
            else:
                hi += 1
        return lo, hi

    # -- search -----------------------------------------------------------

    def _search_plain(self, t: int, i: int) -> int:
        self.nodes += 1
        free = self._all & ~t & ~i
        if not free:
            return self._terminal(t)
        key = (t, i)
        if self.memo:
            cached = self._table.get(key)
            if cached is not None:
                return cached
        if self._mover(t, i) is Player.TOUCHER:
            best = min(self._search_plain(t | e, i) for e in _mask_bits(free))
        else:
            best = max(self._search_plain(t, i | e) for e in _mask_bits(free))
        if self.memo:
            self._table[key] = best
        return best

    def _search_ab(self, t: int, i: int, alpha: int, beta: int) -> int:
        self.nodes += 1
        free = self._all & ~t & ~i
        if not free:
            return self._terminal(t)
        lo, hi = self._static_bounds(t, i)
        if lo == hi:
            return lo
        if lo >= beta:
            return lo
        if hi <= alpha:
            return hi
        key = (t, i)
        entry = self._bounds.get(key)
        if entry is not None:
            elo, ehi = entry
            lo, hi = max(lo, elo), min(hi, ehi)
            if lo == hi:
                return lo
            if lo >= beta:
                return lo
            if hi <= alpha:
                return hi
        a, b = max(alpha, lo), min(beta, hi)
        if self._mover(t, i) is Player.TOUCHER:
            value = _INF
            for e in _mask_bits(free):
                value = min(value, self._search_ab(t | e, i, a, b))
                b = min(b, value)
                if value <= a:
                    break
        else:
            value = -_INF
            for e in _mask_bits(free):
                value = max(value, self._search_ab(t, i | e, a, b))
                a = max(a, value)
                if value >= b:
                    break
        # fail-soft bound bookkeeping
        elo, ehi = self._bounds.get(key, (0, _INF))
        if value <= max(alpha, lo):
            ehi = min(ehi, value)
        elif value >= min(beta, hi):
            elo = max(elo, value)
        else:
            elo = ehi = value
        self._bounds[key] = (elo, ehi)
        return value

    def value_at(self, t: int, i: int) -> int:
        if self.pruned:
            return self._search_ab(t, i, -_INF, _INF)
        return self._search_plain(t, i)

    def value(self) -> int:
        return self.value_at(self.game.toucher, self.game.isolator)

    def best_move(self) -> int | None:
        """Lowest-index move achieving the root value, None if game over."""
        t, i = self.game.toucher, self.game.isolator
        free = self._all & ~t & ~i
        if not free:
            return None
        target = self.value_at(t, i)
        toucher_turn = self._mover(t, i) is Player.TOUCHER
        for e in iter_bits(free):
            eb = bit(e)
            child = self.value_at(t | eb, i) if toucher_turn else self.value_at(t, i | eb)
            if child == target:
                return e
        raise AssertionError("no child achieves the root value")


def _mask_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low
        mask ^= low


def alpha(game: DelayedGame, limit: int = DEFAULT_EDGE_LIMIT,
          pruned: bool = False, memo: bool = True,
          want_move: bool = False) -> SolveResult:
    """Exact score of a delayed game under optimal play by both sides."""
    solver = Solver(game, limit=limit, pruned=pruned, memo=memo)
    value = solver.value()
    move = solver.best_move() if want_move else None
    return SolveResult(value, solver.nodes, move)


def u(tree: Board, limit: int = DEFAULT_EDGE_LIMIT, pruned: bool = False) -> int:
    """Optimal-play score of the ordinary game: no claims, Toucher first."""
    return alpha(fresh_game(tree), limit=limit, pruned=pruned).value


def optimal_move(state: PlayState, limit: int = DEFAULT_EDGE_LIMIT,
                 pruned: bool = True) -> int:
    """A move achieving the minimax value; ties break to the lowest index."""
    move = Solver(state.as_game(), limit=limit, pruned=pruned).best_move()
    if move is None:
        raise GameOverError("game is over")
    return move


def make_optimal_policy(game: DelayedGame, limit: int = DEFAULT_EDGE_LIMIT) -> Callable[[PlayState], int]:
    """Isolator policy playing exactly optimally, sharing one memo table."""
    solver = Solver(game, limit=limit, pruned=True)
    all_mask = game.board.all_edges_mask

    def policy(state: PlayState) -> int:
        t, i = state.toucher_mask, state.isolator_mask
        free = all_mask & ~t & ~i
        target = solver.value_at(t, i)
        for e in iter_bits(free):
            if solver.value_at(t, i | bit(e)) == target:
                return e
        raise AssertionError("no optimal Isolator move found")

    return policy


def best_response_score(game_or_tree: DelayedGame | Board,
                        strategy: Callable[[PlayState], int],
                        limit: int = DEFAULT_EDGE_LIMIT) -> int:
    """Minimum final score over every Toucher line, Isolator fixed to `strategy`.

    Only Toucher nodes branch, so this is the strongest adversary against a
    deterministic Isolator policy.
    """
    game = game_or_tree if isinstance(game_or_tree, DelayedGame) else fresh_game(game_or_tree)
    if game.free_mask.bit_count() > limit:
        raise SearchLimitError("too many free edges for best-response search")

    def rec(state: PlayState) -> int:
        moves = legal_moves(state)
        if not moves:
            return final_score(state)
        if state.mover is Player.ISOLATOR:
            e = strategy(state)
            if e not in moves:
                raise StrategyMoveError(f"strategy chose unavailable edge {e}", state)
            return rec(apply_move(state, e))
        return min(rec(apply_move(state, e)) for e in sorted(moves))

    return rec(initial_state(game))


def random_playout_score(game_or_tree: DelayedGame | Board, seed: int) -> int:
    """Score of one uniformly random playout (both sides random)."""
    import random as _random

    game = game_or_tree if isinstance(game_or_tree, DelayedGame) else fresh_game(game_or_tree)
    rng = _random.Random(seed)
    state = initial_state(game)
    while True:
        moves = sorted(legal_moves(state))
        if not moves:
            return final_score(state)
        state = apply_move(state, rng.choice(moves))
