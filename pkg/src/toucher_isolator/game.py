"""Boards, positions, and the move/scoring rules of the Toucher-Isolator game.

The game is played on the edges of a graph.  Toucher and Isolator claim free
edges alternately; when no free edge remains, every vertex that is incident
to no Toucher edge (and is not excluded from scoring) is worth one point to
Isolator.

Everything in this module is an immutable value.  Vertices are integers,
edges are indices into an explicit edge list, and all vertex/edge sets are
bitmasks, which keeps set algebra O(1) for the exhaustive solver.  Boards
are capped at 64 vertices/edges for that reason.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Iterator

MAX_VERTICES = 64

Pair = tuple[int, int]


# ---------------------------------------------------------------------------
# errors


class BoardError(ValueError):
    """Invalid board construction input."""


class VertexRangeError(BoardError):
    pass


class SelfLoopError(BoardError):
    pass


class DuplicateEdgeError(BoardError):
    pass


class DisconnectedError(BoardError):
    pass


class CyclicError(BoardError):
    pass


class MoveError(ValueError):
    """Illegal interaction with a play state."""


class IllegalMoveError(MoveError):
    pass


class GameOverError(MoveError):
    pass


class GameNotOverError(MoveError):
    pass


class FormatError(ValueError):
    """Malformed board/position text."""


# ---------------------------------------------------------------------------
# bitmask helpers


def bit(i: int) -> int:
    return 1 << i


def mask_of(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def set_of(mask: int) -> frozenset[int]:
    return frozenset(iter_bits(mask))


# ---------------------------------------------------------------------------
# players


class Player(enum.Enum):
    TOUCHER = "T"
    ISOLATOR = "I"

    @property
    def opponent(self) -> "Player":
        return Player.ISOLATOR if self is Player.TOUCHER else Player.TOUCHER


# ---------------------------------------------------------------------------
# boards


def _normalize(u: int, v: int) -> Pair:
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True, eq=False)
class Board:
    """An undirected simple graph on vertices 0..n-1.

    Unlike :class:`Tree` a board need not be connected or acyclic; the
    solver accepts general graphs, and reduced positions may leave behind
    edgeless "ghost" vertices that stay excluded from scoring.
    """

    n: int
    edges: tuple[Pair, ...]

    # structural equality: a validated Tree equals the plain Board with the
    # same data, so parsed positions compare equal to their sources
    def __eq__(self, other: object) -> bool:
        return isinstance(other, Board) and self.n == other.n and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    def __post_init__(self) -> None:
        if not 0 <= self.n <= MAX_VERTICES:
            raise VertexRangeError(f"vertex count {self.n} outside 0..{MAX_VERTICES}")
        if len(self.edges) > MAX_VERTICES:
            raise VertexRangeError(f"edge count {len(self.edges)} exceeds {MAX_VERTICES}")
        seen = set()
        norm = []
        for u, v in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise VertexRangeError(f"edge ({u},{v}) out of range for n={self.n}")
            if u == v:
                raise SelfLoopError(f"self-loop at vertex {u}")
            p = _normalize(u, v)
            if p in seen:
                raise DuplicateEdgeError(f"duplicate edge {p}")
            seen.add(p)
            norm.append(p)
        object.__setattr__(self, "edges", tuple(norm))

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        """Per-vertex tuple of incident edge indices."""
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, (u, v) in enumerate(self.edges):
            adj[u].append(i)
            adj[v].append(i)
        return tuple(tuple(a) for a in adj)

    @cached_property
    def incident_masks(self) -> tuple[int, ...]:
        """Per-vertex bitmask of incident edge indices."""
        return tuple(mask_of(a) for a in self.adjacency)

    @cached_property
    def pair_index(self) -> dict[Pair, int]:
        return {p: i for i, p in enumerate(self.edges)}

    @cached_property
    def all_edges_mask(self) -> int:
        return (1 << len(self.edges)) - 1

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @cached_property
    def leaf_mask(self) -> int:
        return mask_of(v for v in range(self.n) if self.degree(v) == 1)

    @cached_property
    def degree_zero_mask(self) -> int:
        return mask_of(v for v in range(self.n) if self.degree(v) == 0)

    def neighbors(self, v: int) -> tuple[int, ...]:
        out = []
        for e in self.adjacency[v]:
            u, w = self.edges[e]
            out.append(w if u == v else u)
        return tuple(out)

    def other_end(self, e: int, v: int) -> int:
        u, w = self.edges[e]
        return w if u == v else u

    def edge_index(self, u: int, v: int) -> int:
        try:
            return self.pair_index[_normalize(u, v)]
        except KeyError:
            raise IllegalMoveError(f"no edge {u}-{v} on this board") from None

    def component_mask(self, start: int, banned_vertices: int = 0) -> int:
        """Vertex mask of the connected component of `start`, not crossing
        any vertex in `banned_vertices`."""
        seen = bit(start)
        stack = [start]
        while stack:
            v = stack.pop()
            for w in self.neighbors(v):
                if not (seen >> w) & 1 and not (banned_vertices >> w) & 1:
                    seen |= bit(w)
                    stack.append(w)
        return seen

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        return self.component_mask(0).bit_count() == self.n


@dataclass(frozen=True, eq=False)
class Tree(Board):
    """A validated tree: connected and acyclic on vertices 0..n-1."""

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.n == 0:
            raise BoardError("a tree needs at least one vertex")
        if not self.is_connected():
            raise DisconnectedError("graph is not connected")
        if len(self.edges) != self.n - 1:
            # connected with more than n-1 edges must contain a cycle
            raise CyclicError(f"{len(self.edges)} edges on {self.n} vertices")


def make_tree(n: int, edges: Iterable[tuple[int, int]]) -> Tree:
    """Build and validate a tree from an edge list."""
    return Tree(n, tuple(tuple(e) for e in edges))  # type: ignore[arg-type]


# ---------------------------------------------------------------------------
# delayed games


@dataclass(frozen=True)
class DelayedGame:
    """A game position: pre-claimed edge sets, excluded vertices, side to move.

    `toucher` and `isolator` are edge-index masks of the pre-claimed edges,
    `excluded` is a vertex mask of vertices that never score, and `mover` is
    the player who moves first from here.  The ordinary game on a tree is
    ``DelayedGame(tree, mover=Player.TOUCHER)``; reduced positions default
    to Isolator having the move.
    """

    board: Board
    toucher: int = 0
    isolator: int = 0
    excluded: int = 0
    mover: Player = Player.ISOLATOR

    def __post_init__(self) -> None:
        m = self.board.all_edges_mask
        if self.toucher & ~m or self.isolator & ~m:
            raise BoardError("claimed edge mask out of range")
        if self.toucher & self.isolator:
            raise BoardError("Toucher and Isolator claims overlap")
        if self.excluded >> self.board.n:
            raise BoardError("excluded vertex mask out of range")

    @property
    def free_mask(self) -> int:
        return self.board.all_edges_mask & ~self.toucher & ~self.isolator

    @property
    def free_pairs(self) -> frozenset[Pair]:
        return frozenset(self.board.edges[e] for e in iter_bits(self.free_mask))


def fresh_game(tree: Board) -> DelayedGame:
    """The ordinary game on a board: no claims, Toucher to move first."""
    return DelayedGame(tree, mover=Player.TOUCHER)


@dataclass(frozen=True)
class VertexClassification:
    """Partition of the vertices of a position.

    isolated:   not excluded, every incident edge held by Isolator
    occupied:   not excluded, at least one incident edge held by Toucher
    excluded:   never score (copied from the game)
    unoccupied: everything else; exactly the vertices that can still be
                isolated
    """

    isolated: int
    occupied: int
    excluded: int
    unoccupied: int

    @property
    def touched(self) -> int:
        return self.occupied | self.excluded


def classify(game: DelayedGame, toucher: int | None = None, isolator: int | None = None) -> VertexClassification:
    """Classify vertices given the position (optionally with extra claims)."""
    t = game.toucher if toucher is None else toucher
    d = game.isolator if isolator is None else isolator
    x = game.excluded
    masks = game.board.incident_masks
    iso = occ = 0
    for v in range(game.board.n):
        if (x >> v) & 1:
            continue
        m = masks[v]
        if m & t:
            occ |= bit(v)
        elif m & ~d == 0:
            iso |= bit(v)
    all_v = (1 << game.board.n) - 1
    un = all_v & ~iso & ~occ & ~x
    return VertexClassification(iso, occ, x, un)


def endpoint_pattern(game: DelayedGame, e: int) -> int:
    """Pattern class of a free edge: 1 + the number of touched endpoints."""
    if not (game.free_mask >> e) & 1:
        raise IllegalMoveError(f"edge {e} is already claimed")
    touched = classify(game).touched
    u, v = game.board.edges[e]
    return 1 + ((touched >> u) & 1) + ((touched >> v) & 1)


def pattern_of_pair(game: DelayedGame, pair: Pair, touched: int | None = None) -> int:
    """Like :func:`endpoint_pattern` but keyed by endpoint pair."""
    if touched is None:
        touched = classify(game).touched
    u, v = pair
    return 1 + ((touched >> u) & 1) + ((touched >> v) & 1)


# ---------------------------------------------------------------------------
# play states


@dataclass(frozen=True)
class PlayState:
    """A delayed game plus the moves played since its start."""

    game: DelayedGame
    toucher_moves: tuple[int, ...] = ()
    isolator_moves: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        claimed = self.game.toucher | self.game.isolator
        for seq in (self.toucher_moves, self.isolator_moves):
            for e in seq:
                if (claimed >> e) & 1:
                    raise IllegalMoveError(f"move {e} repeats a claimed edge")
                claimed |= bit(e)
        nt, ni = len(self.toucher_moves), len(self.isolator_moves)
        first, second = (nt, ni) if self.game.mover is Player.TOUCHER else (ni, nt)
        if not (first == second or first == second + 1):
            raise MoveError("move counts inconsistent with alternation")

    @property
    def mover(self) -> Player:
        total = len(self.toucher_moves) + len(self.isolator_moves)
        return self.game.mover if total % 2 == 0 else self.game.mover.opponent

    @property
    def toucher_mask(self) -> int:
        return self.game.toucher | mask_of(self.toucher_moves)

    @property
    def isolator_mask(self) -> int:
        return self.game.isolator | mask_of(self.isolator_moves)

    @property
    def free_mask(self) -> int:
        return self.game.board.all_edges_mask & ~self.toucher_mask & ~self.isolator_mask

    def as_game(self) -> DelayedGame:
        """The current position expressed as a fresh delayed game."""
        return DelayedGame(self.game.board, self.toucher_mask, self.isolator_mask,
                           self.game.excluded, self.mover)


def initial_state(game: DelayedGame) -> PlayState:
    return PlayState(game)


def legal_moves(state: PlayState) -> frozenset[int]:
    """Free edges; empty exactly when the game is over."""
    return set_of(state.free_mask)


def apply_move(state: PlayState, e: int) -> PlayState:
    """Claim edge `e` for the side to move; returns a new state."""
    if state.free_mask == 0:
        raise GameOverError("no free edges remain")
    if not (state.free_mask >> e) & 1:
        raise IllegalMoveError(f"edge {e} is not available")
    if state.mover is Player.TOUCHER:
        return replace(state, toucher_moves=state.toucher_moves + (e,))
    return replace(state, isolator_moves=state.isolator_moves + (e,))


def final_score(state: PlayState) -> int:
    """Number of isolated scoring vertices once every edge is claimed."""
    if state.free_mask != 0:
        raise GameNotOverError("game is not over")
    return score_now(state)


def score_now(state: PlayState) -> int:
    """Vertices outside the excluded set with no Toucher edge so far."""
    t = state.toucher_mask
    x = state.game.excluded
    masks = state.game.board.incident_masks
    return sum(1 for v in range(state.game.board.n)
               if not (x >> v) & 1 and masks[v] & t == 0)


def isolated_now_mask(state: PlayState) -> int:
    """Scoring vertices already isolated (all incident edges Isolator's)."""
    i = state.isolator_mask
    x = state.game.excluded
    masks = state.game.board.incident_masks
    return mask_of(v for v in range(state.game.board.n)
                   if not (x >> v) & 1 and masks[v] & ~i == 0)


def isolatable_edges(state: PlayState) -> frozenset[int]:
    """Free edges whose claiming by Isolator isolates a new scoring vertex.

    An edge qualifies when one of its endpoints is unoccupied and every
    other edge at that endpoint is already Isolator's.
    """
    t = state.toucher_mask
    i = state.isolator_mask
    x = state.game.excluded
    board = state.game.board
    masks = board.incident_masks
    out = set()
    for e in iter_bits(state.free_mask):
        for v in board.edges[e]:
            if (x >> v) & 1 or masks[v] & t:
                continue
            if masks[v] & ~i == bit(e):
                out.add(e)
                break
    return frozenset(out)


# ---------------------------------------------------------------------------
# text formats
#
# Tree/board:  "n; u0-v0,u1-v1,..."
# Position:    board text + "; C:{i,...} D:{i,...} X:{v,...} s:T|I"
# where C and D hold edge indices, X holds vertex labels, and printing then
# parsing canonical output is the identity.


def format_board(board: Board) -> str:
    if not board.edges:
        return f"{board.n};"
    return f"{board.n}; " + ",".join(f"{u}-{v}" for u, v in board.edges)


def _parse_board_part(text: str) -> tuple[int, tuple[Pair, ...]]:
    head, _, rest = text.partition(";")
    try:
        n = int(head.strip())
    except ValueError:
        raise FormatError(f"bad vertex count {head!r}") from None
    rest = rest.strip()
    edges: list[Pair] = []
    if rest:
        for item in rest.split(","):
            m = re.fullmatch(r"\s*(\d+)\s*-\s*(\d+)\s*", item)
            if not m:
                raise FormatError(f"bad edge {item!r}")
            edges.append((int(m.group(1)), int(m.group(2))))
    return n, tuple(edges)


def parse_tree(text: str) -> Tree:
    n, edges = _parse_board_part(text)
    return Tree(n, edges)


def parse_board(text: str) -> Board:
    n, edges = _parse_board_part(text)
    return Board(n, edges)


def _format_set(mask: int) -> str:
    return "{" + ",".join(str(i) for i in iter_bits(mask)) + "}"


def _parse_set(text: str) -> int:
    text = text.strip()
    if not (text.startswith("{") and text.endswith("}")):
        raise FormatError(f"bad set {text!r}")
    inner = text[1:-1].strip()
    if not inner:
        return 0
    try:
        return mask_of(int(s) for s in inner.split(","))
    except ValueError:
        raise FormatError(f"bad set {text!r}") from None


def format_game(game: DelayedGame) -> str:
    return (f"{format_board(game.board)}; "
            f"C:{_format_set(game.toucher)} D:{_format_set(game.isolator)} "
            f"X:{_format_set(game.excluded)} s:{game.mover.value}")


def parse_game(text: str, tree: bool = False) -> DelayedGame:
    m = re.search(r";\s*C:", text)
    if not m:
        raise FormatError("missing position sets (expected 'C:{...} D:{...} X:{...} s:T|I')")
    board_text = text[: m.start()]
    board = parse_tree(board_text) if tree else parse_board(board_text)
    rest = text[m.start() + 1:].strip()
    pm = re.fullmatch(
        r"C:(\{[^}]*\})\s+D:(\{[^}]*\})\s+X:(\{[^}]*\})\s+s:([TI])", rest)
    if not pm:
        raise FormatError(f"bad position sets {rest!r}")
    return DelayedGame(board,
                       toucher=_parse_set(pm.group(1)),
                       isolator=_parse_set(pm.group(2)),
                       excluded=_parse_set(pm.group(3)),
                       mover=Player(pm.group(4)))
