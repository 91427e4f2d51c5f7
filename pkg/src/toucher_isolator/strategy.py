"""Isolator's constructive strategy.

The strategy has two phases.  While some free edge would isolate a new
vertex immediately, Isolator greedily claims the lowest such edge (phase
one).  The first time none exists, the position is rewritten - isolated
vertices deleted, touched leaves peeled or rewired - into a leaf-excluded
delayed game, and a case engine takes over (phase two).

The engine keeps a stack of reduction certificates between the real board
and its current inner game.  It repeatedly applies pre-move reductions
(cases 1..4), or plays a scripted run of moves along a chain of degree-2
vertices (cases 5 and 6) and closes the run with a reduction that credits
the vertices just isolated.  Every certificate it pushes is validated and
its ledger inequality asserted, so a run that completes silently certifies
the accounting; once the score bound of the inner game drops to zero or
below, the engine owes nothing and just fills in arbitrary edges.

All free choices (which leaf to strip to, which neighbor to rewire, which
episode to open) are fixed to the lowest-index candidate, so play is a
deterministic function of the position history.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Mapping

from .game import (
    Board,
    DelayedGame,
    MoveError,
    Pair,
    PlayState,
    Player,
    bit,
    classify,
    format_game,
    isolatable_edges,
    iter_bits,
    mask_of,
    set_of,
)
from .reductions import (
    ReductionCertificate,
    check_reduction,
    make_certificate,
    score_bound_or_zero,
)

__all__ = [
    "CaseTag",
    "CaseMatch",
    "PhaseOneTrace",
    "StrategyInvariantError",
    "StrategyState",
    "IsolatorSession",
    "phase1_move",
    "lemma3_reduce",
    "lemma3_chain",
    "lemma3_step",
    "phase2_case",
    "phase2_move",
    "case_applies",
    "full_strategy",
    "make_strategy_policy",
]


class StrategyInvariantError(AssertionError):
    """The engine reached a state its accounting says is impossible."""

    def __init__(self, message: str, game: DelayedGame | None = None):
        if game is not None:
            message = f"{message}\n  position: {format_game(game)}"
        super().__init__(message)


class CaseTag(enum.Enum):
    C1 = "L4C1"
    C2 = "L4C2"
    C3 = "L4C3"
    C4 = "L4C4"
    C5 = "L4C5"
    C6 = "L4C6"
    TERMINAL = "TerminalNoCase"


@dataclass(frozen=True)
class CaseMatch:
    tag: CaseTag
    detail: str = ""
    data: tuple = ()


# ---------------------------------------------------------------------------
# case detection (purely structural)


def _find_case1(game: DelayedGame) -> tuple[int, int, int] | None:
    """Unoccupied degree-2 vertex with both neighbors touched: (v, n1, n2)."""
    cls = classify(game)
    board = game.board
    for v in range(board.n):
        if board.degree(v) != 2 or not (cls.unoccupied >> v) & 1:
            continue
        n1, n2 = board.neighbors(v)
        if (cls.touched >> n1) & 1 and (cls.touched >> n2) & 1:
            return v, n1, n2
    return None


def _find_case2(game: DelayedGame) -> int | None:
    """Free edge with both endpoints touched: edge index."""
    touched = classify(game).touched
    board = game.board
    for e in iter_bits(game.free_mask):
        u, v = board.edges[e]
        if (touched >> u) & 1 and (touched >> v) & 1:
            return e
    return None


def _find_case3(game: DelayedGame) -> tuple[int, int] | None:
    """Claimed Toucher edge ending at a leaf: (edge index, leaf)."""
    board = game.board
    for e in iter_bits(game.toucher):
        u, v = board.edges[e]
        if board.degree(u) == 1:
            return e, u
        if board.degree(v) == 1:
            return e, v
    return None


def _find_case4(game: DelayedGame) -> tuple[int, int, int] | None:
    """Two Toucher edges sharing an endpoint: (vertex, edge, edge)."""
    board = game.board
    for v in range(board.n):
        at_v = [e for e in board.adjacency[v] if (game.toucher >> e) & 1]
        if len(at_v) >= 2:
            return v, at_v[0], at_v[1]
    return None


def _walk_run(game: DelayedGame, v0: int, v1: int) -> list[int]:
    """Follow unoccupied degree-2 vertices from v1 away from v0."""
    cls = classify(game)
    board = game.board
    run = [v0, v1]
    while True:
        cur = run[-1]
        if (cls.touched >> cur) & 1 or board.degree(cur) != 2:
            return run
        a, b = board.neighbors(cur)
        run.append(b if a == run[-2] else a)


def _find_case5(game: DelayedGame) -> tuple[int, ...] | None:
    """Unoccupied degree-2 vertex with a touched neighbor: run (v0..vm)."""
    cls = classify(game)
    board = game.board
    for v1 in range(board.n):
        if board.degree(v1) != 2 or not (cls.unoccupied >> v1) & 1:
            continue
        touched_nbrs = [w for w in board.neighbors(v1) if (cls.touched >> w) & 1]
        if not touched_nbrs:
            continue
        v0 = min(touched_nbrs)
        run = _walk_run(game, v0, v1)
        assert len(run) >= 3 or (cls.touched >> run[-1]) & 1 or board.degree(run[-1]) >= 3
        return tuple(run)
    return None


def _find_case6(game: DelayedGame) -> tuple[int, ...] | None:
    """Maximal all-unoccupied degree-2 chain between two branch vertices."""
    cls = classify(game)
    board = game.board

    def interior(v: int) -> bool:
        return board.degree(v) == 2 and (cls.unoccupied >> v) & 1

    for e in range(len(board.edges)):
        x, y = board.edges[e]
        if not (interior(x) and interior(y)):
            continue
        seq = [x, y]
        while interior(seq[-1]):
            a, b = board.neighbors(seq[-1])
            seq.append(b if a == seq[-2] else a)
        while interior(seq[0]):
            a, b = board.neighbors(seq[0])
            seq.insert(0, b if a == seq[1] else a)
        v0, vm = seq[0], seq[-1]
        if len(seq) - 1 < 3:
            continue
        if board.degree(v0) >= 3 and board.degree(vm) >= 3 \
                and (cls.unoccupied >> v0) & 1 and (cls.unoccupied >> vm) & 1:
            if vm < v0:
                seq.reverse()
            return tuple(seq)
    return None


_FINDERS = {
    1: _find_case1,
    2: _find_case2,
    3: _find_case3,
    4: _find_case4,
    5: _find_case5,
    6: _find_case6,
}


def case_applies(game: DelayedGame, case: int) -> bool:
    """Whether the numbered engine case (1..6) applies to the position."""
    return _FINDERS[case](game) is not None


def phase2_case(game: DelayedGame) -> CaseMatch:
    """First applicable engine case in order 1..6, else TerminalNoCase."""
    found1 = _find_case1(game)
    if found1 is not None:
        return CaseMatch(CaseTag.C1, data=found1)
    found2 = _find_case2(game)
    if found2 is not None:
        return CaseMatch(CaseTag.C2, data=(found2,))
    found3 = _find_case3(game)
    if found3 is not None:
        return CaseMatch(CaseTag.C3, data=found3)
    found4 = _find_case4(game)
    if found4 is not None:
        return CaseMatch(CaseTag.C4, data=found4)
    found5 = _find_case5(game)
    if found5 is not None:
        return CaseMatch(CaseTag.C5, detail=f"m={len(found5) - 1}", data=found5)
    found6 = _find_case6(game)
    if found6 is not None:
        return CaseMatch(CaseTag.C6, detail=f"m={len(found6) - 1}", data=found6)
    return CaseMatch(CaseTag.TERMINAL)


# ---------------------------------------------------------------------------
# target construction


def _norm(u: int, v: int) -> Pair:
    return (u, v) if u <= v else (v, u)


def _reduce(source: DelayedGame, *,
            delete: Iterable[int] = (),
            rewires: Mapping[Pair, Pair] | None = None,
            add_claimed: Iterable[Pair] = (),
            excluded: int | None = None,
            label: str = "",
            initial_toucher: int | None = None) -> ReductionCertificate:
    """Build the target game and its certificate.

    Deleted vertices keep their labels but lose all edges and join the
    excluded set.  `rewires` maps source edge pairs to their replacement
    pairs; claim membership travels with the edge, and free rewired edges
    become the certificate's edge-map exceptions.  `add_claimed` adds brand
    new Toucher edges.  Unless `excluded` is given, the target excludes
    exactly its leaves (plus all edgeless vertices).
    """
    board = source.board
    rewires = dict(rewires or {})
    deleted = mask_of(delete)
    c_pairs = {board.edges[e] for e in iter_bits(source.toucher)}
    d_pairs = {board.edges[e] for e in iter_bits(source.isolator)}
    new_pairs: list[Pair] = []
    new_claimed: set[Pair] = set()
    edge_map: dict[Pair, Pair] = {}
    for p in board.edges:
        q = _norm(*rewires.get(p, p))
        if (deleted >> q[0]) & 1 or (deleted >> q[1]) & 1:
            continue
        if p in d_pairs:
            raise StrategyInvariantError(
                f"Isolator edge {p} would survive the reduction", source)
        new_pairs.append(q)
        if p in c_pairs:
            new_claimed.add(q)
        elif q != p:
            edge_map[q] = p
    for p in add_claimed:
        p = _norm(*p)
        new_pairs.append(p)
        new_claimed.add(p)
    new_board = Board(board.n, tuple(sorted(new_pairs)))
    c_mask = mask_of(new_board.pair_index[p] for p in new_claimed)
    if excluded is None:
        x_mask = new_board.leaf_mask | new_board.degree_zero_mask
    else:
        x_mask = excluded | new_board.degree_zero_mask
    target = DelayedGame(new_board, toucher=c_mask, isolator=0,
                         excluded=x_mask, mover=Player.ISOLATOR)
    return make_certificate(source, target, edge_map, {}, label=label,
                            initial_toucher=initial_toucher)


def _lowest_leaf_in(board: Board, root: int, banned: int) -> int:
    """Lowest-labeled leaf of the component of `root` avoiding `banned`."""
    comp = board.component_mask(root, banned_vertices=banned)
    candidates = board.leaf_mask & comp & ~banned
    if not candidates:
        raise StrategyInvariantError(f"no leaf available beyond vertex {root}")
    return next(iter_bits(candidates))


def _strip_to_leaf(game: DelayedGame, u: int, keep: int, comp_root: int,
                   banned: int, label: str) -> ReductionCertificate:
    """Move every edge at `u` except (u, keep) onto a far-side leaf.

    Afterwards `u` is a leaf; the receiving leaf inherits u's claims and
    becomes internal.  Vertex counts, leaf counts, claim counts, and the
    occupied degree excess are all unchanged, so the ledger is all zeros.
    """
    board = game.board
    a = _lowest_leaf_in(board, comp_root, bit(banned))
    rewires = {}
    for x in board.neighbors(u):
        if x != keep:
            rewires[_norm(u, x)] = _norm(a, x)
    return _reduce(game, rewires=rewires, label=label)


# ---------------------------------------------------------------------------
# phase one and the leaf-peeling chain


@dataclass(frozen=True)
class PhaseOneTrace:
    """Record of a completed first phase on a fresh game."""

    game: DelayedGame
    toucher_mask: int
    isolator_mask: int
    isolated_vertices: tuple[int, ...]

    @property
    def r(self) -> int:
        return len(self.isolated_vertices)


def phase1_move(state: PlayState) -> int | None:
    """Lowest edge isolating a new vertex, or None when the phase is over."""
    moves = isolatable_edges(state)
    return min(moves) if moves else None


def _active_excluded(game: DelayedGame) -> int:
    return game.excluded & ~game.board.degree_zero_mask


def _chain_g(game: DelayedGame) -> int:
    n_eff = game.board.n - (game.board.degree_zero_mask & game.excluded).bit_count()
    return n_eff - 3 * _active_excluded(game).bit_count() - 3 * game.toucher.bit_count()


def lemma3_step(game: DelayedGame) -> ReductionCertificate | None:
    """One leaf-peeling step, or None when the excluded set is the leaf set.

    Handles the lowest leaf whose edge is Toucher's: if its neighbor has
    degree 2 the leaf is deleted and the neighbor excluded; with a
    branchier neighbor carrying a second claim the leaf is simply deleted;
    with a single claim one sibling edge is rewired onto the leaf.  The
    certificate is validated, and the quantity n - 3|X| - 3|C| is checked
    to drop by at most 1 (and only on claim-removing steps).
    """
    board = game.board
    leaves = board.leaf_mask
    if _active_excluded(game) == leaves:
        return None
    chosen = None
    for v in iter_bits(leaves):
        e = board.adjacency[v][0]
        if (game.toucher >> e) & 1:
            chosen = (v, board.other_end(e, v))
            break
    if chosen is None:
        raise StrategyInvariantError(
            "no touched leaf to peel although the excluded set is not the leaf set",
            game)
    v, w = chosen
    g_before = _chain_g(game)
    x = game.excluded
    dw = board.degree(w)
    claims_at_w = sum(1 for e in board.adjacency[w] if (game.toucher >> e) & 1)
    if dw == 1:
        # two-vertex component wholly claimed: drop it entirely
        cert = _reduce(game, delete=(v, w),
                       excluded=x & ~bit(v) & ~bit(w), label="L3C1-pair")
        drop_floor = -1
    elif dw == 2:
        cert = _reduce(game, delete=(v,),
                       excluded=(x & ~bit(v)) | bit(w), label="L3C1")
        drop_floor = -1
    elif claims_at_w >= 2:
        cert = _reduce(game, delete=(v,), excluded=x & ~bit(v), label="L3C2")
        drop_floor = 2
    else:
        v1 = min(u for u in board.neighbors(w) if u != v)
        cert = _reduce(game, rewires={_norm(w, v1): _norm(v, v1)},
                       excluded=x & ~bit(v), label="L3C3")
        drop_floor = 0
    problem = check_reduction(cert)
    if problem is not None:
        raise StrategyInvariantError(f"invalid peel step ({cert.label}): {problem}",
                                     game)
    if _chain_g(cert.target) < g_before + drop_floor:
        raise StrategyInvariantError(
            f"peel step {cert.label} dropped the account by more than allowed", game)
    new_x = _active_excluded(cert.target)
    if new_x & ~cert.target.board.leaf_mask:
        raise StrategyInvariantError("excluded set escaped the leaf set", cert.target)
    return cert


def lemma3_chain(game: DelayedGame) -> tuple[DelayedGame, tuple[ReductionCertificate, ...]]:
    """Run `lemma3_step` to its fixed point and collect the certificates."""
    current = game
    certs: list[ReductionCertificate] = []
    budget = max(1, game.board.n * game.board.n)
    for _ in range(budget):
        cert = lemma3_step(current)
        if cert is None:
            return current, tuple(certs)
        certs.append(cert)
        current = cert.target
    raise StrategyInvariantError("leaf peeling did not terminate within budget", game)


def lemma3_reduce(trace: PhaseOneTrace) -> tuple[DelayedGame, tuple[ReductionCertificate, ...]]:
    """Delete the isolated vertices, peel to a leaf-excluded game.

    Returns the final delayed game together with the certificate chain,
    and checks the account n - 3l - 3|C| of the result against the
    original size minus 5r + 4.
    """
    root = trace.game
    source = DelayedGame(root.board, toucher=trace.toucher_mask,
                         isolator=trace.isolator_mask, excluded=root.excluded,
                         mover=Player.ISOLATOR)
    first = _reduce(source, delete=trace.isolated_vertices,
                    excluded=root.excluded, label="phase1-deletion")
    problem = check_reduction(first)
    if problem is not None:
        raise StrategyInvariantError(f"invalid phase-one deletion: {problem}", source)
    final, chain = lemma3_chain(first.target)
    r = trace.r
    board = final.board
    n_t = board.n - (board.degree_zero_mask & final.excluded).bit_count()
    l_t = board.leaf_mask.bit_count()
    k_t = final.toucher.bit_count()
    if n_t - 3 * l_t - 3 * k_t < root.board.n - 5 * r - 4:
        raise StrategyInvariantError(
            f"peeled account {n_t - 3 * l_t - 3 * k_t} fell below "
            f"{root.board.n - 5 * r - 4}", final)
    return final, (first,) + chain


# ---------------------------------------------------------------------------
# episodes (cases 5 and 6)


@dataclass
class _Episode:
    tag: CaseTag
    run: tuple[int, ...]
    start_game: DelayedGame      # inner game when the episode opened
    started: bool = False
    i: int = -1
    j: int = -1
    pool_mode: bool = False      # m == 3 free-choice pool
    claimed: list[Pair] = field(default_factory=list)

    @property
    def m(self) -> int:
        return len(self.run) - 1

    def pair(self, a: int) -> Pair:
        return _norm(self.run[a], self.run[a + 1])


def _is_free(game: DelayedGame, p: Pair) -> bool:
    e = game.board.pair_index.get(p)
    return e is not None and (game.free_mask >> e) & 1 == 1


def _edge_owner(game: DelayedGame, p: Pair) -> str:
    e = game.board.pair_index[p]
    if (game.toucher >> e) & 1:
        return "T"
    if (game.isolator >> e) & 1:
        return "I"
    return "-"


# ---------------------------------------------------------------------------
# the phase-two engine


class StrategyState:
    """Phase-two controller for one leaf-excluded delayed game.

    Tracks the game as played on the real board, the stack of reductions
    down to the current inner game, and any scripted episode in progress.
    """

    def __init__(self, base: DelayedGame,
                 chain: Iterable[ReductionCertificate] = (),
                 inner: DelayedGame | None = None):
        self.base = base
        self.real_toucher = base.toucher
        self.real_isolator = base.isolator
        self.stack: list[tuple[ReductionCertificate, dict[Pair, Pair]]] = []
        for cert in chain:
            self._push(cert)
        self.inner = inner if inner is not None else (self.stack[-1][0].target
                                                      if self.stack else base)
        self.episode: _Episode | None = None
        self.fallback = False
        self.certificates: list[ReductionCertificate] = [c for c, _ in self.stack]
        self.episode_certificates: list[ReductionCertificate] = []
        self.transcript: list[str] = []

    def copy(self) -> "StrategyState":
        new = object.__new__(StrategyState)
        new.base = self.base
        new.real_toucher = self.real_toucher
        new.real_isolator = self.real_isolator
        new.stack = list(self.stack)
        new.inner = self.inner
        ep = self.episode
        if ep is not None:
            ep = _Episode(ep.tag, ep.run, ep.start_game, ep.started, ep.i, ep.j,
                          ep.pool_mode, list(ep.claimed))
        new.episode = ep
        new.fallback = self.fallback
        new.certificates = list(self.certificates)
        new.episode_certificates = list(self.episode_certificates)
        new.transcript = list(self.transcript)
        return new

    # -- stack plumbing -----------------------------------------------------

    def _push(self, cert: ReductionCertificate) -> None:
        problem = check_reduction(cert)
        if problem is not None:
            raise StrategyInvariantError(f"invalid certificate ({cert.label}): {problem}")
        inward = {}
        tgt = cert.target
        for e in iter_bits(tgt.free_mask):
            p = tgt.board.edges[e]
            inward[cert.map_edge(p)] = p
        self.stack.append((cert, inward))

    def _outward(self, p: Pair) -> Pair:
        for cert, _ in reversed(self.stack):
            p = cert.map_edge(p)
        return p

    def _inward(self, p: Pair) -> Pair | None:
        for _, inward in self.stack:
            q = inward.get(p)
            if q is None:
                return None
            p = q
        return p

    # -- observation and commitment ------------------------------------------

    def observe_toucher(self, e: int) -> None:
        board = self.base.board
        self.real_toucher |= bit(e)
        self.transcript.append(f"T {board.edges[e][0]}-{board.edges[e][1]}")
        q = self._inward(board.edges[e])
        if q is not None:
            ei = self.inner.board.pair_index[q]
            self.inner = replace(self.inner, toucher=self.inner.toucher | bit(ei))

    def _real_free_mask(self) -> int:
        return self.base.board.all_edges_mask & ~self.real_toucher & ~self.real_isolator

    def _commit_real(self, p: Pair, note: str) -> int:
        e = self.base.board.pair_index[p]
        if not (self._real_free_mask() >> e) & 1:
            raise StrategyInvariantError(f"engine chose claimed edge {p}")
        self.real_isolator |= bit(e)
        self.transcript.append(f"I {p[0]}-{p[1]} {note}")
        return e

    def _fallback_move(self) -> int:
        free = self._real_free_mask()
        if not free:
            raise MoveError("no free edges remain")
        e = next(iter_bits(free))
        p = self.base.board.edges[e]
        return self._commit_real(p, "phase=2 fallback")

    # -- episodes -------------------------------------------------------------

    def _open_episode(self, match: CaseMatch) -> Pair:
        run = match.data
        if match.tag is CaseTag.C5:
            v0 = run[0]
            if self.inner.board.degree(v0) != 1:
                # occupied run head: strip its other edges to a far leaf so
                # the head becomes a leaf before the scripted moves begin
                cert = _strip_to_leaf(self.inner, u=v0, keep=run[1],
                                      comp_root=run[2], banned=run[1],
                                      label="L4C5-strip")
                self._push_pre(cert)
                run = tuple(run)
        ep = _Episode(match.tag, tuple(run), self.inner)
        if match.tag is CaseTag.C6:
            ep.i = 1
        elif ep.m >= 4:
            ep.i = 2
        else:
            ep.i = 1
            ep.pool_mode = (ep.m == 3)
        ep.j = ep.i
        p = ep.pair(ep.i)
        ep.started = True
        ep.claimed.append(p)
        self.episode = ep
        return p

    def _episode_next(self) -> Pair | None:
        ep = self.episode
        assert ep is not None
        inner = self.inner
        if ep.pool_mode:
            pool = [ep.pair(0), ep.pair(2)]
            free = sorted((inner.board.pair_index[p], p) for p in pool
                          if p not in ep.claimed and _is_free(inner, p))
            if not free:
                return None
            p = free[0][1]
            if p == ep.pair(0):
                ep.i = 0
            else:
                ep.j = 2
            ep.claimed.append(p)
            return p
        if ep.j < ep.m - 1 and _is_free(inner, ep.pair(ep.j + 1)):
            ep.j += 1
            p = ep.pair(ep.j)
            ep.claimed.append(p)
            return p
        if ep.i >= 1 and _is_free(inner, ep.pair(ep.i - 1)):
            ep.i -= 1
            p = ep.pair(ep.i)
            ep.claimed.append(p)
            return p
        return None

    def _commit_episode(self, p: Pair) -> int:
        ep = self.episode
        assert ep is not None
        ei = self.inner.board.pair_index[p]
        self.inner = replace(self.inner, isolator=self.inner.isolator | bit(ei))
        q = self._outward(p)
        tag = ep.tag.value
        return self._commit_real(
            q, f"phase=2 case={tag} m={ep.m} i={ep.i} j={ep.j}")

    def _push_pre(self, cert: ReductionCertificate) -> None:
        src_bound = score_bound_or_zero(cert.source)
        self._push(cert)
        self.certificates.append(cert)
        self.inner = cert.target
        if cert.ledger.big_d > 0:
            raise StrategyInvariantError(
                f"pre-move reduction {cert.label} has positive ledger "
                f"{cert.ledger.big_d}")
        if score_bound_or_zero(cert.target) < src_bound and score_bound_or_zero(cert.source) > 0:
            raise StrategyInvariantError(
                f"pre-move reduction {cert.label} lowered the score bound")

    def _close_episode(self) -> None:
        ep = self.episode
        assert ep is not None
        self.episode = None
        inner = self.inner
        isolated = classify(inner).isolated.bit_count()
        quota = ep.j - ep.i
        if isolated != quota:
            raise StrategyInvariantError(
                f"episode isolated {isolated} vertices, expected {quota}", inner)
        cert = self._episode_reduction(ep)
        problem = check_reduction(cert)
        if problem is not None:
            raise StrategyInvariantError(
                f"invalid episode certificate ({cert.label}): {problem}", inner)
        if cert.ledger.big_d > 5 * quota:
            raise StrategyInvariantError(
                f"episode ledger {cert.ledger.big_d} exceeds {5 * quota} ({cert.label})",
                inner)
        if score_bound_or_zero(cert.target) + quota < score_bound_or_zero(ep.start_game):
            raise StrategyInvariantError(
                f"episode {cert.label} lost ground on the score bound", inner)
        self._push(cert)
        self.certificates.append(cert)
        self.episode_certificates.append(cert)
        self.inner = cert.target
        self.transcript.append(
            f"# close {cert.label} isolated={quota} D={cert.ledger.big_d}")

    def _episode_reduction(self, ep: _Episode) -> ReductionCertificate:
        inner = self.inner
        board = inner.board
        init = ep.start_game.toucher
        run = ep.run
        m = ep.m
        deg = board.degree

        def owner(a: int) -> str:
            return _edge_owner(inner, ep.pair(a))

        if ep.tag is CaseTag.C6:
            return self._case6_reduction(ep)

        if m == 2:
            return _reduce(inner, delete=run[:2], label="L4C5.1",
                           initial_toucher=init)
        if m == 3:
            v3 = run[3]
            touched_v3 = bool((classify(ep.start_game).touched >> v3) & 1)
            if touched_v3:
                d3 = deg(v3)
                if d3 == 1:
                    return _reduce(inner, delete=run, label="L4C5.2-path",
                                   initial_toucher=init)
                if d3 == 2:
                    v4 = next(u for u in board.neighbors(v3) if u != run[2])
                    d4 = deg(v4)
                    if d4 == 1:
                        return _reduce(inner, delete=run + (v4,),
                                       label="L4C5.2.1-path", initial_toucher=init)
                    if d4 == 2:
                        return _reduce(inner, delete=run, label="L4C5.2.1.1",
                                       initial_toucher=init)
                    u1 = min(u for u in board.neighbors(v4) if u != v3)
                    return _reduce(inner, delete=run[:3],
                                   rewires={_norm(v4, u1): _norm(v3, u1)},
                                   label="L4C5.2.1.2", initial_toucher=init)
                return _reduce(inner, delete=run[:3], label="L4C5.2.2",
                               initial_toucher=init)
            # head of case 5.3: branch vertex, initially unoccupied
            if owner(2) == "I":
                return _reduce(inner, delete=run[:3], label="L4C5.3a",
                               initial_toucher=init)
            u1 = min(u for u in board.neighbors(v3) if u != run[2])
            return _reduce(inner, delete=run[:2],
                           rewires={_norm(v3, u1): _norm(run[2], u1)},
                           label="L4C5.3b", initial_toucher=init)

        # m >= 4
        i, j = ep.i, ep.j
        vm = run[m]
        if j < m - 1:
            if owner(j + 1) != "T":
                raise StrategyInvariantError(
                    "blocked extension edge is not Toucher's", inner)
            if j < m - 2:
                return _reduce(inner, delete=run[:j + 2], label="L4C5.4.1",
                               initial_toucher=init)
            dm = deg(vm)
            if dm == 1:
                return _reduce(inner, delete=run, label="L4C5.4.2-path",
                               initial_toucher=init)
            if dm == 2:
                return _reduce(inner, delete=run[:m], label="L4C5.4.2",
                               initial_toucher=init)
            u1 = min(u for u in board.neighbors(vm) if u != run[m - 1])
            return _reduce(inner, delete=run[:m - 1],
                           rewires={_norm(vm, u1): _norm(run[m - 1], u1)},
                           label="L4C5.4.3", initial_toucher=init)
        # j == m - 1
        dm = deg(vm)
        if dm >= 3:
            return _reduce(inner, delete=run[:m], label="L4C5.4.4",
                           initial_toucher=init)
        if dm == 1:
            return _reduce(inner, delete=run, label="L4C5.4.5-path",
                           initial_toucher=init)
        vm1 = next(u for u in board.neighbors(vm) if u != run[m - 1])
        dm1 = deg(vm1)
        if dm1 == 1:
            return _reduce(inner, delete=run + (vm1,), label="L4C5.4.5-path",
                           initial_toucher=init)
        if dm1 == 2:
            return _reduce(inner, delete=run, label="L4C5.4.5.1",
                           initial_toucher=init)
        u1 = min(u for u in board.neighbors(vm1) if u != vm)
        return _reduce(inner, delete=run[:m],
                       rewires={_norm(vm1, u1): _norm(vm, u1)},
                       label="L4C5.4.5.2", initial_toucher=init)

    def _case6_reduction(self, ep: _Episode) -> ReductionCertificate:
        inner = self.inner
        board = inner.board
        init = ep.start_game.toucher
        run, m = ep.run, ep.m
        i, j = ep.i, ep.j
        if i == 1 and j == m - 1:
            # symmetric to (0, m-2) on the reversed run
            run = tuple(reversed(run))
            i, j = 0, m - 2
            ep = _Episode(ep.tag, run, ep.start_game, True, i, j, False,
                          list(ep.claimed))
        delete = run[1:j + 2] if j < m - 1 else run[1:m]

        def intermediate_leaf(root: int) -> int:
            banned = mask_of(delete)
            comp = board.component_mask(root, banned_vertices=banned)
            best = None
            for z in iter_bits(comp):
                deg = sum(1 for w in board.neighbors(z) if not (banned >> w) & 1)
                if deg == 1:
                    best = z if best is None else min(best, z)
            if best is None:
                raise StrategyInvariantError("no leaf in split component", inner)
            return best

        if i == 0 and j == m - 1:
            a = intermediate_leaf(run[0])
            b = intermediate_leaf(run[m])
            return _reduce(inner, delete=delete, add_claimed=[(a, b)],
                           label="L4C6.1", initial_toucher=init)
        if i == 0:
            a = intermediate_leaf(run[0])
            return _reduce(inner, delete=delete, add_claimed=[(a, run[j + 2])],
                           label="L4C6.2", initial_toucher=init)
        # i == 1, j < m - 1
        return _reduce(inner, delete=delete, add_claimed=[(run[0], run[j + 2])],
                       label="L4C6.4", initial_toucher=init)

    # -- pre-move reductions ---------------------------------------------------

    def _case1_certs(self, match: CaseMatch) -> None:
        v, n1, n2 = match.data
        board = self.inner.board
        cls = classify(self.inner)
        leaf1, leaf2 = board.degree(n1) == 1, board.degree(n2) == 1
        if leaf1 and leaf2:
            raise StrategyInvariantError(
                "both neighbors are leaves; the score bound should be spent", self.inner)
        if not leaf1 and not leaf2:
            occ = sorted(x for x in (n1, n2) if (cls.occupied >> x) & 1)
            u = occ[0]
            w = n2 if u == n1 else n1
            self._push_pre(_strip_to_leaf(self.inner, u=u, keep=v, comp_root=w,
                                          banned=v, label="L4C1-strip"))
            board = self.inner.board
        else:
            u = n1 if leaf1 else n2
            w = n2 if leaf1 else n1
        # now u is a leaf and w is occupied
        w1 = min(board.other_end(e, w) for e in board.adjacency[w]
                 if (self.inner.toucher >> e) & 1)
        dw, dw1 = board.degree(w), board.degree(w1)
        if dw == 2 and dw1 == 1:
            raise StrategyInvariantError(
                "four-vertex path remnant; the score bound should be spent", self.inner)
        if dw == 2 and dw1 == 2:
            self._push_pre(_reduce(self.inner, delete=(u, v, w), label="L4C1(2,2)"))
        elif dw == 3 and dw1 == 1:
            self._push_pre(_reduce(self.inner, delete=(u, v, w1), label="L4C1(3,1)"))
        else:
            self._push_pre(self._merge(w1, w, delete=(u, v), c2_excl=(v,),
                                       label="L4C1-merge"))

    def _case2_certs(self, match: CaseMatch) -> None:
        (e,) = match.data
        board = self.inner.board
        x, y = board.edges[e]
        leafx, leafy = board.degree(x) == 1, board.degree(y) == 1
        if leafx and leafy:
            raise StrategyInvariantError(
                "claimless two-vertex board; the score bound should be spent", self.inner)
        if not leafx and not leafy:
            u, v = (x, y) if x < y else (y, x)
            self._push_pre(_strip_to_leaf(self.inner, u=u, keep=v, comp_root=v,
                                          banned=u, label="L4C2-strip"))
            board = self.inner.board
        else:
            u = x if leafx else y
            v = y if leafx else x
        w = min(board.other_end(ec, v) for ec in board.adjacency[v]
                if (self.inner.toucher >> ec) & 1)
        dv, dw = board.degree(v), board.degree(w)
        if dv == 2 and dw == 1:
            raise StrategyInvariantError(
                "three-vertex path remnant; the score bound should be spent", self.inner)
        if dv == 2 and dw == 2:
            self._push_pre(_reduce(self.inner, delete=(u, v), label="L4C2(2,2)"))
        elif dv == 3 and dw == 1:
            self._push_pre(_reduce(self.inner, delete=(u, w), label="L4C2(3,1)"))
        else:
            self._push_pre(self._merge(v, w, delete=(u,), c1_excl=(u,),
                                       label="L4C2-merge"))

    def _merge(self, c1: int, c2: int, delete: tuple[int, ...], label: str,
               c1_excl: tuple[int, ...] = (), c2_excl: tuple[int, ...] = ()) -> ReductionCertificate:
        """Fuse the stars at c1 and c2 across their claimed bridge: c1 keeps
        only its first listed satellite, every other satellite ends at c2."""
        board = self.inner.board
        first = sorted(x for x in board.neighbors(c1) if x != c2 and x not in c1_excl)
        second = sorted(x for x in board.neighbors(c2) if x != c1 and x not in c2_excl)
        if len(first) + len(second) < 2:
            raise StrategyInvariantError("merge requires two satellites", self.inner)
        rewires: dict[Pair, Pair] = {}
        if first:
            for x in first[1:]:
                rewires[_norm(c1, x)] = _norm(c2, x)
        else:
            a1 = second[0]
            rewires[_norm(c2, a1)] = _norm(c1, a1)
        return _reduce(self.inner, delete=delete, rewires=rewires, label=label)

    def _case3_certs(self, match: CaseMatch) -> None:
        e, leaf = match.data
        board = self.inner.board
        v = board.other_end(e, leaf)
        dv = board.degree(v)
        if dv == 1:
            raise StrategyInvariantError(
                "claimed two-vertex board; the score bound should be spent", self.inner)
        if dv == 2:
            self._push_pre(_reduce(self.inner, delete=(leaf,), label="L4C3-peel"))
        else:
            v1 = min(u for u in board.neighbors(v) if u != leaf)
            self._push_pre(_reduce(self.inner,
                                   rewires={_norm(v, v1): _norm(leaf, v1)},
                                   label="L4C3-rewire"))

    def _case4_certs(self, match: CaseMatch) -> None:
        u, ei, ej = match.data
        board = self.inner.board
        v = board.other_end(ei, u)
        w = board.other_end(ej, u)
        if board.degree(v) == 1 or board.degree(w) == 1:
            raise StrategyInvariantError(
                "claim pair ends at a leaf; case 3 should have fired", self.inner)
        rewires = {_norm(u, x): _norm(v, x)
                   for x in board.neighbors(u) if x not in (v, w)}
        self._push_pre(_reduce(self.inner, delete=(u,), rewires=rewires,
                               add_claimed=[(v, w)], label="L4C4-contract"))

    # -- main entry --------------------------------------------------------------

    def move(self) -> int:
        """Choose and commit Isolator's next move; returns a real edge index."""
        if self.fallback:
            return self._fallback_move()
        if self.episode is not None:
            p = self._episode_next()
            if p is not None:
                return self._commit_episode(p)
            self._close_episode()
        guard = 0
        while True:
            guard += 1
            if guard > 4 * self.base.board.n * self.base.board.n + 16:
                raise StrategyInvariantError("engine dispatch did not settle", self.inner)
            if self.inner.free_mask == 0:
                self.fallback = True
                return self._fallback_move()
            if score_bound_or_zero(self.inner) <= 0:
                self.fallback = True
                return self._fallback_move()
            match = phase2_case(self.inner)
            if match.tag is CaseTag.TERMINAL:
                raise StrategyInvariantError(
                    "no case applies while the score bound is positive", self.inner)
            if match.tag is CaseTag.C1:
                self._case1_certs(match)
            elif match.tag is CaseTag.C2:
                self._case2_certs(match)
            elif match.tag is CaseTag.C3:
                self._case3_certs(match)
            elif match.tag is CaseTag.C4:
                self._case4_certs(match)
            else:
                p = self._open_episode(match)
                return self._commit_episode(p)


def phase2_move(ss: StrategyState, toucher_last: int | None = None) -> int:
    """Feed Toucher's last move (if any) to the engine and get its reply."""
    if toucher_last is not None:
        ss.observe_toucher(toucher_last)
    return ss.move()


# ---------------------------------------------------------------------------
# whole-game session


class IsolatorSession:
    """Stateful strategy for one game: greedy phase, then the case engine.

    The session is fed every move in order (`observe`) and asked for its
    own (`propose`).  Histories replayed through `observe` must have been
    produced by this same strategy; the phase flag is sticky.
    """

    def __init__(self, game: DelayedGame):
        if game.excluded == 0 and game.isolator == 0 and game.toucher == 0:
            self.phase = 1
        elif game.isolator == 0 and game.excluded == (
                game.board.leaf_mask | (game.board.degree_zero_mask & game.excluded)):
            self.phase = 2
        else:
            raise MoveError("strategy serves fresh games or leaf-excluded delayed games")
        self.game = game
        self.toucher_mask = game.toucher
        self.isolator_mask = game.isolator
        self.isolated: list[int] = []
        self.engine: StrategyState | None = None
        if self.phase == 2:
            self.engine = StrategyState(game)
        self.transcript: list[str] = []

    def copy(self) -> "IsolatorSession":
        new = object.__new__(IsolatorSession)
        new.phase = self.phase
        new.game = self.game
        new.toucher_mask = self.toucher_mask
        new.isolator_mask = self.isolator_mask
        new.isolated = list(self.isolated)
        new.engine = self.engine.copy() if self.engine is not None else None
        new.transcript = list(self.transcript)
        return new

    def _state(self) -> PlayState:
        extraT = set_of(self.toucher_mask & ~self.game.toucher)
        extraI = set_of(self.isolator_mask & ~self.game.isolator)
        # ordering inside PlayState does not matter for the checks we do here
        return PlayState(self.game, tuple(sorted(extraT)), tuple(sorted(extraI)))

    def observe(self, e: int, player: Player) -> None:
        if player is Player.TOUCHER:
            self.toucher_mask |= bit(e)
            if self.engine is not None:
                self.engine.observe_toucher(e)
            else:
                u, v = self.game.board.edges[e]
                self.transcript.append(f"T {u}-{v}")
        else:
            mv = self.propose()
            if mv != e:
                raise MoveError(f"history replays move {e}, strategy plays {mv}")

    def propose(self) -> int:
        if self.phase == 1:
            state = self._state()
            before = _isolated_mask(self.game.board, self.isolator_mask,
                                    self.game.excluded)
            mv = phase1_move(state)
            if mv is not None:
                after = _isolated_mask(self.game.board, self.isolator_mask | bit(mv),
                                       self.game.excluded)
                gained = after & ~before
                if gained.bit_count() != 1:
                    raise StrategyInvariantError(
                        f"greedy move {mv} isolated {gained.bit_count()} vertices")
                vtx = next(iter_bits(gained))
                self.isolated.append(vtx)
                self.isolator_mask |= bit(mv)
                u, v = self.game.board.edges[mv]
                self.transcript.append(f"I {u}-{v} phase=1 isolates={vtx}")
                return mv
            # the greedy option is gone for good: rewrite and hand over
            self.phase = 2
            trace = PhaseOneTrace(self.game, self.toucher_mask, self.isolator_mask,
                                  tuple(self.isolated))
            final, chain = lemma3_reduce(trace)
            base = DelayedGame(self.game.board, toucher=self.toucher_mask,
                               isolator=self.isolator_mask,
                               excluded=self.game.excluded, mover=Player.ISOLATOR)
            self.engine = StrategyState(base, chain=chain, inner=final)
            self.engine.transcript = self.transcript
        assert self.engine is not None
        mv = self.engine.move()
        self.isolator_mask |= bit(mv)
        self.transcript = self.engine.transcript
        return mv


def _isolated_mask(board: Board, isolator_mask: int, excluded: int) -> int:
    out = 0
    for v in range(board.n):
        if (excluded >> v) & 1:
            continue
        if board.incident_masks[v] & ~isolator_mask == 0:
            out |= bit(v)
    return out


def _history(state: PlayState) -> Iterator[tuple[Player, int]]:
    seqs = {Player.TOUCHER: state.toucher_moves, Player.ISOLATOR: state.isolator_moves}
    turn = state.game.mover
    idx = {Player.TOUCHER: 0, Player.ISOLATOR: 0}
    total = len(state.toucher_moves) + len(state.isolator_moves)
    for _ in range(total):
        yield turn, seqs[turn][idx[turn]]
        idx[turn] += 1
        turn = turn.opponent


def full_strategy(state: PlayState) -> int:
    """Isolator's move for the position, replaying its history from scratch."""
    if state.mover is not Player.ISOLATOR:
        raise MoveError("not Isolator's turn")
    session = IsolatorSession(state.game)
    for player, e in _history(state):
        session.observe(e, player)
    return session.propose()


def make_strategy_policy(game: DelayedGame) -> Callable[[PlayState], int]:
    """`full_strategy` with session reuse across a search over histories.

    Returns the same moves as `full_strategy` but caches sessions by move
    prefix, so adversarial searches that extend histories one move at a
    time pay for one observation per call instead of a full replay.
    """
    cache: dict[tuple, IsolatorSession] = {(): IsolatorSession(game)}

    def policy(state: PlayState) -> int:
        hist = tuple(_history(state))
        k = len(hist)
        while hist[:k] not in cache:
            k -= 1
        session = cache[hist[:k]].copy()
        for player, e in hist[k:]:
            session.observe(e, player)
        mv = session.propose()
        cache[hist + ((Player.ISOLATOR, mv),)] = session
        return mv

    policy.sessions = cache  # type: ignore[attr-defined] - inspected by reports
    return policy
