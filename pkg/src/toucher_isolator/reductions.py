"""Reduction certificates, their verification, and the closing bound machinery.

A reduction maps a position onto a smaller one via injections on free edges
and on unoccupied vertices: the edge map must preserve endpoint patterns and
the vertex map must preserve free-edge neighborhoods.  Any valid reduction
lets Isolator replay a strategy for the small game on the big one, so the
big game's score is at least the small game's score plus the vertices
already isolated.

The maps are stored as exception dictionaries: anything unlisted maps to
itself.  Reduced boards therefore keep the original vertex labels; deleted
vertices simply lose all their edges and join the excluded set.

The delta ledger compares a position to its reduction:

    dn  vertex-count drop          dl  leaf-count drop
    dk  Toucher claim-count drop   ds  occupied degree-excess drop
    big_d = dn - 3*dl - 3*dk + ds

For reductions performed before any move, ``big_d <= 0`` guarantees the
score bound does not drop.  For reductions closing a scripted episode that
isolated ``q`` vertices, ``big_d <= 5*q`` does the same after crediting the
episode.  Episode ledgers compare against the Toucher claims from *before*
the episode, which is what `initial_toucher` is for.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .game import (
    Board,
    DelayedGame,
    Pair,
    Player,
    Tree,
    bit,
    classify,
    format_game,
    iter_bits,
    mask_of,
    pattern_of_pair,
    set_of,
)

__all__ = [
    "Ledger",
    "ReductionCertificate",
    "ForestSplit",
    "FinalCaseBound",
    "CasePreconditionError",
    "SplitIdentityError",
    "make_certificate",
    "compute_ledger",
    "check_reduction",
    "lemma2_bound_check",
    "Lemma2Check",
    "score_bound",
    "effective_vertex_count",
    "leaf_count",
    "lemma5_check",
    "forest_split",
    "final_case_bound",
    "certificate_to_text",
]


class CasePreconditionError(ValueError):
    """A named engine case applies where the operation forbids it."""

    def __init__(self, case: str):
        super().__init__(f"configuration contains a {case} pattern")
        self.case = case


class SplitIdentityError(AssertionError):
    """A forest-split identity failed; this would contradict the analysis."""


# ---------------------------------------------------------------------------
# effective counts (ghost vertices are edgeless and excluded; they do not
# count as vertices or leaves of the reduced tree)


def ghost_mask(game: DelayedGame) -> int:
    return game.board.degree_zero_mask & game.excluded


def effective_vertex_count(game: DelayedGame) -> int:
    return game.board.n - ghost_mask(game).bit_count()


def leaf_count(game: DelayedGame) -> int:
    return game.board.leaf_mask.bit_count()


def _occupied_degree_excess(game: DelayedGame, toucher: int) -> int:
    """Sum of (degree - 2) over non-excluded vertices touching `toucher`."""
    board = game.board
    total = 0
    for v in range(board.n):
        if (game.excluded >> v) & 1:
            continue
        if board.incident_masks[v] & toucher:
            total += board.degree(v) - 2
    return total


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class Ledger:
    dn: int
    dl: int
    dk: int
    ds: int
    big_d: int


@dataclass(frozen=True)
class ReductionCertificate:
    """A claimed reduction from `source` onto `target` plus its ledger.

    `edge_map` sends free target edges to free source edges and
    `vertex_map` sends unoccupied target vertices to unoccupied source
    vertices; both list exceptions only, defaulting to the identity.
    `initial_toucher` is the Toucher claim mask the ledger's dk/ds terms
    are measured against (the source's own claims unless the certificate
    closes an episode).
    """

    source: DelayedGame
    target: DelayedGame
    edge_map: Mapping[Pair, Pair] = field(default_factory=dict)
    vertex_map: Mapping[int, int] = field(default_factory=dict)
    ledger: Ledger = Ledger(0, 0, 0, 0, 0)
    label: str = ""
    initial_toucher: int | None = None

    @property
    def initial_toucher_mask(self) -> int:
        return self.source.toucher if self.initial_toucher is None else self.initial_toucher

    def map_edge(self, pair: Pair) -> Pair:
        return self.edge_map.get(pair, pair)

    def map_vertex(self, v: int) -> int:
        return self.vertex_map.get(v, v)

    @property
    def isolated_count(self) -> int:
        """Scoring vertices of the source isolated by its pre-claimed edges."""
        return classify(self.source).isolated.bit_count()


def compute_ledger(source: DelayedGame, target: DelayedGame,
                   initial_toucher: int | None = None) -> Ledger:
    init = source.toucher if initial_toucher is None else initial_toucher
    dn = effective_vertex_count(source) - effective_vertex_count(target)
    dl = leaf_count(source) - leaf_count(target)
    dk = init.bit_count() - target.toucher.bit_count()
    ds = (_occupied_degree_excess(source, init)
          - _occupied_degree_excess(target, target.toucher))
    return Ledger(dn, dl, dk, ds, dn - 3 * dl - 3 * dk + ds)


def make_certificate(source: DelayedGame, target: DelayedGame,
                     edge_map: Mapping[Pair, Pair] | None = None,
                     vertex_map: Mapping[int, int] | None = None,
                     label: str = "",
                     initial_toucher: int | None = None) -> ReductionCertificate:
    return ReductionCertificate(
        source=source,
        target=target,
        edge_map=dict(edge_map or {}),
        vertex_map=dict(vertex_map or {}),
        ledger=compute_ledger(source, target, initial_toucher),
        label=label,
        initial_toucher=initial_toucher,
    )


def _free_pairs_at(game: DelayedGame, v: int) -> frozenset[Pair]:
    board = game.board
    free = game.free_mask
    return frozenset(board.edges[e] for e in board.adjacency[v] if (free >> e) & 1)


def check_reduction(cert: ReductionCertificate) -> str | None:
    """Verify a certificate; returns None if valid, else the first violation.

    Checks, in order: the target has no pre-claimed Isolator edges and no
    isolated vertices, the edge map is a pattern-preserving injection of
    free target edges into free source edges, the vertex map is an
    injection of unoccupied target vertices into unoccupied source vertices
    that preserves free-edge neighborhoods, and the stored ledger matches a
    recomputation.
    """
    src, tgt = cert.source, cert.target
    if tgt.isolator != 0:
        return "target has pre-claimed Isolator edges"
    tgt_cls = classify(tgt)
    if tgt_cls.isolated != 0:
        return f"target has isolated vertices {sorted(set_of(tgt_cls.isolated))}"

    src_cls = classify(src)
    src_free = src.free_pairs
    src_touched = src_cls.touched
    tgt_touched = tgt_cls.touched

    images: dict[Pair, Pair] = {}
    for e in sorted(set_of(tgt.free_mask)):
        p = tgt.board.edges[e]
        q = cert.map_edge(p)
        if q not in src_free:
            return f"edge map sends {p} to {q}, not a free source edge"
        if q in images.values():
            return f"edge map is not injective at {q}"
        images[p] = q
        pat_t = pattern_of_pair(tgt, p, tgt_touched)
        pat_s = pattern_of_pair(src, q, src_touched)
        if pat_t != pat_s:
            return f"pattern mismatch: {p} has pattern {pat_t}, image {q} has {pat_s}"

    seen_v: set[int] = set()
    src_unocc = src_cls.unoccupied
    for v in sorted(set_of(tgt_cls.unoccupied)):
        w = cert.map_vertex(v)
        if not (src_unocc >> w) & 1:
            return f"vertex map sends {v} to {w}, not unoccupied in the source"
        if w in seen_v:
            return f"vertex map is not injective at {w}"
        seen_v.add(w)
        want = _free_pairs_at(src, w)
        got = frozenset(images[p] for p in _free_pairs_at(tgt, v))
        if want != got:
            return (f"neighborhood mismatch at {v}->{w}: "
                    f"{sorted(got)} != {sorted(want)}")

    recomputed = compute_ledger(src, tgt, cert.initial_toucher)
    if recomputed != cert.ledger:
        return f"ledger mismatch: stored {cert.ledger}, recomputed {recomputed}"
    return None


@dataclass(frozen=True)
class Lemma2Check:
    holds: bool
    alpha_source: int
    alpha_target: int
    isolated: int


def lemma2_bound_check(cert: ReductionCertificate, limit: int = 22) -> Lemma2Check:
    """Exact check that the source scores at least `isolated + target score`."""
    from .solver import alpha

    a_src = alpha(cert.source, limit=limit, pruned=True).value
    a_tgt = alpha(cert.target, limit=limit, pruned=True).value
    iso = cert.isolated_count
    return Lemma2Check(a_src >= iso + a_tgt, a_src, a_tgt, iso)


# ---------------------------------------------------------------------------
# the score bound


def score_bound(game: DelayedGame) -> int:
    """Lower-bound witness for a leaf-excluded position:

        floor((n - 3l - 3k + 7 + sum_{v occupied}(d(v) - 2)) / 5)

    where n and l count the reduced tree's vertices and leaves, k counts
    Toucher's pre-claims, and occupied vertices are the non-leaf endpoints
    of Toucher edges.  Requires the excluded set to be exactly the leaves
    (plus edgeless ghosts) and no pre-claimed Isolator edges.
    """
    if game.isolator != 0:
        raise ValueError("position has pre-claimed Isolator edges")
    expected_x = game.board.leaf_mask | ghost_mask(game)
    if game.excluded != expected_x:
        raise ValueError("excluded set is not the leaf set")
    n = effective_vertex_count(game)
    l = leaf_count(game)
    k = game.toucher.bit_count()
    excess = _occupied_degree_excess(game, game.toucher)
    return (n - 3 * l - 3 * k + 7 + excess) // 5


def score_bound_or_zero(game: DelayedGame) -> int:
    """`score_bound` with empty boards pinned to 0 (nothing left to earn)."""
    if effective_vertex_count(game) == 0:
        return 0
    return score_bound(game)


# ---------------------------------------------------------------------------
# leaf-count lower bound for branchy trees


def lemma5_check(tree: Tree) -> tuple[bool, bool]:
    """(hypothesis, conclusion) of the leaf-count bound.

    hypothesis: no two adjacent degree-2 vertices and no leaf adjacent to a
    degree-2 vertex.  conclusion: 3 * (leaf count) >= n + 5.  Whenever the
    hypothesis holds the conclusion must too.
    """
    if tree.n < 3:
        raise ValueError("needs at least 3 vertices")
    hypothesis = True
    for u, v in tree.edges:
        du, dv = tree.degree(u), tree.degree(v)
        if (du == 2 and dv == 2) or (du == 2 and dv == 1) or (du == 1 and dv == 2):
            hypothesis = False
            break
    leaves = tree.leaf_mask.bit_count()
    conclusion = 3 * leaves >= tree.n + 5
    return hypothesis, conclusion


# ---------------------------------------------------------------------------
# forest splitting


@dataclass(frozen=True)
class ForestSplit:
    """Result of cutting every Toucher edge and re-attaching fresh leaves.

    For each claimed edge (a, b) with d = deg(a) + deg(b) - 2, the step
    deletes a and b and grafts one new leaf onto each resulting piece.
    The identities (checked on construction by `forest_split`):

        component count   = 1 - k + sum(d_i)
        total vertices    = n - 2k + sum(d_i)
        total leaves      = l + sum(d_i)

    and every component has at least 4 vertices.
    """

    components: tuple[Tree, ...]
    per_edge: tuple[tuple[int, int, int], ...]  # (a, b, d_i)
    component_count: int
    component_sizes: tuple[int, ...]
    component_leaves: tuple[int, ...]


def _first_applicable_case(tree: Tree, c_mask: int, cases: Iterable[int]) -> int | None:
    from .strategy import case_applies

    game = DelayedGame(tree, toucher=c_mask, excluded=tree.leaf_mask,
                       mover=Player.ISOLATOR)
    for case in cases:
        if case_applies(game, case):
            return case
    return None


def forest_split(tree: Tree, c_edges: Iterable[int]) -> ForestSplit:
    """Perform the cut-and-graft process for the claimed edges of a tree.

    Precondition (checked): none of the engine's pre-move reduction cases
    1..4 applies to the position with leaves excluded; otherwise the cut
    endpoints could coincide, sit on leaves, or be adjacent, and the count
    identities below would not be forced.
    """
    c_set = sorted(set(c_edges))
    c_mask = mask_of(c_set)
    case = _first_applicable_case(tree, c_mask, (1, 2, 3, 4))
    if case is not None:
        raise CasePreconditionError(f"case {case}")

    k = len(c_set)
    degrees = {v: tree.degree(v) for v in range(tree.n)}
    per_edge = []
    endpoints: set[int] = set()
    for e in c_set:
        a, b = tree.edges[e]
        if a in endpoints or b in endpoints:
            raise SplitIdentityError("claimed edges share an endpoint")
        if degrees[a] == 1 or degrees[b] == 1:
            raise SplitIdentityError("claimed edge ends at a leaf")
        endpoints.update((a, b))
        per_edge.append((a, b, degrees[a] + degrees[b] - 2))

    # work on a label->neighbors map so grafted leaves can take fresh labels
    adj: dict[int, set[int]] = {v: set(tree.neighbors(v)) for v in range(tree.n)}
    next_label = tree.n
    for a, b, d in per_edge:
        pieces = (adj[a] - {b}) | (adj[b] - {a})
        if len(pieces) != d:
            raise SplitIdentityError("cut degree does not match the piece count")
        for v in (a, b):
            for w in adj[v]:
                adj[w].discard(v)
            del adj[v]
        for w in pieces:
            adj[w].add(next_label)
            adj[next_label] = {w}
            next_label += 1

    # collect components
    unvisited = set(adj)
    components: list[Tree] = []
    while unvisited:
        start = min(unvisited)
        comp = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        unvisited -= comp
        labels = sorted(comp)
        index = {v: i for i, v in enumerate(labels)}
        comp_edges = sorted({tuple(sorted((index[u], index[v])))
                             for u in comp for v in adj[u] if v in comp})
        components.append(Tree(len(labels), tuple(comp_edges)))

    sum_d = sum(d for _, _, d in per_edge)
    n, l = tree.n, tree.leaf_mask.bit_count()
    sizes = tuple(c.n for c in components)
    leaves = tuple(c.leaf_mask.bit_count() for c in components)
    count = len(components)
    if count != 1 - k + sum_d:
        raise SplitIdentityError(f"component count {count} != {1 - k + sum_d}")
    if sum(sizes) != n - 2 * k + sum_d:
        raise SplitIdentityError(f"vertex total {sum(sizes)} != {n - 2 * k + sum_d}")
    if sum(leaves) != l + sum_d:
        raise SplitIdentityError(f"leaf total {sum(leaves)} != {l + sum_d}")
    small = [s for s in sizes if s < 4]
    if small:
        raise SplitIdentityError(f"component of size {min(small)} (< 4)")
    return ForestSplit(tuple(components), tuple(per_edge), count, sizes, leaves)


# ---------------------------------------------------------------------------
# the closing argument: no case applies => the score bound is non-positive


@dataclass(frozen=True)
class FinalCaseBound:
    certified: bool
    applicable_case: str | None
    score: int
    numerator: int
    split: ForestSplit | None
    detail: str = ""


def final_case_bound(tree: Tree, c_edges: Iterable[int]) -> FinalCaseBound:
    """Certify that the score bound is <= 0 when no engine case applies.

    Dispatches the engine's cases 1..6 on the leaf-excluded position; if
    one applies the result names it.  Otherwise the forest split runs, the
    leaf-count bound is applied per component, and the inequality chain is
    evaluated numerically down to the non-positive score bound.
    """
    from .strategy import phase2_case, CaseTag

    c_set = sorted(set(c_edges))
    c_mask = mask_of(c_set)
    game = DelayedGame(tree, toucher=c_mask, excluded=tree.leaf_mask,
                       mover=Player.ISOLATOR)
    n = tree.n
    l = tree.leaf_mask.bit_count()
    k = len(c_set)
    excess = _occupied_degree_excess(game, c_mask)
    numerator = n + 7 - 3 * k - 3 * l + excess
    score = score_bound(game)

    match = phase2_case(game)
    if match.tag is not CaseTag.TERMINAL:
        return FinalCaseBound(False, match.tag.value, score, numerator, None,
                              detail="a reduction or episode case applies")
    if n == 1:
        # a single free vertex scores unconditionally; the closing argument
        # does not apply and the bound genuinely exceeds 0
        return FinalCaseBound(False, None, score, numerator, None,
                              detail="degenerate single-vertex board")

    split = forest_split(tree, c_set)
    sum_d = sum(d for _, _, d in split.per_edge)

    # per-component leaf-count bound
    for comp, l_i in zip(split.components, split.component_leaves):
        hyp, concl = lemma5_check(comp)
        if not hyp:
            raise SplitIdentityError("a component violates the branching hypothesis")
        if not concl:
            raise SplitIdentityError("a component violates the leaf-count bound")
        assert 3 * l_i >= comp.n + 5

    # occupied degree excess equals the cut-degree excess when the cut
    # endpoints are exactly the occupied vertices
    assert excess == sum(d - 2 for _, _, d in split.per_edge), \
        "occupied degree excess disagrees with the cut degrees"

    # summed bound: 3(l + sum d) >= (n - 2k + sum d) + 5 * component count
    lhs = 3 * (l + sum_d)
    rhs = (n - 2 * k + sum_d) + 5 * split.component_count
    assert lhs >= rhs, (lhs, rhs)
    # rearranged: 3l + 3k >= n + 5 + 3*sum_d - 4k
    assert 3 * l + 3 * k >= n + 5 + 3 * sum_d - 4 * k
    # with the excess identity: 3l + 3k >= n + 5 + excess + 2*sum_d - 2k
    assert 3 * l + 3 * k >= n + 5 + excess + 2 * sum_d - 2 * k
    # each cut degree is at least 2, so 2*sum_d - 2k >= 2k >= 0
    assert all(d >= 2 for _, _, d in split.per_edge)
    assert 2 * sum_d - 2 * k >= 2 * k >= 0
    # hence the numerator is at most 2 and the bound is at most 0
    if numerator > 2 or score > 0:
        raise SplitIdentityError(
            f"closing chain did not force the bound: numerator {numerator}, score {score}")
    return FinalCaseBound(True, None, score, numerator, split)


# ---------------------------------------------------------------------------
# serialization for golden tests


def certificate_to_text(cert: ReductionCertificate) -> str:
    lines = [f"label: {cert.label or '(unlabeled)'}",
             f"source: {format_game(cert.source)}",
             f"target: {format_game(cert.target)}"]
    if cert.initial_toucher is not None:
        lines.append(f"initial-C: {_fmt_mask(cert.initial_toucher)}")
    for p in sorted(cert.edge_map):
        q = cert.edge_map[p]
        lines.append(f"fE: {p[0]}-{p[1]} -> {q[0]}-{q[1]}")
    for v in sorted(cert.vertex_map):
        lines.append(f"fV: {v} -> {cert.vertex_map[v]}")
    led = cert.ledger
    lines.append(f"ledger: dn={led.dn} dl={led.dl} dk={led.dk} ds={led.ds} D={led.big_d}")
    return "\n".join(lines)


def _fmt_mask(mask: int) -> str:
    return "{" + ",".join(str(i) for i in iter_bits(mask)) + "}"
