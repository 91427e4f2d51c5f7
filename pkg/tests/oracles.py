"""Independent reference implementations the tests check the package against.

Everything here goes through the public play-state API (no bitmask
internals) or through textbook constructions, so agreement with the
package is meaningful.
"""

from __future__ import annotations

import heapq
from itertools import permutations

from toucher_isolator import (
    DelayedGame,
    PlayState,
    Player,
    Tree,
    apply_move,
    final_score,
    initial_state,
    legal_moves,
    make_tree,
)


def brute_value(game: DelayedGame) -> int:
    """Plain negamax-style recursion over the play-state API, no memo."""

    def rec(state: PlayState) -> int:
        moves = sorted(legal_moves(state))
        if not moves:
            return final_score(state)
        values = [rec(apply_move(state, e)) for e in moves]
        return min(values) if state.mover is Player.TOUCHER else max(values)

    return rec(initial_state(game))


def pruefer_tree(seq: list[int], n: int) -> Tree:
    """Labeled tree from its sequence encoding (any seq in [0,n)^(n-2))."""
    assert n >= 2 and len(seq) == n - 2
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    heap = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(heap)
    edges = []
    for x in seq:
        v = heapq.heappop(heap)
        edges.append((v, x))
        degree[v] -= 1
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(heap, x)
    a = heapq.heappop(heap)
    b = heapq.heappop(heap)
    edges.append((a, b))
    return make_tree(n, edges)


def all_labeled_edge_sets(n: int) -> set[frozenset]:
    """Edge sets of all n^(n-2) labeled trees, via sequence enumeration."""
    if n == 1:
        return {frozenset()}
    if n == 2:
        return {frozenset({(0, 1)})}
    out = set()
    seq = [0] * (n - 2)
    while True:
        t = pruefer_tree(seq, n)
        out.add(frozenset(t.edges))
        i = n - 3
        while i >= 0 and seq[i] == n - 1:
            seq[i] = 0
            i -= 1
        if i < 0:
            return out
        seq[i] += 1


def relabeled_edge_sets(tree: Tree) -> set[frozenset]:
    """All distinct edge sets obtained by permuting the vertex labels."""
    out = set()
    for perm in permutations(range(tree.n)):
        out.add(frozenset(tuple(sorted((perm[a], perm[b]))) for a, b in tree.edges))
    return out


def brute_isomorphic(t1: Tree, t2: Tree) -> bool:
    if t1.n != t2.n:
        return False
    target = set(t2.edges)
    for perm in permutations(range(t1.n)):
        if all(tuple(sorted((perm[a], perm[b]))) in target for a, b in t1.edges):
            return True
    return False
