"""Non-isomorphic tree enumeration, canonical codes, and named families.

Free trees are generated by the Wright-Richmond-Odlyzko-McKay level-sequence
iteration (one representative per isomorphism class) and streamed in
canonical-code order so reports are reproducible.  The canonical code is an
AHU-style parenthesization rooted at the tree's center, with a prefix that
separates the one-center and two-center cases.
"""

from __future__ import annotations

import random
from typing import Iterable, Iterator

from .game import DelayedGame, Pair, Player, Tree, make_tree, mask_of

MAX_ENUMERATION_N = 16

# number of free trees on n vertices, n = 1..16
FREE_TREE_COUNTS = (1, 1, 1, 2, 3, 6, 11, 23, 47, 106, 235, 551, 1301, 3159, 7741, 19320)


class SamplingError(RuntimeError):
    """No admissible configuration found within the rejection budget."""


# ---------------------------------------------------------------------------
# canonical codes


def _rooted_code(tree: Tree, root: int, banned: int) -> bytes:
    """AHU code of the subtree at `root`, not descending into `banned`."""
    kids = sorted(_rooted_code(tree, w, root) for w in tree.neighbors(root) if w != banned)
    return b"(" + b"".join(kids) + b")"


def _centers(tree: Tree) -> tuple[int, ...]:
    n = tree.n
    if n == 1:
        return (0,)
    degree = [tree.degree(v) for v in range(n)]
    alive = [True] * n
    layer = [v for v in range(n) if degree[v] == 1]
    remaining = n
    while remaining > 2:
        remaining -= len(layer)
        nxt = []
        for v in layer:
            alive[v] = False
            for w in tree.neighbors(v):
                if alive[w]:
                    degree[w] -= 1
                    if degree[w] == 1:
                        nxt.append(w)
        layer = nxt
    return tuple(v for v in range(n) if alive[v])


def canonical_code(tree: Tree) -> bytes:
    """Relabeling-invariant code; equal codes iff isomorphic trees."""
    centers = _centers(tree)
    if len(centers) == 1:
        return b"1" + _rooted_code(tree, centers[0], -1)
    a, b = centers
    ca = _rooted_code(tree, a, b)
    cb = _rooted_code(tree, b, a)
    lo, hi = sorted((ca, cb))
    return b"2" + lo + hi


# ---------------------------------------------------------------------------
# WROM enumeration of free trees by level sequence


def _next_rooted(seq: list[int], p: int | None = None) -> list[int] | None:
    if p is None:
        p = len(seq) - 1
        while seq[p] == 1:
            p -= 1
    if p == 0:
        return None
    q = p - 1
    while seq[q] != seq[p] - 1:
        q -= 1
    out = list(seq)
    for i in range(p, len(out)):
        out[i] = out[i - p + q]
    return out


def _split(seq: list[int]) -> tuple[list[int], list[int]]:
    ones = [i for i, lv in enumerate(seq) if lv == 1]
    m = ones[1] if len(ones) > 1 else len(seq)
    left = [seq[i] - 1 for i in range(1, m)]
    rest = [0] + seq[m:]
    return left, rest


def _next_free(candidate: list[int]) -> list[int] | None:
    left, rest = _split(candidate)
    left_h, rest_h = max(left), max(rest)
    valid = rest_h >= left_h
    if valid and rest_h == left_h:
        if len(left) > len(rest) or (len(left) == len(rest) and left > rest):
            valid = False
    if valid:
        return candidate
    p = len(left)
    nxt = _next_rooted(candidate, p)
    if nxt is not None and candidate[p] > 2:
        new_left, _ = _split(nxt)
        suffix = list(range(1, max(new_left) + 2))
        nxt[-len(suffix):] = suffix
    return nxt


def _level_sequences(n: int) -> Iterator[list[int]]:
    if n <= 0:
        return
    if n <= 2:
        yield list(range(n))
        return
    layout: list[int] | None = list(range(n // 2 + 1)) + list(range(1, (n + 1) // 2))
    while layout is not None:
        layout = _next_free(layout)
        if layout is not None:
            yield layout
            layout = _next_rooted(layout)


def _tree_from_levels(seq: list[int]) -> Tree:
    edges = []
    stack: list[int] = []
    for i, level in enumerate(seq):
        while stack and seq[stack[-1]] >= level:
            stack.pop()
        if stack:
            edges.append((stack[-1], i))
        stack.append(i)
    return make_tree(len(seq), edges)


def all_trees(n: int) -> Iterator[Tree]:
    """One tree per isomorphism class, streamed in canonical-code order."""
    if not 1 <= n <= MAX_ENUMERATION_N:
        raise ValueError(f"n must be in 1..{MAX_ENUMERATION_N}")
    found = sorted((canonical_code(t), t) for t in
                   (_tree_from_levels(seq) for seq in _level_sequences(n)))
    assert len(found) == FREE_TREE_COUNTS[n - 1], (n, len(found))
    assert len({code for code, _ in found}) == len(found)
    for _, tree in found:
        yield tree


# ---------------------------------------------------------------------------
# named families


def path(n: int) -> Tree:
    """The path 0-1-...-(n-1)."""
    if n < 3:
        raise ValueError("path family starts at n=3")
    return make_tree(n, [(i, i + 1) for i in range(n - 1)])


def star(n: int) -> Tree:
    """The star with center 0 and n-1 leaves."""
    if n < 3:
        raise ValueError("star family starts at n=3")
    return make_tree(n, [(0, i) for i in range(1, n)])


def s_n(n: int) -> Tree:
    """A path on n-1 vertices plus one extra leaf at the second path vertex.

    The extra leaf carries the highest label.
    """
    if n < 4:
        raise ValueError("this family starts at n=4")
    edges = [(i, i + 1) for i in range(n - 2)] + [(1, n - 1)]
    return make_tree(n, edges)


# ---------------------------------------------------------------------------
# seeded configuration sampling


def random_config(tree: Tree, k: int, seed: int,
                  exclusions: Iterable[int] = (),
                  max_rejections: int = 2000) -> frozenset[int]:
    """A uniformly sampled k-subset of edges for Toucher's pre-claims.

    Candidates are rejected while any engine case named in `exclusions`
    (integers 1..6) applies to the position with the leaves excluded from
    scoring.  Deterministic for a given seed.
    """
    from .strategy import case_applies  # deferred: strategy imports this module

    m = len(tree.edges)
    if k > m:
        raise ValueError(f"k={k} exceeds edge count {m}")
    wanted = frozenset(exclusions)
    bad = wanted - {1, 2, 3, 4, 5, 6}
    if bad:
        raise ValueError(f"unknown case numbers {sorted(bad)}")
    rng = random.Random(seed)
    for _ in range(max_rejections):
        c = frozenset(rng.sample(range(m), k))
        game = DelayedGame(tree, toucher=mask_of(c), excluded=tree.leaf_mask,
                           mover=Player.ISOLATOR)
        if not any(case_applies(game, case) for case in wanted):
            return c
    raise SamplingError(
        f"no admissible {k}-subset found in {max_rejections} draws "
        f"(exclusions {sorted(wanted)})")
