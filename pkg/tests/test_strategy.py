import random

import pytest

from toucher_isolator import (
    DelayedGame,
    Player,
    StrategyInvariantError,
    all_trees,
    apply_move,
    best_response_score,
    case_applies,
    check_reduction,
    final_case_bound,
    final_score,
    fresh_game,
    full_strategy,
    initial_state,
    legal_moves,
    lemma3_chain,
    lemma3_reduce,
    lemma3_step,
    make_strategy_policy,
    make_tree,
    mask_of,
    optimal_move,
    path,
    phase1_move,
    phase2_case,
    phase2_move,
    score_bound,
    set_of,
    star,
    u,
)
from toucher_isolator.strategy import (
    CaseTag,
    IsolatorSession,
    PhaseOneTrace,
    StrategyState,
)


def bound(n):
    return (n + 3) // 5


def leaf_game(tree, c_edges=()):
    return DelayedGame(tree, toucher=mask_of(c_edges), excluded=tree.leaf_mask,
                       mover=Player.ISOLATOR)


def play_session(game, toucher_fn):
    """Drive a session against a scripted Toucher; returns (score, session)."""
    sess = IsolatorSession(game)
    state = initial_state(game)
    while legal_moves(state):
        if state.mover is Player.TOUCHER:
            e = toucher_fn(state)
            sess.observe(e, Player.TOUCHER)
        else:
            e = sess.propose()
        state = apply_move(state, e)
    return final_score(state), sess


def lowest(state):
    return min(legal_moves(state))


class TestPhaseOne:
    def test_pendant_edge_after_middle_claim(self):
        s = apply_move(initial_state(fresh_game(path(5))), 1)
        assert phase1_move(s) == 0

    def test_p4_after_middle_claim(self):
        s = apply_move(initial_state(fresh_game(path(4))), 1)
        assert phase1_move(s) == 0

    def test_phase_end_when_no_single_edge_vertex(self):
        # both inner edges claimed around every free option
        t = path(5)
        g = DelayedGame(t, toucher=mask_of([0, 3]), isolator=mask_of([1, 2]),
                        mover=Player.ISOLATOR)
        assert phase1_move(initial_state(g)) is None

    def test_each_greedy_move_isolates_exactly_one(self):
        rng = random.Random(11)
        trees = {n: list(all_trees(n)) for n in range(4, 10)}
        for _ in range(80):
            n = rng.randint(4, 9)
            t = rng.choice(trees[n])
            # the session asserts the +1 invariant internally on every move
            score, sess = play_session(
                fresh_game(t), lambda st: rng.choice(sorted(legal_moves(st))))
            assert score >= len(sess.isolated)


class TestLeafPeeling:
    def test_case1_step_then_documented_failure(self):
        # synthetic record: one claimed pendant edge and no greedy moves
        # taken; the first peel deletes the leaf, excludes its neighbor, and
        # drops the claim, after which no claimed leaf remains although the
        # excluded set is not yet the leaf set, which is an error by contract
        t = path(5)
        g = DelayedGame(t, toucher=mask_of([0]), excluded=0, mover=Player.ISOLATOR)
        cert = lemma3_step(g)
        assert cert.label == "L3C1"
        assert cert.ledger.dk == 1
        assert (cert.target.excluded >> 1) & 1
        assert set_of(cert.target.toucher) == set()
        with pytest.raises(StrategyInvariantError):
            lemma3_chain(g)
        trace = PhaseOneTrace(fresh_game(t), toucher_mask=mask_of([0]),
                              isolator_mask=0, isolated_vertices=())
        with pytest.raises(StrategyInvariantError):
            lemma3_reduce(trace)

    def test_case2_gains_two(self):
        from toucher_isolator.strategy import _chain_g

        # claimed leaf edge at a branch vertex that carries a second claim
        t = make_tree(5, [(0, 1), (1, 2), (1, 3), (3, 4)])
        g = DelayedGame(t, toucher=mask_of([0, 1]), excluded=0,
                        mover=Player.ISOLATOR)
        cert = lemma3_step(g)
        assert cert.label == "L3C2"
        assert check_reduction(cert) is None
        assert _chain_g(cert.target) == _chain_g(g) + 2

    def test_case3_rewires_center_edge(self):
        t = star(4)
        g = DelayedGame(t, toucher=mask_of([0]), excluded=0, mover=Player.ISOLATOR)
        cert = lemma3_step(g)
        assert cert.label == "L3C3"
        assert dict(cert.edge_map) == {(1, 2): (0, 2)}
        trace = PhaseOneTrace(fresh_game(t), toucher_mask=mask_of([0]),
                              isolator_mask=0, isolated_vertices=())
        with pytest.raises(StrategyInvariantError):
            lemma3_reduce(trace)  # synthetic record cannot finish

    def test_honest_playouts_complete(self):
        rng = random.Random(404)
        trees = {n: list(all_trees(n)) for n in range(6, 13)}
        chains = 0
        while chains < 60:
            n = rng.randint(6, 12)
            t = rng.choice(trees[n])
            game = fresh_game(t)
            state = initial_state(game)
            sess = IsolatorSession(game)
            transitioned = False
            while legal_moves(state):
                if state.mover is Player.TOUCHER:
                    e = rng.choice(sorted(legal_moves(state)))
                    sess.observe(e, Player.TOUCHER)
                else:
                    before = sess.phase
                    e = sess.propose()
                    if sess.phase == 2 and before == 1:
                        transitioned = True
                state = apply_move(state, e)
            if not transitioned:
                continue
            chains += 1
            engine = sess.engine
            assert engine is not None
            for cert in engine.certificates:
                assert check_reduction(cert) is None


class TestCaseDispatch:
    def test_case1_header(self):
        t = path(7)
        g = leaf_game(t, [t.pair_index[(2, 3)]])
        assert phase2_case(g).tag is CaseTag.C1

    def test_case2_header(self):
        t = make_tree(6, [(0, 1), (1, 2), (1, 3), (3, 4), (4, 5)])
        g = leaf_game(t, [t.pair_index[(1, 2)]])
        assert phase2_case(g).tag is CaseTag.C2

    def test_terminal_with_certified_bound(self):
        t = make_tree(8, [(0, 3), (0, 1), (0, 2), (3, 4), (4, 5), (5, 6), (5, 7)])
        c = [t.pair_index[(3, 4)]]
        g = leaf_game(t, c)
        assert phase2_case(g).tag is CaseTag.TERMINAL
        assert final_case_bound(t, c).certified

    def test_case5_run(self):
        g = leaf_game(path(6))
        match = phase2_case(g)
        assert match.tag is CaseTag.C5
        assert match.data == (0, 1, 2, 3, 4, 5)

    def test_case6_needs_branch_ends(self):
        # two branch vertices joined by a three-edge unoccupied chain
        t = make_tree(9, [(0, 1), (0, 2), (0, 3), (3, 4), (4, 5), (5, 6),
                          (6, 7), (6, 8)])
        g = leaf_game(t)
        match = phase2_case(g)
        assert match.tag is CaseTag.C6
        assert match.data == (0, 3, 4, 5, 6)

    def test_case_applies_per_case(self):
        g = leaf_game(path(6))
        assert case_applies(g, 5)
        assert not case_applies(g, 3)


class TestEpisodes:
    def test_short_episode_blocked_by_toucher(self):
        # the engine opens the two-edge script; Toucher immediately takes the
        # head edge, so the episode closes without isolating and loses nothing
        t = make_tree(9, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (2, 6),
                          (6, 7), (7, 8)])
        g = leaf_game(t)
        ss = StrategyState(g)
        first = ss.move()
        assert g.board.edges[first] == (1, 2)
        head = g.board.pair_index[(0, 1)]
        phase2_move(ss, head)  # blocked: the close happens before the reply
        certs = ss.episode_certificates
        assert certs[0].label == "L4C5.1"
        assert certs[0].ledger.big_d == -1
        assert certs[0].isolated_count == 0

    def test_episode_certificates_respect_ledger_quota(self):
        rng = random.Random(31415)
        trees = {n: list(all_trees(n)) for n in range(5, 11)}
        seen = 0
        for trial in range(120):
            n = rng.randint(5, 10)
            t = rng.choice(trees[n])
            k = rng.randint(0, 2)
            c = rng.sample(range(len(t.edges)), k)
            game = leaf_game(t, c)
            policy = make_strategy_policy(game)
            score = best_response_score(game, policy)
            assert score >= score_bound(game)
            for sess in policy.sessions.values():
                if sess.engine is None:
                    continue
                for cert in sess.engine.episode_certificates:
                    seen += 1
                    assert check_reduction(cert) is None
                    assert cert.ledger.big_d <= 5 * cert.isolated_count
        assert seen > 50

    def test_long_run_episode_annotations(self):
        t = path(10)
        game = leaf_game(t)
        score, sess = play_session(game, lowest)
        assert score >= score_bound(game)
        text = "\n".join(sess.transcript)
        assert "case=L4C5 m=9" in text
        assert "# close L4C5.4.1" in text


class TestFullStrategy:
    def test_p3(self):
        assert best_response_score(path(3), full_strategy) == 1

    def test_star_regardless_of_play(self):
        t = star(8)
        assert best_response_score(t, full_strategy) == 3
        rng = random.Random(9)
        score, _ = play_session(fresh_game(t),
                                lambda st: rng.choice(sorted(legal_moves(st))))
        assert score == 3

    def test_p10_reaches_bound(self):
        assert best_response_score(path(10), full_strategy) >= 2

    def test_deterministic(self):
        state = apply_move(initial_state(fresh_game(path(6))), 2)
        assert full_strategy(state) == full_strategy(state)

    def test_policy_matches_pure_function(self):
        t = path(7)
        game = fresh_game(t)
        policy = make_strategy_policy(game)
        state = initial_state(game)
        rng = random.Random(12)
        while legal_moves(state):
            if state.mover is Player.TOUCHER:
                e = rng.choice(sorted(legal_moves(state)))
            else:
                e = policy(state)
                assert e == full_strategy(state)
            state = apply_move(state, e)

    def test_rejects_toucher_turn(self):
        from toucher_isolator import MoveError

        with pytest.raises(MoveError):
            full_strategy(initial_state(fresh_game(path(4))))

    def test_sweep_small(self):
        for n in range(3, 9):
            for t in all_trees(n):
                policy = make_strategy_policy(fresh_game(t))
                assert best_response_score(t, policy) >= bound(n), t.edges


class TestGoldenTranscript:
    def test_p10_versus_optimal(self):
        score, sess = play_session(fresh_game(path(10)),
                                   lambda st: optimal_move(st))
        assert score == 2
        assert sess.transcript == [
            "T 0-1",
            "I 8-9 phase=1 isolates=9",
            "T 3-4",
            "I 7-8 phase=1 isolates=8",
            "T 6-7",
            "I 1-2 phase=2 fallback",
            "T 2-3",
            "I 4-5 phase=2 fallback",
            "T 5-6",
        ]

    def test_delayed_p10_episode_transcript(self):
        t = path(10)
        score, sess = play_session(leaf_game(t), lowest)
        assert score == 3
        assert sess.transcript == [
            "I 2-3 phase=2 case=L4C5 m=9 i=2 j=2",
            "T 0-1",
            "I 3-4 phase=2 case=L4C5 m=9 i=2 j=3",
            "T 1-2",
            "I 4-5 phase=2 case=L4C5 m=9 i=2 j=4",
            "T 5-6",
            "# close L4C5.4.1 isolated=2 D=6",
            "I 7-8 phase=2 case=L4C5 m=3 i=1 j=1",
            "T 6-7",
            "I 8-9 phase=2 case=L4C5 m=3 i=1 j=2",
        ]
