import random

import pytest

from toucher_isolator import (
    CasePreconditionError,
    DelayedGame,
    Ledger,
    Player,
    all_trees,
    case_applies,
    certificate_to_text,
    check_reduction,
    final_case_bound,
    forest_split,
    lemma2_bound_check,
    lemma5_check,
    make_certificate,
    make_tree,
    mask_of,
    path,
    phase2_case,
    random_config,
    score_bound,
    star,
)
from toucher_isolator.strategy import CaseTag, StrategyState


def leaf_game(tree, c_edges=()):
    return DelayedGame(tree, toucher=mask_of(c_edges), excluded=tree.leaf_mask,
                       mover=Player.ISOLATOR)


def run_handler(game):
    """Apply the first pre-move reduction the engine would and return it."""
    ss = StrategyState(game)
    match = phase2_case(ss.inner)
    handler = {CaseTag.C1: ss._case1_certs, CaseTag.C2: ss._case2_certs,
               CaseTag.C3: ss._case3_certs, CaseTag.C4: ss._case4_certs}[match.tag]
    handler(match)
    return match, ss.certificates


class TestCheckReduction:
    def test_identity_certificate(self):
        g = leaf_game(path(6))
        cert = make_certificate(g, g, label="identity")
        assert check_reduction(cert) is None
        assert cert.ledger == Ledger(0, 0, 0, 0, 0)
        res = lemma2_bound_check(cert)
        assert res.holds and res.alpha_source == res.alpha_target and res.isolated == 0

    def test_strip_rewiring_has_zero_ledger(self):
        # an occupied run head is stripped down to a leaf before an episode;
        # the far leaf inherits its claim and the ledger stays all zeros
        t = make_tree(9, [(0, 1), (0, 2), (2, 3), (3, 4), (3, 5), (1, 6),
                          (6, 7), (6, 8)])
        g = leaf_game(t, [t.pair_index[(0, 1)]])
        ss = StrategyState(g)
        match = phase2_case(g)
        assert match.tag is CaseTag.C5 and match.data[:2] == (0, 2)
        ss._open_episode(match)
        strip = ss.certificates[0]
        assert strip.label == "L4C5-strip"
        assert check_reduction(strip) is None
        assert strip.ledger == Ledger(0, 0, 0, 0, 0)
        assert lemma2_bound_check(strip).holds

    def test_pattern_mismatch_is_reported(self):
        src = leaf_game(path(4))                 # middle edge has pattern 1
        tgt = leaf_game(make_tree(2, [(0, 1)]))  # its free edge has pattern 3
        cert = make_certificate(src, tgt, edge_map={(0, 1): (1, 2)})
        problem = check_reduction(cert)
        assert problem is not None and "pattern" in problem

    def test_surviving_isolator_edge_rejected(self):
        src = DelayedGame(path(4), isolator=mask_of([1]),
                          excluded=path(4).leaf_mask, mover=Player.ISOLATOR)
        cert = make_certificate(src, src)
        problem = check_reduction(cert)
        assert problem is not None and "Isolator" in problem

    def test_bad_ledger_is_reported(self):
        g = leaf_game(path(6))
        cert = make_certificate(g, g)
        broken = type(cert)(cert.source, cert.target, {}, {},
                            Ledger(1, 0, 0, 0, 1), cert.label, None)
        problem = check_reduction(broken)
        assert problem is not None and "ledger" in problem


class TestEngineCaseLedgers:
    def test_case1_both_neighbors_degree_two(self):
        t = path(7)
        g = leaf_game(t, [t.pair_index[(2, 3)]])
        match, certs = run_handler(g)
        assert match.tag is CaseTag.C1
        cert = certs[-1]
        assert cert.label == "L4C1(2,2)"
        assert cert.ledger.big_d == 0
        assert check_reduction(cert) is None
        assert lemma2_bound_check(cert).holds

    def test_case2_leaf_subcase_constant(self):
        t = make_tree(6, [(0, 1), (1, 2), (1, 3), (3, 4), (4, 5)])
        g = leaf_game(t, [t.pair_index[(1, 2)]])
        match, certs = run_handler(g)
        assert match.tag is CaseTag.C2
        cert = certs[-1]
        assert cert.label == "L4C2(3,1)"
        assert cert.ledger.big_d == -3
        assert check_reduction(cert) is None
        assert lemma2_bound_check(cert).holds

    def test_case3_peel_and_rewire(self):
        t = path(6)
        g = leaf_game(t, [t.pair_index[(0, 1)]])
        match, certs = run_handler(g)
        assert match.tag is CaseTag.C3
        assert certs[-1].label == "L4C3-peel"
        assert certs[-1].ledger.big_d == -2
        # a claimed leaf edge at a branch vertex rewires a sibling edge onto
        # the touched leaf instead of deleting anything
        t2 = make_tree(8, [(0, 1), (0, 2), (2, 3), (3, 4), (0, 5), (5, 6), (6, 7)])
        g2 = leaf_game(t2, [t2.pair_index[(0, 1)]])
        match, certs = run_handler(g2)
        assert match.tag is CaseTag.C3
        assert certs[-1].label == "L4C3-rewire"
        assert certs[-1].ledger.big_d == -2
        assert check_reduction(certs[-1]) is None

    def test_case4_contraction(self):
        t = make_tree(9, [(0, 1), (0, 5), (0, 6), (1, 2), (2, 3), (3, 4),
                          (4, 7), (4, 8)])
        g = leaf_game(t, [t.pair_index[(1, 2)], t.pair_index[(2, 3)]])
        match, certs = run_handler(g)
        assert match.tag is CaseTag.C4
        cert = certs[-1]
        assert cert.label == "L4C4-contract"
        assert cert.ledger.big_d <= 0
        assert check_reduction(cert) is None
        assert lemma2_bound_check(cert).holds

    def test_all_premove_ledgers_nonpositive(self):
        # sweep small leaf-excluded positions; wherever a pre-move case
        # applies the resulting certificates must be valid with big_d <= 0
        rng = random.Random(31)
        for n in range(4, 9):
            trees = list(all_trees(n))
            for _ in range(20):
                t = rng.choice(trees)
                k = rng.randint(1, max(1, (n - 1) // 2))
                c = rng.sample(range(len(t.edges)), k)
                g = leaf_game(t, c)
                match = phase2_case(g)
                if match.tag not in (CaseTag.C1, CaseTag.C2, CaseTag.C3, CaseTag.C4):
                    continue
                try:
                    _, certs = run_handler(g)
                except AssertionError:
                    continue  # degenerate remnant the engine is shielded from
                for cert in certs:
                    assert check_reduction(cert) is None
                    assert cert.ledger.big_d <= 0
                    assert lemma2_bound_check(cert).holds


class TestScoreBound:
    def test_bare_path(self):
        assert score_bound(leaf_game(path(8))) == 1

    def test_path_with_internal_claim(self):
        t = path(8)
        e = t.pair_index[(3, 4)]
        assert score_bound(leaf_game(t, [e])) == 1

    def test_star_goes_negative(self):
        assert score_bound(leaf_game(star(6))) == -1

    def test_precondition(self):
        with pytest.raises(ValueError):
            score_bound(DelayedGame(path(5), mover=Player.ISOLATOR))


class TestLemma5:
    def test_star_tight(self):
        hyp, concl = lemma5_check(star(4))
        assert hyp and concl
        assert 3 * 3 == 4 + 5

    def test_path_fails_hypothesis(self):
        hyp, _ = lemma5_check(path(5))
        assert not hyp

    def test_double_star(self):
        t = make_tree(6, [(0, 1), (0, 2), (0, 3), (1, 4), (1, 5)])
        hyp, concl = lemma5_check(t)
        assert hyp and concl

    def test_exhaustive_small(self):
        for n in range(3, 12):
            for t in all_trees(n):
                hyp, concl = lemma5_check(t)
                if hyp:
                    assert concl


class TestForestSplit:
    def test_three_way_split(self):
        t = make_tree(11, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6),
                           (6, 7), (3, 8), (8, 9), (8, 10)])
        fs = forest_split(t, [t.pair_index[(3, 4)]])
        assert fs.component_count == 3
        assert sorted(fs.component_sizes) == [4, 4, 4]

    def test_no_claims_single_component(self):
        fs = forest_split(star(6), [])
        assert fs.component_count == 1
        assert fs.component_sizes == (6,)

    def test_spider_with_central_claim(self):
        edges = [(0, 1)]
        nxt = 2
        for hub in (0, 1):
            for _ in range(2):
                a, b, c = nxt, nxt + 1, nxt + 2
                edges += [(hub, a), (a, b), (b, c)]
                nxt += 3
        t = make_tree(14, edges)
        fs = forest_split(t, [t.pair_index[(0, 1)]])
        assert fs.per_edge[0][2] == 4
        assert fs.component_count == 4
        assert sum(fs.component_leaves) == t.leaf_mask.bit_count() + 4

    def test_precondition_names_the_case(self):
        with pytest.raises(CasePreconditionError) as info:
            forest_split(path(6), [0])
        assert "case" in str(info.value)

    def test_random_admissible_instances(self):
        rng = random.Random(88)
        trees = {n: list(all_trees(n)) for n in range(4, 13)}
        done = 0
        attempt = 0
        while done < 200:
            attempt += 1
            n = rng.randint(4, 12)
            t = trees[n][rng.randrange(len(trees[n]))]
            k = rng.choice((0, 1, 1, 2))
            try:
                c = random_config(t, k, seed=attempt, exclusions=[1, 2, 3, 4],
                                  max_rejections=200)
            except Exception:
                continue
            fs = forest_split(t, c)  # identities asserted inside
            total_d = sum(d for _, _, d in fs.per_edge)
            assert fs.component_count == 1 - len(c) + total_d
            done += 1
        assert done == 200


class TestFinalCaseBound:
    def test_case_free_instance_certified(self):
        t = make_tree(8, [(0, 3), (0, 1), (0, 2), (3, 4), (4, 5), (5, 6), (5, 7)])
        res = final_case_bound(t, [t.pair_index[(3, 4)]])
        assert res.certified and res.score <= 0
        assert res.split is not None

    def test_path_is_inapplicable(self):
        res = final_case_bound(path(6), [])
        assert not res.certified
        assert res.applicable_case == "L4C5"

    def test_double_star_blocked_by_case2(self):
        # every leaf edge has both endpoints touched once the bridge is
        # claimed, so the closing argument does not apply here
        t = make_tree(6, [(0, 1), (0, 2), (0, 3), (1, 4), (1, 5)])
        res = final_case_bound(t, [0])
        assert not res.certified
        assert res.applicable_case == "L4C2"

    def test_minimum_cut_degree_arithmetic(self):
        # with every cut degree equal to 2 the chain's slack step is tight
        t = make_tree(8, [(0, 3), (0, 1), (0, 2), (3, 4), (4, 5), (5, 6), (5, 7)])
        res = final_case_bound(t, [t.pair_index[(3, 4)]])
        ds = [d for _, _, d in res.split.per_edge]
        assert all(d >= 2 for d in ds)
        k = len(ds)
        assert 2 * sum(ds) - 2 * k >= 2 * k >= 0


class TestSerialization:
    def test_golden_text(self):
        t = make_tree(8, [(0, 1), (0, 2), (2, 3), (3, 4), (0, 5), (5, 6), (6, 7)])
        g = leaf_game(t, [t.pair_index[(0, 1)]])
        _, certs = run_handler(g)
        text = certificate_to_text(certs[-1])
        assert text == (
            "label: L4C3-rewire\n"
            "source: 8; 0-1,0-2,2-3,3-4,0-5,5-6,6-7; C:{0} D:{} X:{1,4,7} s:I\n"
            "target: 8; 0-1,0-5,1-2,2-3,3-4,5-6,6-7; C:{0} D:{} X:{4,7} s:I\n"
            "fE: 1-2 -> 0-2\n"
            "ledger: dn=0 dl=1 dk=0 ds=1 D=-2"
        )

    def test_identity_has_no_map_lines(self):
        g = leaf_game(path(4))
        text = certificate_to_text(make_certificate(g, g, label="identity"))
        assert "fE:" not in text and "fV:" not in text
