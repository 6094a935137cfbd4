import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riskcal import (
    CandidateSet,
    ConfigError,
    DataError,
    LossTable,
    MultiObjectiveProblem,
    PriorBeliefs,
    RiskSpec,
    SplitConfig,
    build_rg,
    load_prior,
    posterior_preference,
    prior_from_doc,
    rg_pt,
    uninformative_prior,
)

from conftest import average_problem, make_table


class TestPriorBeliefs:
    def test_square_required(self):
        with pytest.raises(DataError, match="square"):
            PriorBeliefs(np.full((2, 3), 0.5))

    def test_mirror_consistency_enforced(self):
        eta = np.array([[0.5, 0.8], [0.3, 0.5]])  # 0.8 + 0.3 != 1
        with pytest.raises(DataError, match="expected 1"):
            PriorBeliefs(eta)

    def test_diagonal_is_pinned(self):
        eta = np.array([[0.9, 0.7], [0.3, 0.2]])
        p = PriorBeliefs(eta)
        assert p.eta[0, 0] == 0.5 and p.eta[1, 1] == 0.5

    def test_range_and_pseudocount(self):
        with pytest.raises(DataError):
            PriorBeliefs(np.array([[0.5, 1.2], [-0.2, 0.5]]))
        with pytest.raises(ConfigError, match="n_p"):
            PriorBeliefs(np.full((2, 2), 0.5), n_p=-1.0)

    def test_restrict(self):
        eta = np.array([
            [0.5, 0.7, 0.9],
            [0.3, 0.5, 0.6],
            [0.1, 0.4, 0.5],
        ])
        sub = PriorBeliefs(eta, n_p=4.0).restrict([0, 2])
        assert sub.m == 2 and sub.n_p == 4.0
        assert sub.eta[0, 1] == 0.9 and sub.eta[1, 0] == 0.1

    def test_uninformative(self):
        p = uninformative_prior(3)
        assert p.n_p == 0.0
        np.testing.assert_array_equal(p.eta, np.full((3, 3), 0.5))


class TestPriorParsing:
    def cands(self):
        return CandidateSet(["a", "b", "c"])

    def test_pairs_fill_mirrors(self):
        doc = {"candidates": ["a", "b", "c"], "n_p": 12,
               "pairs": [["a", "b", 0.8], ["a", "c", 0.9]]}
        p = prior_from_doc(doc, self.cands())
        assert p.n_p == 12.0
        assert p.eta[0, 1] == 0.8 and p.eta[1, 0] == pytest.approx(0.2)
        assert p.eta[1, 2] == 0.5  # unmentioned pair stays neutral

    def test_dense_eta(self):
        eta = [[0.5, 0.6, 0.7], [0.4, 0.5, 0.5], [0.3, 0.5, 0.5]]
        p = prior_from_doc({"candidates": ["a", "b", "c"], "eta": eta}, self.cands())
        assert p.eta[0, 2] == 0.7 and p.n_p == 0.0

    def test_eta_and_pairs_conflict(self):
        doc = {"candidates": ["a", "b", "c"], "eta": [[0.5] * 3] * 3, "pairs": []}
        with pytest.raises(DataError, match="not both"):
            prior_from_doc(doc, self.cands())

    def test_candidate_list_must_match(self):
        with pytest.raises(DataError, match="does not match"):
            prior_from_doc({"candidates": ["a", "b"]}, self.cands())
        with pytest.raises(DataError, match="missing 'candidates'"):
            prior_from_doc({}, self.cands())

    def test_self_pair_rejected(self):
        doc = {"candidates": ["a", "b", "c"], "pairs": [["a", "a", 0.9]]}
        with pytest.raises(DataError, match="itself"):
            prior_from_doc(doc, self.cands())

    def test_malformed_pair(self):
        doc = {"candidates": ["a", "b", "c"], "pairs": [["a", "b"]]}
        with pytest.raises(DataError, match=r"pairs\[0\]"):
            prior_from_doc(doc, self.cands())

    def test_load_prior_errors(self, tmp_path):
        with pytest.raises(DataError, match="cannot read"):
            load_prior(str(tmp_path / "absent.json"), self.cands())
        bad = tmp_path / "bad.json"
        bad.write_text("{nope")
        with pytest.raises(DataError, match="not valid JSON"):
            load_prior(str(bad), self.cands())

    def test_load_prior_roundtrip(self, tmp_path):
        doc = {"candidates": ["a", "b", "c"], "n_p": 5,
               "pairs": [["b", "c", 0.75]]}
        path = tmp_path / "prior.json"
        path.write_text(json.dumps(doc))
        p = load_prior(str(path), self.cands())
        assert p.eta[2, 1] == 0.25


class TestPosterior:
    def test_prior_and_data_blend(self):
        # candidate 0 beats 1 in 9 of 10 samples; prior (strength 10) said 0.1.
        # posterior = (10 * 0.1 + 9) / 20 = 0.5 exactly
        losses = np.full((10, 2, 1), 0.5)
        losses[:9, 0, 0] = 0.1
        losses[9, 0, 0] = 0.9
        prior = PriorBeliefs(np.array([[0.5, 0.1], [0.9, 0.5]]), n_p=10.0)
        pi = posterior_preference(prior, LossTable(losses), objective=0)
        assert pi[0, 1] == 0.5 and pi[1, 0] == 0.5

    def test_data_only(self):
        losses = np.zeros((4, 2, 1))
        losses[:, 1, 0] = 1.0  # candidate 0 wins every sample
        pi = posterior_preference(uninformative_prior(2), LossTable(losses), 0)
        assert pi[0, 1] == 1.0 and pi[1, 0] == 0.0

    def test_ties_split_evenly(self):
        pi = posterior_preference(uninformative_prior(3), LossTable(np.full((7, 3, 1), 0.4)), 0)
        np.testing.assert_allclose(pi, 0.5)

    def test_no_data_returns_prior(self):
        eta = np.array([[0.5, 0.8], [0.2, 0.5]])
        prior = PriorBeliefs(eta, n_p=3.0)
        pi = posterior_preference(prior, LossTable(np.empty((0, 2, 1))), 0)
        np.testing.assert_allclose(pi, eta)

    def test_no_data_no_prior_undefined(self):
        with pytest.raises(DataError, match="posterior undefined"):
            posterior_preference(uninformative_prior(2), LossTable(np.empty((0, 2, 1))), 0)

    def test_size_and_objective_checks(self):
        t = LossTable(np.zeros((3, 2, 1)))
        with pytest.raises(DataError, match="covers"):
            posterior_preference(uninformative_prior(3), t, 0)
        with pytest.raises(DataError, match="objective"):
            posterior_preference(uninformative_prior(2), t, 1)

    @given(st.integers(min_value=2, max_value=5), st.integers(min_value=1, max_value=20))
    @settings(max_examples=30)
    def test_antisymmetry(self, m, n):
        rng = np.random.default_rng(m * 1000 + n)
        table = LossTable(rng.integers(0, 3, size=(n, m, 1)) / 2.0)
        pi = posterior_preference(uninformative_prior(m), table, 0)
        off = ~np.eye(m, dtype=bool)
        np.testing.assert_allclose((pi + pi.T)[off], 1.0, atol=1e-12)


class TestGraphBuilding:
    def test_confident_chain_reduces(self):
        pi = np.array([
            [0.50, 0.99, 0.99],
            [0.01, 0.50, 0.99],
            [0.01, 0.01, 0.50],
        ])
        g = build_rg(pi, tau=0.6, ids=["a", "b", "c"])
        assert g.edges == ((0, 1), (1, 2))  # a -> c is implied, so dropped

    def test_neutral_posterior_gives_no_edges(self):
        g = build_rg(np.full((3, 3), 0.5), tau=0.6)
        assert g.edges == ()

    def test_tau_gates_edges(self):
        pi = np.array([[0.5, 0.7], [0.3, 0.5]])
        assert build_rg(pi, tau=0.7).edges == ((0, 1),)
        assert build_rg(pi, tau=0.75).edges == ()

    def test_tau_validation(self):
        pi = np.full((2, 2), 0.5)
        with pytest.raises(ConfigError, match="tau"):
            build_rg(pi, tau=0.5)
        with pytest.raises(ConfigError, match="tau"):
            build_rg(pi, tau=1.0001)
        assert build_rg(pi, tau=1.0).edges == ()

    def test_single_candidate(self):
        g = build_rg(np.array([[0.5]]), tau=0.9, ids=["only"])
        assert g.m == 1 and g.edges == ()

    def test_inconsistent_posterior_rejected(self):
        with pytest.raises(DataError, match="inconsistent"):
            build_rg(np.array([[0.5, 0.9], [0.9, 0.5]]))

    @given(st.integers(min_value=2, max_value=7), st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=60)
    def test_edges_follow_the_ranking(self, m, seed):
        rng = np.random.default_rng(seed)
        b = rng.random((m, m))
        pi = (b - b.T) / 2.0 + 0.5
        g = build_rg(pi, tau=0.55)  # construction itself verifies acyclicity
        off = ~np.eye(m, dtype=bool)
        scores = pi.sum(axis=1, where=off) / (m - 1)
        rank = sorted(range(m), key=lambda i: (-scores[i], g.ids[i]))
        position = {i: k for k, i in enumerate(rank)}
        for u, v in g.edges:
            assert position[u] < position[v]
            assert pi[u, v] >= 0.55


class TestRgPipeline:
    def tiered_table(self, rng, n):
        # objective 0 controlled with tiers 0.05 / 0.15 / 0.40;
        # objective 1 free and reversed so the whole set is non-dominated
        risks = np.array([[0.05, 0.40], [0.15, 0.15], [0.40, 0.05]])
        return make_table((rng.random((n, 3, 2)) < risks).astype(float))

    def problem(self):
        return MultiObjectiveProblem((
            RiskSpec(objective=0, alpha=0.3),
            RiskSpec(objective=1, role="free"),
        ))

    def strong_prior(self):
        doc = {"candidates": ["a", "b", "c"], "n_p": 200,
               "pairs": [["a", "b", 0.9], ["a", "c", 0.95], ["b", "c", 0.9]]}
        return prior_from_doc(doc, CandidateSet(["a", "b", "c"]))

    def test_tiered_instance_selects_reliable_tiers(self, rng):
        cands = CandidateSet(["a", "b", "c"])
        a_hits = b_hits = c_hits = 0
        trials = 30
        for t in range(trials):
            r = rg_pt(
                cands, self.tiered_table(rng, 400), self.problem(),
                self.strong_prior(), SplitConfig(0.5, seed=t), tau=0.7, delta=0.1,
            )
            a_hits += "a" in r.selected
            b_hits += "b" in r.selected
            c_hits += "c" in r.selected
        assert a_hits == trials
        assert b_hits >= int(0.8 * trials)
        assert c_hits == 0  # true risk 0.40 vs threshold 0.30

    def test_wrong_prior_costs_power_not_validity(self, rng):
        # all candidates are genuinely unreliable; a prior praising the worst
        # one must not conjure rejections out of it
        cands = CandidateSet(["a", "b", "c"])
        risks = np.array([[0.50], [0.60], [0.70]])
        doc = {"candidates": ["a", "b", "c"], "n_p": 500,
               "pairs": [["c", "a", 0.95], ["c", "b", 0.95], ["b", "a", 0.9]]}
        prior = prior_from_doc(doc, cands)
        problem = average_problem(0.3)
        empty = 0
        trials = 40
        for t in range(trials):
            table = make_table((rng.random((200, 3, 1)) < risks).astype(float))
            r = rg_pt(cands, table, problem, prior, SplitConfig(0.5, seed=t), delta=0.1)
            empty += r.selected == ()
        assert empty >= int(0.9 * trials)

    def test_metadata_shape(self, rng):
        r = rg_pt(
            CandidateSet(["a", "b", "c"]), self.tiered_table(rng, 100), self.problem(),
            uninformative_prior(3), SplitConfig(0.5, seed=1), tau=0.8, delta=0.1,
        )
        md = r.metadata
        assert md["tau"] == 0.8 and md["pseudocount"] == 0.0
        assert md["preference_objective"] == 0
        assert set(md["graph"]["nodes"]) == set(md["front"])
        assert r.guarantee == "FDR" and r.procedure == "rg_pt"

    def test_preference_objective_must_be_controlled(self, rng):
        with pytest.raises(ConfigError, match="not controlled"):
            rg_pt(
                CandidateSet(["a", "b", "c"]), self.tiered_table(rng, 50), self.problem(),
                uninformative_prior(3), SplitConfig(0.5, 0), preference_objective=1,
            )

    def test_prior_size_mismatch(self, rng):
        with pytest.raises(DataError, match="prior covers"):
            rg_pt(
                CandidateSet(["a", "b", "c"]), self.tiered_table(rng, 50), self.problem(),
                uninformative_prior(2), SplitConfig(0.5, 0),
            )
