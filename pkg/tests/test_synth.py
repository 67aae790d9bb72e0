from datetime import date

import numpy as np
import pytest

from stancescope.anomaly import behavior_features, features_matrix, fit_iforest, score_accounts
from stancescope.botcrit import assign_anomaly_groups, BotVerdict, flag_bots
from stancescope.corpus import ingest_jsonl, serialize_jsonl
from stancescope.synth import (
    ClassSpec,
    SynthSpec,
    default_spec,
    evaluate_against_truth,
    generate_corpus,
    nmi,
)


class TestGenerate:
    def test_zero_accounts_empty_corpus(self):
        spec = SynthSpec(classes={}, window=(date(2020, 8, 1), date(2020, 10, 25)),
                         seed=0)
        corpus, truth = generate_corpus(spec)
        assert corpus.tweets == []
        assert corpus.accounts == {}
        assert truth.stance == {}

    def test_fixed_seed_bit_identical(self):
        spec = default_spec(n_accounts=120, seed=5)
        c1, t1 = generate_corpus(spec)
        c2, t2 = generate_corpus(spec)
        assert c1.tweets == c2.tweets
        assert c1.accounts == c2.accounts
        assert t1.stance == t2.stance

    def test_corpus_invariants_and_round_trip(self, tmp_path):
        corpus, _ = generate_corpus(default_spec(n_accounts=150, seed=3))
        # every author resolves; tweets sorted; ids unique
        ids = [t.tweet_id for t in corpus.tweets]
        assert len(ids) == len(set(ids))
        stamps = [t.created_at for t in corpus.tweets]
        assert stamps == sorted(stamps)
        for t in corpus.tweets:
            assert t.author_id in corpus.accounts
            if t.kind != "original":
                assert t.target_account_id is not None
        start, end = corpus.window
        for t in corpus.tweets:
            assert start <= t.created_at.date() <= end

        path = tmp_path / "synth.jsonl"
        serialize_jsonl(corpus, path)
        back = ingest_jsonl(path)
        assert back.tweets == corpus.tweets
        assert back.accounts == corpus.accounts

    def test_homophily_one_keeps_edges_within_stance(self):
        spec = default_spec(n_accounts=200, seed=7)
        for cls in spec.classes.values():
            cls.homophily = 1.0
        corpus, truth = generate_corpus(spec)
        for t in corpus.tweets:
            if t.kind == "retweet":
                assert truth.stance[t.author_id] == truth.stance[t.target_account_id]

    def test_homophily_increases_intra_stance_fraction(self):
        def intra_fraction(h, seed):
            spec = default_spec(n_accounts=150, seed=seed)
            for cls in spec.classes.values():
                cls.homophily = h
            corpus, truth = generate_corpus(spec)
            edges = [(t.author_id, t.target_account_id) for t in corpus.tweets
                     if t.kind == "retweet"]
            same = sum(1 for s, d in edges
                       if truth.stance[s] == truth.stance[d])
            return same / len(edges)

        low = np.mean([intra_fraction(0.55, s) for s in range(10)])
        high = np.mean([intra_fraction(0.95, s) for s in range(10)])
        assert high > low

    def test_bot_registration_and_digits_match_spec(self):
        spec = default_spec(n_accounts=400, bot_fraction=0.05, seed=2)
        corpus, truth = generate_corpus(spec)
        cutoff = date(2020, 8, 8)
        for aid, is_bot in truth.is_bot.items():
            if is_bot:
                acc = corpus.accounts[aid]
                assert acc.created_at.date() >= cutoff
                n_digits = sum(ch.isdecimal() for ch in acc.username)
                assert n_digits >= 5

    def test_invalid_spec_rejected(self):
        with pytest.raises(ValueError):
            SynthSpec(classes={"weird": ClassSpec(
                count=1, stance="apruebo", is_bot=False,
                registration_window=(date(2020, 1, 1), date(2020, 2, 1)))},
                window=(date(2020, 8, 1), date(2020, 10, 25)), seed=0)
        with pytest.raises(ValueError):
            default_spec(n_accounts=10).__class__(
                classes={}, window=(date(2020, 10, 25), date(2020, 8, 1)), seed=0)

    def test_planted_bots_recovered_by_criterion(self):
        corpus, truth = generate_corpus(default_spec(
            n_accounts=1000, bot_fraction=0.02, seed=11))
        feats = behavior_features(corpus)
        ids, X = features_matrix(feats)
        model = fit_iforest(X, t=100, psi=256, seed=11)
        records = score_accounts(model, X, ids)
        groups = assign_anomaly_groups(records)
        verdicts = flag_bots(groups, corpus.accounts)
        flagged = {v.account_id for v in verdicts if v.is_bot}
        actual = {aid for aid, b in truth.is_bot.items() if b}
        tp = len(flagged & actual)
        precision = tp / len(flagged) if flagged else 0.0
        recall = tp / len(actual)
        assert precision >= 0.8, f"precision {precision:.2f}"
        assert recall >= 0.6, f"recall {recall:.2f}"


class TestNmi:
    def test_identical_labelings(self):
        assert nmi([0, 0, 1, 1], [5, 5, 9, 9]) == pytest.approx(1.0)

    def test_independent_labelings_near_zero(self):
        assert nmi([0, 1, 0, 1], [0, 0, 1, 1]) == pytest.approx(0.0, abs=1e-12)

    def test_matches_sklearn(self):
        from sklearn.metrics import normalized_mutual_info_score
        rng = np.random.default_rng(4)
        for _ in range(20):
            a = rng.integers(0, 5, 60).tolist()
            b = rng.integers(0, 4, 60).tolist()
            assert nmi(a, b) == pytest.approx(
                normalized_mutual_info_score(a, b), abs=1e-9)


class TestEvaluate:
    def make_verdicts(self, flags):
        return [BotVerdict(aid, f, frozenset()) for aid, f in flags.items()]

    def test_perfect_predictions(self):
        truth_stance = {1: "apruebo", 2: "rechazo", 3: "apruebo"}
        truth = type("T", (), {})()
        from stancescope.synth import GroundTruth
        truth = GroundTruth(stance=truth_stance,
                            is_bot={1: False, 2: True, 3: False},
                            squad={1: None, 2: 0, 3: None})
        metrics = evaluate_against_truth(
            dict(truth_stance), self.make_verdicts({1: False, 2: True, 3: False}),
            truth)
        assert metrics["stance_accuracy"] == 1.0
        assert metrics["bot_precision"] == 1.0
        assert metrics["bot_recall"] == 1.0
        assert metrics["abstention_rate"] == 0.0

    def test_all_undisclosed_is_full_abstention(self):
        from stancescope.synth import GroundTruth
        truth = GroundTruth(stance={1: "apruebo", 2: "rechazo"},
                            is_bot={1: False, 2: False}, squad={1: None, 2: None})
        metrics = evaluate_against_truth(
            {1: "undisclosed", 2: "undisclosed"},
            self.make_verdicts({1: False, 2: False}), truth)
        assert metrics["abstention_rate"] == 1.0
        assert np.isnan(metrics["stance_accuracy"])

    def test_account_mismatch_rejected(self):
        from stancescope.synth import GroundTruth
        truth = GroundTruth(stance={1: "apruebo"}, is_bot={1: False},
                            squad={1: None})
        with pytest.raises(ValueError):
            evaluate_against_truth({2: "apruebo"}, [], truth)

    def test_ten_account_toy_matches_hand_counts(self):
        from stancescope.synth import GroundTruth
        truth = GroundTruth(
            stance={i: ("apruebo" if i <= 6 else "rechazo") for i in range(1, 11)},
            is_bot={i: i in (9, 10) for i in range(1, 11)},
            squad={i: None for i in range(1, 11)},
        )
        # predictions: 1-4 correct apruebo, 5 wrong, 6 abstains,
        # 7-8 correct rechazo, 9 wrong (apruebo), 10 abstains
        stances = {1: "apruebo", 2: "apruebo", 3: "apruebo", 4: "apruebo",
                   5: "rechazo", 6: "undisclosed", 7: "rechazo", 8: "rechazo",
                   9: "apruebo", 10: "undisclosed"}
        # bots flagged: 9 (true), 3 (false); missed: 10
        verdicts = self.make_verdicts(
            {i: i in (3, 9) for i in range(1, 11)})
        metrics = evaluate_against_truth(stances, verdicts, truth)
        # by hand: decided = 8, correct = 6 (1,2,3,4 + 7,8)
        assert metrics["stance_accuracy"] == pytest.approx(6 / 8)
        assert metrics["abstention_rate"] == pytest.approx(2 / 10)
        # precision tp=1 (9), fp=1 (3); recall tp=1, fn=1 (10)
        assert metrics["bot_precision"] == pytest.approx(0.5)
        assert metrics["bot_recall"] == pytest.approx(0.5)

    def test_community_nmi_over_squads(self):
        from stancescope.netcomm import Partition
        from stancescope.synth import GroundTruth
        truth = GroundTruth(
            stance={i: "apruebo" for i in range(1, 7)},
            is_bot={i: True for i in range(1, 7)},
            squad={1: 0, 2: 0, 3: 0, 4: 1, 5: 1, 6: 1},
        )
        part = Partition(assignment={1: 2, 2: 2, 3: 2, 4: 7, 5: 7, 6: 7},
                         n_blocks=2, objective=0.0, description_length=0.0)
        metrics = evaluate_against_truth(
            {i: "apruebo" for i in range(1, 7)},
            self.make_verdicts({i: True for i in range(1, 7)}),
            truth, partition=part)
        assert metrics["community_nmi"] == pytest.approx(1.0)
