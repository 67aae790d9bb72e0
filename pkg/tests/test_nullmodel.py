import numpy as np
import pytest

from stancescope.nullmodel import permutation_envelope, stance_anomaly_curve


def stances_for(ids, labels):
    return dict(zip(ids, labels))


class TestCurve:
    def test_all_apruebo_constant_one(self):
        ids = list(range(10))
        _, curve = stance_anomaly_curve(ids, stances_for(ids, ["apruebo"] * 10))
        assert np.allclose(curve, 1.0)

    def test_alternating_half_at_even_k(self):
        ids = list(range(20))
        labels = ["apruebo", "rechazo"] * 10
        _, curve = stance_anomaly_curve(ids, stances_for(ids, labels))
        assert np.allclose(curve[1::2], 0.5)

    def test_undisclosed_excluded(self):
        ids = [1, 2, 3, 4]
        stances = {1: "apruebo", 2: "undisclosed", 3: "rechazo", 4: "apruebo"}
        kept, curve = stance_anomaly_curve(ids, stances)
        assert kept == [1, 3, 4]
        assert len(curve) == 3

    def test_matches_bruteforce_recount(self):
        rng = np.random.default_rng(3)
        ids = list(range(500))
        labels = [str(rng.choice(["apruebo", "rechazo", "undisclosed"]))
                  for _ in ids]
        stances = stances_for(ids, labels)
        kept, curve = stance_anomaly_curve(ids, stances)
        for k in (1, 7, 100, len(kept)):
            top = kept[:k]
            oracle = sum(1 for a in top if stances[a] == "apruebo") / k
            assert curve[k - 1] == pytest.approx(oracle, abs=1e-15)

    def test_empty_ranking_rejected(self):
        with pytest.raises(ValueError):
            stance_anomaly_curve([], {})
        with pytest.raises(ValueError):
            stance_anomaly_curve([1], {1: "undisclosed"})

    def test_ranking_must_cover_predictions(self):
        with pytest.raises(ValueError):
            stance_anomaly_curve([1, 2], {1: "apruebo", 2: "rechazo",
                                          3: "apruebo"})

    def test_curve_end_is_global_fraction(self):
        rng = np.random.default_rng(9)
        ids = list(range(300))
        labels = [str(rng.choice(["apruebo", "rechazo"])) for _ in ids]
        stances = stances_for(ids, labels)
        _, curve = stance_anomaly_curve(ids, stances)
        global_frac = labels.count("apruebo") / len(labels)
        assert curve[-1] == global_frac


class TestEnvelope:
    def test_band_closes_at_endpoint(self):
        rng = np.random.default_rng(1)
        ids = list(range(200))
        labels = [str(rng.choice(["apruebo", "rechazo"])) for _ in ids]
        env = permutation_envelope(ids, stances_for(ids, labels), M=50, seed=4)
        assert env["lo"][-1] == env["hi"][-1] == env["observed"][-1]
        assert not env["outside"][-1]

    def test_calibration_coverage(self):
        # stances independent of the ranking: observed curve should sit
        # inside the band almost everywhere
        rng = np.random.default_rng(7)
        ids = list(range(1000))
        labels = ["apruebo" if rng.random() < 0.7 else "rechazo" for _ in ids]
        env = permutation_envelope(ids, stances_for(ids, labels),
                                   M=100, seed=11)
        inside = 1.0 - env["outside"].mean()
        assert inside >= 0.90

    def test_biased_top_exits_band(self):
        # anomalous prefix dominated by one stance: sustained escape at
        # small k
        ids = list(range(600))
        labels = (["rechazo"] * 60
                  + ["apruebo" if i % 2 else "rechazo" for i in range(540)])
        env = permutation_envelope(ids, stances_for(ids, labels), M=100, seed=2)
        assert env["outside"][:40].mean() > 0.8

    def test_fixed_seed_identical(self):
        rng = np.random.default_rng(5)
        ids = list(range(150))
        labels = [str(rng.choice(["apruebo", "rechazo"])) for _ in ids]
        stances = stances_for(ids, labels)
        a = permutation_envelope(ids, stances, M=40, seed=9)
        b = permutation_envelope(ids, stances, M=40, seed=9)
        assert np.array_equal(a["lo"], b["lo"])
        assert np.array_equal(a["hi"], b["hi"])

    def test_m_below_two_rejected(self):
        with pytest.raises(ValueError):
            permutation_envelope([1, 2], {1: "apruebo", 2: "rechazo"}, M=1)

    def test_accepts_records_with_account_id(self):
        from dataclasses import dataclass

        @dataclass
        class Rec:
            account_id: int

        ids = [Rec(1), Rec(2), Rec(3), Rec(4)]
        stances = {1: "apruebo", 2: "rechazo", 3: "apruebo", 4: "rechazo"}
        kept, curve = stance_anomaly_curve(ids, stances)
        assert kept == [1, 2, 3, 4]
