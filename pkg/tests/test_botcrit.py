import math
import random
from dataclasses import dataclass
from datetime import date, datetime, timezone

import pytest

from stancescope.botcrit import (
    BotVerdict,
    assign_anomaly_groups,
    content_distribution,
    digit_count,
    digit_score_quantiles,
    flag_bots,
    registrations_by_week,
)

from conftest import build_account, build_corpus, build_tweet


@dataclass(frozen=True)
class FakeRecord:
    account_id: int
    score: float


def ranked(scores):
    recs = [FakeRecord(aid, s) for aid, s in scores.items()]
    return sorted(recs, key=lambda r: (-r.score, r.account_id))


class TestDigitCount:
    def test_plain(self):
        assert digit_count("alice") == 0

    def test_year_pattern(self):
        assert digit_count("ana1990") == 4

    def test_long_random_suffix(self):
        assert digit_count("user20201234567890") == 14

    def test_non_decimal_unicode_not_counted(self):
        assert digit_count("user²") == 0  # superscript two


class TestGroups:
    def test_group_zero_size(self):
        scores = {i: 1.0 - i / 2000 for i in range(1000)}
        groups = assign_anomaly_groups(ranked(scores))
        assert sum(1 for g in groups.values() if g == 0) == 75

    def test_uniform_rest_groups_roughly_even(self):
        rng = random.Random(1)
        scores = {i: rng.random() for i in range(2000)}
        groups = assign_anomaly_groups(ranked(scores))
        sizes = [sum(1 for g in groups.values() if g == k) for k in (1, 2, 3, 4)]
        rest = sum(sizes)
        for s in sizes:
            assert abs(s - rest / 4) < 0.1 * rest

    def test_degenerate_range_lowest_interval(self):
        scores = {i: 1.0 for i in range(10)}
        scores[0] = 2.0  # one clear top account
        groups = assign_anomaly_groups(ranked(scores))
        assert groups[0] == 0
        assert all(groups[i] == 4 for i in range(1, 10))

    def test_too_few_records_rejected(self):
        with pytest.raises(ValueError):
            assign_anomaly_groups(ranked({1: 0.5, 2: 0.4}))

    def test_groups_partition_all_accounts(self):
        rng = random.Random(3)
        scores = {i: rng.random() for i in range(333)}
        groups = assign_anomaly_groups(ranked(scores))
        assert set(groups) == set(scores)
        assert set(groups.values()) <= {0, 1, 2, 3, 4}


def account_created(aid, when, username="user"):
    return build_account(
        aid, username=username,
        created_at=datetime(when.year, when.month, when.day, tzinfo=timezone.utc))


class TestFlagBots:
    def setup_method(self):
        self.accounts = {
            1: account_created(1, date(2020, 9, 1), "bot12345"),
            2: account_created(2, date(2020, 8, 7), "bot12345"),
            3: account_created(3, date(2020, 9, 1), "user1234"),
            4: account_created(4, date(2020, 8, 8), "name55555"),
            5: account_created(5, date(2019, 1, 1), "clean"),
        }

    def test_all_three_conditions(self):
        groups = {1: 0, 2: 0, 3: 0, 4: 1, 5: 2}
        verdicts = {v.account_id: v for v in flag_bots(groups, self.accounts)}
        assert verdicts[1].is_bot
        assert verdicts[1].reasons == {"anomaly_group", "registration", "digits"}

    def test_registration_boundary(self):
        groups = {1: 0, 2: 0, 3: 0, 4: 0, 5: 0}
        verdicts = {v.account_id: v for v in flag_bots(groups, self.accounts)}
        assert not verdicts[2].is_bot  # 2020-08-07 misses the cutoff
        assert "registration" not in verdicts[2].reasons
        assert verdicts[4].is_bot      # cutoff day itself counts

    def test_exactly_four_digits_not_bot(self):
        groups = {1: 0, 2: 0, 3: 0, 4: 0, 5: 0}
        verdicts = {v.account_id: v for v in flag_bots(groups, self.accounts)}
        assert not verdicts[3].is_bot
        assert "digits" not in verdicts[3].reasons

    def test_is_bot_iff_all_reasons(self):
        groups = {1: 0, 2: 1, 3: 4, 4: 0, 5: 3}
        for v in flag_bots(groups, self.accounts):
            assert v.is_bot == (len(v.reasons) == 3)

    def test_monotonicity_on_randomized_accounts(self):
        rng = random.Random(7)
        accounts = {}
        groups = {}
        for aid in range(1, 1001):
            when = date(2020, rng.randrange(1, 13), rng.randrange(1, 29))
            digits = "7" * rng.randrange(0, 9)
            accounts[aid] = account_created(aid, when, f"user{digits}")
            groups[aid] = rng.randrange(0, 5)
        base = {v.account_id: v.is_bot for v in flag_bots(groups, accounts)}

        # earlier registration can only turn bots into non-bots
        earlier = {
            aid: account_created(aid, date(2019, 1, 1), acc.username)
            for aid, acc in accounts.items()
        }
        moved = {v.account_id: v.is_bot for v in flag_bots(groups, earlier)}
        for aid in base:
            if moved[aid]:
                assert base[aid]

        # raising the digit threshold never increases the bot count
        prev = sum(base.values())
        for thr in (5, 6, 7, 8, 9):
            cnt = sum(v.is_bot for v in flag_bots(groups, accounts,
                                                  digit_threshold=thr))
            assert cnt <= prev
            prev = cnt


class TestReports:
    def test_single_account_normalized_row(self):
        accounts = {1: account_created(1, date(2020, 8, 20))}
        groups = {1: 0}
        gt, st = registrations_by_week(accounts, groups, {1: "apruebo"})
        assert sum(gt[0].values()) == 1
        assert st["apruebo"] == {"2020-W34": 1.0}

    def test_stance_rows_sum_to_one(self):
        rng = random.Random(5)
        accounts, groups, stances = {}, {}, {}
        for aid in range(1, 400):
            when = date(2020, rng.randrange(6, 11), rng.randrange(1, 29))
            accounts[aid] = account_created(aid, when)
            groups[aid] = rng.randrange(0, 5)
            stances[aid] = rng.choice(["apruebo", "rechazo"])
        gt, st = registrations_by_week(accounts, groups, stances)
        for stance, row in st.items():
            assert sum(row.values()) == pytest.approx(1.0)
        # group totals partition the account set
        assert sum(sum(row.values()) for row in gt.values()) == 399

    def test_totals_match_recount_oracle(self):
        rng = random.Random(11)
        accounts, groups = {}, {}
        for aid in range(1, 200):
            when = date(2020, rng.randrange(1, 13), rng.randrange(1, 29))
            accounts[aid] = account_created(aid, when)
            groups[aid] = rng.randrange(0, 5)
        gt, _ = registrations_by_week(accounts, groups, {})
        from stancescope.corpus import iso_week
        for g in range(5):
            for week, count in gt.get(g, {}).items():
                oracle = sum(
                    1 for aid in accounts
                    if groups[aid] == g
                    and iso_week(accounts[aid].created_at.date()) == week)
                assert count == oracle


class TestContentDistribution:
    def test_no_bots_two_cells(self):
        accounts = [build_account(1), build_account(2)]
        tweets = [build_tweet(1, 1), build_tweet(2, 2), build_tweet(3, 2)]
        corpus = build_corpus(tweets, accounts)
        stances = {1: "apruebo", 2: "rechazo"}
        verdicts = [BotVerdict(1, False, frozenset()),
                    BotVerdict(2, False, frozenset())]
        cells = content_distribution(stances, verdicts, corpus)
        assert set(cells) == {("apruebo", False), ("rechazo", False)}
        assert cells[("rechazo", False)] == {"accounts": 1, "tweets": 2}

    def test_cells_partition_accounts_and_tweets(self):
        rng = random.Random(21)
        accounts = [build_account(i) for i in range(1, 100)]
        tweets = [build_tweet(n, rng.randrange(1, 100),
                              offset_hours=rng.randrange(500))
                  for n in range(700)]
        corpus = build_corpus(tweets, accounts)
        stances = {i: rng.choice(["apruebo", "rechazo", "undisclosed"])
                   for i in range(1, 100)}
        verdicts = [BotVerdict(i, rng.random() < 0.1, frozenset())
                    for i in range(1, 100)]
        cells = content_distribution(stances, verdicts, corpus)
        assert sum(c["accounts"] for c in cells.values()) == 99
        assert sum(c["tweets"] for c in cells.values()) == 700
        # oracle recount per cell
        bot_of = {v.account_id: v.is_bot for v in verdicts}
        for (stance, is_bot), cell in cells.items():
            acc_oracle = sum(1 for aid in corpus.accounts
                             if stances[aid] == stance and bot_of[aid] == is_bot)
            tw_oracle = sum(1 for t in corpus.tweets
                            if stances[t.author_id] == stance
                            and bot_of[t.author_id] == is_bot)
            assert cell["accounts"] == acc_oracle
            assert cell["tweets"] == tw_oracle


class TestDigitQuantiles:
    def test_rows_cover_digit_values(self):
        accounts = {
            1: account_created(1, date(2020, 1, 1), "abc"),
            2: account_created(2, date(2020, 1, 1), "a1"),
            3: account_created(3, date(2020, 1, 1), "b2"),
        }
        records = [FakeRecord(1, 0.9), FakeRecord(2, 0.5), FakeRecord(3, 0.4)]
        rows = digit_score_quantiles(records, accounts)
        assert [r[0] for r in rows] == [0, 1]
        d1 = rows[1]
        assert d1[1] == 0.4 and d1[5] == 0.5 and d1[6] == 2
