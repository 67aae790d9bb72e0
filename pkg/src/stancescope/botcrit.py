"""Anomaly groups, the three-condition bot criterion and report tables.

An account is flagged as a bot iff it (a) sits in the top-anomaly group,
(b) registered on or after the cutoff date and (c) has strictly more than
the digit threshold of decimal digits in its username. Groups: group 0 is
the ceil(fraction * n) most anomalous accounts; groups 1-4 split the
remaining score range into four evenly spaced intervals (half-open (lo,
hi], lowest interval closed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date

from .corpus import AccountRecord, Corpus, iso_week

REASON_ANOMALY = "anomaly_group"
REASON_REGISTRATION = "registration"
REASON_DIGITS = "digits"

DEFAULT_CUTOFF = date(2020, 8, 8)
DEFAULT_DIGIT_THRESHOLD = 4
DEFAULT_TOP_FRACTION = 0.075


@dataclass(frozen=True)
class BotVerdict:
    account_id: int
    is_bot: bool
    reasons: frozenset


def digit_count(username: str) -> int:
    """Number of Unicode decimal-digit characters in the username."""
    return sum(1 for ch in username if ch.isdecimal())


def assign_anomaly_groups(records, top_fraction: float = DEFAULT_TOP_FRACTION,
                          ) -> dict[int, int]:
    """Group id (0..4) per account; records must already be ranked.

    Group 0 holds the ceil(top_fraction * n) highest-anomaly accounts (ties
    at the boundary were already broken by account id in the ranking).
    The rest fall into four intervals of their score range; group 1 covers
    the highest scores, group 4 the lowest (closed at its bottom edge), so
    a degenerate range puts everything in group 4.
    """
    n = len(records)
    if n < 5:
        raise ValueError(f"need at least 5 records to form groups, got {n}")
    k0 = math.ceil(top_fraction * n)
    groups = {r.account_id: 0 for r in records[:k0]}
    rest = records[k0:]
    scores = [r.score for r in rest]
    lo, hi = min(scores), max(scores)
    span = hi - lo
    b1 = lo + span / 4
    b2 = lo + span / 2
    b3 = lo + 3 * span / 4
    for r in rest:
        if r.score <= b1:
            groups[r.account_id] = 4
        elif r.score <= b2:
            groups[r.account_id] = 3
        elif r.score <= b3:
            groups[r.account_id] = 2
        else:
            groups[r.account_id] = 1
    return groups


def flag_bots(groups: dict[int, int], accounts: dict[int, AccountRecord],
              cutoff_date: date = DEFAULT_CUTOFF,
              digit_threshold: int = DEFAULT_DIGIT_THRESHOLD,
              ) -> list[BotVerdict]:
    """Apply the three-condition criterion to every grouped account."""
    verdicts = []
    for aid in sorted(groups):
        acc = accounts[aid]
        reasons = set()
        if groups[aid] == 0:
            reasons.add(REASON_ANOMALY)
        if acc.created_at.date() >= cutoff_date:
            reasons.add(REASON_REGISTRATION)
        if digit_count(acc.username) > digit_threshold:
            reasons.add(REASON_DIGITS)
        verdicts.append(BotVerdict(
            account_id=aid,
            is_bot=len(reasons) == 3,
            reasons=frozenset(reasons),
        ))
    return verdicts


def registrations_by_week(accounts: dict[int, AccountRecord],
                          groups: dict[int, int],
                          stances: dict[int, str]):
    """Weekly registration counts per anomaly group, plus the per-stance
    table normalized so each stance row sums to 1 (ISO weeks)."""
    group_table: dict[int, dict[str, int]] = {}
    stance_counts: dict[str, dict[str, int]] = {}
    for aid in sorted(groups):
        week = iso_week(accounts[aid].created_at.date())
        g = groups[aid]
        group_table.setdefault(g, {})
        group_table[g][week] = group_table[g].get(week, 0) + 1
        stance = stances.get(aid)
        if stance is not None:
            stance_counts.setdefault(stance, {})
            stance_counts[stance][week] = stance_counts[stance].get(week, 0) + 1
    stance_table: dict[str, dict[str, float]] = {}
    for stance, weeks in stance_counts.items():
        total = sum(weeks.values())
        stance_table[stance] = {w: c / total for w, c in sorted(weeks.items())}
    return group_table, stance_table


def content_distribution(stances: dict[int, str], verdicts: list[BotVerdict],
                         corpus: Corpus):
    """Account and tweet counts per (stance x bot status) cell.

    Cells partition both accounts and tweets exactly; accounts without a
    stance entry count as undisclosed, accounts without a verdict as human.
    """
    bot_of = {v.account_id: v.is_bot for v in verdicts}
    cells: dict[tuple[str, bool], dict[str, int]] = {}
    for aid in corpus.sorted_account_ids():
        key = (stances.get(aid, "undisclosed"), bot_of.get(aid, False))
        cell = cells.setdefault(key, {"accounts": 0, "tweets": 0})
        cell["accounts"] += 1
    for t in corpus.tweets:
        key = (stances.get(t.author_id, "undisclosed"),
               bot_of.get(t.author_id, False))
        cells[key]["tweets"] += 1
    return cells


def digit_score_quantiles(records, accounts: dict[int, AccountRecord]):
    """Anomaly-score spread (min/25/50/75/max) per username digit count."""
    import numpy as np

    by_digits: dict[int, list[float]] = {}
    for r in records:
        d = digit_count(accounts[r.account_id].username)
        by_digits.setdefault(d, []).append(r.score)
    rows = []
    for d in sorted(by_digits):
        s = np.array(by_digits[d])
        q = np.percentile(s, [0, 25, 50, 75, 100])
        rows.append((d, *(float(x) for x in q), len(s)))
    return rows
