"""Tweet corpus data model, JSONL ingestion, cleaning and descriptive stats.

The corpus is a batch snapshot of one discussion: accounts indexed by id and
tweets in chronological order. Input is line-delimited JSON (one tweet object
per line, author profile embedded); see `serialize_jsonl` for the exact
schema. All timestamps are normalized to UTC.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timezone

logger = logging.getLogger(__name__)

TWEET_KINDS = ("original", "retweet", "quote", "reply")

INTERACTION_KINDS = ("retweet", "quote", "reply")


class IngestError(Exception):
    """Raised when an input file cannot be ingested."""


@dataclass
class AccountRecord:
    account_id: int
    username: str
    full_name: str
    bio: str
    home_url: str | None
    created_at: datetime
    followers: int
    friends: int
    statuses: int
    default_profile_image: bool


@dataclass
class TweetRecord:
    tweet_id: int
    author_id: int
    created_at: datetime
    kind: str
    target_account_id: int | None
    text: str
    hashtags: list[str] = field(default_factory=list)


@dataclass
class Corpus:
    """Accounts keyed by id plus tweets sorted by (created_at, tweet_id)."""

    accounts: dict[int, AccountRecord]
    tweets: list[TweetRecord]
    window: tuple[date, date] | None = None

    def sorted_account_ids(self) -> list[int]:
        return sorted(self.accounts)


@dataclass
class CorpusStats:
    n_tweets: int
    n_accounts: int
    kind_fractions: dict[str, float]
    weekly_volume: list[tuple[str, int]]


def _parse_ts(value: str) -> datetime:
    # py3.10 fromisoformat does not accept a trailing 'Z'
    dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def _parse_line(obj: dict) -> tuple[TweetRecord, AccountRecord]:
    author = obj["author"]
    account = AccountRecord(
        account_id=int(author["id"]),
        username=str(author["username"]),
        full_name=str(author["name"]),
        bio=str(author.get("bio", "")),
        home_url=author.get("url") or None,
        created_at=_parse_ts(author["created_at"]),
        followers=int(author["followers"]),
        friends=int(author["friends"]),
        statuses=int(author["statuses"]),
        default_profile_image=bool(author["default_profile_image"]),
    )
    if account.followers < 0 or account.friends < 0 or account.statuses < 0:
        raise ValueError("negative profile counts")
    kind = obj["kind"]
    if kind not in TWEET_KINDS:
        raise ValueError(f"unknown tweet kind {kind!r}")
    target = obj.get("target_account_id")
    if kind != "original" and target is None:
        raise ValueError(f"kind {kind!r} requires target_account_id")
    tweet = TweetRecord(
        tweet_id=int(obj["tweet_id"]),
        author_id=account.account_id,
        created_at=_parse_ts(obj["created_at"]),
        kind=kind,
        target_account_id=int(target) if target is not None else None,
        text=str(obj.get("text", "")),
        hashtags=[str(h) for h in obj.get("hashtags", [])],
    )
    return tweet, account


def ingest_jsonl(path, max_malformed_fraction: float = 0.5) -> Corpus:
    """Read one tweet object per line into a Corpus.

    Malformed lines are skipped and counted; more than
    ``max_malformed_fraction`` of malformed lines is fatal. Duplicate
    tweet_ids are dropped (first occurrence wins) and account profiles are
    deduplicated keeping the latest-seen snapshot.
    """
    accounts: dict[int, AccountRecord] = {}
    tweets: dict[int, TweetRecord] = {}
    n_lines = 0
    n_malformed = 0
    n_duplicate = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            n_lines += 1
            try:
                tweet, account = _parse_line(json.loads(line))
            except (ValueError, KeyError, TypeError) as exc:
                n_malformed += 1
                if n_malformed <= 5:
                    logger.warning("skipping malformed line %d: %s", n_lines, exc)
                continue
            # latest snapshot wins, even when the tweet itself is a duplicate
            accounts[account.account_id] = account
            if tweet.tweet_id in tweets:
                n_duplicate += 1
                continue
            tweets[tweet.tweet_id] = tweet
    if n_malformed:
        logger.warning("skipped %d malformed of %d lines", n_malformed, n_lines)
    if n_lines and n_malformed / n_lines > max_malformed_fraction:
        raise IngestError(
            f"{n_malformed}/{n_lines} lines malformed "
            f"(limit {max_malformed_fraction:.0%}); wrong file or schema?"
        )
    if n_duplicate:
        logger.info("dropped %d duplicate tweet_ids", n_duplicate)
    ordered = sorted(tweets.values(), key=lambda t: (t.created_at, t.tweet_id))
    # drop accounts that only appeared as authors of malformed lines
    authors = {t.author_id for t in ordered}
    accounts = {a: rec for a, rec in accounts.items() if a in authors}
    window = None
    if ordered:
        window = (ordered[0].created_at.date(), ordered[-1].created_at.date())
    return Corpus(accounts=accounts, tweets=ordered, window=window)


def serialize_jsonl(corpus: Corpus, path) -> None:
    """Write the corpus back to the JSONL schema read by `ingest_jsonl`."""
    with open(path, "w", encoding="utf-8") as fh:
        for t in corpus.tweets:
            a = corpus.accounts[t.author_id]
            obj = {
                "tweet_id": str(t.tweet_id),
                "author": {
                    "id": str(a.account_id),
                    "username": a.username,
                    "name": a.full_name,
                    "bio": a.bio,
                    "url": a.home_url,
                    "created_at": a.created_at.isoformat(),
                    "followers": a.followers,
                    "friends": a.friends,
                    "statuses": a.statuses,
                    "default_profile_image": a.default_profile_image,
                },
                "created_at": t.created_at.isoformat(),
                "kind": t.kind,
                "target_account_id": (
                    str(t.target_account_id) if t.target_account_id is not None else None
                ),
                "text": t.text,
                "hashtags": t.hashtags,
            }
            fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")


def filter_corpus(corpus: Corpus, window: tuple[date, date]) -> Corpus:
    """Keep tweets whose date falls inside [start, end] (day granularity).

    Accounts left with zero tweets are dropped. Idempotent for a fixed
    window.
    """
    start, end = window
    if start > end:
        raise ValueError(f"inverted window: {start} > {end}")
    kept = [t for t in corpus.tweets if start <= t.created_at.date() <= end]
    authors = {t.author_id for t in kept}
    accounts = {a: rec for a, rec in corpus.accounts.items() if a in authors}
    return Corpus(accounts=accounts, tweets=kept, window=(start, end))


def iso_week(d: date) -> str:
    year, week, _ = d.isocalendar()
    return f"{year}-W{week:02d}"


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Tweet/account totals, per-kind fractions and weekly volume series.

    Kind fractions sum to 1 for non-empty corpora; the weekly series
    partitions the tweet count exactly. An empty corpus yields zero stats.
    """
    n = len(corpus.tweets)
    counts = {k: 0 for k in TWEET_KINDS}
    weekly: dict[str, int] = {}
    for t in corpus.tweets:
        counts[t.kind] += 1
        wk = iso_week(t.created_at.date())
        weekly[wk] = weekly.get(wk, 0) + 1
    fractions = {k: (counts[k] / n if n else 0.0) for k in TWEET_KINDS}
    return CorpusStats(
        n_tweets=n,
        n_accounts=len(corpus.accounts),
        kind_fractions=fractions,
        weekly_volume=sorted(weekly.items()),
    )


def clone_with_window(corpus: Corpus, window: tuple[date, date]) -> Corpus:
    return replace(corpus, window=window)
