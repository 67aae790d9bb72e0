import json
from datetime import datetime, timedelta, timezone

import pytest

from stancescope.corpus import AccountRecord, Corpus, TweetRecord

EPOCH = datetime(2020, 8, 1, tzinfo=timezone.utc)


def make_author(account_id, username=None, name="", bio="", url=None,
                created_at=None, followers=10, friends=10, statuses=100,
                default_image=False):
    created = created_at or datetime(2015, 1, 1, tzinfo=timezone.utc)
    return {
        "id": str(account_id),
        "username": username or f"user{account_id}",
        "name": name,
        "bio": bio,
        "url": url,
        "created_at": created.isoformat(),
        "followers": followers,
        "friends": friends,
        "statuses": statuses,
        "default_profile_image": default_image,
    }


def make_line(tweet_id, account_id, *, kind="original", target=None, text="hola",
              hashtags=(), offset_hours=0, **author_kw):
    ts = EPOCH + timedelta(hours=offset_hours)
    return json.dumps({
        "tweet_id": str(tweet_id),
        "author": make_author(account_id, **author_kw),
        "created_at": ts.isoformat(),
        "kind": kind,
        "target_account_id": str(target) if target is not None else None,
        "text": text,
        "hashtags": list(hashtags),
    })


def build_account(account_id, *, username=None, full_name="", bio="", url=None,
                  created_at=None, followers=10, friends=10, statuses=100,
                  default_image=False):
    return AccountRecord(
        account_id=account_id,
        username=username or f"user{account_id}",
        full_name=full_name,
        bio=bio,
        home_url=url,
        created_at=created_at or datetime(2015, 1, 1, tzinfo=timezone.utc),
        followers=followers,
        friends=friends,
        statuses=statuses,
        default_profile_image=default_image,
    )


def build_corpus(tweets, accounts, window=None):
    tweets = sorted(tweets, key=lambda t: (t.created_at, t.tweet_id))
    if window is None and tweets:
        window = (tweets[0].created_at.date(), tweets[-1].created_at.date())
    return Corpus(accounts={a.account_id: a for a in accounts},
                  tweets=tweets, window=window)


def build_tweet(tweet_id, author_id, *, kind="original", target=None,
                text="hola", hashtags=(), offset_hours=0):
    return TweetRecord(
        tweet_id=tweet_id,
        author_id=author_id,
        created_at=EPOCH + timedelta(hours=offset_hours),
        kind=kind,
        target_account_id=target,
        text=text,
        hashtags=list(hashtags),
    )


@pytest.fixture
def tiny_corpus():
    accounts = [build_account(i) for i in range(1, 5)]
    tweets = [
        build_tweet(10, 1, kind="original", offset_hours=0),
        build_tweet(11, 2, kind="retweet", target=1, offset_hours=1),
        build_tweet(12, 3, kind="quote", target=1, offset_hours=2),
        build_tweet(13, 4, kind="reply", target=2, offset_hours=3),
    ]
    return build_corpus(tweets, accounts)
