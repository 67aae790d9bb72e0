"""Synthetic corpora with planted ground truth.

Accounts come in four classes (regular/bot x apruebo/rechazo) with
class-level behavior knobs: registration window, username digit counts,
post rate, seed-term usage, homophily of interaction targets and, for bot
classes, squad structure. Bot squads synchronize retweet bursts on a squad
amplifier account, which is what the community analysis is meant to find.
Text is bag-of-words from stance vocabularies plus a shared common pool.

Everything is driven by one master seed; each account draws from its own
spawned generator, so generation is reproducible and order-independent.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta, timezone

import numpy as np

from .corpus import AccountRecord, Corpus, TweetRecord

CLASS_ORDER = ("regular_apruebo", "regular_rechazo", "bot_apruebo", "bot_rechazo")

KIND_MIX = (("original", 0.53), ("retweet", 0.32), ("quote", 0.06), ("reply", 0.09))

_DOMAINS = ("example.com", "blog.example.com", "news.test.org",
            "medio.test.cl", "diario.example.net")


@dataclass
class ClassSpec:
    count: int
    stance: str
    is_bot: bool
    registration_window: tuple[date, date]
    digit_choices: tuple[int, ...] = (0, 0, 1, 2, 4)
    default_image_prob: float = 0.1
    daily_rate: float = 0.25
    seed_term_prob: float = 0.1
    homophily: float = 0.85
    name_hashtag_prob: float = 0.0
    followers_range: tuple[int, int] = (0, 500)
    friends_range: tuple[int, int] = (0, 400)
    statuses_per_day: tuple[float, float] = (0.2, 3.0)
    squad_size: int = 0
    squad_retweets: int = 12
    squad_bursts: int = 3

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("class count must be >= 0")
        for p in (self.default_image_prob, self.seed_term_prob,
                  self.homophily, self.name_hashtag_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability {p} outside [0, 1]")


@dataclass
class SynthSpec:
    classes: dict[str, ClassSpec]
    window: tuple[date, date]
    seed: int
    vocab_sizes: dict[str, int] = field(default_factory=lambda: {
        "apruebo": 60, "rechazo": 60, "common": 300})

    def __post_init__(self):
        unknown = set(self.classes) - set(CLASS_ORDER)
        if unknown:
            raise ValueError(f"unknown account classes: {sorted(unknown)}")
        if self.window[0] > self.window[1]:
            raise ValueError("inverted study window")


@dataclass
class GroundTruth:
    stance: dict[int, str]
    is_bot: dict[int, bool]
    squad: dict[int, int | None]


def default_spec(n_accounts: int = 1000, bot_fraction: float = 0.01,
                 apruebo_share: float = 0.8, seed: int = 0,
                 seed_term_prob: float = 0.1,
                 window: tuple[date, date] = (date(2020, 8, 1), date(2020, 10, 25)),
                 ) -> SynthSpec:
    """A paper-shaped scenario: two stances at the given share, a small
    bot population registered late with digit-heavy usernames."""
    n_bots = round(n_accounts * bot_fraction)
    n_regular = n_accounts - n_bots
    n_reg_a = round(n_regular * apruebo_share)
    n_reg_r = n_regular - n_reg_a
    n_bot_r = round(n_bots * 0.7)
    n_bot_a = n_bots - n_bot_r
    reg_window = (date(2011, 1, 1), window[1])
    bot_window = (window[0] + timedelta(days=9), window[1])
    classes = {
        "regular_apruebo": ClassSpec(
            count=n_reg_a, stance="apruebo", is_bot=False,
            registration_window=reg_window, seed_term_prob=seed_term_prob),
        "regular_rechazo": ClassSpec(
            count=n_reg_r, stance="rechazo", is_bot=False,
            registration_window=reg_window, seed_term_prob=seed_term_prob),
        "bot_apruebo": ClassSpec(
            count=n_bot_a, stance="apruebo", is_bot=True,
            registration_window=bot_window,
            digit_choices=(5, 6, 7, 9, 14),
            default_image_prob=0.7, daily_rate=2.5, seed_term_prob=0.3,
            homophily=0.95, followers_range=(0, 15),
            friends_range=(200, 900), statuses_per_day=(20.0, 80.0),
            squad_size=5),
        "bot_rechazo": ClassSpec(
            count=n_bot_r, stance="rechazo", is_bot=True,
            registration_window=bot_window,
            digit_choices=(5, 6, 7, 9, 14),
            default_image_prob=0.7, daily_rate=2.5, seed_term_prob=0.3,
            homophily=0.95, followers_range=(0, 15),
            friends_range=(200, 900), statuses_per_day=(20.0, 80.0),
            squad_size=5),
    }
    return SynthSpec(classes=classes, window=window, seed=seed)


def _letters(rng, k: int) -> str:
    return "".join(string.ascii_lowercase[int(i)]
                   for i in rng.integers(0, 26, k))


def _uniform_dt(rng, start: date, end: date) -> datetime:
    span = int((end - start).days)
    day = start + timedelta(days=int(rng.integers(0, span + 1)))
    return datetime.combine(day, time(0, 0, tzinfo=timezone.utc)) + \
        timedelta(seconds=int(rng.integers(0, 86400)))


def _vocab(sizes: dict[str, int]) -> dict[str, list[str]]:
    return {
        "apruebo": [f"apv{i}" for i in range(sizes["apruebo"])],
        "rechazo": [f"rcz{i}" for i in range(sizes["rechazo"])],
        "common": [f"palabra{i}" for i in range(sizes["common"])],
    }


def _text(rng, stance: str, vocab, seed_tag: str | None) -> str:
    n_words = int(rng.integers(4, 11))
    words = []
    for _ in range(n_words):
        if rng.random() < 0.35:
            pool = vocab[stance]
        else:
            pool = vocab["common"]
        words.append(pool[int(rng.integers(len(pool)))])
    if seed_tag:
        words.append(seed_tag)
    return " ".join(words)


def generate_corpus(spec: SynthSpec, seed: int | None = None,
                    ) -> tuple[Corpus, GroundTruth]:
    """Build (Corpus, GroundTruth) for the spec; `seed` overrides spec.seed."""
    master = spec.seed if seed is None else seed
    root = np.random.SeedSequence(master)
    structure_ss, accounts_ss = root.spawn(2)
    structure_rng = np.random.default_rng(structure_ss)
    vocab = _vocab(spec.vocab_sizes)
    win_start, win_end = spec.window

    # ---- accounts ------------------------------------------------------
    accounts: dict[int, AccountRecord] = {}
    truth = GroundTruth(stance={}, is_bot={}, squad={})
    class_members: dict[str, list[int]] = {}
    seed_users: set[int] = set()
    next_id = 1001
    ordered_classes = [c for c in CLASS_ORDER if c in spec.classes]
    account_rngs: dict[int, np.random.Generator] = {}
    total = sum(spec.classes[c].count for c in ordered_classes)
    children = accounts_ss.spawn(total) if total else []
    child_iter = iter(children)

    for cname in ordered_classes:
        cls = spec.classes[cname]
        members = []
        for _ in range(cls.count):
            aid = next_id
            next_id += 1
            rng = np.random.default_rng(next(child_iter))
            account_rngs[aid] = rng
            n_digits = int(cls.digit_choices[int(rng.integers(len(cls.digit_choices)))])
            digits = "".join(str(int(d)) for d in rng.integers(0, 10, n_digits))
            username = _letters(rng, 6) + digits
            created = _uniform_dt(rng, *cls.registration_window)
            full_name = f"{_letters(rng, 5)} {_letters(rng, 7)}"
            is_seed_user = rng.random() < cls.seed_term_prob
            if is_seed_user:
                seed_users.add(aid)
            if is_seed_user and rng.random() < cls.name_hashtag_prob:
                full_name += f" #{cls.stance}"
            bio_tag = None
            bio = _text(rng, cls.stance, vocab, bio_tag)
            url = None
            if rng.random() < 0.25:
                url = "https://" + _DOMAINS[int(rng.integers(len(_DOMAINS)))] + "/p"
            age_days = max((win_end - created.date()).days, 1)
            lo, hi = cls.statuses_per_day
            statuses = int(age_days * (lo + (hi - lo) * rng.random()))
            accounts[aid] = AccountRecord(
                account_id=aid,
                username=username,
                full_name=full_name,
                bio=bio,
                home_url=url,
                created_at=created,
                followers=int(rng.integers(*cls.followers_range)) if
                cls.followers_range[1] > cls.followers_range[0] else cls.followers_range[0],
                friends=int(rng.integers(*cls.friends_range)) if
                cls.friends_range[1] > cls.friends_range[0] else cls.friends_range[0],
                statuses=statuses,
                default_profile_image=bool(rng.random() < cls.default_image_prob),
            )
            truth.stance[aid] = cls.stance
            truth.is_bot[aid] = cls.is_bot
            truth.squad[aid] = None
            members.append(aid)
        class_members[cname] = members

    if not accounts:
        return (Corpus(accounts={}, tweets=[], window=spec.window), truth)

    # ---- popularity-weighted target pools per stance -------------------
    by_stance: dict[str, list[int]] = {"apruebo": [], "rechazo": []}
    for aid in sorted(accounts):
        by_stance[truth.stance[aid]].append(aid)
    hub_weight: dict[int, float] = {}
    hubs: dict[str, list[int]] = {}
    for stance, pool in by_stance.items():
        n_hubs = max(1, len(pool) // 50) if pool else 0
        picked = sorted(structure_rng.choice(pool, size=n_hubs, replace=False)
                        .tolist()) if n_hubs else []
        hubs[stance] = [int(a) for a in picked]
        for a in pool:
            hub_weight[a] = 40.0 if a in set(hubs[stance]) else 1.0
    stance_weights = {
        s: np.array([hub_weight[a] for a in pool]) / sum(hub_weight[a] for a in pool)
        if pool else np.empty(0)
        for s, pool in by_stance.items()
    }

    # ---- squads --------------------------------------------------------
    squad_id = 0
    squad_of_class: dict[str, list[list[int]]] = {}
    for cname in ordered_classes:
        cls = spec.classes[cname]
        if not cls.is_bot or cls.squad_size <= 1:
            continue
        members = class_members[cname]
        squads = [members[i:i + cls.squad_size]
                  for i in range(0, len(members), cls.squad_size)]
        squads = [s for s in squads if len(s) >= 2]
        squad_of_class[cname] = squads
        for squad in squads:
            for aid in squad:
                truth.squad[aid] = squad_id
            squad_id += 1

    # ---- tweets --------------------------------------------------------
    raw_tweets: list[tuple[datetime, int, str, int | None, str]] = []
    kinds, kind_p = zip(*KIND_MIX)
    kind_p = np.array(kind_p)

    for cname in ordered_classes:
        cls = spec.classes[cname]
        for aid in class_members[cname]:
            rng = account_rngs[aid]
            acc = accounts[aid]
            start = max(win_start, acc.created_at.date())
            eff_days = max((win_end - start).days, 1)
            n_posts = max(1, int(rng.poisson(cls.daily_rate * eff_days)))
            my_stance = truth.stance[aid]
            is_seed_user = aid in seed_users
            for _ in range(n_posts):
                ts = _uniform_dt(rng, start, win_end)
                kind = str(kinds[int(rng.choice(len(kinds), p=kind_p))])
                seed_tag = None
                if is_seed_user and kind == "original" and rng.random() < 0.5:
                    seed_tag = f"#{my_stance}"
                text = _text(rng, my_stance, vocab, seed_tag)
                target = None
                if kind != "original":
                    t_stance = my_stance if rng.random() < cls.homophily \
                        else ("rechazo" if my_stance == "apruebo" else "apruebo")
                    pool = by_stance[t_stance]
                    if not pool or (len(pool) == 1 and pool[0] == aid):
                        kind = "original"
                    else:
                        while True:
                            target = int(rng.choice(pool, p=stance_weights[t_stance]))
                            if target != aid:
                                break
                raw_tweets.append((ts, aid, kind, target, text))

    # squad coordination: synchronized retweet bursts on the amplifier
    for cname, squads in squad_of_class.items():
        cls = spec.classes[cname]
        for squad in squads:
            amplifier = squad[0]
            srng = np.random.default_rng(
                np.random.SeedSequence((master, 7, truth.squad[amplifier])))
            burst_times = [_uniform_dt(srng, win_start + timedelta(days=10), win_end)
                           for _ in range(cls.squad_bursts)]
            stance = truth.stance[amplifier]
            for member in squad[1:]:
                mrng = np.random.default_rng(
                    np.random.SeedSequence((master, 11, member)))
                for _ in range(cls.squad_retweets):
                    bt = burst_times[int(mrng.integers(len(burst_times)))]
                    ts = bt + timedelta(seconds=int(mrng.integers(0, 1800)))
                    text = _text(mrng, stance, vocab, None)
                    raw_tweets.append((ts, member, "retweet", amplifier, text))
                # a little glue keeps squads inside the main component
                for _ in range(2):
                    hub_pool = hubs[stance] or by_stance[stance]
                    target = int(hub_pool[int(mrng.integers(len(hub_pool)))])
                    if target == member:
                        continue
                    ts = _uniform_dt(mrng, win_start + timedelta(days=10), win_end)
                    raw_tweets.append((ts, member, "retweet", target,
                                       _text(mrng, stance, vocab, None)))

    raw_tweets.sort(key=lambda r: (r[0], r[1], r[2], r[4]))
    tweets = []
    for i, (ts, aid, kind, target, text) in enumerate(raw_tweets):
        if ts.date() > win_end:
            ts = datetime.combine(win_end, time(23, 59, 59, tzinfo=timezone.utc))
        tweets.append(TweetRecord(
            tweet_id=100001 + i,
            author_id=aid,
            created_at=ts,
            kind=kind,
            target_account_id=target,
            text=text,
            hashtags=[w for w in text.split() if w.startswith("#")],
        ))
    corpus = Corpus(accounts=accounts, tweets=tweets, window=spec.window)
    return corpus, truth


# ---- evaluation ---------------------------------------------------------

def nmi(labels_a, labels_b) -> float:
    """Normalized mutual information (arithmetic normalization)."""
    a = list(labels_a)
    b = list(labels_b)
    if len(a) != len(b):
        raise ValueError("label sequences must align")
    n = len(a)
    if n == 0:
        raise ValueError("empty labelings")
    from collections import Counter
    ca = Counter(a)
    cb = Counter(b)
    cab = Counter(zip(a, b))
    h_a = -sum(c / n * math.log(c / n) for c in ca.values())
    h_b = -sum(c / n * math.log(c / n) for c in cb.values())
    mi = 0.0
    for (x, y), c in cab.items():
        p = c / n
        mi += p * math.log(p / ((ca[x] / n) * (cb[y] / n)))
    denom = (h_a + h_b) / 2
    if denom == 0.0:
        return 1.0
    return mi / denom


def evaluate_against_truth(stances: dict[int, str], verdicts,
                           truth: GroundTruth,
                           partition=None) -> dict[str, float]:
    """Standard metrics against planted ground truth.

    Undisclosed predictions are abstentions: reported separately and
    excluded from the accuracy denominator. Community NMI compares block
    assignments against squad ids over squad members in the partition.
    """
    if set(stances) != set(truth.stance):
        raise ValueError("stance predictions do not cover the truth accounts")
    decided = [(aid, s) for aid, s in sorted(stances.items())
               if s in ("apruebo", "rechazo")]
    n_correct = sum(1 for aid, s in decided if truth.stance[aid] == s)
    metrics = {
        "abstention_rate": 1.0 - len(decided) / len(stances),
        "stance_accuracy": n_correct / len(decided) if decided else float("nan"),
    }

    bot_of = {v.account_id: v.is_bot for v in verdicts}
    tp = sum(1 for aid, flag in bot_of.items()
             if flag and truth.is_bot.get(aid, False))
    fp = sum(1 for aid, flag in bot_of.items()
             if flag and not truth.is_bot.get(aid, False))
    fn = sum(1 for aid, b in truth.is_bot.items()
             if b and not bot_of.get(aid, False))
    metrics["bot_precision"] = tp / (tp + fp) if tp + fp else float("nan")
    metrics["bot_recall"] = tp / (tp + fn) if tp + fn else float("nan")

    metrics["community_nmi"] = float("nan")
    if partition is not None:
        squad_members = [aid for aid, sq in sorted(truth.squad.items())
                         if sq is not None and aid in partition.assignment]
        squad_ids = {truth.squad[aid] for aid in squad_members}
        if len(squad_ids) >= 2:
            metrics["community_nmi"] = nmi(
                [truth.squad[aid] for aid in squad_members],
                [partition.assignment[aid] for aid in squad_members])
    return metrics
