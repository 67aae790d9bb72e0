"""Seed-based stance labeling.

Accounts that use discriminating hashtags/keywords of exactly one stance
(in content or in their profile, per term scope) get an initial label;
accounts matching both stances stay unlabeled. Manual overrides are applied
last and win unconditionally.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field

from .corpus import Corpus
from .features import tokenize

logger = logging.getLogger(__name__)

STANCES = ("apruebo", "rechazo")

SCOPES = ("content", "profile_name", "bio")


@dataclass(frozen=True)
class SeedTerm:
    term: str
    stance: str
    scopes: frozenset = frozenset(SCOPES)


@dataclass(frozen=True)
class StanceLabel:
    stance: str
    source: str  # "seed" or "manual"


@dataclass
class SeedLexicon:
    terms: list[SeedTerm] = field(default_factory=list)

    def __post_init__(self):
        normalized = []
        for t in self.terms:
            if t.stance not in STANCES:
                raise ValueError(f"unknown stance {t.stance!r}")
            bad = set(t.scopes) - set(SCOPES)
            if bad:
                raise ValueError(f"unknown scopes {sorted(bad)} for term {t.term!r}")
            normalized.append(SeedTerm(t.term.casefold(), t.stance,
                                       frozenset(t.scopes)))
        self.terms = normalized
        by_stance = {s: {t.term for t in self.terms if t.stance == s}
                     for s in STANCES}
        overlap = by_stance["apruebo"] & by_stance["rechazo"]
        if overlap:
            raise ValueError(f"seed terms assigned to both stances: {sorted(overlap)}")

    def all_terms(self) -> set[str]:
        return {t.term for t in self.terms}


def default_lexicon() -> SeedLexicon:
    """The six stock seed hashtags; anything richer is user-supplied config."""
    terms = []
    for base in ("apruebo", "rechazo"):
        for pattern in ("#{0}", "#yo{0}", "#voto{0}"):
            terms.append(SeedTerm(pattern.format(base), base))
    return SeedLexicon(terms)


def extract_profile_hashtags(corpus: Corpus) -> list[tuple[str, int]]:
    """Hashtags found in profile full names, ranked by distinct accounts.

    Case-folded; ties broken lexicographically.
    """
    counts = Counter()
    for aid in corpus.sorted_account_ids():
        tags = {tok for tok in tokenize(corpus.accounts[aid].full_name)
                if tok.startswith("#")}
        counts.update(tags)
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def apply_seeds(corpus: Corpus, lexicon: SeedLexicon,
                overrides=()) -> dict[int, StanceLabel]:
    """Assign seed labels, then manual overrides.

    An account matching terms of exactly one stance is labeled with it;
    matching both stances leaves it unlabeled (training noise is worse than
    a smaller seed set). ``overrides`` is an iterable of (account_id,
    stance) pairs applied last and unconditionally; unknown account ids are
    skipped with a warning.
    """
    terms = lexicon.terms
    labels: dict[int, StanceLabel] = {}

    content_tokens: dict[int, set[str]] = {aid: set() for aid in corpus.accounts}
    for t in corpus.tweets:
        toks = content_tokens[t.author_id]
        toks.update(tokenize(t.text))
        toks.update(h.casefold() for h in t.hashtags)

    for aid in corpus.sorted_account_ids():
        acc = corpus.accounts[aid]
        scoped = {
            "content": content_tokens[aid],
            "profile_name": set(tokenize(acc.full_name)),
            "bio": set(tokenize(acc.bio)),
        }
        matched = set()
        for term in terms:
            if any(term.term in scoped[s] for s in term.scopes):
                matched.add(term.stance)
        if len(matched) == 1:
            labels[aid] = StanceLabel(stance=matched.pop(), source="seed")

    for aid, stance in overrides:
        if stance not in STANCES:
            raise ValueError(f"override with unknown stance {stance!r}")
        if aid not in corpus.accounts:
            logger.warning("override for unknown account %s skipped", aid)
            continue
        labels[aid] = StanceLabel(stance=stance, source="manual")
    return labels
