import random

import numpy as np
import pytest

from stancescope.features import (
    BLOCK_NAMES,
    assemble_features,
    build_block,
    build_feature_matrix,
    load_features,
    registrable_domain,
    save_features,
    tokenize,
)
from stancescope.seeding import StanceLabel

from conftest import build_account, build_corpus, build_tweet


class TestTokenize:
    def test_empty(self):
        assert tokenize("") == []

    def test_casefold_hashtag_and_flag_emoji(self):
        assert tokenize("Voto #Apruebo \U0001F1E8\U0001F1F1") == \
            ["voto", "#apruebo", "\U0001F1E8\U0001F1F1"]

    def test_mentions_kept(self):
        assert tokenize("hola @Ana como estas") == ["hola", "@ana", "como", "estas"]

    def test_url_replaced_by_registrable_domain(self):
        assert tokenize("mira https://blog.example.com/x ya") == \
            ["mira", "example.com", "ya"]

    def test_each_emoji_is_one_token(self):
        assert tokenize("bien \U0001F600\U0001F680") == \
            ["bien", "\U0001F600", "\U0001F680"]

    def test_counts_match_independent_scanner_oracle(self):
        # oracle: a character-level scanner written without the regex
        def oracle(text):
            emoji_ranges = [
                (0x1F300, 0x1F5FF), (0x1F600, 0x1F64F), (0x1F680, 0x1F6FF),
                (0x1F900, 0x1F9FF), (0x1FA70, 0x1FAFF), (0x1F1E6, 0x1F1FF),
                (0x2600, 0x26FF), (0x2700, 0x27BF),
            ]

            def is_emoji(ch):
                return any(lo <= ord(ch) <= hi for lo, hi in emoji_ranges)

            def is_flagpart(ch):
                return 0x1F1E6 <= ord(ch) <= 0x1F1FF

            # strip URLs, count one domain token per URL
            count = 0
            parts = []
            i = 0
            lower = text
            while True:
                a = lower.find("https://", i)
                b = lower.find("http://", i)
                starts = [x for x in (a, b) if x != -1]
                if not starts:
                    parts.append(lower[i:])
                    break
                s = min(starts)
                parts.append(lower[i:s])
                e = s
                while e < len(lower) and not lower[e].isspace():
                    e += 1
                count += 1  # one domain token per URL
                i = e
            for part in parts:
                part = part.casefold()
                j = 0
                while j < len(part):
                    ch = part[j]
                    if is_flagpart(ch) and j + 1 < len(part) and is_flagpart(part[j + 1]):
                        count += 1
                        j += 2
                    elif is_emoji(ch):
                        count += 1
                        j += 1
                    elif ch.isalnum() or ch == "_" or ch in "#@":
                        k = j + 1 if ch in "#@" else j
                        run = 0
                        while k < len(part) and (part[k].isalnum() or part[k] == "_"):
                            k += 1
                            run += 1
                        if ch in "#@" and run == 0:
                            j += 1
                            continue
                        count += 1
                        j = k
                    else:
                        j += 1
            return count

        rng = random.Random(17)
        words = ["Hola", "VOTO", "#Apruebo", "#rechazo", "@ana", "chile",
                 "\U0001F600", "\U0001F1E8\U0001F1F1", "2020", "que_pasa",
                 "https://blog.example.com/x", "http://news.test.org/a?b=1"]
        for _ in range(100):
            text = " ".join(rng.choice(words) for _ in range(rng.randrange(0, 12)))
            assert len(tokenize(text)) == oracle(text), text


class TestDomains:
    def test_subdomain_collapses(self):
        assert registrable_domain("https://blog.example.com/x") == \
            ("example.com", ".com")

    def test_www_stripped(self):
        assert registrable_domain("http://www.example.org") == \
            ("example.org", ".org")

    def test_bare_host(self):
        assert registrable_domain("https://localhost/a") == ("localhost", "")

    def test_garbage_is_none(self):
        assert registrable_domain("not a url") is None


def interaction_corpus():
    accounts = [
        build_account(1, full_name="ana #apruebo", bio="vota si",
                      url="https://blog.example.com/x"),
        build_account(2, full_name="luis", bio="no #rechazo",
                      url="https://news.example.org"),
        build_account(3, full_name="maria"),
        build_account(4, full_name="pedro"),
    ]
    tweets = [
        build_tweet(1, 1, text="voto #apruebo dignidad", offset_hours=0),
        build_tweet(2, 2, text="#rechazo libertad", offset_hours=1),
        build_tweet(3, 3, kind="retweet", target=1, offset_hours=2),
        build_tweet(4, 3, kind="retweet", target=1, offset_hours=3),
        build_tweet(5, 3, kind="retweet", target=1, offset_hours=4),
        build_tweet(6, 4, kind="retweet", target=2, offset_hours=5),
        build_tweet(7, 4, kind="reply", target=1, offset_hours=6),
        build_tweet(8, 3, kind="quote", target=2, offset_hours=7),
        build_tweet(9, 4, kind="retweet", target=1, offset_hours=8),
    ]
    labels = {
        1: StanceLabel("apruebo", "seed"),
        2: StanceLabel("rechazo", "seed"),
    }
    return build_corpus(tweets, accounts), labels


class TestBlocks:
    def test_unknown_kind_rejected(self, tiny_corpus):
        with pytest.raises(ValueError):
            build_block(tiny_corpus, {}, "nope")

    def test_stance_interaction_counts(self):
        corpus, labels = interaction_corpus()
        m, vocab = build_block(corpus, labels, "stance_inter_retweet")
        # rows follow sorted account ids 1,2,3,4
        assert vocab.tokens == ["apruebo", "rechazo"]
        assert m.toarray()[2].tolist() == [3, 0]   # account 3 retweeted apruebo x3
        assert m.toarray()[3].tolist() == [1, 1]   # account 4: one of each

    def test_domain_block_columns(self):
        corpus, labels = interaction_corpus()
        m, vocab = build_block(corpus, labels, "profile_domain")
        assert "example.com" in vocab.tokens
        assert ".com" in vocab.tokens
        row0 = m.toarray()[0]
        assert row0[vocab.index["example.com"]] == 1
        assert row0[vocab.index[".com"]] == 1

    def test_adjacency_threshold_and_counts(self):
        corpus, labels = interaction_corpus()
        m, vocab = build_block(corpus, labels, "adj_retweet", min_target_count=2)
        # targets: 1 retweeted 4x, 2 retweeted once -> only account 1 eligible
        assert vocab.tokens == ["1"]
        col = m.toarray()[:, 0]
        assert col.tolist() == [0, 0, 3, 1]

    def test_adjacency_row_sums_match_recount_oracle(self):
        rng = random.Random(23)
        accounts = [build_account(i) for i in range(1, 60)]
        tweets = []
        for n in range(1200):
            src = rng.randrange(1, 60)
            dst = rng.randrange(1, 60)
            if src == dst:
                continue
            tweets.append(build_tweet(n, src, kind="retweet", target=dst,
                                      offset_hours=rng.randrange(100)))
        corpus = build_corpus(tweets, accounts)
        m, vocab = build_block(corpus, {}, "adj_retweet", min_target_count=1)
        ids = corpus.sorted_account_ids()
        sums = np.asarray(m.sum(axis=1)).ravel()
        for r, aid in enumerate(ids):
            oracle = sum(1 for t in tweets if t.author_id == aid)
            assert sums[r] == oracle

    def test_account_term_min_df(self):
        corpus, labels = interaction_corpus()
        m, vocab = build_block(corpus, labels, "account_term", min_term_df=2)
        # only the filler word "hola" is shared by two accounts (3 and 4)
        assert vocab.tokens == ["hola"]
        m, vocab = build_block(corpus, labels, "account_term", min_term_df=1)
        assert "#apruebo" in vocab.tokens
        assert "dignidad" in vocab.tokens


class TestAssemble:
    def test_seed_terms_dropped_from_term_blocks(self):
        corpus, labels = interaction_corpus()
        fm = build_feature_matrix(corpus, labels, {"#apruebo", "#rechazo"},
                                  min_term_df=1)
        assert "#apruebo" not in fm.col_tokens
        assert "#rechazo" not in fm.col_tokens

    def test_no_seed_terms_is_pure_concatenation(self):
        corpus, labels = interaction_corpus()
        parts = [(n,) + build_block(corpus, labels, n, min_term_df=1)
                 for n in BLOCK_NAMES]
        fm = assemble_features([(n, m, v) for n, m, v in parts], set())
        assert fm.matrix.shape[1] == sum(m.shape[1] for _, m, _ in parts)
        assert fm.blocks[0] == ("account_term", 0, parts[0][1].shape[1])

    def test_nonzeros_accounted_for_after_drop(self):
        corpus, labels = interaction_corpus()
        seed_terms = {"#apruebo", "#rechazo"}
        parts = [(n,) + build_block(corpus, labels, n, min_term_df=1)
                 for n in BLOCK_NAMES]
        dropped_nnz = 0
        for name, m, v in parts:
            if name in ("account_term", "profile_term"):
                for j, tok in enumerate(v.tokens):
                    if tok in seed_terms:
                        dropped_nnz += int((m[:, j] != 0).sum())
        fm = assemble_features(parts, seed_terms)
        total = sum(m.nnz for _, m, _ in parts)
        assert fm.matrix.nnz == total - dropped_nnz

    def test_inconsistent_rows_rejected(self):
        corpus, labels = interaction_corpus()
        _, m1, v1 = ("account_term",) + build_block(corpus, labels, "account_term",
                                                    min_term_df=1)
        m2 = m1[:2]
        with pytest.raises(ValueError):
            assemble_features([("account_term", m1, v1),
                               ("profile_term", m2, v1)], set())

    def test_entries_non_negative_and_rebuild_identical(self):
        corpus, labels = interaction_corpus()
        fm1 = build_feature_matrix(corpus, labels, {"#apruebo"}, min_term_df=1)
        fm2 = build_feature_matrix(corpus, labels, {"#apruebo"}, min_term_df=1)
        assert (fm1.matrix.data >= 0).all()
        assert fm1.col_tokens == fm2.col_tokens
        assert (fm1.matrix != fm2.matrix).nnz == 0


class TestPersistence:
    def test_round_trip(self, tmp_path):
        corpus, labels = interaction_corpus()
        fm = build_feature_matrix(corpus, labels, {"#apruebo"}, min_term_df=1)
        path = tmp_path / "features.triplets"
        save_features(fm, path)
        back = load_features(path)
        assert back.account_ids == fm.account_ids
        assert back.blocks == fm.blocks
        assert back.col_tokens == fm.col_tokens
        assert back.col_blocks == fm.col_blocks
        assert (back.matrix != fm.matrix).nnz == 0

    def test_token_with_spaces_survives(self, tmp_path):
        corpus, labels = interaction_corpus()
        fm = build_feature_matrix(corpus, labels, set(), min_term_df=1)
        fm.col_tokens[0] = "weird token \U0001F600"
        path = tmp_path / "features.triplets"
        save_features(fm, path)
        assert load_features(path).col_tokens[0] == "weird token \U0001F600"
