"""Account-by-feature matrix construction.

Nine column blocks are concatenated: term counts from authored content,
term counts from profiles (name + bio), home-page domains, one directed
adjacency block per interaction kind, and one two-column block per
interaction kind counting interactions with seed-labeled accounts. Counts
are kept raw (no weighting) and rows follow the canonical account ordering
(ascending account_id).
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from urllib.parse import urlparse

import numpy as np
from scipy import sparse

from .corpus import Corpus

BLOCK_NAMES = (
    "account_term",
    "profile_term",
    "profile_domain",
    "adj_retweet",
    "adj_reply",
    "adj_quote",
    "stance_inter_retweet",
    "stance_inter_reply",
    "stance_inter_quote",
)

_URL_RE = re.compile(r"https?://\S+", re.IGNORECASE)

# flag emoji are regional-indicator pairs and must stay one token
_TOKEN_RE = re.compile(
    "(?:[\U0001F1E6-\U0001F1FF]{2})"
    "|[\U0001F300-\U0001F5FF\U0001F600-\U0001F64F\U0001F680-\U0001F6FF"
    "\U0001F900-\U0001F9FF\U0001FA70-\U0001FAFF\U0001F1E6-\U0001F1FF"
    "☀-⛿✀-➿]"
    "|[#@]?\\w+"
)


def registrable_domain(url: str) -> tuple[str, str] | None:
    """Map a URL to (registrable domain, top-level domain).

    Uses a last-two-labels heuristic (blog.example.com -> example.com),
    which is what the domain feature needs; no public-suffix list.
    Returns None when the URL has no usable host.
    """
    try:
        host = urlparse(url).hostname
    except ValueError:
        return None
    if not host:
        return None
    host = host.rstrip(".")
    labels = [p for p in host.split(".") if p]
    if len(labels) >= 3 and labels[0] == "www":
        labels = labels[1:]
    if len(labels) < 2:
        return (host, "") if host else None
    return ".".join(labels[-2:]), "." + labels[-1]


def tokenize(text: str) -> list[str]:
    """Case-folded word tokens; hashtags keep '#', mentions keep '@',
    each emoji is one token and URLs collapse to their registrable domain."""
    if not text:
        return []
    out: list[str] = []
    pos = 0
    for m in _URL_RE.finditer(text):
        out.extend(_TOKEN_RE.findall(text[pos:m.start()].casefold()))
        dom = registrable_domain(m.group())
        if dom is not None:
            out.append(dom[0])
        pos = m.end()
    out.extend(_TOKEN_RE.findall(text[pos:].casefold()))
    return out


@dataclass
class Vocabulary:
    block: str
    tokens: list[str]
    doc_freq: list[int]
    index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {t: j for j, t in enumerate(self.tokens)}


@dataclass
class FeatureMatrix:
    """Sparse non-negative count matrix with named, contiguous column blocks."""

    matrix: sparse.csr_matrix
    account_ids: list[int]
    blocks: list[tuple[str, int, int]]  # (name, start, end) end exclusive
    col_tokens: list[str]
    col_blocks: list[str]

    def block_slice(self, name: str) -> slice:
        for bname, start, end in self.blocks:
            if bname == name:
                return slice(start, end)
        raise KeyError(name)


def _counts_to_csr(docs: dict[int, Counter], row_of: dict[int, int],
                   vocab_index: dict[str, int], shape) -> sparse.csr_matrix:
    rows, cols, data = [], [], []
    for aid in sorted(docs):
        r = row_of[aid]
        counter = docs[aid]
        for token in sorted(counter):
            j = vocab_index.get(token)
            if j is not None:
                rows.append(r)
                cols.append(j)
                data.append(counter[token])
    m = sparse.coo_matrix((data, (rows, cols)), shape=shape, dtype=np.int64)
    return m.tocsr()


def _term_block(docs: dict[int, Counter], row_of: dict[int, int],
                n_rows: int, block: str, min_df: int):
    df = Counter()
    for counter in docs.values():
        df.update(counter.keys())
    tokens = sorted(t for t, d in df.items() if d >= min_df)
    vocab = Vocabulary(block=block, tokens=tokens, doc_freq=[df[t] for t in tokens])
    matrix = _counts_to_csr(docs, row_of, vocab.index, (n_rows, len(tokens)))
    return matrix, vocab


def build_block(corpus: Corpus, labels, kind: str, *,
                min_term_df: int = 5, min_target_count: int = 2):
    """Build one named column block; returns (csr matrix, Vocabulary).

    ``labels`` is the seed LabelSet (account_id -> label with a .stance
    attribute); it is only consulted by the stance-interaction blocks.
    """
    if kind not in BLOCK_NAMES:
        raise ValueError(f"unknown block kind {kind!r}")
    account_ids = corpus.sorted_account_ids()
    row_of = {aid: r for r, aid in enumerate(account_ids)}
    n = len(account_ids)

    if kind == "account_term":
        docs: dict[int, Counter] = {}
        for t in corpus.tweets:
            toks = tokenize(t.text)
            if toks:
                docs.setdefault(t.author_id, Counter()).update(toks)
        return _term_block(docs, row_of, n, kind, min_term_df)

    if kind == "profile_term":
        docs = {}
        for aid in account_ids:
            acc = corpus.accounts[aid]
            toks = tokenize(acc.full_name) + tokenize(acc.bio)
            if toks:
                docs.setdefault(aid, Counter()).update(toks)
        return _term_block(docs, row_of, n, kind, min_term_df)

    if kind == "profile_domain":
        docs = {}
        domains, tlds = set(), set()
        for aid in account_ids:
            url = corpus.accounts[aid].home_url
            if not url:
                continue
            parsed = registrable_domain(url)
            if parsed is None:
                continue
            dom, tld = parsed
            doc = Counter([dom])
            domains.add(dom)
            if tld:
                doc[tld] += 1
                tlds.add(tld)
            docs[aid] = doc
        tokens = sorted(domains) + sorted(tlds)
        df = Counter()
        for counter in docs.values():
            df.update(counter.keys())
        vocab = Vocabulary(block=kind, tokens=tokens, doc_freq=[df[t] for t in tokens])
        return _counts_to_csr(docs, row_of, vocab.index, (n, len(tokens))), vocab

    interaction = kind.rsplit("_", 1)[1]  # retweet / reply / quote

    if kind.startswith("adj_"):
        target_counts = Counter()
        pairs = Counter()
        for t in corpus.tweets:
            if t.kind == interaction and t.target_account_id is not None:
                target_counts[t.target_account_id] += 1
                pairs[(t.author_id, t.target_account_id)] += 1
        eligible = sorted(a for a, c in target_counts.items() if c >= min_target_count)
        col_of = {a: j for j, a in enumerate(eligible)}
        rows, cols, data = [], [], []
        for (src, dst) in sorted(pairs):
            j = col_of.get(dst)
            if j is not None and src in row_of:
                rows.append(row_of[src])
                cols.append(j)
                data.append(pairs[(src, dst)])
        vocab = Vocabulary(block=kind, tokens=[str(a) for a in eligible],
                           doc_freq=[target_counts[a] for a in eligible])
        m = sparse.coo_matrix((data, (rows, cols)), shape=(n, len(eligible)),
                              dtype=np.int64)
        return m.tocsr(), vocab

    # stance_inter_*: interactions with seed-labeled accounts, two columns
    counts = np.zeros((n, 2), dtype=np.int64)
    for t in corpus.tweets:
        if t.kind != interaction or t.target_account_id is None:
            continue
        label = labels.get(t.target_account_id) if labels else None
        if label is None:
            continue
        col = 0 if label.stance == "apruebo" else 1
        counts[row_of[t.author_id], col] += 1
    vocab = Vocabulary(block=kind, tokens=["apruebo", "rechazo"],
                       doc_freq=[int((counts[:, 0] > 0).sum()),
                                 int((counts[:, 1] > 0).sum())])
    return sparse.csr_matrix(counts), vocab


def assemble_features(blocks, seed_terms) -> FeatureMatrix:
    """Concatenate named blocks, dropping seed-lexicon columns from the
    two term blocks so no labeling term reaches the classifier.

    ``blocks`` is a list of (name, matrix, vocabulary); all matrices must
    share the canonical row count.
    """
    seed_set = {t.casefold() for t in seed_terms}
    n_rows = {m.shape[0] for _, m, _ in blocks}
    if len(n_rows) > 1:
        raise ValueError(f"inconsistent row counts across blocks: {sorted(n_rows)}")
    parts = []
    boundaries = []
    col_tokens: list[str] = []
    col_blocks: list[str] = []
    start = 0
    for name, matrix, vocab in blocks:
        tokens = vocab.tokens
        if name in ("account_term", "profile_term") and seed_set:
            keep = [j for j, t in enumerate(tokens) if t not in seed_set]
            if len(keep) != len(tokens):
                matrix = matrix[:, keep]
                tokens = [tokens[j] for j in keep]
        parts.append(matrix)
        end = start + matrix.shape[1]
        boundaries.append((name, start, end))
        col_tokens.extend(tokens)
        col_blocks.extend([name] * len(tokens))
        start = end
    merged = sparse.hstack(parts, format="csr", dtype=np.int64)
    return FeatureMatrix(matrix=merged, account_ids=[], blocks=boundaries,
                         col_tokens=col_tokens, col_blocks=col_blocks)


def build_feature_matrix(corpus: Corpus, labels, seed_terms, *,
                         min_term_df: int = 5,
                         min_target_count: int = 2) -> FeatureMatrix:
    """Build all nine blocks and assemble them in canonical order."""
    blocks = []
    for name in BLOCK_NAMES:
        m, v = build_block(corpus, labels, name, min_term_df=min_term_df,
                           min_target_count=min_target_count)
        blocks.append((name, m, v))
    fm = assemble_features(blocks, seed_terms)
    fm.account_ids = corpus.sorted_account_ids()
    return fm


def save_features(fm: FeatureMatrix, path) -> None:
    """Write the documented sparse triplet file (text, one record per line)."""
    coo = fm.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("stancescope-features 1\n")
        fh.write(f"rows {fm.matrix.shape[0]}\n")
        fh.write(f"cols {fm.matrix.shape[1]}\n")
        fh.write(f"nnz {coo.nnz}\n")
        for name, start, end in fm.blocks:
            fh.write(f"block {name} {start} {end}\n")
        for r, aid in enumerate(fm.account_ids):
            fh.write(f"account {r} {aid}\n")
        for j, (token, block) in enumerate(zip(fm.col_tokens, fm.col_blocks)):
            fh.write(f"column {j} {block} {json.dumps(token, ensure_ascii=False)}\n")
        fh.write("data\n")
        for k in order:
            fh.write(f"{coo.row[k]} {coo.col[k]} {coo.data[k]}\n")


def load_features(path) -> FeatureMatrix:
    blocks: list[tuple[str, int, int]] = []
    account_ids: dict[int, int] = {}
    col_tokens: dict[int, str] = {}
    col_blocks: dict[int, str] = {}
    rows = cols = nnz = 0
    triplets_r, triplets_c, triplets_v = [], [], []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "stancescope-features 1":
            raise ValueError(f"not a feature triplet file: {header!r}")
        in_data = False
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if not in_data:
                if line == "data":
                    in_data = True
                    continue
                key, rest = line.split(" ", 1)
                if key == "rows":
                    rows = int(rest)
                elif key == "cols":
                    cols = int(rest)
                elif key == "nnz":
                    nnz = int(rest)
                elif key == "block":
                    name, start, end = rest.split(" ")
                    blocks.append((name, int(start), int(end)))
                elif key == "account":
                    r, aid = rest.split(" ")
                    account_ids[int(r)] = int(aid)
                elif key == "column":
                    j, block, token_json = rest.split(" ", 2)
                    col_tokens[int(j)] = json.loads(token_json)
                    col_blocks[int(j)] = block
            else:
                r, c, v = line.split(" ")
                triplets_r.append(int(r))
                triplets_c.append(int(c))
                triplets_v.append(int(v))
    if len(triplets_v) != nnz:
        raise ValueError(f"expected {nnz} triplets, found {len(triplets_v)}")
    matrix = sparse.coo_matrix((triplets_v, (triplets_r, triplets_c)),
                               shape=(rows, cols), dtype=np.int64).tocsr()
    return FeatureMatrix(
        matrix=matrix,
        account_ids=[account_ids[r] for r in range(rows)],
        blocks=blocks,
        col_tokens=[col_tokens[j] for j in range(cols)],
        col_blocks=[col_blocks[j] for j in range(cols)],
    )
