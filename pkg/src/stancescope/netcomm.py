"""Retweet network, largest component and block-model communities.

The retweet graph is directed and weighted (retweeter -> retweeted,
aggregated counts, self-retweets dropped). Communities come from a
single-level degree-corrected block model fit by agglomerative merges from
singletons followed by greedy single-node moves; the number of blocks is
chosen inside a caller-provided range by minimizing the description length
-L + N ln B + B^2 ln E. The likelihood is

    L(b) = sum_rs m_rs ln(m_rs / (kout_r * kin_s))

with m_rs the total edge weight from block r to block s and kout/kin the
block degree sums (0 ln 0 = 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus

BOT_HEAVY = "bot_heavy"
BOT_SCARCE = "bot_scarce"
MIXED = "mixed"


@dataclass
class RetweetGraph:
    nodes: list[int]       # sorted account ids
    src: np.ndarray        # int64 indices into nodes
    dst: np.ndarray
    weight: np.ndarray     # int64 aggregated retweet counts

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def total_weight(self) -> int:
        return int(self.weight.sum())


@dataclass
class Partition:
    assignment: dict[int, int]          # account_id -> block id (0..B-1)
    n_blocks: int
    objective: float                    # L at the returned partition
    description_length: float
    move_trace: list[list[float]] = field(default_factory=list)
    b_history: list[tuple[int, float]] = field(default_factory=list)


@dataclass
class CommunityProfile:
    community: int
    size: int
    bot_count: int
    bot_fraction: float
    z_score: float
    group_class: str
    intra_weight: int
    inter_out_weight: int
    inter_in_weight: int


def build_retweet_graph(corpus: Corpus) -> RetweetGraph:
    """One weighted edge per (retweeter, retweeted) pair; nodes are the
    accounts incident to at least one retweet edge."""
    pairs: dict[tuple[int, int], int] = {}
    for t in corpus.tweets:
        if t.kind != "retweet" or t.target_account_id is None:
            continue
        if t.target_account_id == t.author_id:
            continue
        key = (t.author_id, t.target_account_id)
        pairs[key] = pairs.get(key, 0) + 1
    nodes = sorted({a for pair in pairs for a in pair})
    index = {a: i for i, a in enumerate(nodes)}
    items = sorted(pairs.items())
    src = np.array([index[s] for (s, _), _ in items], dtype=np.int64)
    dst = np.array([index[d] for (_, d), _ in items], dtype=np.int64)
    weight = np.array([w for _, w in items], dtype=np.int64)
    return RetweetGraph(nodes=nodes, src=src, dst=dst, weight=weight)


def weak_components(n_nodes: int, src, dst) -> list[list[int]]:
    """Connected components ignoring direction (BFS); node indices,
    sorted by size descending then smallest member."""
    adj: list[list[int]] = [[] for _ in range(n_nodes)]
    for s, d in zip(src, dst):
        adj[s].append(int(d))
        adj[d].append(int(s))
    seen = [False] * n_nodes
    comps = []
    for start in range(n_nodes):
        if seen[start]:
            continue
        seen[start] = True
        stack = [start]
        comp = []
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        comps.append(sorted(comp))
    comps.sort(key=lambda c: (-len(c), c[0]))
    return comps


def extract_lcc(graph: RetweetGraph) -> RetweetGraph:
    """Largest weakly connected component as a reindexed subgraph.

    Size ties go to the component containing the smallest account id.
    """
    if graph.n_nodes == 0:
        raise ValueError("empty graph has no components")
    comps = weak_components(graph.n_nodes, graph.src, graph.dst)
    # components are sorted by (-size, smallest node index); node indices
    # follow sorted account ids, so the tie rule is the smallest account id
    keep = set(comps[0])
    nodes = [graph.nodes[i] for i in comps[0]]
    remap = {old: new for new, old in enumerate(comps[0])}
    mask = np.array([s in keep for s in graph.src])
    src = np.array([remap[int(s)] for s in graph.src[mask]], dtype=np.int64)
    dst = np.array([remap[int(d)] for d in graph.dst[mask]], dtype=np.int64)
    return RetweetGraph(nodes=nodes, src=src, dst=dst,
                        weight=graph.weight[mask].copy())


def _xlogx(x) -> float:
    return x * math.log(x) if x > 0 else 0.0


class _BlockState:
    """Incremental block-graph bookkeeping for the DC-SBM objective."""

    def __init__(self, graph: RetweetGraph, assignment=None):
        n = graph.n_nodes
        self.n = n
        self.b = list(assignment) if assignment is not None else list(range(n))
        n_blocks = max(self.b) + 1 if n else 0
        self.members: list[set[int]] = [set() for _ in range(n_blocks)]
        for i, r in enumerate(self.b):
            self.members[r].add(i)
        self.active = {r for r in range(n_blocks) if self.members[r]}
        self.mrow: list[dict[int, int]] = [{} for _ in range(n_blocks)]
        self.mcol: list[dict[int, int]] = [{} for _ in range(n_blocks)]
        self.kout = [0] * n_blocks
        self.kin = [0] * n_blocks
        out_adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        in_adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for s, d, w in zip(graph.src, graph.dst, graph.weight):
            s, d, w = int(s), int(d), int(w)
            r, c = self.b[s], self.b[d]
            self.mrow[r][c] = self.mrow[r].get(c, 0) + w
            self.mcol[c][r] = self.mcol[c].get(r, 0) + w
            self.kout[r] += w
            self.kin[c] += w
            out_adj[s].append((d, w))
            in_adj[d].append((s, w))
        self.out_adj = out_adj
        self.in_adj = in_adj
        self.node_out_w = [sum(w for _, w in out_adj[i]) for i in range(n)]
        self.node_in_w = [sum(w for _, w in in_adj[i]) for i in range(n)]
        self.L = self.recompute_objective()

    @property
    def n_blocks(self) -> int:
        return len(self.active)

    def recompute_objective(self) -> float:
        total = 0.0
        for r in sorted(self.active):
            for s in sorted(self.mrow[r]):
                total += _xlogx(self.mrow[r][s])
        for r in sorted(self.active):
            total -= _xlogx(self.kout[r])
            total -= _xlogx(self.kin[r])
        return total

    # -- merges ----------------------------------------------------------

    def merge_delta(self, r: int, s: int) -> float:
        # cells where only one block has mass contribute F(a+0)-F(a)-F(0)=0,
        # so only the key intersection matters: iterate the smaller row
        log = math.log
        mrow, mcol = self.mrow, self.mcol
        dl = 0.0
        row_r, row_s = mrow[r], mrow[s]
        small, big = (row_r, row_s) if len(row_r) <= len(row_s) else (row_s, row_r)
        for t, c in small.items():
            if t == r or t == s:
                continue
            a = big.get(t)
            if a is not None:
                x = a + c
                dl += x * log(x) - a * log(a) - c * log(c)
        col_r, col_s = mcol[r], mcol[s]
        small, big = (col_r, col_s) if len(col_r) <= len(col_s) else (col_s, col_r)
        for t, c in small.items():
            if t == r or t == s:
                continue
            a = big.get(t)
            if a is not None:
                x = a + c
                dl += x * log(x) - a * log(a) - c * log(c)
        mrr = row_r.get(r, 0)
        mrs = row_r.get(s, 0)
        msr = row_s.get(r, 0)
        mss = row_s.get(s, 0)
        dl += (_xlogx(mrr + mrs + msr + mss)
               - _xlogx(mrr) - _xlogx(mrs) - _xlogx(msr) - _xlogx(mss))
        dl -= _xlogx(self.kout[r] + self.kout[s]) - _xlogx(self.kout[r]) - _xlogx(self.kout[s])
        dl -= _xlogx(self.kin[r] + self.kin[s]) - _xlogx(self.kin[r]) - _xlogx(self.kin[s])
        return dl

    def apply_merge(self, r: int, s: int, dl: float) -> int:
        """Merge s into r (keeps the larger side's id stable); returns the
        surviving block id."""
        if (len(self.members[s]), -s) > (len(self.members[r]), -r):
            r, s = s, r
        mrow, mcol = self.mrow, self.mcol
        w_ss = mrow[s].pop(s, 0)
        mcol[s].pop(s, None)
        w_sr = mrow[s].pop(r, 0)
        mcol[r].pop(s, None)
        w_rs = mrow[r].pop(s, 0)
        mcol[s].pop(r, None)
        corner = w_ss + w_sr + w_rs
        if corner:
            mrow[r][r] = mrow[r].get(r, 0) + corner
            mcol[r][r] = mcol[r].get(r, 0) + corner
        for t, w in list(mrow[s].items()):
            mrow[r][t] = mrow[r].get(t, 0) + w
            mcol[t][r] = mcol[t].get(r, 0) + w
            del mcol[t][s]
        for t, w in list(mcol[s].items()):
            mcol[r][t] = mcol[r].get(t, 0) + w
            mrow[t][r] = mrow[t].get(r, 0) + w
            del mrow[t][s]
        mrow[s].clear()
        mcol[s].clear()
        self.kout[r] += self.kout[s]
        self.kin[r] += self.kin[s]
        self.kout[s] = self.kin[s] = 0
        for i in self.members[s]:
            self.b[i] = r
        self.members[r] |= self.members[s]
        self.members[s] = set()
        self.active.discard(s)
        self.L += dl
        return r

    def merge_stage(self, target_blocks: int, rng=None,
                    n_candidates: int = 8) -> None:
        """Greedy batch of least-loss merges down to target_blocks.

        Each block scores a bounded sample of its neighbor blocks (full
        evaluation is quadratic in block count and the node-move refinement
        repairs greedy mistakes anyway).
        """
        while self.n_blocks > target_blocks:
            proposals = []
            for r in sorted(self.active):
                best = None
                neighbors = sorted((set(self.mrow[r]) | set(self.mcol[r]))
                                   - {r})
                if rng is not None and len(neighbors) > n_candidates:
                    pick = rng.choice(len(neighbors), size=n_candidates,
                                      replace=False)
                    neighbors = [neighbors[int(i)] for i in sorted(pick)]
                for s in neighbors:
                    if s not in self.active:
                        continue
                    dl = self.merge_delta(r, s)
                    if best is None or dl > best[0]:
                        best = (dl, min(r, s), max(r, s))
                if best is not None:
                    proposals.append(best)
            if not proposals:
                # disconnected block graph cannot happen on a connected
                # input, but guard against infinite loops
                acts = sorted(self.active)
                r, s = acts[0], acts[1]
                self.apply_merge(r, s, self.merge_delta(r, s))
                continue
            proposals.sort(key=lambda p: (-p[0], p[1], p[2]))
            budget = self.n_blocks - target_blocks
            touched = set()
            applied = 0
            for dl, r, s in proposals:
                if applied >= budget:
                    break
                if r in touched or s in touched:
                    continue
                if r not in self.active or s not in self.active:
                    continue
                self.apply_merge(r, s, self.merge_delta(r, s))
                touched.update((r, s))
                applied += 1
            if applied == 0:
                dl, r, s = proposals[0]
                self.apply_merge(r, s, self.merge_delta(r, s))

    def merge_best_pair(self) -> None:
        acts = sorted(self.active)
        best = None
        for i, r in enumerate(acts):
            for s in acts[i + 1:]:
                dl = self.merge_delta(r, s)
                if best is None or dl > best[0]:
                    best = (dl, r, s)
        if best is not None:
            self.apply_merge(best[1], best[2], best[0])

    # -- node moves ------------------------------------------------------

    def _node_block_weights(self, i: int):
        u: dict[int, int] = {}
        for j, w in self.out_adj[i]:
            t = self.b[j]
            u[t] = u.get(t, 0) + w
        v: dict[int, int] = {}
        for j, w in self.in_adj[i]:
            t = self.b[j]
            v[t] = v.get(t, 0) + w
        return u, v

    def move_delta(self, i: int, s: int, u: dict, v: dict) -> float:
        r = self.b[i]
        if s == r:
            return 0.0
        log = math.log
        cells: dict[tuple[int, int], int] = {}
        get = cells.get
        for t, w in u.items():
            cells[(r, t)] = get((r, t), 0) - w
            cells[(s, t)] = get((s, t), 0) + w
        for t, w in v.items():
            cells[(t, r)] = get((t, r), 0) - w
            cells[(t, s)] = get((t, s), 0) + w
        dl = 0.0
        mrow = self.mrow
        for (a, c), delta in cells.items():
            if delta == 0:
                continue
            old = mrow[a].get(c, 0)
            new = old + delta
            if new > 0:
                dl += new * log(new)
            if old > 0:
                dl -= old * log(old)
        do, di = self.node_out_w[i], self.node_in_w[i]
        dl -= (_xlogx(self.kout[r] - do) - _xlogx(self.kout[r])
               + _xlogx(self.kout[s] + do) - _xlogx(self.kout[s]))
        dl -= (_xlogx(self.kin[r] - di) - _xlogx(self.kin[r])
               + _xlogx(self.kin[s] + di) - _xlogx(self.kin[s]))
        return dl

    def apply_move(self, i: int, s: int, u: dict, v: dict, dl: float) -> None:
        r = self.b[i]
        cells: dict[tuple[int, int], int] = {}
        for t, w in u.items():
            cells[(r, t)] = cells.get((r, t), 0) - w
            cells[(s, t)] = cells.get((s, t), 0) + w
        for t, w in v.items():
            cells[(t, r)] = cells.get((t, r), 0) - w
            cells[(t, s)] = cells.get((t, s), 0) + w
        for (a, c), delta in cells.items():
            if delta == 0:
                continue
            new = self.mrow[a].get(c, 0) + delta
            if new:
                self.mrow[a][c] = new
                self.mcol[c][a] = new
            else:
                self.mrow[a].pop(c, None)
                self.mcol[c].pop(a, None)
        do, di = self.node_out_w[i], self.node_in_w[i]
        self.kout[r] -= do
        self.kout[s] += do
        self.kin[r] -= di
        self.kin[s] += di
        self.members[r].discard(i)
        self.members[s].add(i)
        self.b[i] = s
        self.L += dl

    def refine(self, rng, max_passes: int, tol: float = 1e-10,
               all_candidates: bool = False) -> list[float]:
        """Greedy single-node moves until no move improves L; returns the
        trace of L after each accepted move (monotone by construction)."""
        trace = []
        for _ in range(max_passes):
            moves = 0
            order = rng.permutation(self.n) if rng is not None else range(self.n)
            for i in order:
                i = int(i)
                r = self.b[i]
                if len(self.members[r]) <= 1:
                    continue  # never empty a block
                u, v = self._node_block_weights(i)
                if all_candidates:
                    candidates = sorted(self.active - {r})
                else:
                    candidates = sorted((set(u) | set(v)) - {r})
                best_dl, best_s = tol, None
                for s in candidates:
                    if s not in self.active:
                        continue
                    dl = self.move_delta(i, s, u, v)
                    if dl > best_dl:
                        best_dl, best_s = dl, s
                if best_s is not None:
                    self.apply_move(i, best_s, u, v, best_dl)
                    trace.append(self.L)
                    moves += 1
            if moves == 0:
                break
        return trace


def _description_length(L: float, n: int, B: int, E: int) -> float:
    return -L + n * math.log(B) + B * B * math.log(max(E, 1))


def fit_dcsbm(graph: RetweetGraph, b_range: tuple[int, int] = (1, 20),
              seed: int = 0, max_passes: int = 30) -> Partition:
    """Fit the degree-corrected block model on a connected graph.

    Agglomerates from singletons down through the candidate range, refining
    with node moves at each block count, and returns the partition with the
    lowest description length (a final all-candidate sweep guarantees the
    result is a local optimum of L).
    """
    n = graph.n_nodes
    if n == 0:
        raise ValueError("empty graph")
    if len(weak_components(n, graph.src, graph.dst)) != 1:
        raise ValueError("graph is not connected; pass the LCC")
    b_lo = max(1, min(b_range))
    b_hi = min(max(b_range), n)
    E = len(graph.src)

    state = _BlockState(graph)
    rng = np.random.default_rng(seed)
    while state.n_blocks > b_hi:
        state.merge_stage(max(b_hi, state.n_blocks // 2), rng)

    traces = []
    history = []
    best = None
    scan_passes = max(2, max_passes // 4)  # full refinement happens at the end
    while True:
        B = state.n_blocks
        traces.append(state.refine(rng, scan_passes))
        state.L = state.recompute_objective()  # shed incremental fp drift
        dl = _description_length(state.L, n, B, E)
        history.append((B, dl))
        if best is None or dl < best[0] + 1e-9:
            best = (dl, B, list(state.b))
        if B <= b_lo:
            break
        state.merge_best_pair()

    # rebuild at the winning B and polish against every block as candidate
    state = _BlockState(graph, assignment=best[2])
    traces.append(state.refine(rng, max_passes))
    for _ in range(10):
        trace = state.refine(rng, max_passes, all_candidates=True)
        if trace:
            traces.append(trace)
        else:
            break
    state.L = state.recompute_objective()
    final_dl = _description_length(state.L, n, state.n_blocks, E)

    # canonical labels: order of first appearance over node index
    relabel: dict[int, int] = {}
    assignment: dict[int, int] = {}
    for i in range(n):
        r = state.b[i]
        if r not in relabel:
            relabel[r] = len(relabel)
        assignment[graph.nodes[i]] = relabel[r]
    return Partition(
        assignment=assignment,
        n_blocks=len(relabel),
        objective=state.L,
        description_length=final_dl,
        move_trace=traces,
        b_history=history,
    )


def community_bot_profile(partition: Partition, verdicts, graph: RetweetGraph,
                          min_size: int = 10) -> list[CommunityProfile]:
    """Per-community size, bot share, standardized bot fraction and edge
    weights; z-scores use communities with size >= min_size."""
    members: dict[int, list[int]] = {}
    for aid, block in partition.assignment.items():
        members.setdefault(block, []).append(aid)
    missing = [graph.nodes[i] for i in range(graph.n_nodes)
               if graph.nodes[i] not in partition.assignment]
    if missing:
        raise ValueError(f"partition does not cover {len(missing)} graph nodes")
    bot_of = {v.account_id: v.is_bot for v in verdicts}

    sizes = {c: len(m) for c, m in members.items()}
    bots = {c: sum(1 for a in m if bot_of.get(a, False))
            for c, m in members.items()}
    fractions = {c: bots[c] / sizes[c] for c in members}

    eligible = sorted(c for c in members if sizes[c] >= min_size)
    if len(eligible) < 2:
        raise ValueError(
            f"need at least 2 communities of size >= {min_size} for z-scores")
    vals = np.array([fractions[c] for c in eligible])
    mean = float(vals.mean())
    std = float(vals.std())

    intra = {c: 0 for c in members}
    inter_out = {c: 0 for c in members}
    inter_in = {c: 0 for c in members}
    block_of = {aid: blk for aid, blk in partition.assignment.items()}
    for s, d, w in zip(graph.src, graph.dst, graph.weight):
        bs = block_of[graph.nodes[int(s)]]
        bd = block_of[graph.nodes[int(d)]]
        if bs == bd:
            intra[bs] += int(w)
        else:
            inter_out[bs] += int(w)
            inter_in[bd] += int(w)

    profiles = []
    for c in sorted(members, key=lambda c: (-sizes[c], c)):
        if c in set(eligible) and std > 0:
            z = (fractions[c] - mean) / std
        elif c in set(eligible):
            z = 0.0
        else:
            z = float("nan")
        if z > 1:
            klass = BOT_HEAVY
        elif z < -1:
            klass = BOT_SCARCE
        else:
            klass = MIXED
        profiles.append(CommunityProfile(
            community=c,
            size=sizes[c],
            bot_count=bots[c],
            bot_fraction=fractions[c],
            z_score=z,
            group_class=klass,
            intra_weight=intra[c],
            inter_out_weight=inter_out[c],
            inter_in_weight=inter_in[c],
        ))
    return profiles
