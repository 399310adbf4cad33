"""Unsupervised encoder inputs: random-walk skip-gram embeddings and the
hierarchical partition tree behind the multi-level embedding method.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import RoadNetwork
from .kmeans import balanced_kmeans


@dataclass
class EmbeddingTable:
    n: int
    d: int
    values: np.ndarray  # (n, d) float64 in memory; stored float32 at checkpoint time
    trainable: bool = False


@dataclass
class WalkCorpus:
    walks: list[list[int]]
    walk_length: int
    walks_per_node: int
    n: int


def random_walks(g: RoadNetwork, walks_per_node: int = 10, length: int = 80,
                 seed: int = 0) -> WalkCorpus:
    """Unbiased random walks: ``walks_per_node`` starts per node, uniform steps."""
    rng = np.random.default_rng(seed)
    adj = g.adjacency_lists()
    walks = []
    for start in range(g.n):
        for _ in range(walks_per_node):
            walk = [start]
            cur = start
            for _ in range(length - 1):
                nbrs = adj[cur]
                if not nbrs:
                    break
                cur = nbrs[int(rng.integers(len(nbrs)))][0]
                walk.append(cur)
            walks.append(walk)
    return WalkCorpus(walks=walks, walk_length=length, walks_per_node=walks_per_node, n=g.n)


def skipgram_train(corpus: WalkCorpus, d: int = 64, window: int = 10,
                   lr: float = 0.05, epochs: int = 1, negatives: int = 5,
                   seed: int = 0) -> EmbeddingTable:
    """Skip-gram with negative sampling over the walk corpus.

    Noise distribution is the unigram count distribution raised to 0.75.
    Updates run serially in walk order, so a fixed seed gives bit-identical
    tables.  Returns the input-side table.
    """
    if not corpus.walks:
        raise ValueError("empty walk corpus")
    n = corpus.n
    rng = np.random.default_rng(seed)
    w_in = rng.uniform(-0.5 / d, 0.5 / d, size=(n, d))
    w_out = np.zeros((n, d))

    counts = np.zeros(n, dtype=np.float64)
    for walk in corpus.walks:
        for node in walk:
            counts[node] += 1.0
    noise = counts ** 0.75
    noise_cdf = np.cumsum(noise / noise.sum())

    for _ in range(epochs):
        for walk in corpus.walks:
            L = len(walk)
            for i in range(L):
                center = walk[i]
                lo = max(0, i - window)
                hi = min(L, i + window + 1)
                ctx = [walk[j] for j in range(lo, hi) if j != i]
                if not ctx:
                    continue
                negs = np.searchsorted(noise_cdf, rng.random(negatives * len(ctx)))
                targets = np.concatenate([np.array(ctx, dtype=np.int64), negs])
                labels = np.zeros(len(targets))
                labels[:len(ctx)] = 1.0
                vc = w_in[center]
                rows = w_out[targets]
                scores = rows @ vc
                probs = 1.0 / (1.0 + np.exp(-scores))
                coeff = (labels - probs) * lr
                grad_in = coeff @ rows
                np.add.at(w_out, targets, coeff[:, None] * vc[None, :])
                w_in[center] = vc + grad_in
    return EmbeddingTable(n=n, d=d, values=w_in, trainable=False)


@dataclass
class PartitionTree:
    """Coarse-to-fine partition hierarchy; the final level is the identity.

    ``levels[k]`` assigns every node a partition id; assignments at level k
    refine level k-1.  One embedding table per level (zeros until trained).
    """
    levels: list[np.ndarray]
    counts: list[int]
    tables: list[np.ndarray] = field(default_factory=list)

    def init_tables(self, d: int, rng: np.random.Generator | None = None,
                    scale: float = 0.0) -> None:
        self.tables = []
        for c in self.counts:
            if rng is None or scale == 0.0:
                self.tables.append(np.zeros((c, d)))
            else:
                self.tables.append(rng.uniform(-scale, scale, size=(c, d)))


def hierarchical_partition(g: RoadNetwork, levels: int, branching: int,
                           seed: int = 0) -> PartitionTree:
    """Recursive balanced k-means on coordinates; level k has min(branching^k, n)
    partitions and the last level puts every node in its own partition."""
    if branching < 2:
        raise ValueError("branching must be >= 2")
    if levels < 1:
        raise ValueError("need at least one partition level")
    assignments: list[np.ndarray] = []
    counts: list[int] = []
    parent = np.zeros(g.n, dtype=np.int64)  # level 0 = one partition
    for level in range(1, levels + 1):
        target = min(branching ** level, g.n)
        labels = np.full(g.n, -1, dtype=np.int64)
        next_id = 0
        for pid in range(int(parent.max()) + 1):
            members = np.flatnonzero(parent == pid)
            if len(members) == 0:
                continue
            k = min(branching, len(members))
            sub = balanced_kmeans(g.coords[members], k, seed=seed * 1000003 + level * 101 + pid)
            labels[members] = next_id + sub
            next_id += int(sub.max()) + 1
        assignments.append(labels)
        counts.append(next_id)
        parent = labels
        if next_id != target:
            raise AssertionError(f"level {level}: got {next_id} partitions, expected {target}")
        if next_id >= g.n:
            break
    if counts[-1] < g.n:  # append the identity level
        assignments.append(np.arange(g.n, dtype=np.int64))
        counts.append(g.n)
    tree = PartitionTree(levels=assignments, counts=counts)
    tree.init_tables(d=1)  # placeholder width; training re-inits with the real d
    return tree


def default_level_count(n: int, branching: int = 32, cap: int = 4) -> int:
    """Intermediate level count: ceil(log_branching(n)), capped."""
    levels = 1
    while branching ** levels < n and levels < cap:
        levels += 1
    return levels


def aggregate_rne_embedding(tree: PartitionTree, v: int) -> np.ndarray:
    """Elementwise sum of the node's partition embedding at every level."""
    out = tree.tables[0][tree.levels[0][v]].copy()
    for lvl in range(1, len(tree.levels)):
        out += tree.tables[lvl][tree.levels[lvl][v]]
    return out


def aggregate_all(tree: PartitionTree) -> np.ndarray:
    """(n, d) matrix of aggregated embeddings for every node."""
    n = len(tree.levels[0])
    out = tree.tables[0][tree.levels[0]].copy()
    for lvl in range(1, len(tree.levels)):
        out += tree.tables[lvl][tree.levels[lvl]]
    return out
