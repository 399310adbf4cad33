"""Exact shortest-path distances for ground-truth labeling and error measurement.

Ground truth comes from grouped single-source Dijkstra runs over the immutable
road network: pairs sharing a source are answered from one distance row.  A
text cache file keyed by the graph content hash lets repeated benchmark runs
skip relabeling.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .graph import RoadNetwork

INF = float("inf")

# Incremented on every single-source run; tests observe the grouping contract.
sssp_run_count = 0


def reset_run_counter() -> None:
    global sssp_run_count
    sssp_run_count = 0


@dataclass
class DistanceRow:
    source: int
    dist: np.ndarray  # float64, length n, meters


@dataclass(frozen=True)
class GroundTruthSample:
    u: int
    v: int
    d: float


def dijkstra_sssp(g: RoadNetwork, source: int) -> DistanceRow:
    """Exact distances from ``source`` to every node (binary-heap Dijkstra).

    The heap is ordered by (distance, node id), so tie handling is
    deterministic.  Unreachable nodes keep +inf; preprocessing is expected to
    have made the graph connected.
    """
    global sssp_run_count
    if not 0 <= source < g.n:
        raise ValueError(f"source {source} out of range [0, {g.n})")
    sssp_run_count += 1
    adj = g.adjacency_lists()
    dist = [INF] * g.n
    dist[source] = 0.0
    done = [False] * g.n
    heap = [(0.0, source)]
    while heap:
        du, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, w in adj[u]:
            nd = du + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return DistanceRow(source=source, dist=np.array(dist, dtype=np.float64))


def exact_distance(g: RoadNetwork, u: int, v: int) -> float:
    """Exact shortest-path distance between two nodes (symmetric)."""
    if not 0 <= v < g.n:
        raise ValueError(f"node {v} out of range [0, {g.n})")
    return float(dijkstra_sssp(g, u).dist[v])


def batch_ground_truth(g: RoadNetwork, pairs) -> list[GroundTruthSample]:
    """Label many (u, v) pairs, running one Dijkstra per distinct source.

    Input order is preserved.  A non-finite distance means the pipeline fed a
    disconnected pair, which preprocessing is supposed to make impossible, so
    it raises instead of propagating inf labels.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("no pairs to label")
    by_source: dict[int, list[int]] = {}
    for idx, (u, _v) in enumerate(pairs):
        by_source.setdefault(int(u), []).append(idx)
    out: list[GroundTruthSample | None] = [None] * len(pairs)
    for source in sorted(by_source):
        row = dijkstra_sssp(g, source)
        for idx in by_source[source]:
            u, v = pairs[idx]
            d = float(row.dist[int(v)])
            if not np.isfinite(d):
                raise ValueError(f"pair ({u}, {v}) is disconnected; graph not preprocessed?")
            out[idx] = GroundTruthSample(u=int(u), v=int(v), d=d)
    return out  # type: ignore[return-value]


def distance_rows(g: RoadNetwork, sources) -> np.ndarray:
    """Stacked distance rows for several sources: shape (len(sources), n)."""
    return np.stack([dijkstra_sssp(g, int(s)).dist for s in sources])


# -- ground-truth cache file -------------------------------------------------
#
# Format: one header line `# graph <content-hash>`, then `u v d` rows with
# 1-based node ids and round-trip-exact float formatting.

def save_ground_truth(path, g: RoadNetwork, samples) -> None:
    with open(path, "wt") as fh:
        fh.write(f"# graph {g.content_hash()}\n")
        for s in samples:
            fh.write(f"{s.u + 1} {s.v + 1} {float(s.d)!r}\n")


def load_ground_truth(path, g: RoadNetwork) -> list[GroundTruthSample] | None:
    """Samples from a cache file, or None when the graph hash does not match."""
    try:
        fh = open(path, "rt")
    except FileNotFoundError:
        return None
    with fh:
        header = fh.readline().split()
        if len(header) != 3 or header[:2] != ["#", "graph"] or header[2] != g.content_hash():
            return None
        out = []
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            out.append(GroundTruthSample(u=int(parts[0]) - 1, v=int(parts[1]) - 1,
                                         d=float(parts[2])))
    return out
