"""Query dataset construction: workload-driven, all-pairs, and landmark-based.

A query dataset is a list of labeled node pairs (u, v, d).  Workload-driven
queries come from trip records whose endpoints are snapped to their nearest
vertices and then inflated by perturbing endpoints inside small hop
neighborhoods.  Synthetic generators cover all-pairs and node-to-landmark
sampling.  Splitting is a seeded shuffle followed by a prefix cut.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .graph import Coordinate, RoadNetwork, k_hop_neighborhood, nearest_vertex
from .kmeans import kmeans
from .oracle import GroundTruthSample


class WorkloadError(RuntimeError):
    pass


@dataclass(frozen=True)
class TripRecord:
    o_lat: float
    o_lon: float
    d_lat: float
    d_lon: float

    def __post_init__(self):
        Coordinate(self.o_lat, self.o_lon)
        Coordinate(self.d_lat, self.d_lon)


@dataclass
class QueryDataset:
    samples: list[GroundTruthSample]
    d_max: float = field(init=False)
    N: int = field(init=False)

    def __post_init__(self):
        self.N = len(self.samples)
        self.d_max = max((s.d for s in self.samples), default=0.0)

    def arrays(self):
        """(u, v, d) as numpy arrays, in sample order."""
        u = np.fromiter((s.u for s in self.samples), dtype=np.int64, count=self.N)
        v = np.fromiter((s.v for s in self.samples), dtype=np.int64, count=self.N)
        d = np.fromiter((s.d for s in self.samples), dtype=np.float64, count=self.N)
        return u, v, d


@dataclass
class SplitDataset:
    train: QueryDataset
    test: QueryDataset
    seed: int

    @property
    def d_max(self) -> float:
        """Scaling constant for the whole pipeline: max label on the train split."""
        return self.train.d_max


def read_trips(path) -> list[TripRecord]:
    """Trip CSV with a header: columns o_lat,o_lon,d_lat,d_lon (extras ignored)."""
    trips = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"o_lat", "o_lon", "d_lat", "d_lon"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise WorkloadError(f"{path}: trip CSV must have columns {sorted(required)}")
        for row in reader:
            trips.append(TripRecord(float(row["o_lat"]), float(row["o_lon"]),
                                    float(row["d_lat"]), float(row["d_lon"])))
    return trips


def _canon(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def workload_queries(g: RoadNetwork, trips, target: int, hops: int = 2,
                     seed: int = 0) -> list[tuple[int, int]]:
    """Map trips to vertex pairs, then inflate to ``target`` unique pairs.

    Each trip maps via nearest-vertex; pairs are canonicalized (u < v) and
    deduplicated; degenerate u == v pairs are dropped.  Augmentation repeats:
    pick a base pair uniformly, replace each endpoint with a uniform member of
    its ``hops``-hop neighborhood, keep if new.  Gives up (with the achieved
    count) after 10 * target attempts.
    """
    if not trips:
        raise WorkloadError("no trips")
    if hops < 0:
        raise ValueError("hops must be >= 0")
    rng = np.random.default_rng(seed)
    base: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for t in trips:
        u = nearest_vertex(g, t.o_lat, t.o_lon)
        v = nearest_vertex(g, t.d_lat, t.d_lon)
        if u == v:
            continue
        p = _canon(u, v)
        if p not in seen:
            seen.add(p)
            base.append(p)
    if not base:
        raise WorkloadError("every trip mapped to a degenerate pair")
    if target < len(base):
        raise WorkloadError(f"target {target} below {len(base)} unique mapped pairs")

    out = list(base)
    hood: dict[int, np.ndarray] = {}

    def neighborhood(v: int) -> np.ndarray:
        arr = hood.get(v)
        if arr is None:
            arr = np.array(sorted(k_hop_neighborhood(g, v, hops)), dtype=np.int64)
            hood[v] = arr
        return arr

    attempts = 0
    limit = 10 * target
    while len(out) < target:
        if attempts >= limit:
            raise WorkloadError(
                f"could not reach {target} unique pairs after {limit} attempts; got {len(out)}")
        attempts += 1
        bu, bv = base[int(rng.integers(len(base)))]
        nu = int(rng.choice(neighborhood(bu)))
        nv = int(rng.choice(neighborhood(bv)))
        if nu == nv:
            continue
        p = _canon(nu, nv)
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


def sample_all_pairs(g: RoadNetwork, max_pairs: int = 2_000_000) -> list[tuple[int, int]]:
    """Every canonical pair u < v; refuses graphs whose pair count exceeds the budget."""
    count = g.n * (g.n - 1) // 2
    if count > max_pairs:
        raise WorkloadError(f"all-pairs would produce {count} pairs, over the {max_pairs} budget")
    iu, iv = np.triu_indices(g.n, k=1)
    return list(zip(iu.tolist(), iv.tolist()))


def select_landmarks(g: RoadNetwork, l: int, strategy: str = "random",
                     candidates=None, seed: int = 0) -> list[int]:
    """Pick ``l`` distinct landmark nodes from ``candidates`` (default: all nodes).

    ``random`` draws uniformly.  ``kmeans`` clusters candidate coordinates in
    plain lat/lon Euclidean space and takes the candidate nearest each
    centroid, refilling randomly when two centroids claim the same node.
    """
    cand = sorted(range(g.n)) if candidates is None else sorted({int(c) for c in candidates})
    if l > len(cand):
        raise ValueError(f"requested {l} landmarks from {len(cand)} candidates")
    rng = np.random.default_rng(seed)
    cand_arr = np.array(cand, dtype=np.int64)
    if strategy == "random":
        picks = rng.choice(len(cand_arr), size=l, replace=False)
        return cand_arr[np.sort(picks)].tolist()
    if strategy == "kmeans":
        pts = g.coords[cand_arr]
        centers, _ = kmeans(pts, l, seed=seed)
        chosen: list[int] = []
        taken: set[int] = set()
        for c in centers:
            order = np.argsort(np.sum((pts - c) ** 2, axis=1), kind="stable")
            for idx in order:
                node = int(cand_arr[idx])
                if node not in taken:
                    taken.add(node)
                    chosen.append(node)
                    break
        while len(chosen) < l:  # collisions exhausted a centroid; refill randomly
            node = int(cand_arr[rng.integers(len(cand_arr))])
            if node not in taken:
                taken.add(node)
                chosen.append(node)
        return chosen
    raise ValueError(f"unknown landmark strategy {strategy!r}")


def sample_landmark_pairs(g: RoadNetwork, landmarks) -> list[tuple[int, int]]:
    """All (v, landmark) pairs with v != landmark."""
    landmarks = list(landmarks)
    if not landmarks:
        raise ValueError("no landmarks")
    out = []
    for lm in landmarks:
        for v in range(g.n):
            if v != lm:
                out.append((v, int(lm)))
    return out


def label_pairs(g: RoadNetwork, pairs) -> QueryDataset:
    return QueryDataset(oracle.batch_ground_truth(g, pairs))


def split_train_test(samples, ratio: float = 0.8, seed: int = 0) -> SplitDataset:
    """Seeded uniform shuffle, then prefix split; d_max is defined on the train part."""
    samples = list(samples)
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be in (0, 1)")
    if len(samples) < 2:
        raise ValueError("need at least 2 samples to split")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(samples))
    n_train = int(round(ratio * len(samples)))
    n_train = min(max(n_train, 1), len(samples) - 1)
    train = [samples[i] for i in order[:n_train]]
    test = [samples[i] for i in order[n_train:]]
    return SplitDataset(train=QueryDataset(train), test=QueryDataset(test), seed=seed)


# -- query dataset files (same layout as the ground-truth cache) -------------

def save_query_dataset(path, g: RoadNetwork, ds: QueryDataset) -> None:
    oracle.save_ground_truth(path, g, ds.samples)


def load_query_dataset(path, g: RoadNetwork) -> QueryDataset | None:
    samples = oracle.load_ground_truth(path, g)
    return None if samples is None else QueryDataset(samples)
