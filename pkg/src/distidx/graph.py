"""Road network loading, validation, and preprocessing.

A road network is an undirected weighted graph: nodes are intersections with
(lat, lon) coordinates, edges are road segments with positive lengths in
meters.  Node ids are dense 0-based integers internally; text files may use
arbitrary integer ids, which are remapped on load (emitted files are 1-based).
"""
from __future__ import annotations

import gzip
import hashlib
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

EARTH_RADIUS_M = 6_371_000.0


class GraphFormatError(ValueError):
    """A graph file line could not be parsed."""


class ValidationError(ValueError):
    """Graph content violates a structural requirement."""


def haversine_m(lat1, lon1, lat2, lon2):
    """Great-circle distance in meters.  Accepts scalars or numpy arrays."""
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    dphi = phi2 - phi1
    dlam = np.radians(np.asarray(lon2) - np.asarray(lon1))
    a = np.sin(dphi / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def local_meter_scales(mean_lat_deg: float) -> tuple[float, float]:
    """(meters per degree latitude, meters per degree longitude) at a reference latitude."""
    k_lat = math.pi / 180.0 * EARTH_RADIUS_M
    k_lon = k_lat * math.cos(math.radians(mean_lat_deg))
    return k_lat, k_lon


@dataclass(frozen=True)
class Coordinate:
    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValidationError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValidationError(f"longitude {self.lon} outside [-180, 180]")


class RoadNetwork:
    """Immutable undirected weighted graph with node coordinates.

    Adjacency is stored CSR-style (``indptr``, ``nbr``, ``wgt``); ``coords``
    is an (n, 2) float64 array of [lat, lon] rows.  Edge weights are meters,
    kept in 64-bit floats end to end so exact-oracle results stay exact.
    """

    def __init__(self, n: int, edges: Iterable[tuple[int, int, float]],
                 coords: np.ndarray, d_max_hint: float | None = None):
        coords = np.asarray(coords, dtype=np.float64)
        if coords.shape != (n, 2):
            raise ValidationError(f"coords shape {coords.shape} does not match n={n}")
        if n == 0:
            raise ValidationError("empty graph")
        if np.any(np.abs(coords[:, 0]) > 90.0) or np.any(np.abs(coords[:, 1]) > 180.0):
            raise ValidationError("coordinate outside valid lat/lon range")

        dedup: dict[tuple[int, int], float] = {}
        for u, v, w in edges:
            u = int(u)
            v = int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise ValidationError(f"edge ({u}, {v}) references unknown node (n={n})")
            if u == v:
                continue  # self-loops carry no distance information; dropped
            w = float(w)
            if not (w > 0.0) or not math.isfinite(w):
                raise ValidationError(f"edge ({u}, {v}) has non-positive weight {w}")
            key = (u, v) if u < v else (v, u)
            old = dedup.get(key)
            if old is None or w < old:
                dedup[key] = w  # duplicate undirected edges keep the minimum weight

        self.n = n
        self.m = len(dedup)
        self.coords = coords
        self.coords.setflags(write=False)
        self.d_max_hint = d_max_hint

        deg = np.zeros(n, dtype=np.int64)
        for (u, v) in dedup:
            deg[u] += 1
            deg[v] += 1
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        nbr = np.zeros(2 * self.m, dtype=np.int64)
        wgt = np.zeros(2 * self.m, dtype=np.float64)
        cursor = indptr[:-1].copy()
        for (u, v), w in dedup.items():
            nbr[cursor[u]] = v
            wgt[cursor[u]] = w
            cursor[u] += 1
            nbr[cursor[v]] = u
            wgt[cursor[v]] = w
            cursor[v] += 1
        # sort each node's neighbor slice for deterministic iteration order
        for u in range(n):
            lo, hi = indptr[u], indptr[u + 1]
            order = np.argsort(nbr[lo:hi], kind="stable")
            nbr[lo:hi] = nbr[lo:hi][order]
            wgt[lo:hi] = wgt[lo:hi][order]
        self.indptr = indptr
        self.nbr = nbr
        self.wgt = wgt
        for a in (self.indptr, self.nbr, self.wgt):
            a.setflags(write=False)
        self._adj_lists: list[list[tuple[int, float]]] | None = None
        self._hash: str | None = None

    # -- accessors ---------------------------------------------------------

    def neighbors(self, u: int) -> np.ndarray:
        return self.nbr[self.indptr[u]:self.indptr[u + 1]]

    def neighbor_weights(self, u: int) -> np.ndarray:
        return self.wgt[self.indptr[u]:self.indptr[u + 1]]

    def adjacency_lists(self) -> list[list[tuple[int, float]]]:
        """Python list-of-lists view, cached; fastest form for heap Dijkstra."""
        if self._adj_lists is None:
            out = []
            for u in range(self.n):
                lo, hi = self.indptr[u], self.indptr[u + 1]
                out.append(list(zip(self.nbr[lo:hi].tolist(), self.wgt[lo:hi].tolist())))
            self._adj_lists = out
        return self._adj_lists

    def edge_list(self) -> list[tuple[int, int, float]]:
        """Canonical (u < v) edge triples, sorted."""
        out = []
        for u in range(self.n):
            lo, hi = self.indptr[u], self.indptr[u + 1]
            for v, w in zip(self.nbr[lo:hi].tolist(), self.wgt[lo:hi].tolist()):
                if u < v:
                    out.append((u, v, w))
        out.sort()
        return out

    def content_hash(self) -> str:
        """sha256 over the canonical edge list and coordinates; keys caches and checkpoints."""
        if self._hash is None:
            h = hashlib.sha256()
            h.update(b"distidx-graph-v1")
            h.update(np.int64(self.n).tobytes())
            h.update(np.int64(self.m).tobytes())
            for u, v, w in self.edge_list():
                h.update(np.int64(u).tobytes())
                h.update(np.int64(v).tobytes())
                h.update(np.float64(w).tobytes())
            h.update(np.ascontiguousarray(self.coords).tobytes())
            self._hash = h.hexdigest()
        return self._hash

    def mean_latitude(self) -> float:
        return float(self.coords[:, 0].mean())

    def __repr__(self):
        return f"RoadNetwork(n={self.n}, m={self.m})"


@dataclass
class SubgraphMap:
    """Bidirectional id translation for an induced subgraph."""
    to_parent: np.ndarray                      # sub id -> parent id
    to_sub: dict[int, int] = field(repr=False)  # parent id -> sub id


def _open_text(path):
    p = str(path)
    if p.endswith(".gz"):
        return gzip.open(p, "rt")
    return open(p, "rt")


def _strip_comment(line: str) -> str:
    pos = line.find("#")
    if pos >= 0:
        line = line[:pos]
    return line.strip()


def load_graph(edge_path, coord_path, d_max_hint: float | None = None) -> RoadNetwork:
    """Load a road network from an edge file (``u v w``) and a coordinate file (``id lat lon``).

    Files are whitespace separated, ``#`` starts a comment, ``.gz`` paths are
    decompressed transparently.  Arbitrary integer ids are remapped to dense
    0-based ids in sorted-id order; the mapping is kept on the returned
    network as ``file_ids`` (internal id -> file id).
    """
    raw_coords: dict[int, tuple[float, float]] = {}
    with _open_text(coord_path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = _strip_comment(line)
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise GraphFormatError(f"{coord_path}:{lineno}: expected 'id lat lon', got {line!r}")
            try:
                nid = int(parts[0])
                lat = float(parts[1])
                lon = float(parts[2])
            except ValueError as exc:
                raise GraphFormatError(f"{coord_path}:{lineno}: {exc}") from None
            Coordinate(lat, lon)  # range validation
            raw_coords[nid] = (lat, lon)
    if not raw_coords:
        raise ValidationError(f"{coord_path}: no coordinates found")

    file_ids = sorted(raw_coords)
    remap = {fid: i for i, fid in enumerate(file_ids)}
    n = len(file_ids)
    coords = np.array([raw_coords[fid] for fid in file_ids], dtype=np.float64)

    edges: list[tuple[int, int, float]] = []
    with _open_text(edge_path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = _strip_comment(line)
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise GraphFormatError(f"{edge_path}:{lineno}: expected 'u v w', got {line!r}")
            try:
                fu = int(parts[0])
                fv = int(parts[1])
                w = float(parts[2])
            except ValueError as exc:
                raise GraphFormatError(f"{edge_path}:{lineno}: {exc}") from None
            if fu not in remap or fv not in remap:
                raise ValidationError(f"{edge_path}:{lineno}: edge references unknown node id")
            if w <= 0.0:
                raise ValidationError(f"{edge_path}:{lineno}: non-positive weight {w}")
            edges.append((remap[fu], remap[fv], w))

    g = RoadNetwork(n, edges, coords, d_max_hint=d_max_hint)
    g.file_ids = np.array(file_ids, dtype=np.int64)
    return g


def connected_components(g: RoadNetwork) -> list[list[int]]:
    """Components as node-id lists, ordered by discovery from node 0 upward."""
    seen = np.zeros(g.n, dtype=bool)
    comps = []
    for start in range(g.n):
        if seen[start]:
            continue
        comp = []
        queue = deque([start])
        seen[start] = True
        while queue:
            u = queue.popleft()
            comp.append(u)
            for v in g.neighbors(u):
                if not seen[v]:
                    seen[v] = True
                    queue.append(int(v))
        comps.append(comp)
    return comps


def largest_connected_component(g: RoadNetwork) -> RoadNetwork:
    """Induced subgraph on the largest component, nodes re-indexed densely.

    Ties between equal-size components go to the one containing the smallest
    node id.  The returned network carries ``kept_nodes`` (new id -> old id)
    and ``old_to_new`` (old id -> new id, -1 for dropped nodes).
    """
    comps = connected_components(g)
    best = comps[0]
    for comp in comps[1:]:
        if len(comp) > len(best):
            best = comp  # strict '>' keeps the earliest (= smallest min id) on ties
    sub, idmap = induced_subgraph(g, best)
    sub.kept_nodes = idmap.to_parent
    old_to_new = np.full(g.n, -1, dtype=np.int64)
    old_to_new[idmap.to_parent] = np.arange(sub.n)
    sub.old_to_new = old_to_new
    if hasattr(g, "file_ids"):
        sub.file_ids = g.file_ids[idmap.to_parent]
    return sub


def induced_subgraph(g: RoadNetwork, nodes: Iterable[int]) -> tuple[RoadNetwork, SubgraphMap]:
    """Subgraph on ``nodes`` with exactly the edges whose endpoints both lie inside."""
    keep = sorted({int(v) for v in nodes})
    if not keep:
        raise ValidationError("empty node set")
    for v in keep:
        if not 0 <= v < g.n:
            raise ValidationError(f"node {v} not in graph")
    to_parent = np.array(keep, dtype=np.int64)
    to_sub = {old: new for new, old in enumerate(keep)}
    edges = []
    for new_u, old_u in enumerate(keep):
        lo, hi = g.indptr[old_u], g.indptr[old_u + 1]
        for old_v, w in zip(g.nbr[lo:hi].tolist(), g.wgt[lo:hi].tolist()):
            if old_u < old_v and old_v in to_sub:
                edges.append((new_u, to_sub[old_v], w))
    sub = RoadNetwork(len(keep), edges, g.coords[to_parent], d_max_hint=g.d_max_hint)
    return sub, SubgraphMap(to_parent=to_parent, to_sub=to_sub)


def nearest_vertex(g: RoadNetwork, lat: float, lon: float) -> int:
    """Node minimizing haversine distance to (lat, lon); ties go to the smallest id."""
    d = haversine_m(g.coords[:, 0], g.coords[:, 1], lat, lon)
    return int(np.argmin(d))


def k_hop_neighborhood(g: RoadNetwork, v: int, k: int) -> set[int]:
    """All nodes reachable from ``v`` within k edges, including ``v`` itself."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if not 0 <= v < g.n:
        raise ValueError(f"node {v} not in graph")
    seen = {int(v)}
    frontier = [int(v)]
    for _ in range(k):
        nxt = []
        for u in frontier:
            for w in g.neighbors(u).tolist():
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        if not nxt:
            break
        frontier = nxt
    return seen


def k_hop_union(g: RoadNetwork, seeds: Sequence[int], k: int) -> list[int]:
    """Sorted union of the k-hop neighborhoods of ``seeds`` (one shared BFS)."""
    seen = np.full(g.n, -1, dtype=np.int64)
    frontier = []
    for s in set(int(s) for s in seeds):
        seen[s] = 0
        frontier.append(s)
    for depth in range(1, k + 1):
        nxt = []
        for u in frontier:
            for w in g.neighbors(u).tolist():
                if seen[w] < 0:
                    seen[w] = depth
                    nxt.append(w)
        frontier = nxt
        if not frontier:
            break
    return np.flatnonzero(seen >= 0).tolist()
