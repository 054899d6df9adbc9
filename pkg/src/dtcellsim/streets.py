"""Street maps: a routable undirected graph plus its multi-channel binary raster.

Synthetic maps stand in for real road data: a Manhattan-like lattice with a
fraction of edges removed and whole street lines tagged with a road class.
The raster form is what the trajectory generator conditions on; the graph
form is what the map-restricted mobility models walk.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ConfigError

ROAD_CLASSES = ("trunk", "primary", "residential")
GRID_SIZE = 192


@dataclass
class StreetGraph:
    """Undirected routable graph. Nodes are (x, y) meters; edges carry a road class."""

    nodes: np.ndarray  # (N, 2) float64
    edges: list[tuple[int, int, int]]  # (node_a, node_b, class index)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=np.float64)
        self._adj: dict[int, list[int]] | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def adjacency(self) -> dict[int, list[int]]:
        if self._adj is None:
            adj: dict[int, list[int]] = {i: [] for i in range(self.n_nodes)}
            for a, b, _ in self.edges:
                adj[a].append(b)
                adj[b].append(a)
            for neighbors in adj.values():
                neighbors.sort()
            self._adj = adj
        return self._adj

    def to_dict(self) -> dict:
        return {
            "nodes": [[float(x), float(y)] for x, y in self.nodes],
            "edges": [[int(a), int(b), int(c)] for a, b, c in self.edges],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StreetGraph":
        nodes = np.asarray(data["nodes"], dtype=np.float64)
        edges = [(int(a), int(b), int(c)) for a, b, c in data["edges"]]
        return cls(nodes=nodes, edges=edges)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path) -> "StreetGraph":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _largest_component(n_nodes: int, edges: list[tuple[int, int, int]]):
    adj: dict[int, list[int]] = {i: [] for i in range(n_nodes)}
    for a, b, _ in edges:
        adj[a].append(b)
        adj[b].append(a)
    seen = np.full(n_nodes, -1, dtype=np.int64)
    comp = 0
    for start in range(n_nodes):
        if seen[start] >= 0:
            continue
        queue = deque([start])
        seen[start] = comp
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if seen[v] < 0:
                    seen[v] = comp
                    queue.append(v)
        comp += 1
    sizes = np.bincount(seen, minlength=comp)
    return seen, int(np.argmax(sizes))


def synth_street_graph(
    seed: int,
    area: tuple[float, float],
    block_size: float,
    drop_fraction: float = 0.0,
    class_weights: tuple[float, ...] = (0.15, 0.35, 0.5),
) -> StreetGraph:
    """Generate a Manhattan-like street graph inside the area.

    Grid lines every block_size meters; each lattice edge survives with
    probability 1 - drop_fraction; every full street line (one row or column)
    shares a road class drawn from class_weights. Only the largest connected
    component is kept so routing always succeeds.
    """
    if block_size <= 0:
        raise ConfigError("block_size must be positive")
    if not 0.0 <= drop_fraction < 0.5:
        raise ConfigError("drop_fraction must lie in [0, 0.5)")
    rng = np.random.default_rng(seed)
    w, h = area
    nx = int(w // block_size) + 1
    ny = int(h // block_size) + 1
    xs = np.arange(nx) * block_size
    ys = np.arange(ny) * block_size
    nodes = np.array([[x, y] for y in ys for x in xs], dtype=np.float64)

    weights = np.asarray(class_weights, dtype=np.float64)
    weights = weights / weights.sum()
    row_class = rng.choice(len(weights), size=ny, p=weights)
    col_class = rng.choice(len(weights), size=nx, p=weights)

    def node_id(ix, iy):
        return iy * nx + ix

    edges: list[tuple[int, int, int]] = []
    for iy in range(ny):
        for ix in range(nx - 1):
            if rng.random() >= drop_fraction:
                edges.append((node_id(ix, iy), node_id(ix + 1, iy), int(row_class[iy])))
    for ix in range(nx):
        for iy in range(ny - 1):
            if rng.random() >= drop_fraction:
                edges.append((node_id(ix, iy), node_id(ix, iy + 1), int(col_class[ix])))
    if not edges:
        raise ConfigError("street synthesis produced no edges; lower drop_fraction")

    labels, keep = _largest_component(len(nodes), edges)
    keep_mask = labels == keep
    remap = np.cumsum(keep_mask) - 1
    new_nodes = nodes[keep_mask]
    new_edges = [
        (int(remap[a]), int(remap[b]), c)
        for a, b, c in edges
        if keep_mask[a] and keep_mask[b]
    ]
    return StreetGraph(nodes=new_nodes, edges=new_edges)


def shortest_path(graph: StreetGraph, a: int, b: int) -> list[int]:
    """Minimum-hop path from a to b by breadth-first search.

    Neighbors are expanded in ascending node-id order, which fixes the
    tie-break among equal-length paths.
    """
    if a == b:
        return [a]
    adj = graph.adjacency()
    parent = {a: -1}
    queue = deque([a])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in parent:
                parent[v] = u
                if v == b:
                    path = [b]
                    while path[-1] != a:
                        path.append(parent[path[-1]])
                    return path[::-1]
                queue.append(v)
    raise ValueError(f"nodes {a} and {b} are not connected")


@dataclass
class MapRaster:
    """C binary channels over a square grid covering bbox; 1 marks a street cell."""

    channels: np.ndarray  # (C, G, G) uint8 in {0, 1}
    bbox: tuple[float, float, float, float]  # x0, y0, x1, y1
    grid: int = GRID_SIZE

    def __post_init__(self):
        self.channels = np.asarray(self.channels, dtype=np.uint8)
        if self.channels.ndim != 3 or self.channels.shape[1:] != (self.grid, self.grid):
            raise ConfigError("raster channels must have shape (C, grid, grid)")

    @property
    def cell_size(self) -> tuple[float, float]:
        x0, y0, x1, y1 = self.bbox
        return (x1 - x0) / self.grid, (y1 - y0) / self.grid

    def union(self) -> np.ndarray:
        return (self.channels.sum(axis=0) > 0).astype(np.uint8)

    def save(self, path_prefix):
        """Write one grayscale PNG per channel, 255 = street, suffix _c<k>.png."""
        prefix = Path(path_prefix)
        paths = []
        for k in range(self.channels.shape[0]):
            # grid row 0 is the bottom of the bbox; image row 0 is the top
            img = Image.fromarray((self.channels[k][::-1] * 255).astype(np.uint8), mode="L")
            out = prefix.parent / f"{prefix.name}_c{k}.png"
            img.save(out)
            paths.append(out)
        meta = prefix.parent / f"{prefix.name}_raster.json"
        meta.write_text(json.dumps({"bbox": list(self.bbox), "grid": self.grid,
                                    "channels": len(paths)}) + "\n")
        return paths

    @classmethod
    def load(cls, path_prefix) -> "MapRaster":
        prefix = Path(path_prefix)
        meta = json.loads((prefix.parent / f"{prefix.name}_raster.json").read_text())
        channels = []
        for k in range(meta["channels"]):
            img = Image.open(prefix.parent / f"{prefix.name}_c{k}.png")
            arr = (np.asarray(img, dtype=np.uint8) >= 128).astype(np.uint8)
            channels.append(arr[::-1])
        return cls(channels=np.stack(channels), bbox=tuple(meta["bbox"]), grid=meta["grid"])


def rasterize_graph(
    graph: StreetGraph,
    bbox: tuple[float, float, float, float],
    n_classes: int = len(ROAD_CLASSES),
    grid: int = GRID_SIZE,
) -> MapRaster:
    """Mark every grid cell a class-c edge passes through in channel c."""
    x0, y0, x1, y1 = bbox
    cw = (x1 - x0) / grid
    ch = (y1 - y0) / grid
    channels = np.zeros((n_classes, grid, grid), dtype=np.uint8)
    for a, b, c in graph.edges:
        ax, ay = graph.nodes[a]
        bx, by = graph.nodes[b]
        length = float(np.hypot(bx - ax, by - ay))
        n_steps = max(2, int(length / (min(cw, ch) / 4.0)) + 1)
        ts = np.linspace(0.0, 1.0, n_steps)
        px = ax + (bx - ax) * ts
        py = ay + (by - ay) * ts
        cols = np.clip(((px - x0) / cw).astype(np.int64), 0, grid - 1)
        rows = np.clip(((py - y0) / ch).astype(np.int64), 0, grid - 1)
        channels[c, rows, cols] = 1
    return MapRaster(channels=channels, bbox=bbox, grid=grid)
