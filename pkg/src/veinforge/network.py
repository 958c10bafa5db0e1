"""Planar vein graphs shared by the network generators and the rasterizer."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np


@dataclass
class VeinNetwork:
    """Node positions in the unit square plus weighted, undirected edges.

    ``radii`` are stroke radii in pixels at a 128 px reference raster.
    ``conductivity`` is only populated by the Physarum generator.
    """

    nodes: np.ndarray
    edges: np.ndarray
    radii: np.ndarray
    conductivity: Optional[np.ndarray] = None
    source: Optional[int] = None
    sink: Optional[int] = None

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float).reshape(-1, 2)
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        self.radii = np.asarray(self.radii, dtype=float).reshape(-1)
        if len(self.radii) != len(self.edges):
            raise ValueError("one radius per edge required")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_lengths(self) -> np.ndarray:
        d = self.nodes[self.edges[:, 0]] - self.nodes[self.edges[:, 1]]
        return np.hypot(d[:, 0], d[:, 1])

    def to_text(self) -> str:
        """Line-delimited dump: ``N x y`` per node, ``E i j D r`` per edge."""
        lines = [f"N {x:.9g} {y:.9g}" for x, y in self.nodes]
        cond = self.conductivity if self.conductivity is not None else np.zeros(self.n_edges)
        for (i, j), d, r in zip(self.edges, cond, self.radii):
            lines.append(f"E {i} {j} {d:.9g} {r:.9g}")
        return "\n".join(lines) + "\n"

    def save_text(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "VeinNetwork":
        nodes, edges, cond, radii = [], [], [], []
        for raw in text.splitlines():
            parts = raw.split()
            if not parts:
                continue
            if parts[0] == "N":
                nodes.append((float(parts[1]), float(parts[2])))
            elif parts[0] == "E":
                edges.append((int(parts[1]), int(parts[2])))
                cond.append(float(parts[3]))
                radii.append(float(parts[4]))
            else:
                raise ValueError(f"unknown record {parts[0]!r}")
        return cls(np.array(nodes), np.array(edges), np.array(radii), conductivity=np.array(cond))


@dataclass
class VeinTree(VeinNetwork):
    """Rooted tree; every edge is stored as (parent, child)."""

    root: int = 0
    extra: dict = field(default_factory=dict)

    def children(self) -> list[list[int]]:
        kids: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for p, c in self.edges:
            kids[p].append(int(c))
        return kids

    def leaves(self) -> np.ndarray:
        outdeg = np.bincount(self.edges[:, 0], minlength=self.n_nodes) if self.n_edges else np.zeros(self.n_nodes, int)
        return np.flatnonzero(outdeg == 0)
