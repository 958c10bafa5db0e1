"""Agglomerative average-linkage clustering with a JSON-friendly merge tree."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


class Merge(tuple):
    """``(left, right, height, size)``; ids >= n refer to earlier merges (n + step)."""

    __slots__ = ()

    def __new__(cls, left: int, right: int, height: float, size: int):
        return super().__new__(cls, (int(left), int(right), float(height), int(size)))

    left = property(lambda self: self[0])
    right = property(lambda self: self[1])
    height = property(lambda self: self[2])
    size = property(lambda self: self[3])


@dataclass
class Dendrogram:
    n_leaves: int
    merges: list

    def leaf_order(self) -> list[int]:
        """Leaves left to right as drawn from the root."""
        if self.n_leaves == 1:
            return [0]
        out = []
        stack = [self.n_leaves + len(self.merges) - 1]
        while stack:
            node = stack.pop()
            if node < self.n_leaves:
                out.append(node)
            else:
                m = self.merges[node - self.n_leaves]
                stack.append(m.right)
                stack.append(m.left)
        return out

    def members(self, node: int) -> list[int]:
        if node < self.n_leaves:
            return [node]
        m = self.merges[node - self.n_leaves]
        return self.members(m.left) + self.members(m.right)

    def top_split(self) -> tuple[list[int], list[int]]:
        """Leaf sets of the two branches joined by the final merge."""
        if not self.merges:
            raise ValueError("a single leaf has no split")
        last = self.merges[-1]
        return sorted(self.members(last.left)), sorted(self.members(last.right))

    def to_tree(self, labels: Optional[Sequence] = None, groups: Optional[Sequence] = None) -> dict:
        def node(i: int) -> dict:
            if i < self.n_leaves:
                leaf = {"leaf": i}
                if labels is not None:
                    leaf["label"] = labels[i]
                if groups is not None:
                    leaf["group"] = groups[i]
                return leaf
            m = self.merges[i - self.n_leaves]
            return {"height": m.height, "size": m.size, "children": [node(m.left), node(m.right)]}

        return node(self.n_leaves + len(self.merges) - 1 if self.merges else 0)

    def to_json(self, labels=None, groups=None, **extra) -> str:
        doc = {
            "linkage": "average",
            "n_leaves": self.n_leaves,
            "merges": [list(m) for m in self.merges],
            "leaf_order": self.leaf_order(),
            "tree": self.to_tree(labels, groups),
        }
        doc.update(extra)
        return json.dumps(doc, indent=2)


def _validate(d: np.ndarray, tol: float) -> None:
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("distance matrix must be square")
    if d.shape[0] < 1:
        raise ValueError("distance matrix is empty")
    if np.any(np.isnan(d)):
        raise ValueError("distance matrix has NaN entries")
    if np.any(d < 0):
        raise ValueError("distances must be non-negative")
    if np.any(np.abs(np.diag(d)) > tol):
        raise ValueError("diagonal must be zero")
    finite = np.isfinite(d)
    if not np.array_equal(finite, finite.T) or not np.allclose(d[finite], d.T[finite], rtol=0.0, atol=tol):
        raise ValueError("distance matrix must be symmetric")


def hcluster(distance_matrix, tol: float = 1e-12) -> Dendrogram:
    """Average linkage; ties merge the pair with the smallest (i, j) cluster ids.

    Infinite distances are allowed and propagate to infinite merge heights.
    """
    d = np.array(distance_matrix, dtype=float)
    scale = float(np.abs(d[np.isfinite(d)]).max(initial=0.0))
    _validate(d, tol * max(1.0, scale))
    n = d.shape[0]
    d = 0.5 * (d + d.T)
    size = {i: 1 for i in range(n)}
    dist = {(i, j): d[i, j] for i in range(n) for j in range(i + 1, n)}
    merges = []
    for step in range(n - 1):
        (a, b), h = min(dist.items(), key=lambda kv: (kv[1], kv[0]))
        new = n + step
        na, nb = size.pop(a), size.pop(b)
        for k in list(size):
            dka = dist.pop((min(k, a), max(k, a)))
            dkb = dist.pop((min(k, b), max(k, b)))
            dist[(k, new)] = (na * dka + nb * dkb) / (na + nb)
        del dist[(a, b)]
        size[new] = na + nb
        merges.append(Merge(a, b, h, na + nb))
    return Dendrogram(n, merges)
