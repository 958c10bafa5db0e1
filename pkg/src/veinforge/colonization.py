"""Open venation trees by space colonization, with Murray's-law vessel radii."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import VeinTree


class CycleError(ValueError):
    pass


@dataclass
class ColonizationConfig:
    attractor_count: int = 400
    attraction_distance: float = 0.15
    kill_distance: float = 0.03
    segment_length: float = 0.02
    root_position: tuple[float, float] = (0.5, 0.0)
    max_steps: int = 500
    terminal_radius: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        if self.attractor_count < 1:
            raise ValueError("attractor_count must be >= 1")
        if not 0 < self.kill_distance < self.attraction_distance:
            raise ValueError("need 0 < kill_distance < attraction_distance")
        if self.segment_length <= 0:
            raise ValueError("segment_length must be positive")
        x, y = self.root_position
        if not (0 <= x <= 1 and 0 <= y <= 1):
            raise ValueError("root must lie inside the unit square")
        if self.terminal_radius <= 0:
            raise ValueError("terminal_radius must be positive")


@dataclass
class GrowingTree:
    """Mutable working state: positions and parent index (-1 for the root)."""

    nodes: np.ndarray
    parents: np.ndarray

    @classmethod
    def seeded(cls, root) -> "GrowingTree":
        return cls(np.asarray([root], dtype=float), np.array([-1], dtype=np.int64))

    def __len__(self):
        return len(self.nodes)


def scatter_attractors(config: ColonizationConfig) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([config.rng_seed, 0]))
    return rng.uniform(0.0, 1.0, size=(config.attractor_count, 2))


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", d, d)


def _kill(tree: GrowingTree, attractors: np.ndarray, kill_distance: float) -> np.ndarray:
    if len(attractors) == 0:
        return attractors
    d2 = _sq_dists(attractors, tree.nodes)
    return attractors[d2.min(axis=1) > kill_distance**2]


def _occupied(siblings: np.ndarray, pos: np.ndarray) -> bool:
    return len(siblings) > 0 and float(np.min(np.sum((siblings - pos) ** 2, axis=1))) < 1e-18


def grow_step(tree: GrowingTree, attractors: np.ndarray, config: ColonizationConfig):
    """Advance the tree by one generation; returns ``(tree', attractors')``.

    Attractors already within the kill distance are dropped before they can
    influence growth. Each remaining attractor in range pulls its nearest node
    (lowest index on ties); each pulled node sprouts one child along the mean
    pull direction. When that child already exists (opposing pulls cancel),
    the node grows towards its closest pulling attractor instead.
    """
    attractors = _kill(tree, np.asarray(attractors, dtype=float).reshape(-1, 2), config.kill_distance)
    if len(attractors) == 0:
        return tree, attractors

    d2 = _sq_dists(attractors, tree.nodes)
    nearest = np.argmin(d2, axis=1)
    in_range = d2[np.arange(len(attractors)), nearest] <= config.attraction_distance**2
    if not in_range.any():
        return tree, attractors

    src = nearest[in_range]
    vec = attractors[in_range] - tree.nodes[src]
    vec /= np.linalg.norm(vec, axis=1, keepdims=True)
    pull = np.zeros_like(tree.nodes)
    np.add.at(pull, src, vec)

    near_d2 = d2[np.arange(len(attractors)), nearest][in_range]
    new_nodes, new_parents = [], []
    for i in np.unique(src):
        siblings = tree.nodes[tree.parents == i]
        norm = np.linalg.norm(pull[i])
        pos = None
        if norm > 1e-12:
            pos = np.clip(tree.nodes[i] + config.segment_length * pull[i] / norm, 0.0, 1.0)
        if pos is None or _occupied(siblings, pos):
            # opposing pulls cancel and regrow the same child forever;
            # fall back to the closest pulling attractor alone
            mine = np.flatnonzero(src == i)
            k = mine[np.argmin(near_d2[mine])]
            pos = np.clip(tree.nodes[i] + config.segment_length * vec[k], 0.0, 1.0)
            if _occupied(siblings, pos):
                continue
        new_nodes.append(pos)
        new_parents.append(i)

    if not new_nodes:
        return tree, attractors
    grown = GrowingTree(
        np.vstack([tree.nodes, np.asarray(new_nodes)]),
        np.concatenate([tree.parents, np.asarray(new_parents, dtype=np.int64)]),
    )
    return grown, _kill(grown, attractors, config.kill_distance)


def _topological_order(n_nodes: int, edges: np.ndarray) -> tuple[list[int], list[list[int]]]:
    kids: list[list[int]] = [[] for _ in range(n_nodes)]
    indeg = np.zeros(n_nodes, dtype=np.int64)
    for p, c in edges:
        kids[p].append(int(c))
        indeg[c] += 1
    if np.any(indeg > 1):
        raise CycleError("node with more than one parent")
    order = []
    stack = [int(v) for v in np.flatnonzero(indeg == 0)]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(kids[v])
    if len(order) != n_nodes:
        raise CycleError("cycle detected in tree edges")
    return order, kids


def assign_radii(tree: VeinTree, terminal_radius: float) -> VeinTree:
    """Murray's law bottom-up: r_parent^3 = sum of r_child^3, leaves at ``terminal_radius``.

    Each edge (parent, child) carries the radius of the vessel entering
    ``child``.
    """
    order, kids = _topological_order(tree.n_nodes, tree.edges)
    r_in = np.zeros(tree.n_nodes)
    for v in reversed(order):
        if kids[v]:
            r_in[v] = np.cbrt(sum(r_in[c] ** 3 for c in kids[v]))
        else:
            r_in[v] = terminal_radius
    radii = np.array([r_in[c] for _, c in tree.edges]) if tree.n_edges else np.zeros(0)
    out = VeinTree(tree.nodes, tree.edges, radii, root=tree.root)
    out.extra = dict(tree.extra)
    return out


def to_vein_tree(tree: GrowingTree) -> VeinTree:
    child = np.flatnonzero(tree.parents >= 0)
    edges = np.column_stack([tree.parents[child], child]) if len(child) else np.zeros((0, 2), np.int64)
    return VeinTree(tree.nodes, edges, np.zeros(len(edges)), root=0)


def run_colonization(config: ColonizationConfig) -> VeinTree:
    attractors = scatter_attractors(config)
    tree = GrowingTree.seeded(config.root_position)
    steps = 0
    for steps in range(1, config.max_steps + 1):
        before = (len(tree), len(attractors))
        tree, attractors = grow_step(tree, attractors, config)
        if len(attractors) == 0 or (len(tree), len(attractors)) == before:
            break
    vt = assign_radii(to_vein_tree(tree), config.terminal_radius)
    vt.extra = {"remaining_attractors": attractors, "steps": steps}
    return vt
