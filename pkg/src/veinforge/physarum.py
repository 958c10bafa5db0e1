"""Loop-bearing vein networks from Physarum-style flow/conductivity adaptation.

A random Delaunay mesh is laid over the unit square with a food source at the
top-centre and a sink at the bottom-centre. Each iteration solves Kirchhoff's
laws for the current conductivities and then relaxes every edge conductivity
towards a monotone function of the flux it carries::

    dD/dt = f(|Q|) - D,        f(0) = 0

Edges that keep carrying flux thicken, idle edges thin out, and the surviving
high-conductivity subgraph is the vein pattern.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve
from scipy.spatial import Delaunay, QhullError

from .network import VeinNetwork

log = logging.getLogger(__name__)

SOURCE_POS = (0.5, 1.0)
SINK_POS = (0.5, 0.0)
ITERATION_RANGE = (350, 700)


class DisconnectedNetworkError(RuntimeError):
    """No positive-conductivity path joins the source to the sink."""


@dataclass
class MeshGraph:
    nodes: np.ndarray      # (n, 2)
    edges: np.ndarray      # (m, 2), i < j
    lengths: np.ndarray    # (m,)
    source: int
    sink: int

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)


@dataclass
class FlowState:
    conductivities: np.ndarray
    pressures: np.ndarray
    flows: np.ndarray


def saturating_response(q: np.ndarray) -> np.ndarray:
    return q / (1.0 + q)


def linear_response(q: np.ndarray) -> np.ndarray:
    return q


FLUX_RESPONSES: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "saturating": saturating_response,
    "linear": linear_response,
}


@dataclass
class PhysarumConfig:
    """Parameters of one Physarum run.

    ``extraction_threshold`` is relative: edges with
    ``D >= extraction_threshold * max(D)`` survive. ``iterations=None`` draws
    the step count uniformly from 350..700 using the seed.
    """

    node_count: int = 300
    iterations: Optional[int] = None
    dt: float = 0.01
    flux_response: str = "saturating"
    extraction_threshold: float = 0.05
    total_flux: float = 1.0
    radius_scale: float = 2.5
    rng_seed: int = 0

    def __post_init__(self):
        if self.node_count < 4:
            raise ValueError("node_count must be >= 4")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.extraction_threshold <= 0:
            raise ValueError("extraction_threshold must be positive")
        if self.total_flux <= 0:
            raise ValueError("total_flux must be positive")
        if self.flux_response not in FLUX_RESPONSES:
            raise ValueError(f"unknown flux_response {self.flux_response!r}")
        if self.iterations is not None and self.iterations < 1:
            raise ValueError("iterations must be >= 1")

    def resolved_iterations(self) -> int:
        if self.iterations is not None:
            return int(self.iterations)
        rng = np.random.default_rng(np.random.SeedSequence([self.rng_seed, 2]))
        lo, hi = ITERATION_RANGE
        return int(rng.integers(lo, hi, endpoint=True))


def _seed_seq(rng_seed: int, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(rng_seed) & 0xFFFFFFFFFFFFFFFF, stream])


def build_mesh(node_count: int, rng_seed: int, max_retries: int = 10) -> MeshGraph:
    """Delaunay mesh of ``node_count`` random interior points plus two terminals."""
    if node_count < 4:
        raise ValueError("node_count must be >= 4")
    rng = np.random.default_rng(_seed_seq(rng_seed, 0))
    interior = rng.uniform(0.02, 0.98, size=(node_count, 2))
    terminals = np.array([SOURCE_POS, SINK_POS])
    for attempt in range(max_retries + 1):
        pts = np.vstack([interior, terminals])
        try:
            tri = Delaunay(pts)
        except QhullError:
            tri = None
        if tri is not None and len(tri.simplices):
            break
        log.debug("degenerate triangulation, retry %d", attempt + 1)
        interior = interior + rng.normal(scale=1e-3, size=interior.shape)
        interior = np.clip(interior, 0.0, 1.0)
    else:
        raise RuntimeError(f"Delaunay triangulation degenerate after {max_retries} retries")

    s = tri.simplices
    pairs = np.vstack([s[:, [0, 1]], s[:, [1, 2]], s[:, [0, 2]]])
    pairs.sort(axis=1)
    edges = np.unique(pairs, axis=0)
    d = pts[edges[:, 0]] - pts[edges[:, 1]]
    lengths = np.hypot(d[:, 0], d[:, 1])
    return MeshGraph(pts, edges, lengths, source=node_count, sink=node_count + 1)


def solve_flows(mesh: MeshGraph, conductivities, total_flux: float = 1.0) -> FlowState:
    """Kirchhoff solve: inject ``total_flux`` at the source, drain at the sink (p=0)."""
    D = np.asarray(conductivities, dtype=float)
    if D.shape != (mesh.n_edges,):
        raise ValueError("one conductivity per edge required")
    if np.any(D < 0):
        raise ValueError("conductivities must be non-negative")

    n = mesh.n_nodes
    active = D > 0
    ei, ej = mesh.edges[active, 0], mesh.edges[active, 1]
    adj = sp.coo_matrix((np.ones(len(ei)), (ei, ej)), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    comp = labels == labels[mesh.source]
    if not comp[mesh.sink]:
        raise DisconnectedNetworkError("sink unreachable from source through positive-conductivity edges")

    # unknowns: component nodes other than the sink
    unknown = comp.copy()
    unknown[mesh.sink] = False
    index = -np.ones(n, dtype=np.int64)
    index[unknown] = np.arange(unknown.sum())
    k = int(unknown.sum())

    w = D[active] / mesh.lengths[active]
    a, b = index[ei], index[ej]
    rows, cols, vals = [], [], []
    for u, v in ((a, b), (b, a)):
        keep = u >= 0
        rows.append(u[keep])
        cols.append(u[keep])
        vals.append(w[keep])
        both = keep & (v >= 0)
        rows.append(u[both])
        cols.append(v[both])
        vals.append(-w[both])
    lap = sp.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(k, k)
    )
    rhs = np.zeros(k)
    rhs[index[mesh.source]] = total_flux
    p_red = spsolve(lap, rhs)
    if not np.all(np.isfinite(p_red)):
        raise DisconnectedNetworkError("singular Kirchhoff system")

    pressures = np.zeros(n)
    pressures[unknown] = p_red
    dp = pressures[mesh.edges[:, 0]] - pressures[mesh.edges[:, 1]]
    flows = D * dp / mesh.lengths
    return FlowState(D.copy(), pressures, flows)


def update_conductivity(state: FlowState, dt: float, flux_response="saturating") -> FlowState:
    """One explicit Euler step of dD/dt = f(|Q|) - D, clamped at zero."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    f = FLUX_RESPONSES[flux_response] if isinstance(flux_response, str) else flux_response
    D = state.conductivities
    new = D + dt * (f(np.abs(state.flows)) - D)
    np.maximum(new, 0.0, out=new)
    return replace(state, conductivities=new)


def node_residuals(mesh: MeshGraph, state: FlowState, total_flux: float) -> np.ndarray:
    """Net outflow minus prescribed injection at every node (zero when conserved)."""
    out = np.zeros(mesh.n_nodes)
    np.add.at(out, mesh.edges[:, 0], state.flows)
    np.add.at(out, mesh.edges[:, 1], -state.flows)
    out[mesh.source] -= total_flux
    out[mesh.sink] += total_flux
    return out


def initial_conductivities(mesh: MeshGraph, rng_seed: int) -> np.ndarray:
    rng = np.random.default_rng(_seed_seq(rng_seed, 1))
    return rng.uniform(0.5, 1.0, size=mesh.n_edges)


def simulate(
    mesh: MeshGraph,
    config: PhysarumConfig,
    iterations: Optional[int] = None,
    callback: Optional[Callable[[int, FlowState], None]] = None,
) -> FlowState:
    """Run the adaptation loop; the returned flows match the returned conductivities."""
    steps = config.resolved_iterations() if iterations is None else iterations
    D = initial_conductivities(mesh, config.rng_seed)
    state = solve_flows(mesh, D, config.total_flux)
    for step in range(steps):
        if callback is not None:
            callback(step, state)
        state = update_conductivity(state, config.dt, config.flux_response)
        state = solve_flows(mesh, state.conductivities, config.total_flux)
    if callback is not None:
        callback(steps, state)
    return state


def extract_network(mesh: MeshGraph, state: FlowState, config: PhysarumConfig) -> VeinNetwork:
    D = state.conductivities
    dmax = D.max()
    keep = D >= config.extraction_threshold * dmax
    if not keep.any():
        raise DisconnectedNetworkError("extraction removed every edge")
    edges = mesh.edges[keep]
    adj = sp.coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(mesh.n_nodes,) * 2)
    _, labels = connected_components(adj, directed=False)
    if labels[mesh.source] != labels[mesh.sink]:
        raise DisconnectedNetworkError("extracted network does not join source and sink")

    used = np.unique(edges)
    remap = -np.ones(mesh.n_nodes, dtype=np.int64)
    remap[used] = np.arange(len(used))
    radii = config.radius_scale * (D[keep] / dmax) ** 0.25
    return VeinNetwork(
        nodes=mesh.nodes[used],
        edges=remap[edges],
        radii=radii,
        conductivity=D[keep],
        source=int(remap[mesh.source]),
        sink=int(remap[mesh.sink]),
    )


def run_physarum(config: PhysarumConfig) -> VeinNetwork:
    mesh = build_mesh(config.node_count, config.rng_seed)
    state = simulate(mesh, config)
    return extract_network(mesh, state, config)
