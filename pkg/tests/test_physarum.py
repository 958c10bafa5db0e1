import numpy as np
import pytest

from veinforge.physarum import (
    DisconnectedNetworkError,
    FlowState,
    MeshGraph,
    PhysarumConfig,
    build_mesh,
    extract_network,
    node_residuals,
    run_physarum,
    simulate,
    solve_flows,
    update_conductivity,
)


def dense_pressures(mesh, D, total_flux):
    """Reference Kirchhoff solve with a dense Laplacian and the sink grounded."""
    n = mesh.n_nodes
    lap = np.zeros((n, n))
    for (i, j), d, length in zip(mesh.edges, D, mesh.lengths):
        w = d / length
        lap[i, i] += w
        lap[j, j] += w
        lap[i, j] -= w
        lap[j, i] -= w
    rhs = np.zeros(n)
    rhs[mesh.source] = total_flux
    keep = np.arange(n) != mesh.sink
    p = np.zeros(n)
    p[keep] = np.linalg.solve(lap[np.ix_(keep, keep)], rhs[keep])
    return p


def test_mesh_is_deterministic_and_planar():
    a, b = build_mesh(40, 3), build_mesh(40, 3)
    np.testing.assert_array_equal(a.edges, b.edges)
    assert a.n_nodes == 42
    # Delaunay: at most 3n - 6 edges
    assert a.n_edges <= 3 * a.n_nodes - 6
    assert np.all(a.edges[:, 0] < a.edges[:, 1])
    np.testing.assert_allclose(a.nodes[a.source], (0.5, 1.0))
    np.testing.assert_allclose(a.nodes[a.sink], (0.5, 0.0))


def test_solve_flows_matches_dense_solver(rng):
    mesh = build_mesh(30, 11)
    D = rng.uniform(0.1, 2.0, mesh.n_edges)
    state = solve_flows(mesh, D, 2.5)
    np.testing.assert_allclose(state.pressures, dense_pressures(mesh, D, 2.5), rtol=1e-10, atol=1e-12)
    assert state.pressures[mesh.sink] == 0.0
    assert np.max(np.abs(node_residuals(mesh, state, 2.5))) <= 1e-9


def test_disconnected_sink_raises():
    mesh = build_mesh(20, 1)
    D = np.ones(mesh.n_edges)
    touching = (mesh.edges == mesh.sink).any(axis=1)
    D[touching] = 0.0
    with pytest.raises(DisconnectedNetworkError):
        solve_flows(mesh, D)


def test_euler_step_formula():
    mesh = build_mesh(15, 2)
    state = solve_flows(mesh, np.full(mesh.n_edges, 0.7))
    q = np.abs(state.flows)
    new = update_conductivity(state, 0.05, "saturating")
    np.testing.assert_allclose(new.conductivities, 0.7 + 0.05 * (q / (1 + q) - 0.7))
    lin = update_conductivity(state, 0.05, "linear")
    np.testing.assert_allclose(lin.conductivities, 0.7 + 0.05 * (q - 0.7))
    with pytest.raises(ValueError):
        update_conductivity(state, 0.0)


def test_conservation_holds_every_step():
    cfg = PhysarumConfig(node_count=40, iterations=60, rng_seed=5)
    mesh = build_mesh(cfg.node_count, cfg.rng_seed)
    worst = []
    simulate(mesh, cfg, callback=lambda k, s: worst.append(np.abs(node_residuals(mesh, s, cfg.total_flux)).max()))
    assert len(worst) == 61
    assert max(worst) <= 1e-9


def test_conductivities_stay_non_negative():
    cfg = PhysarumConfig(node_count=30, iterations=50, dt=0.5, rng_seed=9)
    state = simulate(build_mesh(30, 9), cfg)
    assert np.all(state.conductivities >= 0)


def test_extraction_radii_and_terminals():
    cfg = PhysarumConfig(node_count=60, iterations=200, dt=0.1, rng_seed=4)
    mesh = build_mesh(cfg.node_count, cfg.rng_seed)
    state = simulate(mesh, cfg)
    net = extract_network(mesh, state, cfg)
    dmax = state.conductivities.max()
    assert np.all(net.conductivity >= cfg.extraction_threshold * dmax)
    np.testing.assert_allclose(net.radii, cfg.radius_scale * (net.conductivity / dmax) ** 0.25)
    assert net.radii.max() == pytest.approx(cfg.radius_scale)
    np.testing.assert_allclose(net.nodes[net.source], (0.5, 1.0))
    np.testing.assert_allclose(net.nodes[net.sink], (0.5, 0.0))


def test_run_is_reproducible_and_seed_sensitive():
    a = run_physarum(PhysarumConfig(node_count=40, iterations=30, rng_seed=1))
    b = run_physarum(PhysarumConfig(node_count=40, iterations=30, rng_seed=1))
    c = run_physarum(PhysarumConfig(node_count=40, iterations=30, rng_seed=2))
    assert a.to_text() == b.to_text()
    assert a.to_text() != c.to_text()


def test_iteration_count_drawn_from_range():
    counts = {PhysarumConfig(rng_seed=s).resolved_iterations() for s in range(50)}
    assert min(counts) >= 350 and max(counts) <= 700
    assert len(counts) > 10


@pytest.mark.parametrize("bad", [dict(node_count=3), dict(dt=0), dict(flux_response="cubic"),
                                 dict(extraction_threshold=0), dict(total_flux=-1)])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        PhysarumConfig(**bad)


def test_network_text_round_trip():
    from veinforge.network import VeinNetwork

    net = run_physarum(PhysarumConfig(node_count=30, iterations=20, rng_seed=8))
    back = VeinNetwork.from_text(net.to_text())
    np.testing.assert_allclose(back.nodes, net.nodes, rtol=1e-8)
    np.testing.assert_array_equal(back.edges, net.edges)
    np.testing.assert_allclose(back.radii, net.radii, rtol=1e-8)


# --- small hand-checkable systems

def line_mesh(edges, lengths, n):
    nodes = np.zeros((n, 2))
    return MeshGraph(nodes, np.asarray(edges), np.asarray(lengths, float), source=0, sink=n - 1)


def test_single_edge_ohm():
    mesh = line_mesh([[0, 1]], [1.0], 2)
    state = solve_flows(mesh, [1.0], 1.0)
    assert state.pressures[0] == pytest.approx(1.0)
    assert state.flows[0] == pytest.approx(1.0)


def test_parallel_edges_split_evenly():
    mesh = line_mesh([[0, 1], [0, 1]], [1.0, 1.0], 2)
    state = solve_flows(mesh, [1.0, 1.0], 2.0)
    np.testing.assert_allclose(state.flows, [1.0, 1.0])


def test_four_point_mesh_lengths():
    mesh = build_mesh(4, 0)
    d = mesh.nodes[mesh.edges[:, 0]] - mesh.nodes[mesh.edges[:, 1]]
    np.testing.assert_allclose(mesh.lengths, np.hypot(d[:, 0], d[:, 1]))
    state = solve_flows(mesh, np.ones(mesh.n_edges))  # raises if disconnected
    assert np.isfinite(state.pressures).all()


def test_fixed_point_and_decay():
    held = FlowState(np.zeros(1), np.zeros(2), np.array([2.0]))
    for _ in range(2000):
        held = update_conductivity(held, 0.01, "linear")
    assert held.conductivities[0] == pytest.approx(2.0, rel=1e-6)

    idle = FlowState(np.ones(1), np.zeros(2), np.zeros(1))
    for k in range(1, 6):
        idle = update_conductivity(idle, 0.1, "linear")
        assert idle.conductivities[0] == pytest.approx(0.9**k, rel=1e-12)

    steady = FlowState(np.ones(1), np.zeros(2), np.ones(1))
    assert update_conductivity(steady, 0.1, "linear").conductivities[0] == 1.0


def test_converged_network_is_stationary():
    cfg = PhysarumConfig(node_count=50, iterations=3000, dt=0.1, flux_response="linear", rng_seed=0)
    state = simulate(build_mesh(50, 0), cfg)
    D = state.conductivities
    keep = D >= cfg.extraction_threshold * D.max()
    assert np.max(np.abs(D[keep] - np.abs(state.flows[keep]))) <= 1e-3 * D.max()


def test_network_contracts_over_time():
    short = run_physarum(PhysarumConfig(iterations=350, rng_seed=1))
    long = run_physarum(PhysarumConfig(iterations=700, rng_seed=1))
    assert long.n_edges <= short.n_edges
