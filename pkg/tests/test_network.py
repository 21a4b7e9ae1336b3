import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netflow.errors import ConcurrencyViolation, DegenerateSegment, FormatError, NotAClosedWalk, TopologyError
from netflow.io import network_from_dict, network_to_dict
from netflow.minimal import hexagon_web, single_edge_topology, to_network, triod_topology
from netflow.network import (
    ENDPOINT,
    JUNCTION,
    NetworkTopology,
    build_network,
    edge_geometry,
    geometry,
    junction_angle_residual,
    length,
    loop_area,
    rotate90,
    self_intersections,
)

from _support import SQRT3, straight_edge, triod_from_legs


def _arc(radius, theta0, theta1, M):
    th = np.linspace(theta0, theta1, M + 1)
    return radius * np.c_[np.cos(th), np.sin(th)]


class TestTopology:
    def test_standard_triod_into_origin(self):
        verts = [("O", JUNCTION)] + [(f"P{i}", ENDPOINT) for i in range(3)]
        topo = NetworkTopology(verts, [(f"e{i}", f"P{i}", "O") for i in range(3)])
        x = np.linspace(0, 1, 9)[:, None]
        legs = [np.array([1.0, 0.0]), np.array([-0.5, SQRT3 / 2]), np.array([-0.5, -SQRT3 / 2])]
        net = build_network(topo, [(1 - x) * d for d in legs])
        np.testing.assert_allclose(net.junction_position("O"), [0.0, 0.0])
        assert topo.junctions == ("O",)
        assert len(topo.incidence["O"]) == 3

    def test_two_edges_between_degree_two_vertices(self):
        with pytest.raises(TopologyError):
            NetworkTopology([("A", JUNCTION), ("B", JUNCTION)], [("e0", "A", "B"), ("e1", "A", "B")])

    @pytest.mark.parametrize(
        "verts, edges",
        [
            ([("A", ENDPOINT)], [("e0", "A", "A")]),
            ([("A", ENDPOINT), ("B", ENDPOINT)], [("e0", "A", "C")]),
            ([("A", ENDPOINT), ("A", ENDPOINT)], [("e0", "A", "A")]),
            ([("A", ENDPOINT), ("B", ENDPOINT), ("C", ENDPOINT), ("D", ENDPOINT)], [("e0", "A", "B"), ("e1", "C", "D")]),
            ([("A", "corner"), ("B", ENDPOINT)], [("e0", "A", "B")]),
        ],
    )
    def test_invalid_topologies(self, verts, edges):
        with pytest.raises(TopologyError):
            NetworkTopology(verts, edges)

    def test_concurrency_violation(self):
        x = np.linspace(0, 1, 9)[:, None]
        legs = [np.array([1.0, 0.0]), np.array([-0.5, SQRT3 / 2]), np.array([-0.5, -SQRT3 / 2])]
        curves = [x * d for d in legs]
        curves[1] = curves[1] + (1 - x) * np.array([1e-3, 0.0])
        with pytest.raises(ConcurrencyViolation):
            build_network(triod_topology(), curves)

    def test_repeated_sample_rejected(self):
        c = np.array([[0.0, 0.0], [0.5, 0.0], [0.5, 0.0], [1.0, 0.0], [1.5, 0.0]])
        with pytest.raises(DegenerateSegment):
            build_network(single_edge_topology(), [c])


class TestGeometry:
    def test_straight_segment(self):
        net = straight_edge((0, 0), (1, 1), 8)
        g = geometry(net)[0]
        r = 1 / math.sqrt(2)
        np.testing.assert_allclose(g.tau, np.tile([r, r], (9, 1)), atol=1e-14)
        np.testing.assert_allclose(g.nu, np.tile([-r, r], (9, 1)), atol=1e-14)
        np.testing.assert_allclose(g.ktilde, 0.0, atol=1e-12)

    def test_quarter_circle_curvature(self):
        g = edge_geometry(_arc(2.0, 0.0, math.pi / 2, 64))
        err = np.max(np.abs(np.abs(g.ktilde[1:-1]) - 0.5))
        assert err < 5.0 * 64**-2

    def test_circle_curvature_order(self):
        errs = []
        for M in (32, 64, 128):
            g = edge_geometry(_arc(1.5, 0.2, 2.0, M))
            errs.append(np.max(np.abs(g.ktilde - 1 / 1.5)))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(orders >= 1.9)

    def test_sine_graph_curvature(self):
        M = 128
        x = np.linspace(0, 1, M + 1)
        g = edge_geometry(np.c_[x, 0.1 * np.sin(np.pi * x)])
        # analytic curvature of a graph: y'' / (1 + y'^2)^{3/2}; at x = 1/2, y' = 0
        oracle = -0.1 * math.pi**2
        assert abs(g.ktilde[M // 2] - oracle) < 1e-3

    def test_lengths(self):
        assert length(straight_edge((0, 0), (3, 4), 5)) == pytest.approx(5.0, abs=1e-14)
        legs = [(1, 0), (-0.5, SQRT3 / 2), (-0.5, -SQRT3 / 2)]
        assert length(triod_from_legs(legs)) == pytest.approx(3.0, abs=1e-14)
        quarter = build_network(single_edge_topology(), [_arc(1.0, 0.0, math.pi / 2, 64)])
        assert abs(length(quarter) - math.pi / 2) < 1e-3

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(st.floats(-0.3, 0.3), min_size=3, max_size=3),
        st.floats(-math.pi, math.pi),
        st.floats(-5, 5),
        st.floats(-5, 5),
    )
    def test_frames_and_rigid_invariance(self, coeffs, angle, tx, ty):
        M = 40
        x = np.linspace(0, 1, M + 1)
        y = sum(c * np.sin((n + 1) * np.pi * x) for n, c in enumerate(coeffs))
        c = np.c_[x, y]
        g = edge_geometry(c)
        np.testing.assert_allclose(np.hypot(*g.tau.T), 1.0, atol=1e-12)
        np.testing.assert_allclose(np.hypot(*g.nu.T), 1.0, atol=1e-12)
        np.testing.assert_allclose(np.sum(g.tau * g.nu, axis=1), 0.0, atol=1e-12)
        np.testing.assert_array_equal(g.nu, rotate90(g.tau))
        R = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
        moved = c @ R.T + np.array([tx, ty])
        L0 = length(build_network(single_edge_topology(), [c]))
        L1 = length(build_network(single_edge_topology(), [moved]))
        assert abs(L0 - L1) < 1e-12


class TestAngles:
    def test_regular_triod(self):
        legs = [(1, 0), (-0.5, SQRT3 / 2), (-0.5, -SQRT3 / 2)]
        assert junction_angle_residual(triod_from_legs(legs))["O"] < 1e-12

    def test_one_degree_rotation(self):
        d = math.radians(1.0)
        legs = [(math.cos(d), math.sin(d)), (-0.5, SQRT3 / 2), (-0.5, -SQRT3 / 2)]
        oracle = math.hypot(math.cos(d) - 1, math.sin(d))
        assert abs(junction_angle_residual(triod_from_legs(legs))["O"] - oracle) < 1e-6

    def test_t_junction(self):
        assert junction_angle_residual(triod_from_legs([(1, 0), (0, 1), (-1, 0)]))["O"] == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(0, 2 * math.pi), min_size=3, max_size=3, unique=True), st.permutations([0, 1, 2]))
    def test_relabeling_invariance(self, angles, perm):
        legs = [(math.cos(a), math.sin(a)) for a in angles]
        base = junction_angle_residual(triod_from_legs(legs))["O"]
        relabeled = junction_angle_residual(triod_from_legs([legs[p] for p in perm]))["O"]
        assert abs(base - relabeled) < 1e-12


def _unit_square():
    corners = {"A": (0, 0), "B": (1, 0), "C": (1, 1), "D": (0, 1)}
    out = {"A": (-1, -1), "B": (2, -1), "C": (2, 2), "D": (-1, 2)}
    verts = [(k, JUNCTION) for k in corners] + [(f"P{k}", ENDPOINT) for k in corners]
    names = list(corners)
    edges = [(f"q{i}", names[i], names[(i + 1) % 4]) for i in range(4)]
    edges += [(f"s{k}", k, f"P{k}") for k in names]
    topo = NetworkTopology(verts, edges)
    x = np.linspace(0, 1, 9)[:, None]
    pos = {**corners, **{f"P{k}": v for k, v in out.items()}}
    curves = [(1 - x) * np.array(pos[e.v0], float) + x * np.array(pos[e.v1], float) for e in topo.edges]
    return build_network(topo, curves)


class TestLoopArea:
    def test_hexagon(self):
        net = to_network(hexagon_web(0.5, outer_radius=2.0), 8)
        cycle = [(f"h{k}", False) for k in range(6)]
        assert loop_area(net, cycle) == pytest.approx(3 * SQRT3 / 2, abs=1e-6)
        rev = [(f"h{k}", True) for k in reversed(range(6))]
        assert loop_area(net, rev) == pytest.approx(-3 * SQRT3 / 2, abs=1e-6)

    def test_unit_square(self):
        net = _unit_square()
        assert loop_area(net, [(f"q{i}", False) for i in range(4)]) == pytest.approx(1.0, abs=1e-14)

    def test_open_walk(self):
        with pytest.raises(NotAClosedWalk):
            loop_area(_unit_square(), [("q0", False), ("q1", False)])


class TestSelfIntersections:
    def test_straight_network_is_embedded(self):
        assert self_intersections(to_network(hexagon_web(0.4), 8)) == []

    def test_crossing_detected(self):
        t = np.linspace(0, 1, 41)
        loop = np.c_[np.sin(2 * np.pi * t) * 0.5 + t, np.sin(4 * np.pi * t) * 0.3]
        hits = self_intersections(build_network(single_edge_topology(), [loop]))
        assert hits


class TestNetworkFile:
    def test_round_trip(self, triod):
        data = network_to_dict(triod)
        back = network_from_dict(data)
        assert back.topology == triod.topology
        for a, b in zip(back.all_samples(), triod.all_samples()):
            np.testing.assert_array_equal(a, b)

    def test_junction_position_rejected(self, triod):
        data = network_to_dict(triod)
        for v in data["vertices"]:
            if v["kind"] == JUNCTION:
                v["position"] = [0.0, 0.0]
        with pytest.raises(FormatError):
            network_from_dict(data)

    def test_missing_version(self, triod):
        data = network_to_dict(triod)
        del data["version"]
        with pytest.raises(FormatError):
            network_from_dict(data)

    def test_endpoint_mismatch(self, triod):
        data = network_to_dict(triod)
        for v in data["vertices"]:
            if v["kind"] == ENDPOINT:
                v["position"][0] += 0.1
                break
        with pytest.raises(FormatError):
            network_from_dict(data)
