import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netflow.errors import PreconditionViolation
from netflow.flow import (
    CURVATURE_BLOWUP,
    EDGE_COLLAPSE,
    REACHED_TMAX,
    SolverConfig,
    advance,
    compatibility_residual,
    make_state,
    project_to_regular,
    resample,
    run,
    step,
)
from netflow.minimal import HEXAGON_LOOP, hexagon_web, single_edge_topology, to_network
from netflow.network import build_network, geometry, junction_angle_residual, length

from _support import dissipation_violation, normal_bump, random_perturbation, sine_edge, triod_from_legs


class TestFixedPoints:
    def test_minimal_triod_does_not_move(self, triod):
        new = advance(triod, 1e-3)
        assert max(float(np.max(np.abs(a - b))) for a, b in zip(new, triod.all_samples())) < 1e-10

    def test_minimal_hexagon_length_constant(self):
        net = to_network(hexagon_web(0.5), 16)
        log, reason = run(net, SolverConfig(dt=1e-2, t_max=1.0))
        assert reason.kind == REACHED_TMAX
        L = log.column("L_total")
        assert np.max(np.abs(L - 6.0)) < 1e-8


class TestSingleEdge:
    def test_length_decreases_and_dissipation(self):
        dt, M = 1e-4, 64
        log, reason = run(sine_edge(M), SolverConfig(dt=dt, t_max=0.05))
        assert reason.kind == REACHED_TMAX
        assert np.all(np.diff(log.column("L_total")) < 0)
        assert dissipation_violation(log) <= 5 * (dt + M**-2.0)

    def test_small_amplitude_decay_rate(self):
        # linearization y_t = y_xx with Dirichlet ends: first mode decays like exp(-π² t)
        M, dt, T = 128, 1e-4, 0.1
        net = sine_edge(M, amplitude=1e-4)
        log, _ = run(net, SolverConfig(dt=dt, t_max=T))
        y = log.meta["final_network"].curves[0].samples[M // 2, 1]
        assert y / 1e-4 == pytest.approx(math.exp(-math.pi**2 * T), rel=2e-3)

    def test_endpoints_pinned_bitwise(self):
        net = sine_edge(32, 0.2)
        state = make_state(net)
        cfg = SolverConfig(dt=1e-3)
        for _ in range(20):
            state = step(state, cfg)
        s, s0 = state.network.curves[0].samples, net.curves[0].samples
        assert s[0].tolist() == s0[0].tolist()
        assert s[-1].tolist() == s0[-1].tolist()

    def test_nonuniform_parametrization_detected(self):
        x = np.linspace(0, 1, 17) ** 2
        net = build_network(single_edge_topology(), [np.c_[x, np.zeros_like(x)]])
        assert compatibility_residual(net)["endpoints"]["P0"] > 0


class TestJunctions:
    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 10_000))
    def test_angle_condition_after_step(self, seed):
        from netflow.minimal import standard_triod

        rng = np.random.default_rng(seed)
        net = project_to_regular(random_perturbation(standard_triod(24), 0.005, rng))
        state = make_state(net)
        cfg = SolverConfig(dt=1e-3, newton_tol=1e-12)
        for _ in range(3):
            state = step(state, cfg)
            assert max(state.angle_residuals.values()) <= 1e-10

    def test_projection_identity_on_regular(self, triod):
        out = project_to_regular(triod)
        assert out.max_sample_distance(triod) <= 1e-12

    def test_projection_one_degree(self):
        d = math.radians(1.0)
        net = triod_from_legs([(math.cos(d), math.sin(d)), (-0.5, math.sqrt(3) / 2), (-0.5, -math.sqrt(3) / 2)], M=16)
        out = project_to_regular(net)
        assert max(junction_angle_residual(out).values()) <= 1e-10
        for a, b in zip(net.all_samples(), out.all_samples()):
            np.testing.assert_array_equal(a[3:], b[3:])
            np.testing.assert_array_equal(a[0], b[0])

    def test_projection_gate(self):
        with pytest.raises(PreconditionViolation):
            project_to_regular(triod_from_legs([(1, 0), (0, 1), (-1, 0)]))

    def test_compatibility_minimal_and_smoothing(self, triod):
        res = compatibility_residual(triod)
        assert max(res["endpoints"].values()) <= 1e-10
        assert max(res["junctions"].values()) <= 1e-10
        geo = geometry(triod)
        x = np.linspace(0, 1, triod.M + 1)[:, None]
        bumped = [s + a * x * (1 - x) * g.nu for s, a, g in zip(triod.all_samples(), (0.08, -0.04, 0.06), geo)]
        net = project_to_regular(build_network(triod.topology, bumped))
        before = compatibility_residual(net)
        state = make_state(net)
        cfg = SolverConfig(dt=1e-4)
        for _ in range(50):
            state = step(state, cfg)
        after = compatibility_residual(state)
        assert max(after["junctions"].values()) <= 0.1 * max(before["junctions"].values())
        assert max(after["endpoints"].values()) <= 0.1 * max(before["endpoints"].values())


class TestRuns:
    def test_hexagon_loop_area(self):
        base = to_network(hexagon_web(0.5), 32)
        rng = np.random.default_rng(1)
        net = normal_bump(base, 0.01 * rng.standard_normal(12))
        cfg = SolverConfig(dt=1e-3, t_max=1.0, loops={"hex": tuple(HEXAGON_LOOP)})
        log, reason = run(net, cfg)
        assert reason.kind == REACHED_TMAX
        area = log.column("area_hex")
        assert np.max(np.abs(area - area[0])) / abs(area[0]) <= 1e-4
        L = log.column("L_total")
        assert np.all(np.diff(L) <= 1e-13)

    def test_deterministic(self, triod):
        net = normal_bump(triod, [0.02, 0.01, -0.01])
        cfg = SolverConfig(dt=1e-3, t_max=0.05)
        a, _ = run(net, cfg)
        b, _ = run(net, cfg)
        assert a.to_csv_text() == b.to_csv_text()

    def test_log_columns(self):
        log, _ = run(sine_edge(16), SolverConfig(dt=1e-3, t_max=0.01, log_stride=3))
        assert log.columns == ["t", "L_total", "L_e0", "int_k2", "sup_k", "max_angle_residual"]
        assert np.all(np.diff(log.t) > 0)
        assert log.t[-1] == pytest.approx(0.01)

    def test_edge_collapse_reported(self):
        net = triod_from_legs([(1, 0), (-0.5, math.sqrt(3) / 2), (-0.5, -math.sqrt(3) / 2)], M=16, lengths=(1, 1, 1))
        cfg = SolverConfig(dt=1e-3, t_max=1.0, min_edge_length=0.5)
        log, reason = run(net, cfg)
        assert reason.kind == REACHED_TMAX
        cfg = SolverConfig(dt=1e-3, t_max=1.0, min_edge_length=1.5)
        log, reason = run(net, cfg)
        assert reason.kind == EDGE_COLLAPSE

    def test_curvature_threshold(self):
        log, reason = run(sine_edge(32, 0.2), SolverConfig(dt=1e-3, t_max=0.1, max_curvature_sup=0.5))
        assert reason.kind == CURVATURE_BLOWUP

    def test_resample_preserves_shape(self):
        net = sine_edge(32, 0.1)
        fine = resample(net, 128)
        assert fine.M == 128
        assert abs(length(fine) - length(sine_edge(128, 0.1))) < 1e-6
        np.testing.assert_array_equal(fine.curves[0].samples[0], [0, 0])


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(dt=0.0)
    with pytest.raises(ValueError):
        SolverConfig(log_stride=0)
