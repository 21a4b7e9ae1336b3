"""Acceptance criteria for the package, one test per criterion.

Each test records a PASS or FAIL line that is printed in the terminal
summary of the pytest run.
"""

import math
import time

import numpy as np
import pytest

from netflow.cli import main
from netflow.examples import (
    RectExampleConfig,
    check_v_bounds,
    g1_values,
    heat_barrier_compare,
    monotonicity_residual,
    run_example,
)
from netflow.flow import EDGE_COLLAPSE, REACHED_TMAX, SolverConfig, advance, run
from netflow.graphparam import contraction_solve, ift_radius, solve_graph_rep, somma_residual
from netflow.io import read_json, write_json
from netflow.minimal import HEXAGON_LOOP, fermat_length, hexagon_web, standard_triod, to_network
from netflow.variations import GraphEnergy, assemble_Q, ls_check, spectrum

from _support import (
    SQRT3,
    brute_force_fermat,
    criterion,
    dissipation_violation,
    graph_rep_oracle_error,
    linear_map_residual,
    normal_bump,
    random_perturbation,
    sine_edge,
    smooth_directions,
    straight_edge,
)


@pytest.fixture(scope="module")
def triod_run():
    base = standard_triod(32)
    net = normal_bump(base, [0.01, 0.01, 0.01])
    start = time.perf_counter()
    log, reason = run(net, SolverConfig(dt=1e-3, t_max=5.0, log_stride=5))
    return base, log, reason, time.perf_counter() - start


@pytest.fixture(scope="module")
def critical_run():
    cfg = RectExampleConfig()
    start = time.perf_counter()
    res = run_example(cfg)
    return res, time.perf_counter() - start


@criterion(1, "Steiner length of the triangle and Fermat lengths")
def test_fermat_and_minimize(tmp_path, monkeypatch):
    start = time.perf_counter()
    monkeypatch.chdir(tmp_path)
    topo = {
        "version": 1,
        "vertices": [{"id": "O", "kind": "junction"}] + [{"id": f"P{i}", "kind": "endpoint"} for i in range(3)],
        "edges": [{"id": f"e{i}", "v0": "O", "v1": f"P{i}"} for i in range(3)],
    }
    write_json(tmp_path / "topo.json", topo)
    write_json(tmp_path / "ends.json", {"version": 1, "positions": {"P0": [-1, 0], "P1": [1, 0], "P2": [0, SQRT3]}})
    assert main(["minimize", "--topology", "topo.json", "--endpoints", "ends.json"]) == 0
    L = read_json(tmp_path / "minimal.summary.json")["length"]
    assert abs(L - 2 * SQRT3) < 1e-6
    rng = np.random.default_rng(20240611)
    worst = 0.0
    for _ in range(100):
        A, B, C = rng.uniform(-1, 1, (3, 2))
        worst = max(worst, abs(fermat_length(A, B, C) - brute_force_fermat(A, B, C)))
    assert worst < 1e-6
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    return f"|L-2√3|={abs(L - 2 * SQRT3):.1e}, grid gap {worst:.1e}, {elapsed:.1f}s"


@criterion(2, "length dissipation identity and its refinement")
def test_dissipation():
    start = time.perf_counter()
    viol = []
    for M, dt in ((64, 1e-4), (128, 5e-5)):
        log, reason = run(sine_edge(M), SolverConfig(dt=dt, t_max=0.05))
        assert reason.kind == REACHED_TMAX
        viol.append(dissipation_violation(log))
    assert viol[0] <= 5 * (1e-4 + 64**-2.0)
    ratio = viol[1] / viol[0]
    assert ratio <= 0.6
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    return f"violation {viol[0]:.2e} -> {viol[1]:.2e}, ratio {ratio:.3f}, {elapsed:.1f}s"


@criterion(3, "minimal triod is a fixed point and attracts a perturbation")
def test_stability(triod_run):
    base, log, reason, elapsed = triod_run
    motion = max(float(np.max(np.abs(a - b))) for a, b in zip(advance(base, 1e-3), base.all_samples()))
    assert motion < 1e-10
    assert reason.kind == REACHED_TMAX
    L, supk = log.column("L_total")[-1], log.column("sup_k")[-1]
    assert abs(L - 2 * SQRT3) <= 1e-4
    assert supk < 1e-3
    assert elapsed < 120.0
    return f"motion {motion:.1e}, |L-2√3|={abs(L - 2 * SQRT3):.1e}, sup k {supk:.1e}, {elapsed:.1f}s"


@criterion(4, "Łojasiewicz–Simon exponent and inequality on the triod run")
def test_lojasiewicz(triod_run):
    base, log, _, _ = triod_run
    rep = ls_check(log, base)
    assert 0.45 <= rep.theta <= 0.5
    assert np.all(rep.gap ** (1 - rep.theta) <= rep.C * rep.knorm)
    assert rep.H_monotone
    return f"θ={rep.theta:.5f}, C={rep.C:.4f}, {len(rep.gap)} tail samples"


@criterion(5, "second variation spectrum and Hessian")
def test_second_variation():
    lam = spectrum(assemble_Q(straight_edge((0, 0), (1, 0), 128)), 5)
    oracle = (np.arange(1, 6) * math.pi) ** 2
    spec_err = float(np.max(np.abs(lam - oracle) / oracle))
    assert spec_err <= 1e-2
    base = standard_triod(32)
    form = assemble_Q(base)
    E = GraphEnergy(base)
    E0 = E.value(np.zeros((3, 33)))
    eps = 1e-4
    worst = 0.0
    for X in smooth_directions(form, 20, np.random.default_rng(42)):
        fd = (E.value(eps * X) - 2 * E0 + E.value(-eps * X)) / eps**2
        worst = max(worst, abs(form.quadratic(X) - fd) / abs(fd))
    assert worst <= 1e-5
    lam_hex = spectrum(assemble_Q(to_network(hexagon_web(0.5), 64)), 1)[0]
    assert abs(lam_hex) <= 1e-3
    return f"spectrum rel {spec_err:.1e}, Hessian rel {worst:.1e}, hexagon λ_min {lam_hex:.1e}"


@criterion(6, "graph parametrization round trip and implicit function radius")
def test_graph_parametrization():
    rng = np.random.default_rng(6)
    worst_fit, worst_constraint = 0.0, 0.0
    for base in (standard_triod(32), to_network(hexagon_web(0.5), 32)):
        for _ in range(50):
            target = random_perturbation(base, 1e-2, rng)
            rep = solve_graph_rep(target, base)
            worst_fit = max(worst_fit, graph_rep_oracle_error(target, rep), rep.residual)
            worst_constraint = max(
                worst_constraint, max(somma_residual(rep.N, base.topology).values()), linear_map_residual(rep)
            )
    assert worst_fit <= 1e-8
    assert worst_constraint <= 1e-10
    assert ift_radius(1, 1, 1) == 0.5
    for _ in range(20):
        n = 3
        A = np.eye(n) + 0.3 * rng.standard_normal((n, n))
        B, C, D = rng.standard_normal((n, 2)), rng.standard_normal((n, n)), rng.standard_normal((n, 2))
        eps = 0.4 / (np.linalg.norm(np.linalg.inv(A), 2) * np.linalg.norm(C, 2))

        def F(x, y, A=A, B=B, C=C, D=D, eps=eps):
            return A @ y + B @ x + eps * np.sin(C @ y + D @ x)

        dFdy0 = A + eps * C
        S0 = np.linalg.norm(np.linalg.inv(dFdy0), 2)
        Nb = np.linalg.norm(B, 2) + eps * np.linalg.norm(D, 2)
        r = ift_radius(1.0, S0, Nb)
        u = rng.standard_normal(2)
        x = 0.9 * r * u / np.linalg.norm(u)
        res = contraction_solve(F, dFdy0, x)
        assert res.converged and res.max_norm <= 1.0
        assert np.max(np.abs(F(x, res.y))) < 1e-10
    return f"fit {worst_fit:.1e}, constraints {worst_constraint:.1e}"


@criterion(7, "trichotomy of the rectangle example")
def test_trichotomy(critical_run):
    start = time.perf_counter()
    small = run_example(RectExampleConfig(L0=0.05))
    assert small.reason.kind == EDGE_COLLAPSE and small.reason.edge == "e0"
    assert math.isfinite(small.reason.t)
    large = run_example(RectExampleConfig(L0=2.0))
    assert large.reason.kind == REACHED_TMAX
    central = np.array(large.monitors.central_length)
    assert central.min() >= 0.5
    knorm = np.sqrt(large.log.column("int_k2"))
    assert knorm[-1] <= 1e-6 * knorm[0]
    res, crit_time = critical_run
    mon = res.monitors
    assert res.reason.kind == REACHED_TMAX and res.reason.t == pytest.approx(10.0)
    crit = np.array(mon.central_length)
    assert np.all(np.diff(crit) <= 0)
    assert crit.min() > res.config.collapse_floor
    assert max(mon.g_max) <= mon.g_max[0] + 1e-6
    assert min(mon.v_min) >= 1.0 - 1e-12 and max(mon.v_max) <= 2 / SQRT3 + 1e-12
    assert check_v_bounds(mon)
    elapsed = time.perf_counter() - start + crit_time
    assert elapsed < 600.0
    return (
        f"collapse at t={small.reason.t:.3f}, large L0 min central {central.min():.3f} ‖k‖ {knorm[-1]:.1e}, "
        f"critical min central {crit.min():.1e}, {elapsed:.0f}s"
    )


@criterion(8, "heat barriers on the critical example")
def test_barriers(critical_run):
    res, _ = critical_run
    cfg = res.config
    rep = heat_barrier_compare(res.monitors.t, res.monitors.arc_frames, cfg.slope, cfg.a, dt=cfg.dt, M=cfg.M)
    assert rep.sandwich_holds
    errs = rep.rate_errors()
    assert max(errs.values()) <= 0.1
    gaps = max(rep.lower_gap.max(), rep.upper_gap.max())
    return f"max gap {gaps:.1e} (tol {rep.tolerance:.1e}), rate errors " + ", ".join(
        f"{k} {v:.1e}" for k, v in sorted(errs.items())
    )


@criterion(9, "area enclosed by the hexagonal loop")
def test_loop_area():
    base = to_network(hexagon_web(0.5), 32)
    rng = np.random.default_rng(1)
    net = normal_bump(base, 0.01 * rng.standard_normal(12))
    log, reason = run(net, SolverConfig(dt=1e-3, t_max=1.0, loops={"hex": tuple(HEXAGON_LOOP)}))
    assert reason.kind == REACHED_TMAX
    area = log.column("area_hex")
    drift = float(np.max(np.abs(area - area[0])) / abs(area[0]))
    assert drift <= 1e-4
    return f"relative drift {drift:.1e}"


def _example_frames(M, dt):
    res = run_example(RectExampleConfig(M=M, dt=dt, t_max=0.3), frame_stride=1)
    return [f.t for f in res.log.frames], [f.samples[1] for f in res.log.frames]


@criterion(10, "weighted monotonicity identity on the example")
def test_monotonicity():
    t0, p0 = 0.5, (0.0, 0.0)
    rel_one, rel_g1 = [], []
    for M, dt in ((64, 1e-3), (128, 5e-4)):
        times, curves = _example_frames(M, dt)
        tol = 10 * (dt + M**-2.0)
        one = monotonicity_residual(times, curves, 1.0, t0, p0)
        assert one.relative() <= tol
        g1 = monotonicity_residual(times, curves, [g1_values(c) for c in curves], t0, p0)
        window = g1.t >= 0.05
        rel = float(np.max(g1.residual[window]) / g1.scale)
        assert rel <= tol
        rel_one.append(one.relative())
        rel_g1.append(rel)
    assert rel_one[1] <= 0.6 * rel_one[0]
    assert rel_g1[1] <= 0.6 * rel_g1[0]
    return f"f≡1 {rel_one[0]:.1e} -> {rel_one[1]:.1e}, g₁ {rel_g1[0]:.1e} -> {rel_g1[1]:.1e}"
