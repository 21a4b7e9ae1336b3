"""Command-line entry point.

Every subcommand resolves its parameters in three layers: built-in defaults,
then the section of a ``--config`` JSON file named after the command, then
the flags given on the command line.  The resolved configuration is written
next to the outputs so a run can be repeated exactly.

Exit codes are 0 on success, 1 on a domain or file error and 2 on a usage
error.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import math
import os
import sys
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import NetflowError, NotAGraph
from .examples import RectExampleConfig, heat_barrier_compare, run_example
from .flow import SolverConfig, run
from .graphparam import solve_graph_rep, somma_residual
from .io import atomic_write_text, dumps, read_endpoints, read_json, read_network, read_topology, write_json, write_network
from .minimal import descend_length, to_network
from .network import Network, build_network, geometry
from .svg import emit_svg
from .trajectory import Frame, TrajectoryLog, fmt
from .variations import assemble_Q, ls_check, spectrum

logger = logging.getLogger(__name__)

CONFIG_VERSION = 1
THREADS_ENV = "NETFLOW_THREADS"


class UsageError(Exception):
    """Bad command-line input; reported with exit code 2."""


# ----------------------------------------------------------------------
# argument types
# ----------------------------------------------------------------------


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _nonneg_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (v >= 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text!r}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return v


def _theta(text: str) -> float | str:
    if text == "fit":
        return text
    v = _positive_float(text)
    if v > 0.5:
        raise argparse.ArgumentTypeError(f"theta must lie in (0, 1/2], got {text!r}")
    return v


# ----------------------------------------------------------------------
# command table
# ----------------------------------------------------------------------
# Each option is (flag, key, type, help).  ``type`` is also used to check
# values coming from a config file, so both sources obey the same rules.

COMMANDS: dict[str, dict[str, Any]] = {
    "minimize": {
        "help": "minimal network for a fixed topology and endpoints",
        "defaults": {"topology": None, "endpoints": None, "tol": 1e-10, "M": 16, "out": "minimal.json"},
        "required": ("topology", "endpoints"),
        "options": [
            ("--topology", "topology", str, "topology JSON file"),
            ("--endpoints", "endpoints", str, "endpoint positions JSON file"),
            ("--tol", "tol", _positive_float, "gradient norm tolerance"),
            ("--M", "M", _positive_int, "segments per edge in the written network"),
            ("--out", "out", str, "output network file"),
        ],
    },
    "evolve": {
        "help": "run the curvature flow from a network file",
        "defaults": {
            "network": None,
            "dt": 1e-3,
            "M": None,
            "tmax": 1.0,
            "log": "trajectory.csv",
            "svg_every": 0,
            "log_stride": 1,
            "min_edge_length": 1e-4,
            "max_curvature": 1e3,
            "perturb": 0.0,
            "loops": {},
        },
        "required": ("network",),
        "options": [
            ("--network", "network", str, "initial network file"),
            ("--dt", "dt", _positive_float, "time step"),
            ("--M", "M", _positive_int, "resample every edge to M segments"),
            ("--tmax", "tmax", _nonneg_float, "final time"),
            ("--log", "log", str, "trajectory CSV path"),
            ("--svg-every", "svg_every", _nonneg_int, "write an SVG frame every N steps (0: none)"),
            ("--log-stride", "log_stride", _positive_int, "log every N steps"),
            ("--min-edge-length", "min_edge_length", _positive_float, "edge collapse threshold"),
            ("--max-curvature", "max_curvature", _positive_float, "curvature blow-up threshold"),
            ("--perturb", "perturb", _nonneg_float, "amplitude of a random normal perturbation"),
        ],
    },
    "param": {
        "help": "write a network as a normal graph over a base network",
        "defaults": {"target": None, "base": None, "out": "param.json", "tol": 1e-13},
        "required": ("target", "base"),
        "options": [
            ("--target", "target", str, "network to represent"),
            ("--base", "base", str, "base (minimal) network"),
            ("--out", "out", str, "output JSON file"),
            ("--tol", "tol", _positive_float, "Newton tolerance"),
        ],
    },
    "spectrum": {
        "help": "lowest eigenvalues of the second variation at a base network",
        "defaults": {"base": None, "M": None, "count": 10, "out": None},
        "required": ("base",),
        "options": [
            ("--base", "base", str, "base (minimal) network"),
            ("--M", "M", _positive_int, "segments per edge (default: keep the file's grid)"),
            ("--count", "count", _positive_int, "number of eigenvalues"),
            ("--out", "out", str, "also write the table to this file"),
        ],
    },
    "ls-check": {
        "help": "fit the Lojasiewicz-Simon exponent along a logged run",
        "defaults": {"log": None, "base": None, "theta": "fit", "tail_fraction": 0.5, "out": None},
        "required": ("log", "base"),
        "options": [
            ("--log", "log", str, "trajectory CSV"),
            ("--base", "base", str, "limit (minimal) network"),
            ("--theta", "theta", _theta, "exponent in (0, 1/2] or 'fit'"),
            ("--tail-fraction", "tail_fraction", _positive_float, "fraction of samples analysed"),
            ("--out", "out", str, "write the report here instead of stdout"),
        ],
    },
    "example": {
        "help": "run a worked example",
        "defaults": {
            "name": "rect",
            "L0": None,
            "a": 1.0,
            "b": 1.0 / math.sqrt(3.0),
            "g": None,
            "dt": 1e-3,
            "M": 64,
            "tmax": 10.0,
            "log_stride": 10,
            "svg_every": 500,
            "symmetry": True,
            "out": "example_rect",
        },
        "required": (),
        "options": [
            ("--L0", "L0", _positive_float, "initial central edge length (default: critical)"),
            ("--a", "a", _positive_float, "half width of the rectangle"),
            ("--b", "b", _positive_float, "half height of the rectangle"),
            ("--g", "g", float, "Neumann slope used by the barriers"),
            ("--dt", "dt", _positive_float, "time step"),
            ("--M", "M", _positive_int, "segments per edge (even)"),
            ("--tmax", "tmax", _nonneg_float, "final time"),
            ("--log-stride", "log_stride", _positive_int, "log every N steps"),
            ("--svg-every", "svg_every", _nonneg_int, "write an SVG frame every N steps (0: first and last)"),
            ("--out", "out", str, "output directory"),
        ],
    },
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D401 - argparse hook
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="netflow", description="Curvature flow of planar triple-junction networks.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    for name, spec in COMMANDS.items():
        p = sub.add_parser(name, help=spec["help"], description=spec["help"])
        if name == "example":
            p.add_argument("name", choices=["rect"], help="example to run")
            p.add_argument("--no-symmetry", dest="symmetry", action="store_false", default=argparse.SUPPRESS,
                           help="do not project onto the symmetric configurations")
        p.add_argument("--config", default=None, help="JSON configuration file")
        p.add_argument("--seed", type=_nonneg_int, default=argparse.SUPPRESS, help="seed for random perturbations")
        for flag, key, typ, text in spec["options"]:
            p.add_argument(flag, dest=key, type=typ, default=argparse.SUPPRESS, help=text)
    return parser


def _flag_for(command: str, key: str) -> str:
    for flag, k, _, _ in COMMANDS[command]["options"]:
        if k == key:
            return flag
    return "--" + key.replace("_", "-")


def resolve_config(command: str, namespace: argparse.Namespace) -> dict:
    """Merge defaults, the config file section and explicit flags.

    Returns an ``ExperimentConfig`` dictionary with keys ``version``,
    ``command``, ``seed``, ``out`` and a nested section named after the
    command.
    """
    spec = COMMANDS[command]
    params = dict(spec["defaults"])
    seed = 0
    given = vars(namespace)
    if given.get("config"):
        data = read_json(given["config"])
        if not isinstance(data, Mapping):
            raise UsageError(f"--config: {given['config']} does not hold a JSON object")
        if "command" in data and data["command"] != command:
            raise UsageError(f"--config: file is for command {data['command']!r}, not {command!r}")
        section = data.get(command, {})
        if not isinstance(section, Mapping):
            raise UsageError(f"--config: section {command!r} must be an object")
        types = {k: typ for _, k, typ, _ in spec["options"]}
        for key, value in section.items():
            if key not in params:
                raise UsageError(f"--config: unknown key {command}.{key}")
            if key in types and value is not None and types[key] is not str:
                try:
                    value = types[key](str(value))
                except argparse.ArgumentTypeError as exc:
                    raise UsageError(f"--config: {command}.{key}: {exc}") from None
            params[key] = value
        if "seed" in data:
            seed = data["seed"]
            if not isinstance(seed, int) or seed < 0:
                raise UsageError("--config: seed must be a non-negative integer")
    for key in list(params):
        if key in given:
            params[key] = given[key]
    if "seed" in given:
        seed = given["seed"]
    for key in spec["required"]:
        if params.get(key) is None:
            raise UsageError(f"netflow {command}: error: the following arguments are required: {_flag_for(command, key)}")
    out = params.get("out") or params.get("log")
    return {"version": CONFIG_VERSION, "command": command, "seed": seed, "out": out, command: params}


def thread_limit() -> int | None:
    """Positive integer from ``NETFLOW_THREADS`` or ``None`` when unset."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


# ----------------------------------------------------------------------
# helpers
# ----------------------------------------------------------------------


def _config_path(output: str | Path) -> Path:
    p = Path(output)
    return p.with_name(p.stem + ".config.json")


def _finite_or_none(obj: Any) -> Any:
    """Replace non-finite floats by ``None`` so the JSON stays standard."""
    if isinstance(obj, Mapping):
        return {k: _finite_or_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_none(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and not math.isfinite(float(obj)):
        return None
    return obj


def random_normal_perturbation(network: Network, amplitude: float, seed: int, modes: int = 3) -> Network:
    """Move every edge along its normal by a random sum of sine modes.

    The displacement vanishes at both ends of each edge, so junctions and
    endpoints stay where they are.
    """
    rng = np.random.default_rng(seed)
    geo = geometry(network)
    curves = []
    for i, samples in enumerate(network.all_samples()):
        x = np.linspace(0.0, 1.0, samples.shape[0])
        coeffs = rng.standard_normal(modes) / np.arange(1, modes + 1)
        bump = sum(c * np.sin((n + 1) * np.pi * x) for n, c in enumerate(coeffs))
        curves.append(samples + amplitude * bump[:, None] * geo[i].nu)
    return build_network(network.topology, curves)


def _write_frames(directory: Path, base: Network, frames) -> int:
    for n, frame in enumerate(frames):
        emit_svg(base.with_samples(frame.samples), directory / f"frame_{n:05d}.svg")
    return len(frames)


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------


def cmd_minimize(cfg: dict) -> int:
    p = cfg["minimize"]
    topo = read_topology(p["topology"])
    endpoints, init = read_endpoints(p["endpoints"])
    sn = descend_length(topo, endpoints, init=init, tol=p["tol"])
    net = to_network(sn, p["M"])
    out = Path(p["out"])
    write_network(out, net)
    summary = {
        "version": 1,
        "length": sn.length(),
        "edge_lengths": {e.id: float(v) for e, v in zip(topo.edges, sn.edge_lengths())},
        "junctions": {m: [float(c) for c in sn.junction_positions[m]] for m in topo.junctions},
        "gradient_norms": sn.gradient_norms(),
    }
    write_json(out.with_name(out.stem + ".summary.json"), summary)
    write_json(_config_path(out), cfg)
    print(f"length {fmt(sn.length())}")
    return 0


def cmd_evolve(cfg: dict) -> int:
    p = cfg["evolve"]
    net = read_network(p["network"])
    if p["perturb"] > 0:
        net = random_normal_perturbation(net, p["perturb"], cfg["seed"])
    loops = {k: tuple((e, bool(r)) for e, r in v) for k, v in (p["loops"] or {}).items()}
    solver = SolverConfig(
        dt=p["dt"],
        M=p["M"],
        t_max=p["tmax"],
        log_stride=p["log_stride"],
        frame_stride=p["svg_every"],
        min_edge_length=p["min_edge_length"],
        max_curvature_sup=p["max_curvature"],
        loops=loops,
    )
    # the hash identifies the computation, so output locations are left out
    physics = {**{k: v for k, v in cfg.items() if k != "out"}, "evolve": {k: v for k, v in p.items() if k != "log"}}
    log, reason = run(net, solver, meta={"config": physics})
    out = Path(p["log"])
    log.write_csv(out)
    final = log.meta["final_network"]
    write_network(out.with_name(out.stem + ".final.json"), final)
    if p["svg_every"]:
        _write_frames(out.with_name(out.stem + "_frames"), final, log.frames)
    write_json(_config_path(out), cfg)
    print(f"stop {reason}")
    return 0


def cmd_param(cfg: dict) -> int:
    p = cfg["param"]
    target = read_network(p["target"])
    base = read_network(p["base"])
    rep = solve_graph_rep(target, base, tol=p["tol"])
    data = rep.to_dict()
    data["junction_residuals"] = somma_residual(rep.N, base.topology)
    out = Path(p["out"])
    write_json(out, data)
    write_json(_config_path(out), cfg)
    print(f"residual {fmt(rep.residual)}")
    return 0


def format_spectrum(values: Sequence[float]) -> str:
    lines = [f"{'n':>4}  {'eigenvalue':>24}"]
    lines += [f"{n:>4}  {fmt(v):>24}" for n, v in enumerate(values, start=1)]
    return "\n".join(lines) + "\n"


def cmd_spectrum(cfg: dict) -> int:
    p = cfg["spectrum"]
    base = read_network(p["base"])
    form = assemble_Q(base, M=p["M"])
    table = format_spectrum(spectrum(form, p["count"]))
    sys.stdout.write(table)
    if p["out"]:
        atomic_write_text(p["out"], table)
        write_json(_config_path(p["out"]), cfg)
    return 0


def cmd_ls_check(cfg: dict) -> int:
    p = cfg["ls-check"]
    log = TrajectoryLog.read_csv(p["log"])
    base = read_network(p["base"])
    report = ls_check(log, base, theta=p["theta"], tail_fraction=p["tail_fraction"])
    if p["out"]:
        write_json(p["out"], report.to_dict())
        write_json(_config_path(p["out"]), cfg)
    else:
        sys.stdout.write(dumps(report.to_dict()) + "\n")
    return 0


def cmd_example(cfg: dict) -> int:
    p = cfg["example"]
    ex = RectExampleConfig(
        a=p["a"],
        b=p["b"],
        L0=p["L0"],
        M=p["M"],
        dt=p["dt"],
        t_max=p["tmax"],
        log_stride=p["log_stride"],
        symmetry_enforced=bool(p["symmetry"]),
        g=p["g"],
    )
    result = run_example(ex, frame_stride=p["svg_every"])
    out = Path(p["out"])
    result.log.write_csv(out / "trajectory.csv")
    result.monitors.as_log().write_csv(out / "monitors.csv")
    summary: dict[str, Any] = {
        "version": 1,
        "outcome": result.outcome,
        "stop": str(result.reason),
        "example": ex.to_dict(),
        "central_length": {"initial": result.monitors.central_length[0], "final": result.monitors.central_length[-1]},
        "g_max_initial": result.monitors.g_max[0],
        "g_max_later": max(result.monitors.g_max[1:], default=result.monitors.g_max[0]),
    }
    try:
        report = heat_barrier_compare(result.monitors.t, result.monitors.arc_frames, ex.slope, ex.a, dt=ex.dt, M=ex.M)
    except NotAGraph as exc:
        summary["barriers"] = {"error": str(exc)}
    else:
        report.as_log().write_csv(out / "barrier.csv")
        summary["barriers"] = {
            "sandwich_holds": report.sandwich_holds,
            "tolerance": report.tolerance,
            "rates": report.rates,
            "expected": report.expected,
        }
    final = result.log.meta["final_network"]
    frames = result.log.frames
    if not frames:
        frames = [Frame(float(result.log.t[-1]), final.all_samples())]
    summary["svg_frames"] = _write_frames(out / "frames", final, frames)
    write_json(out / "summary.json", _finite_or_none(summary))
    write_json(out / "config.json", cfg)
    print(f"{result.outcome}: {result.reason}")
    return 0


HANDLERS: dict[str, Callable[[dict], int]] = {
    "minimize": cmd_minimize,
    "evolve": cmd_evolve,
    "param": cmd_param,
    "spectrum": cmd_spectrum,
    "ls-check": cmd_ls_check,
    "example": cmd_example,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        logging.basicConfig(level=logging.WARNING - 10 * min(ns.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
        command = ns.command
        cfg = resolve_config(command, ns)
        threads = thread_limit()
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (NetflowError, FileNotFoundError) as exc:
        print(f"netflow: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    limiter = threadpool_limits(threads) if threads else contextlib.nullcontext()
    try:
        with limiter:
            return HANDLERS[command](cfg)
    except (NetflowError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"netflow: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
