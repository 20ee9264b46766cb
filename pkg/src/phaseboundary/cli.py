"""Command-line front end: config parsing and deterministic artifact emission.

Usage::

    phaseboundary <analyze|simulate|flow|validate> --config FILE [--seed N] [--out DIR] [--format csv|json]

Exit codes: 0 pass, 1 fail, 2 usage or config error, 3 degenerate parameters.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .analytic import balance_root, boundary_velocity, build_chain, prefix_profiles
from .errors import (
    DegenerateParameters,
    NotOnManifold,
    ParamsError,
    ParseError,
    PhaseBoundaryError,
    SchemaError,
)
from .faces import appropriate_faces, face_vector, final_face, is_ergodic_face, minimal_outgoing_face
from .flow import FlowStatus, check_on_manifold, integrate_flow
from .params import Spacing, SystemParams, ValidatedParams, genericity_check, validate_params
from .sim import SimOutput, scaled_distance_path, simulate
from .stats import compare_to_theory

log = logging.getLogger("phaseboundary")

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_DEGENERATE = 0, 1, 2, 3
COMMANDS = ("analyze", "simulate", "flow", "validate")

DEFAULT_SEED = 0
DEFAULT_STOP = {"collisions": 100_000}
DEFAULT_CHECKPOINTS = 10
FLUID_SCALES = (100, 1_000, 10_000)
FLUID_GRID = (0.25, 0.5, 1.0, 2.0)
FLUID_REPLICAS = 5
FLUID_TOL = 0.05

_TYPE_SCHEMA = {
    "type": "object",
    "properties": {
        "v": {"type": "number"},
        "rho": {"type": "number"},
        "spacing": {
            "type": "object",
            "properties": {
                "family": {"enum": ["exponential", "uniform", "gamma"]},
                "shape": {"type": ["number", "null"]},
            },
            "required": ["family"],
            "additionalProperties": False,
        },
    },
    "required": ["v", "rho"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "minus": {"type": "array", "items": _TYPE_SCHEMA, "minItems": 1},
        "plus": {"type": "array", "items": _TYPE_SCHEMA, "minItems": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "stop": {
            "oneOf": [
                {
                    "type": "object",
                    "properties": {"collisions": {"type": "integer", "minimum": 1}},
                    "required": ["collisions"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {"time": {"type": "number", "exclusiveMinimum": 0}},
                    "required": ["time"],
                    "additionalProperties": False,
                },
            ]
        },
        "checkpoints": {"type": "integer", "minimum": 0},
        "x0": {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 1}, "minItems": 1},
        "format": {"enum": ["csv", "json"]},
    },
    "required": ["minus", "plus"],
    "additionalProperties": False,
}


@dataclass(frozen=True)
class RunConfig:
    params: ValidatedParams
    seed: int = DEFAULT_SEED
    stop: tuple[str, float] = ("collisions", DEFAULT_STOP["collisions"])
    checkpoints: int = DEFAULT_CHECKPOINTS
    x0: tuple[tuple[float, ...], ...] | None = None
    format: str = "csv"
    out: Path = Path(".")

    def x0_array(self) -> np.ndarray | None:
        return None if self.x0 is None else np.asarray(self.x0, dtype=float)

    def to_dict(self) -> dict:
        p = self.params

        def side(vs, rhos, spacings):
            items = []
            for v, r, sp in zip(vs, rhos, spacings):
                spacing = {"family": sp.family}
                if sp.shape is not None:
                    spacing["shape"] = sp.shape
                items.append({"v": v, "rho": r, "spacing": spacing})
            return items

        d: dict[str, Any] = {
            "minus": side(p.minus_velocities, p.minus_densities, p.minus_spacing),
            "plus": side(p.plus_velocities, p.plus_densities, p.plus_spacing),
            "seed": self.seed,
            "stop": {self.stop[0]: self.stop[1]},
            "checkpoints": self.checkpoints,
            "format": self.format,
        }
        if self.x0 is not None:
            d["x0"] = [list(row) for row in self.x0]
        return d

    def to_json(self) -> str:
        """Canonical JSON text: sorted keys, defaults filled in."""
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"config is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(x) for x in exc.absolute_path) or "<root>"
        raise SchemaError(f"{where}: {exc.message}") from exc

    def unpack(items):
        vs = tuple(float(t["v"]) for t in items)
        rhos = tuple(float(t["rho"]) for t in items)
        sps = tuple(Spacing(**t.get("spacing", {"family": "exponential"})) for t in items)
        return vs, rhos, sps

    mv, mr, ms = unpack(raw["minus"])
    pv, pr, ps = unpack(raw["plus"])
    params = validate_params(SystemParams(mv, mr, pv, pr, ms, ps))

    (kind, value), = raw.get("stop", DEFAULT_STOP).items()
    stop = (kind, int(value) if kind == "collisions" else float(value))

    x0 = None
    if "x0" in raw:
        x0 = tuple(tuple(float(v) for v in row) for row in raw["x0"])
        if len({len(row) for row in x0}) != 1 or len(x0) != params.L or len(x0[0]) != params.K:
            raise SchemaError(f"x0 must be an L x K = {params.L} x {params.K} matrix")
        check_on_manifold(np.asarray(x0))

    return RunConfig(
        params=params,
        seed=int(raw.get("seed", DEFAULT_SEED)),
        stop=stop,
        checkpoints=int(raw.get("checkpoints", DEFAULT_CHECKPOINTS)),
        x0=x0,
        format=raw.get("format", "csv"),
    )


# ---------------------------------------------------------------- emitters


def _write_json(path: Path, payload: Any) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_table(path: Path, fmt: str, columns: list[str], rows: list[list]) -> Path:
    """Write rows as CSV (header = columns) or as JSON {column: [values]}."""
    path = path.with_suffix("." + fmt)
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            w.writerows(rows)
    else:
        _write_json(path, {c: [r[j] for r in rows] for j, c in enumerate(columns)})
    return path


def _pair_names(L: int, K: int, prefix: str) -> list[str]:
    return [f"{prefix}_{i + 1}_{k + 1}" for i in range(L) for k in range(K)]


def analysis_payload(p: SystemParams, faces: bool = False) -> dict:
    rep = boundary_velocity(p)
    chain = build_chain(p)
    profiles = prefix_profiles(p)
    payload = {
        "V": rep.V,
        "W": rep.W,
        "L1": rep.L1,
        "K1": rep.K1,
        "regime": rep.regime.value,
        "balance_root": balance_root(p),
        "chain": [
            {"minus": [i + 1 for i in g.minus], "plus": [k + 1 for k in g.plus], "V": v, "move": m}
            for g, v, m in zip(chain.groups, chain.velocities, chain.moves)
        ],
        "final_face": final_face(p).to_dict(p.L, p.K),
        "profiles": {"f": list(profiles.f), "g": list(profiles.g)},
        "genericity": genericity_check(p).to_dict(),
    }
    if faces:
        listing = []
        for f in appropriate_faces(p.L, p.K):
            entry = {**f.to_dict(p.L, p.K), "bitmask": f.bitmask(p.L, p.K), "ergodic": is_ergodic_face(p, f)}
            if entry["ergodic"]:
                entry["vector"] = face_vector(p, f).tolist()
            else:
                entry["outgoing"] = minimal_outgoing_face(p, f).to_dict(p.L, p.K)
            listing.append(entry)
        payload["faces"] = listing
    return payload


def write_sim_outputs(out: SimOutput, directory: Path, fmt: str) -> list[Path]:
    L, K = out.L, out.K
    written = [
        _write_table(
            directory / "boundary", fmt, ["t", "beta"],
            [[t, b] for t, b in zip(out.event_times.tolist(), out.event_positions.tolist())],
        ),
        _write_table(
            directory / "collisions", fmt, ["i", "k", "count"],
            [[i + 1, k + 1, int(out.counts[i, k])] for i in range(L) for k in range(K)],
        ),
        _write_table(
            directory / "distances", fmt, ["t"] + _pair_names(L, K, "d"),
            [[t] + d.ravel().tolist() for t, d in zip(out.sample_times.tolist(), out.distances)],
        ),
    ]
    return written


def write_trajectory(traj, p: SystemParams, directory: Path, fmt: str) -> Path:
    columns = ["t_start", "duration", "face"] + _pair_names(p.L, p.K, "v")
    rows = [
        [s.start_time, s.duration, s.face.bitmask(p.L, p.K)] + s.velocity.ravel().tolist()
        for s in traj.segments
    ]
    if fmt == "json":
        path = directory / "trajectory.json"
        _write_json(path, {
            "status": traj.status.value,
            "end_time": traj.end_time,
            "end_point": traj.end_point.tolist(),
            "chain_hit_times": traj.chain_hit_times,
            # JSON has no infinity: the open-ended last segment gets a null duration
            "segments": [
                {c: (None if c == "duration" and v == float("inf") else v) for c, v in zip(columns, r)}
                for r in rows
            ],
        })
        return path
    return _write_table(directory / "trajectory", fmt, columns, rows)


def fluid_check(p: SystemParams, x0: np.ndarray, seed: int, replicas: int = FLUID_REPLICAS) -> dict:
    """Mean sup-deviation of D(tM)/M from the flow over several replicas per scale."""
    traj = integrate_flow(p, x0)
    target = np.stack([traj.position(t) for t in FLUID_GRID])
    seeds = np.random.SeedSequence(seed).generate_state(replicas, dtype=np.uint64).tolist()
    deviations = []
    for M in FLUID_SCALES:
        devs = [
            float(np.max(np.abs(scaled_distance_path(p, x0, M, FLUID_GRID, s).values - target)))
            for s in seeds
        ]
        deviations.append(float(np.mean(devs)))
    tol = FLUID_TOL * max(1.0, float(np.max(x0)))
    decreasing = all(a > b for a, b in zip(deviations, deviations[1:]))
    return {
        "t_grid": list(FLUID_GRID),
        "scales": list(FLUID_SCALES),
        "replicas": replicas,
        "mean_sup_deviation": deviations,
        "tolerance": tol,
        "decreasing": decreasing,
        "pass": bool(decreasing and deviations[-1] <= tol),
    }


# ---------------------------------------------------------------- commands


def _run_simulation(cfg: RunConfig) -> SimOutput:
    kind, value = cfg.stop
    return simulate(cfg.params, cfg.seed, checkpoints=cfg.checkpoints, **{kind: value})


def cmd_analyze(cfg: RunConfig, faces: bool = False) -> int:
    payload = analysis_payload(cfg.params, faces)
    _write_json(cfg.out / "analysis.json", payload)
    if payload["genericity"]["violations"]:
        log.error("genericity condition fails: %d coincidences", len(payload["genericity"]["violations"]))
        return EXIT_DEGENERATE
    return EXIT_PASS


def cmd_simulate(cfg: RunConfig) -> int:
    out = _run_simulation(cfg)
    write_sim_outputs(out, cfg.out, cfg.format)
    report = compare_to_theory(cfg.params, out)
    _write_json(cfg.out / "report.json", report.to_dict())
    log.info("W_hat=%.6f +- %.6f (theory %.6f), pass=%s", report.W_hat, report.W_stderr, report.W_theory, report.passed)
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_flow(cfg: RunConfig) -> int:
    x0 = cfg.x0_array()
    if x0 is None:
        log.error("flow needs an initial state: add \"x0\" to the config")
        return EXIT_USAGE
    traj = integrate_flow(cfg.params, x0)
    write_trajectory(traj, cfg.params, cfg.out, cfg.format)
    return EXIT_FAIL if traj.status is FlowStatus.BUDGET_EXHAUSTED else EXIT_PASS


def cmd_validate(cfg: RunConfig) -> int:
    p = cfg.params
    analysis = analysis_payload(p)
    _write_json(cfg.out / "analysis.json", analysis)
    out = _run_simulation(cfg)
    write_sim_outputs(out, cfg.out, cfg.format)
    report = compare_to_theory(p, out)
    _write_json(cfg.out / "report.json", report.to_dict())
    x0 = cfg.x0_array()
    if x0 is None:
        x0 = np.ones((p.L, p.K))
    fluid = fluid_check(p, x0, cfg.seed)
    _write_json(cfg.out / "fluid.json", fluid)
    generic = not analysis["genericity"]["violations"]
    ok = report.passed and fluid["pass"] and generic
    _write_json(cfg.out / "validation.json", {
        "generic": generic,
        "simulation_pass": report.passed,
        "fluid_pass": fluid["pass"],
        "pass": ok,
    })
    return EXIT_PASS if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phaseboundary",
        description="Boundary velocity of two annihilating particle flows: theory, flow and simulation.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more diagnostics on stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("analyze", "closed-form boundary speed, chain and final face"),
        ("simulate", "event-driven simulation with a report against theory"),
        ("flow", "integrate the piecewise-linear flow from x0"),
        ("validate", "analysis, simulation and fluid-limit check together"),
    ):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", required=True, type=Path, help="JSON run configuration")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
        sp.add_argument("--format", choices=("csv", "json"), help="time-series format (overrides config)")
        if name == "analyze":
            sp.add_argument("--faces", action="store_true", help="also list every appropriate face")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = parse_config(args.config.read_text())
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise SchemaError("seed must be a 64-bit unsigned integer")
            cfg = replace(cfg, seed=args.seed)
        if args.format is not None:
            cfg = replace(cfg, format=args.format)
        cfg = replace(cfg, out=args.out)
        args.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        log.error("cannot read config or create output directory: %s", exc)
        return EXIT_USAGE
    except (ParseError, SchemaError, ParamsError, NotOnManifold) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_USAGE

    try:
        if args.command == "analyze":
            return cmd_analyze(cfg, args.faces)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "flow":
            return cmd_flow(cfg)
        return cmd_validate(cfg)
    except DegenerateParameters as exc:
        log.error("degenerate parameters: %s", exc)
        return EXIT_DEGENERATE
    except PhaseBoundaryError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
