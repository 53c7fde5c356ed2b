"""Configuration-driven experiment runner.

Parses a JSON experiment config, validates it against the published schema,
executes the XOR / cat / sweep pipelines with seeded reproducibility, and
writes result artifacts.  The runner only composes library operations; all
physics lives in the library modules.

Exit codes: 0 success, 2 config error, 3 numerical failure.
"""

import argparse
import concurrent.futures
import contextlib
import csv
import datetime
import hashlib
import importlib.metadata
import json
import math
import os
import sys
import tempfile

import jsonschema
import numpy as np

from . import __version__
from .dynamics import EvolutionConfig, NetworkParams, chain_coupling
from .fock import NumericalHealthError
from .readout import NoiseModel
from .train import (
    CatTaskConfig,
    OptimizerSettings,
    XorTaskConfig,
    optimize_cat_mixing,
    sweep_nonlinearity,
    train_xor,
)
from .wigner import GridSpec, target_cat_wigner, wigner_of_state, wigner_to_csv
from .readout import condition_on_vacuum
from .train import unitary_from_generator, _evolved_network_state

SWEEP_CSV_HEADER = ["alpha", "error_mean", "error_std", "probability_mean"]
FIGURE_CSV_HEADER = ["alpha", "error_mean", "error_std"]


class ConfigError(ValueError):
    """Configuration failed to parse or validate."""


_NUMBER_OR_PAIR = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["task", "seed", "physics", "basis"],
    "properties": {
        "task": {"enum": ["xor", "cat", "sweep_xor", "sweep_cat"]},
        "seed": {"type": "integer"},
        "output_dir": {"type": "string"},
        "physics": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n_modes", "E", "alpha", "gamma", "tau"],
            "properties": {
                "n_modes": {"type": "integer", "minimum": 1},
                "E": {"type": "number"},
                "alpha": {"oneOf": [{"type": "number", "minimum": 0}, {"const": "inf"}]},
                "gamma": {"type": "number", "minimum": 0},
                "tau": {"type": "number", "exclusiveMinimum": 0},
                "coupling": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "type": {"enum": ["chain_random", "explicit"]},
                        "j_max": {"type": "number", "minimum": 0},
                        "seed": {"type": "integer"},
                        "matrix": {
                            "type": "array",
                            "items": {"type": "array", "items": {"type": "number"}},
                        },
                    },
                },
                "pump": {"type": "array", "items": _NUMBER_OR_PAIR},
            },
        },
        "basis": {
            "type": "object",
            "additionalProperties": False,
            "required": ["mode_dim"],
            "properties": {
                "mode_dim": {"type": "integer", "minimum": 1},
                "total_cap": {"type": ["integer", "null"], "minimum": 0},
            },
        },
        "evolution": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dt": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "method": {"enum": ["rk4", "adaptive"]},
            },
        },
        "xor": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "encoding": {
                    "enum": [
                        "pump_amplitude",
                        "occupation",
                        "mean_field_amplitude",
                        "mean_field_intensity",
                    ]
                },
                "input_modes": {"type": "array", "items": {"type": "integer"}},
                "output_modes": {"type": "array", "items": {"type": "integer"}},
                "noise": {
                    "type": ["object", "null"],
                    "additionalProperties": False,
                    "properties": {
                        "low": {"type": "number", "minimum": 0},
                        "high": {"type": "number", "minimum": 0},
                        "samples": {"type": "integer", "minimum": 1},
                        "seed": {"type": "integer"},
                    },
                },
            },
        },
        "cat": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "beta_list": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "k": {"enum": [0, 1]},
                "input_mode": {"type": "integer", "minimum": 0},
                "output_mode": {"type": "integer", "minimum": 0},
                "shared_weights": {"type": "boolean"},
                "grid": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "x_min": {"type": "number"},
                        "x_max": {"type": "number"},
                        "p_min": {"type": "number"},
                        "p_max": {"type": "number"},
                        "nx": {"type": "integer", "minimum": 2},
                        "np": {"type": "integer", "minimum": 2},
                    },
                },
                "optimizer": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "max_iter": {"type": "integer", "minimum": 1},
                        "simplex_scale": {"type": "number", "exclusiveMinimum": 0},
                        "xatol": {"type": "number", "exclusiveMinimum": 0},
                        "fatol": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["alpha_values"],
            "properties": {
                "alpha_values": {
                    "type": "array",
                    "items": {"oneOf": [{"type": "number", "minimum": 0}, {"const": "inf"}]},
                    "minItems": 1,
                },
                "seeds": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
                "draws_per_point": {"type": "integer", "minimum": 1},
            },
        },
    },
}


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        location = "/".join(str(p) for p in exc.absolute_path) or "<top level>"
        raise ConfigError(f"config field '{location}': {exc.message}")
    _cross_validate(raw)
    return raw


def _cross_validate(cfg: dict) -> None:
    task = cfg["task"]
    if task in ("xor", "sweep_xor") and "xor" not in cfg:
        raise ConfigError(f"task '{task}' requires an 'xor' block")
    if task in ("cat", "sweep_cat") and "cat" not in cfg:
        raise ConfigError(f"task '{task}' requires a 'cat' block")
    if task.startswith("sweep") and "sweep" not in cfg:
        raise ConfigError(f"task '{task}' requires a 'sweep' block")
    coupling = cfg["physics"].get("coupling", {})
    if coupling.get("type") == "explicit" and "matrix" not in coupling:
        raise ConfigError("explicit coupling requires 'matrix'")
    n = cfg["physics"]["n_modes"]
    pump = cfg["physics"].get("pump")
    if pump is not None and len(pump) != n:
        raise ConfigError(f"pump must list {n} amplitudes")


def _parse_alpha(value):
    return math.inf if value == "inf" else float(value)


def _parse_pump(pump, n_modes) -> np.ndarray:
    if pump is None:
        return np.zeros(n_modes, dtype=complex)
    out = np.zeros(n_modes, dtype=complex)
    for i, entry in enumerate(pump):
        out[i] = complex(entry[0], entry[1]) if isinstance(entry, list) else complex(entry)
    return out


def build_params(cfg: dict) -> NetworkParams:
    phys = cfg["physics"]
    n = phys["n_modes"]
    coupling = phys.get("coupling", {"type": "chain_random", "j_max": 1.0})
    if coupling.get("type", "chain_random") == "explicit":
        J = np.asarray(coupling["matrix"], dtype=float)
    else:
        J = chain_coupling(n, coupling.get("j_max", 1.0), coupling.get("seed", cfg["seed"]))
    return NetworkParams(
        n_modes=n,
        E=phys["E"],
        alpha=_parse_alpha(phys["alpha"]),
        gamma=phys["gamma"],
        J=J,
        P=_parse_pump(phys.get("pump"), n),
        tau=phys["tau"],
    )


def _evolution_config(cfg: dict) -> EvolutionConfig | None:
    evo = cfg.get("evolution")
    if evo is None:
        return None
    return EvolutionConfig(dt=evo.get("dt"), method=evo.get("method", "rk4"))


def build_xor_config(cfg: dict) -> XorTaskConfig:
    block = cfg.get("xor", {})
    noise_block = block.get("noise")
    noise = None
    if noise_block is not None:
        noise = NoiseModel(
            fraction_range=(noise_block.get("low", 0.0), noise_block.get("high", 0.8)),
            seed=noise_block.get("seed", cfg["seed"]),
            samples=noise_block.get("samples", 100),
        )
    return XorTaskConfig(
        encoding=block.get("encoding", "pump_amplitude"),
        params=build_params(cfg),
        mode_dim=cfg["basis"]["mode_dim"],
        total_cap=cfg["basis"].get("total_cap"),
        noise=noise,
        input_modes=tuple(block.get("input_modes", [0, 1])),
        output_modes=tuple(block.get("output_modes", [2, 3])),
        evolution=_evolution_config(cfg),
    )


def build_cat_config(cfg: dict) -> CatTaskConfig:
    block = cfg.get("cat", {})
    grid_block = block.get("grid", {})
    opt_block = block.get("optimizer", {})
    return CatTaskConfig(
        beta_list=list(block.get("beta_list", [1.0])),
        params=build_params(cfg),
        k=block.get("k", 0),
        mode_dim=cfg["basis"]["mode_dim"],
        total_cap=cfg["basis"].get("total_cap"),
        input_mode=block.get("input_mode", 0),
        output_mode=block.get("output_mode", 0),
        grid=GridSpec(**grid_block) if grid_block else GridSpec(),
        optimizer=OptimizerSettings(**opt_block) if opt_block else OptimizerSettings(),
        evolution=_evolution_config(cfg),
        shared_weights=block.get("shared_weights", False),
    )


def _atomic_write(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-artifact-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        with contextlib.suppress(FileNotFoundError):
            os.remove(tmp)


def _write_json(path, payload) -> None:
    _atomic_write(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _format_cell(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf"
        return repr(value)
    return str(value)


def _write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_format_cell(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _sweep_rows_to_csv(rows) -> list:
    return [
        [row["alpha"], row["error_mean"], row["error_std"], row["probability_mean"]]
        for row in rows
    ]


def _package_versions() -> dict:
    return {
        "kerrqnn": __version__,
        "numpy": importlib.metadata.version("numpy"),
        "scipy": importlib.metadata.version("scipy"),
        "python": sys.version.split()[0],
    }


def _config_hash(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _sweep_point_worker(args):
    task_cfg, alpha, seeds, draws = args
    return sweep_nonlinearity(task_cfg, [alpha], seeds, draws_per_point=draws)[0]


def _run_sweep(task_cfg, sweep_block, cfg, jobs: int) -> list:
    alphas = [_parse_alpha(a) for a in sweep_block["alpha_values"]]
    seeds = sweep_block.get("seeds", [cfg["seed"]])
    draws = sweep_block.get("draws_per_point", 10)
    if jobs <= 1 or len(alphas) <= 1:
        return sweep_nonlinearity(task_cfg, alphas, seeds, draws_per_point=draws)
    work = [(task_cfg, a, seeds, draws) for a in sorted(alphas)]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        rows = list(pool.map(_sweep_point_worker, work))
    return rows


def _write_cat_wigner_artifacts(task_cfg: CatTaskConfig, result, out_dir) -> None:
    beta = task_cfg.beta_list[0]
    target = target_cat_wigner(beta, task_cfg.k, task_cfg.grid)
    wigner_to_csv(target, os.path.join(out_dir, "wigner_target.csv"))
    theta = result.weights["theta_per_beta"][0]
    rho = _evolved_network_state(task_cfg, beta)
    conditioned = condition_on_vacuum(rho, unitary_from_generator(np.asarray(theta)), task_cfg.output_mode)
    obtained = wigner_of_state(conditioned.rho_out, task_cfg.grid)
    wigner_to_csv(obtained, os.path.join(out_dir, "wigner_output.csv"))


def run_config(path, jobs: int = 1, out_dir=None) -> dict:
    """Execute the experiment described by a config file; returns artifact paths."""
    cfg = load_config(path)
    out_dir = out_dir or cfg.get("output_dir") or "."
    os.makedirs(out_dir, exist_ok=True)
    task = cfg["task"]

    artifacts = {}
    if task == "xor":
        result = train_xor(build_xor_config(cfg)).to_dict()
        _write_json(os.path.join(out_dir, "result.json"), result)
        artifacts["result"] = os.path.join(out_dir, "result.json")
    elif task == "cat":
        task_cfg = build_cat_config(cfg)
        train_result = optimize_cat_mixing(task_cfg)
        _write_json(os.path.join(out_dir, "result.json"), train_result.to_dict())
        _write_cat_wigner_artifacts(task_cfg, train_result, out_dir)
        artifacts["result"] = os.path.join(out_dir, "result.json")
        artifacts["wigner_target"] = os.path.join(out_dir, "wigner_target.csv")
        artifacts["wigner_output"] = os.path.join(out_dir, "wigner_output.csv")
    else:
        task_cfg = build_xor_config(cfg) if task == "sweep_xor" else build_cat_config(cfg)
        rows = _run_sweep(task_cfg, cfg["sweep"], cfg, jobs)
        _write_json(os.path.join(out_dir, "result.json"), {"task": task, "rows": rows})
        _write_csv(os.path.join(out_dir, "sweep.csv"), SWEEP_CSV_HEADER, _sweep_rows_to_csv(rows))
        artifacts["result"] = os.path.join(out_dir, "result.json")
        artifacts["sweep"] = os.path.join(out_dir, "sweep.csv")

    manifest = {
        "config_sha256": _config_hash(cfg),
        "seed": cfg["seed"],
        "task": task,
        "versions": _package_versions(),
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config": cfg,
    }
    _write_json(os.path.join(out_dir, "manifest.json"), manifest)
    artifacts["manifest"] = os.path.join(out_dir, "manifest.json")
    return artifacts


def emit_figure_data(result_paths, figure: str):
    """Plot-ready rows (alpha, error_mean, error_std) from sweep result files.

    Means and spreads are recomputed from the stored per-draw errors so the
    emitted table is exactly consistent with the raw results.
    """
    expected = {"fig1c": "sweep_xor", "fig4": "sweep_cat"}
    if figure not in expected:
        raise ConfigError(f"unknown figure {figure!r}; choose one of {sorted(expected)}")
    rows = []
    for path in result_paths:
        try:
            with open(path) as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read result file {path}: {exc}")
        if payload.get("task") != expected[figure]:
            raise ConfigError(
                f"{path} holds task {payload.get('task')!r}, expected {expected[figure]!r}"
            )
        for row in payload["rows"]:
            draws = np.asarray(row["per_draw"], dtype=float)
            rows.append([float(row["alpha"]), float(draws.mean()), float(draws.std())])
    rows.sort(key=lambda r: r[0])
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qnn", description="Bosonic Kerr network experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment config")
    run_p.add_argument("config")
    run_p.add_argument("--jobs", type=int, default=1)
    run_p.add_argument("--out", default=None)

    val_p = sub.add_parser("validate", help="validate a config without running it")
    val_p.add_argument("config")

    fig_p = sub.add_parser("emit-figure", help="emit plot-ready CSV from sweep results")
    fig_p.add_argument("figure", choices=["fig1c", "fig4"])
    fig_p.add_argument("results", nargs="+")
    fig_p.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            load_config(args.config)
            print(f"ok: {args.config}")
        elif args.command == "run":
            artifacts = run_config(args.config, jobs=args.jobs, out_dir=args.out)
            for name, path in sorted(artifacts.items()):
                print(f"{name}: {path}")
        elif args.command == "emit-figure":
            rows = emit_figure_data(args.results, args.figure)
            if args.out:
                _write_csv(args.out, FIGURE_CSV_HEADER, rows)
                print(f"figure data: {args.out}")
            else:
                print(",".join(FIGURE_CSV_HEADER))
                for row in rows:
                    print(",".join(_format_cell(v) for v in row))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalHealthError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
