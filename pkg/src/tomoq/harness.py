"""Batch command-line interface: protocol reports, parameter scans, Monte
Carlo simulation, reconstruction from counts files, bounds and distribution
queries.

Every run is driven by one JSON config document (schema below, unknown keys
rejected); outputs are deterministic for a fixed config and seed, and every
report embeds the library version plus the fully resolved config.  Exit codes:
0 success, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None

from . import __version__, fileio
from .analysis import IncompleteProtocolError, analyze, measurement_matrix, pseudo_inverse_reconstruct
from .precision import (
    bloch_scan,
    loss_L,
    loss_model,
    loss_moments,
    min_loss_bounds,
    polyhedron_mixed_floor,
    thickness_scan,
)
from .protocols import (
    Protocol,
    b9,
    b36,
    b144,
    named_protocol,
    polyhedron_protocol,
    unity_check,
)
from .reconstruction import ml_reconstruct
from .simulation import gof_test, quantile_band, run_trials
from .states import DensityMatrix, density_from_pure, named_state

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


class NumericalError(RuntimeError):
    pass


_PROTOCOL_SPEC = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"enum": ["J4", "R4", "J16", "R16", "kosut8"]},
        "polyhedron": {"type": "string"},
        "qubits": {"type": "integer", "minimum": 1},
        "plate_series": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "family": {"enum": ["B9", "B36"]},
                "delta_pi": {"type": "number"},
                "delta": {"type": "number"},
                "analyzer": {"type": "string"},
                "offset_deg": {"type": "number"},
            },
        },
        "b144": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "delta1_pi": {"type": "number"},
                "delta2_pi": {"type": "number"},
                "delta1": {"type": "number"},
                "delta2": {"type": "number"},
                "thickness1_mm": {"type": "number"},
                "thickness2_mm": {"type": "number"},
                "birefringence": {"type": "number"},
                "wavelength_nm": {"type": "number"},
            },
        },
        "file": {"type": "string"},
    },
}

_STATE_SPEC = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "qubits": {"type": "integer", "minimum": 1},
        "f": {"type": "number"},
        "c1": {"type": "number"},
        "c2": {"type": "number"},
        "phi": {"type": "number"},
        "p": {"type": "number"},
        "pure": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"re": {"type": "array"}, "im": {"type": "array"}},
            "required": ["re"],
        },
        "file": {"type": "string"},
    },
}

_SCHEMAS = {
    "info": {
        "type": "object",
        "additionalProperties": False,
        "required": ["command", "protocol"],
        "properties": {
            "command": {"const": "info"},
            "protocol": _PROTOCOL_SPEC,
            "out": {"type": "string"},
        },
    },
    "scan": {
        "type": "object",
        "additionalProperties": False,
        "required": ["command", "scan_type"],
        "properties": {
            "command": {"const": "scan"},
            "scan_type": {"enum": ["bloch", "delta_1d", "thickness_2d"]},
            "protocol": _PROTOCOL_SPEC,
            "grid": {"type": "integer", "minimum": 8},
            "refine": {"type": "boolean"},
            "delta_min_pi": {"type": "number"},
            "delta_max_pi": {"type": "number"},
            "points": {"type": "integer", "minimum": 2},
            "analyzer": {"type": "string"},
            "bloch_grid": {"type": "integer", "minimum": 8},
            "thickness1_mm": {"type": "array", "items": {"type": "number"},
                              "minItems": 3, "maxItems": 3},
            "thickness2_mm": {"type": "array", "items": {"type": "number"},
                              "minItems": 3, "maxItems": 3},
            "birefringence": {"type": "number"},
            "wavelength_nm": {"type": "number"},
            "out": {"type": "string"},
        },
    },
    "simulate": {
        "type": "object",
        "additionalProperties": False,
        "required": ["command", "protocol", "state", "n", "trials"],
        "properties": {
            "command": {"const": "simulate"},
            "protocol": _PROTOCOL_SPEC,
            "state": _STATE_SPEC,
            "n": {"type": "number", "exclusiveMinimum": 0},
            "trials": {"type": "integer", "minimum": 0},
            "rank": {"type": ["integer", "null"]},
            "bins": {"type": ["integer", "null"]},
            "seed": {"type": "integer", "minimum": 0},
            "out": {"type": "string"},
        },
    },
    "reconstruct": {
        "type": "object",
        "additionalProperties": False,
        "required": ["command", "protocol", "counts"],
        "properties": {
            "command": {"const": "reconstruct"},
            "protocol": _PROTOCOL_SPEC,
            "counts": {"type": "string"},
            "rank": {"type": ["integer", "null"]},
            "truth": _STATE_SPEC,
            "out": {"type": "string"},
        },
    },
    "bounds": {
        "type": "object",
        "additionalProperties": False,
        "required": ["command", "dim", "rank"],
        "properties": {
            "command": {"const": "bounds"},
            "dim": {"type": "integer", "minimum": 2},
            "rank": {"type": "integer", "minimum": 1},
            "qubits": {"type": "integer", "minimum": 1},
            "out": {"type": "string"},
        },
    },
    "distribution": {
        "type": "object",
        "additionalProperties": False,
        "required": ["command", "protocol", "state", "n"],
        "properties": {
            "command": {"const": "distribution"},
            "protocol": _PROTOCOL_SPEC,
            "state": _STATE_SPEC,
            "n": {"type": "number", "exclusiveMinimum": 0},
            "rank": {"type": ["integer", "null"]},
            "quantiles": {"type": "array", "items": {"type": "number"},
                          "minItems": 2, "maxItems": 2},
            "out": {"type": "string"},
        },
    },
}


def load_config(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return validate_config(doc)


def validate_config(doc: dict) -> dict:
    if not isinstance(doc, dict) or "command" not in doc:
        raise ConfigError("config must be a JSON object with a 'command' key")
    command = doc["command"]
    if command not in _SCHEMAS:
        raise ConfigError(f"unknown command {command!r}; expected one of {sorted(_SCHEMAS)}")
    if jsonschema is not None:
        try:
            jsonschema.validate(doc, _SCHEMAS[command])
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"config invalid: {exc.message}") from exc
    return doc


def resolve_protocol(spec: dict) -> Protocol:
    if spec is None:
        raise ConfigError("missing protocol spec")
    keys = [k for k in ("name", "polyhedron", "plate_series", "b144", "file") if k in spec]
    if len(keys) != 1:
        raise ConfigError(f"protocol spec needs exactly one of name/polyhedron/"
                          f"plate_series/b144/file, got {keys}")
    kind = keys[0]
    if kind == "name":
        return named_protocol(spec["name"])
    if kind == "polyhedron":
        return polyhedron_protocol(spec["polyhedron"], spec.get("qubits", 1))
    if kind == "plate_series":
        ps = spec["plate_series"]
        delta = ps.get("delta", None)
        if delta is None:
            if "delta_pi" not in ps:
                raise ConfigError("plate_series needs delta or delta_pi")
            delta = ps["delta_pi"] * math.pi
        builder = b9 if ps.get("family", "B9") == "B9" else b36
        return builder(delta, analyzer=ps.get("analyzer", "V"),
                       offset_deg=ps.get("offset_deg", 0.0))
    if kind == "b144":
        bb = spec["b144"]
        if "thickness1_mm" in bb:
            for key in ("thickness2_mm", "birefringence", "wavelength_nm"):
                if key not in bb:
                    raise ConfigError("physical b144 spec needs thickness1_mm, "
                                      "thickness2_mm, birefringence, wavelength_nm")
            factor = math.pi * 1e6 * bb["birefringence"] / bb["wavelength_nm"]
            return b144(factor * bb["thickness1_mm"], factor * bb["thickness2_mm"])
        d1 = bb.get("delta1", bb.get("delta1_pi", 0.0) * math.pi)
        d2 = bb.get("delta2", bb.get("delta2_pi", 0.0) * math.pi)
        return b144(d1, d2)
    doc = json.loads(Path(spec["file"]).read_text())
    return fileio.protocol_from_json(doc)


def resolve_state(spec: dict) -> DensityMatrix:
    if spec is None:
        raise ConfigError("missing state spec")
    keys = [k for k in ("name", "pure", "file") if k in spec]
    if len(keys) != 1:
        raise ConfigError(f"state spec needs exactly one of name/pure/file, got {keys}")
    kind = keys[0]
    if kind == "name":
        params = {k: spec[k] for k in ("f", "c1", "c2", "phi", "p") if k in spec}
        return named_state(spec["name"], spec.get("qubits", 1), **params)
    if kind == "pure":
        re = np.asarray(spec["pure"]["re"], dtype=float)
        im = np.asarray(spec["pure"].get("im", np.zeros_like(re)), dtype=float)
        return density_from_pure(re + 1j * im)
    doc = json.loads(Path(spec["file"]).read_text())
    return fileio.state_from_json(doc)


def _report_head(config: dict) -> dict:
    return {"version": __version__, "config": config}


def cmd_info(config: dict, out_dir: Path) -> dict:
    p = resolve_protocol(config["protocol"])
    a = analyze(measurement_matrix(p))
    uc = unity_check(p)
    report = _report_head(config)
    report.update(a.report())
    report["unity_decomposition"] = {"holds": uc.holds, "I0": uc.i0}
    fileio.write_report(out_dir / config.get("out", "info.json"), report)
    return report


def cmd_scan(config: dict, out_dir: Path) -> dict:
    stype = config["scan_type"]
    if stype == "bloch":
        p = resolve_protocol(config.get("protocol"))
        field = bloch_scan(p, grid=config.get("grid", 2000),
                           refine=config.get("refine", True))
    elif stype == "delta_1d":
        lo = config.get("delta_min_pi", 0.002)
        hi = config.get("delta_max_pi", 0.998)
        pts = config.get("points", 500)
        deltas = np.linspace(lo * math.pi, hi * math.pi, pts)
        field = thickness_scan("B9", deltas=deltas,
                               analyzer=config.get("analyzer", "V"),
                               bloch_grid=config.get("bloch_grid", 400),
                               refine=config.get("refine", True))
    else:
        def _grid(lohistep):
            lo, hi, step = lohistep
            return np.arange(lo, hi + 0.5 * step, step)

        field = thickness_scan(
            "B144",
            thickness1=_grid(config["thickness1_mm"]),
            thickness2=_grid(config["thickness2_mm"]),
            birefringence=config["birefringence"],
            wavelength=config["wavelength_nm"],
        )
    base = config.get("out", f"scan_{stype}")
    fileio.scan_to_csv(field, out_dir / f"{base}.csv")
    report = _report_head(config)
    report["summary"] = field.summary_json()
    fileio.write_report(out_dir / f"{base}.json", report)
    return report


def cmd_simulate(config: dict, out_dir: Path, seed=None, threads: int = 1) -> dict:
    p = resolve_protocol(config["protocol"])
    rho = resolve_state(config["state"])
    n = config["n"]
    seed = config.get("seed", 0) if seed is None else seed
    batch = run_trials(p, rho, n, config["trials"], seed,
                       rank=config.get("rank"), workers=threads)
    model = loss_model(p, rho, n, rank=config.get("rank"))
    report = _report_head(config)
    report["seed"] = seed
    report["mean_loss"] = float(batch.losses.mean()) if batch.trials else None
    report["theory_mean_loss"] = float(model.d.sum())
    report["L"] = loss_L(model)
    report["non_converged"] = batch.trials - batch.n_converged
    if batch.trials:
        try:
            gof = gof_test(batch, model, bins=config.get("bins"))
            report["gof"] = {"chi2": gof.statistic, "dof": gof.dof,
                             "p_value": gof.p_value, "bins": gof.bins}
        except ValueError as exc:
            report["gof"] = {"skipped": str(exc)}
    base = config.get("out", "simulate")
    fileio.batch_to_csv(batch, out_dir / f"{base}.csv")
    fileio.write_report(out_dir / f"{base}.json", report)
    return report


def cmd_reconstruct(config: dict, out_dir: Path) -> dict:
    p = resolve_protocol(config["protocol"])
    ts, counts = fileio.read_counts_csv(config["counts"])
    if ts.size != p.m:
        raise ConfigError(f"counts file has {ts.size} rows, protocol has {p.m}")
    p = p.with_exposures(ts)
    result = ml_reconstruct(p, counts, rank=config.get("rank"))
    report = _report_head(config)
    report["rho"] = fileio.state_to_json(result.estimate)
    report.update(result.report())
    if "truth" in config:
        from .states import fidelity

        truth = resolve_state(config["truth"])
        report["fidelity_vs_truth"] = fidelity(truth, result.estimate)
    fileio.write_report(out_dir / config.get("out", "reconstruct.json"), report)
    if not result.converged:
        raise NumericalError("maximum-likelihood iteration did not converge")
    return report


def cmd_bounds(config: dict, out_dir: Path) -> dict:
    nu, l_opt = min_loss_bounds(config["dim"], config["rank"])
    report = _report_head(config)
    report["nu"] = nu
    report["L_min_opt"] = l_opt
    qubits = config.get("qubits")
    if qubits is None and 2 ** int(round(math.log2(config["dim"]))) == config["dim"]:
        qubits = int(round(math.log2(config["dim"])))
    if qubits is not None:
        report["polyhedron_white_noise_floor"] = polyhedron_mixed_floor(qubits)
    fileio.write_report(out_dir / config.get("out", "bounds.json"), report)
    return report


def cmd_distribution(config: dict, out_dir: Path) -> dict:
    p = resolve_protocol(config["protocol"])
    rho = resolve_state(config["state"])
    model = loss_model(p, rho, config["n"], rank=config.get("rank"))
    mom = loss_moments(model)
    p_lo, p_hi = config.get("quantiles", [0.01, 0.99])
    band = quantile_band(model, p_lo, p_hi)
    report = _report_head(config)
    report["d"] = model.d.tolist()
    report["j_max"] = model.j_max
    report["L"] = loss_L(model)
    report["moments"] = {"mean": mom.mean, "variance": mom.variance,
                         "skewness": mom.skewness, "excess_kurtosis": mom.excess_kurtosis}
    report["band"] = {"p_lo": p_lo, "p_hi": p_hi, "F_lo": band.f_lo, "F_hi": band.f_hi,
                      "z_lo": band.z_lo, "z_hi": band.z_hi}
    fileio.write_report(out_dir / config.get("out", "distribution.json"), report)
    return report


_COMMANDS = {
    "info": lambda cfg, out, seed, threads: cmd_info(cfg, out),
    "scan": lambda cfg, out, seed, threads: cmd_scan(cfg, out),
    "simulate": cmd_simulate,
    "reconstruct": lambda cfg, out, seed, threads: cmd_reconstruct(cfg, out),
    "bounds": lambda cfg, out, seed, threads: cmd_bounds(cfg, out),
    "distribution": lambda cfg, out, seed, threads: cmd_distribution(cfg, out),
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tomoq",
        description="Batch analysis of quantum tomography protocols",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SCHEMAS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--seed", type=int, default=None, help="override config seed")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--threads", type=int, default=0,
                        help="worker processes for trials (0 = auto)")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        if config["command"] != args.command:
            raise ConfigError(
                f"config command {config['command']!r} does not match CLI {args.command!r}")
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        threads = args.threads if args.threads > 0 else 1
        if args.command == "simulate":
            report = cmd_simulate(config, out_dir, seed=args.seed, threads=threads)
        else:
            report = _COMMANDS[args.command](config, out_dir, args.seed, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, IncompleteProtocolError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    json.dump(report, sys.stdout, sort_keys=True, default=str)
    print()
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
