"""Command line entry point: ``corrdyn run | reproduce | validate``.

Exit codes: 0 success, 2 configuration error, 3 failed figure check,
4 steady state not reached.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .amplitudes import ExchangeStatistics
from .correlation import (
    MAX_STEP_PRODUCT,
    StepSizeError,
    averaged_generator,
    coherent_generator,
    find_steady_state,
    g4_snapshots,
)
from .ensemble import (
    NoiseModel,
    compare_to_master,
    ensemble_for_state,
    master_network,
)
from .figures import FIGURES, reproduce_figure
from .network import Network, NetworkValidationError, build_network, paper_example_network
from .output import write_json, write_snapshot
from .propagator import IntegratorConfig
from .states import InitialStateSpec, build_initial_g4

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHECK = 3
EXIT_NOT_CONVERGED = 4

RUN_KINDS = ("deterministic-g4", "averaged-g4", "ensemble", "steady-state")
TOP_KEYS = {"network", "initial_state", "run_kind", "noise", "integrator", "snapshot_times",
            "output_dir", "seed", "trajectories", "steady_state", "heatmaps"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    run_kind: str
    network: Network
    network_label: str = "paper-example"
    initial_state: InitialStateSpec | None = None
    figure: str | None = None
    noise: NoiseModel | None = None
    integrator: IntegratorConfig = IntegratorConfig(method="fixed-step-rk4")
    snapshot_times: tuple = ()
    output_dir: str | None = None
    seed: int | None = None
    trajectories: int = 1000
    steady_tol: float = 1e-9
    steady_t_max: float = 200.0
    heatmaps: bool = True


def _require_keys(obj, allowed, required, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}")
    for key in required:
        if key not in obj:
            raise ConfigError(f"missing required field {key!r} in {where}")


def _parse_network(raw) -> tuple[Network, str]:
    if raw == "paper-example":
        return paper_example_network(), "paper-example"
    _require_keys(raw, {"energies", "couplings", "dephasing_rates"},
                  {"energies", "couplings"}, "network")
    n = len(raw["energies"])
    rates = raw.get("dephasing_rates", [0.0] * n)
    try:
        return build_network(raw["energies"], raw["couplings"], rates), "inline"
    except (NetworkValidationError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid network: {exc}") from exc


def _parse_state(raw, where="initial_state") -> InitialStateSpec:
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ConfigError(f"missing required field 'kind' in {where}")
    kind = raw["kind"]
    try:
        if kind in ("separable", "entangled", "classically-correlated", "distinguishable"):
            _require_keys(raw, {"kind", "sites"}, {"sites"}, where)
            m, n = raw["sites"]
            return {
                "separable": InitialStateSpec.separable,
                "entangled": InitialStateSpec.entangled,
                "classically-correlated": InitialStateSpec.classically_correlated,
                "distinguishable": InitialStateSpec.distinguishable,
            }[kind](int(m), int(n))
        if kind == "custom-pure":
            _require_keys(raw, {"kind", "phi", "phi_imag", "statistics"}, {"phi"}, where)
            phi = np.array(raw["phi"], dtype=float)
            if "phi_imag" in raw:
                phi = phi + 1j * np.array(raw["phi_imag"], dtype=float)
            stats = ExchangeStatistics(raw.get("statistics", "boson"))
            return InitialStateSpec.custom_pure(phi, stats)
        if kind == "custom-mixture":
            _require_keys(raw, {"kind", "components"}, {"components"}, where)
            comps = []
            for k, item in enumerate(raw["components"]):
                _require_keys(item, {"weight", "state"}, {"weight", "state"}, f"{where}.components[{k}]")
                comps.append((float(item["weight"]), _parse_state(item["state"], f"{where}.components[{k}].state")))
            return InitialStateSpec.custom_mixture(comps)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where}: {exc}") from exc
    raise ConfigError(f"unknown initial state kind {kind!r} in {where}")


def parse_config(text: str) -> ExperimentConfig:
    """Strictly parse a JSON experiment description.

    Unknown keys are rejected by name; syntax errors report line and column.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    _require_keys(raw, TOP_KEYS, {"run_kind"}, "config")

    run_kind = raw["run_kind"]
    figure = None
    if isinstance(run_kind, str) and run_kind.startswith("figure:"):
        figure = run_kind.split(":", 1)[1]
        if figure not in FIGURES:
            raise ConfigError(f"unknown figure {figure!r}; expected one of {sorted(FIGURES)}")
        run_kind = "figure"
    elif run_kind not in RUN_KINDS:
        raise ConfigError(f"unknown run_kind {run_kind!r}")

    fields = {"run_kind": run_kind, "figure": figure}
    if "network" in raw:
        fields["network"], fields["network_label"] = _parse_network(raw["network"])
    elif run_kind == "figure":
        fields["network"] = paper_example_network()
    else:
        raise ConfigError("missing required field 'network' in config")

    if run_kind != "figure":
        if "initial_state" not in raw:
            raise ConfigError("missing required field 'initial_state' in config")
        spec = _parse_state(raw["initial_state"])
        try:
            build_initial_g4(spec, fields["network"].n_sites)
        except ValueError as exc:
            raise ConfigError(f"invalid initial_state: {exc}") from exc
        fields["initial_state"] = spec

    if "integrator" in raw:
        _require_keys(raw["integrator"], {"step_size", "method"}, set(), "integrator")
        try:
            fields["integrator"] = IntegratorConfig(
                step_size=float(raw["integrator"].get("step_size", 1e-3)),
                method=raw["integrator"].get("method", "fixed-step-rk4"))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid integrator: {exc}") from exc

    if "snapshot_times" in raw:
        times = raw["snapshot_times"]
        if not isinstance(times, list) or not all(isinstance(t, (int, float)) for t in times):
            raise ConfigError("snapshot_times must be a list of numbers")
        if any(t < 0 for t in times) or any(b < a for a, b in zip(times, times[1:])):
            raise ConfigError("snapshot_times must be non-negative and ascending")
        fields["snapshot_times"] = tuple(float(t) for t in times)
    elif run_kind in ("deterministic-g4", "averaged-g4", "ensemble"):
        raise ConfigError("missing required field 'snapshot_times' in config")

    if "seed" in raw:
        seed = raw["seed"]
        if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        fields["seed"] = seed
    elif run_kind == "ensemble":
        raise ConfigError("seed required for ensemble runs")

    if "noise" in raw:
        noise = raw["noise"]
        _require_keys(noise, {"mode", "sigma", "delta_t", "rates", "scheme"}, {"mode"}, "noise")
        try:
            fields["noise"] = NoiseModel(seed=fields.get("seed") or 0, **noise)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid noise: {exc}") from exc
    elif run_kind == "ensemble":
        raise ConfigError("missing required field 'noise' for ensemble runs")

    if "trajectories" in raw:
        m = raw["trajectories"]
        if not isinstance(m, int) or m < 2:
            raise ConfigError("trajectories must be an integer >= 2")
        fields["trajectories"] = m
    if "steady_state" in raw:
        _require_keys(raw["steady_state"], {"tol", "t_max"}, set(), "steady_state")
        fields["steady_tol"] = float(raw["steady_state"].get("tol", 1e-9))
        fields["steady_t_max"] = float(raw["steady_state"].get("t_max", 200.0))
        if fields["steady_tol"] <= 0 or fields["steady_t_max"] <= 0:
            raise ConfigError("steady_state tol and t_max must be positive")
    if "output_dir" in raw:
        fields["output_dir"] = str(raw["output_dir"])
    if "heatmaps" in raw:
        fields["heatmaps"] = bool(raw["heatmaps"])
    return ExperimentConfig(**fields)


def _summarize(tensors) -> dict:
    diags = [g.diagnostics() for g in tensors]
    return {
        "max_trace_drift": max((d["trace_drift"] for d in diags), default=0.0),
        "max_hermiticity_residual": max((d["hermiticity_residual"] for d in diags), default=0.0),
        "min_eigenvalue": min((d["min_eigenvalue"] for d in diags), default=0.0),
    }


def run_experiment(cfg: ExperimentConfig, out_dir: Path | str | None = None,
                   workers: int | None = None) -> int:
    """Execute ``cfg`` and write its outputs; returns the process exit code."""
    target = out_dir if out_dir is not None else cfg.output_dir
    if not target:
        raise ConfigError("no output directory: set output_dir or pass --out")
    out = Path(target)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {str(out)!r} is not writable: {exc}") from exc

    if cfg.run_kind == "figure":
        result = reproduce_figure(cfg.figure, out, heatmaps=cfg.heatmaps)
        for name in result.failed:
            print(f"check failed: {name}", file=sys.stderr)
        return EXIT_OK if result.passed else EXIT_CHECK

    net = cfg.network
    g0 = build_initial_g4(cfg.initial_state, net.n_sites).g4
    integ = replace(cfg.integrator, method="fixed-step-rk4")
    summary = {"run_kind": cfg.run_kind, "n_sites": net.n_sites, "network": cfg.network_label,
               "step_size": integ.step_size, "steady_state": None, "ensemble": None}
    code = EXIT_OK

    if cfg.run_kind in ("deterministic-g4", "averaged-g4"):
        gen = coherent_generator(net) if cfg.run_kind == "deterministic-g4" else averaged_generator(net)
        tensors = g4_snapshots(gen, g0, cfg.snapshot_times, integ)
    elif cfg.run_kind == "steady-state":
        res = find_steady_state(averaged_generator(net), g0, cfg.steady_tol, cfg.steady_t_max, integ)
        tensors = [g0, res.state]
        summary["steady_state"] = {"status": res.status, "time": res.time, "residual": res.residual,
                                   "tol": cfg.steady_tol, "t_max": cfg.steady_t_max}
        if not res.converged:
            code = EXIT_NOT_CONVERGED
    else:
        noise = cfg.noise
        master_gen = averaged_generator(master_network(net, noise))
        tensors, comparisons, max_se = [], [], 0.0
        # the trajectory step may be coarser than RK4 on the master equation tolerates
        master_step = min(integ.step_size, MAX_STEP_PRODUCT / max(2 * master_gen.norm_bound(), 1e-300))
        masters = g4_snapshots(master_gen, g0, cfg.snapshot_times,
                               replace(integ, step_size=master_step))
        for t, master in zip(cfg.snapshot_times, masters):
            ens = ensemble_for_state(net, noise, cfg.initial_state, t, cfg.trajectories,
                                     integ, workers)
            tensors.append(ens.mean_g4)
            max_se = max(max_se, float(ens.std_error.max()))
            report = compare_to_master(ens, master).as_dict()
            report["time"] = t
            comparisons.append(report)
        summary["ensemble"] = {"trajectories": cfg.trajectories, "mode": noise.mode,
                               "seed": noise.seed, "max_std_error": max_se,
                               "comparisons": comparisons}

    snapshots = []
    for k, g in enumerate(tensors):
        label = "steady" if cfg.run_kind == "steady-state" and k == 1 else None
        entry = g.diagnostics()
        entry["files"] = write_snapshot(out, g, heatmap=cfg.heatmaps, label=label)
        snapshots.append(entry)
    summary["snapshots"] = snapshots
    summary.update(_summarize(tensors))
    write_json(out / "summary.json", summary)
    return code


def _load(path: str) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return parse_config(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrdyn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment described by a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="output directory (overrides output_dir)")
    run.add_argument("--seed", type=int, help="override the config seed")

    rep = sub.add_parser("reproduce", help="reproduce one of the four example figures")
    rep.add_argument("figure", choices=sorted(FIGURES))
    rep.add_argument("--out", required=True)

    val = sub.add_parser("validate", help="parse and check a config without running it")
    val.add_argument("--config", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "reproduce":
            result = reproduce_figure(args.figure, Path(args.out))
            for name in result.failed:
                print(f"check failed: {name}", file=sys.stderr)
            print(f"{args.figure}: {len(result.checks) - len(result.failed)}/{len(result.checks)} checks passed")
            return EXIT_OK if result.passed else EXIT_CHECK
        cfg = _load(args.config)
        if args.command == "validate":
            print(f"config ok: run_kind={cfg.figure and 'figure:' + cfg.figure or cfg.run_kind}")
            return EXIT_OK
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("seed must be an unsigned 64-bit integer")
            cfg = replace(cfg, seed=args.seed,
                          noise=replace(cfg.noise, seed=args.seed) if cfg.noise else None)
        return run_experiment(cfg, args.out)
    except (ConfigError, StepSizeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
