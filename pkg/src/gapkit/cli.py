"""The gapkit command line: analyze, close, robustness, quantize, simulate,
diagnose-noise.

Exit codes: 0 success, 2 invalid arguments or config, 3 data errors (bad
files, dimension mismatches). All failures print one line to stderr with
the prefix "gapkit: error:". Outputs are written atomically.
"""

from __future__ import annotations

import os
import sys

import click
import numpy as np

from . import fileio
from .closing import apply_plan, exact_orthogonal_direction, make_closing_plan
from .contrastive import contrastive_loss, soft_assignments, stochasticity_stats
from .core import PairedEmbeddings
from .errors import BadConfig, ConfigError, DataError, GapkitError
from .gap import global_gap, noise_correlation_score, orthogonality_report
from .robustness import NoiseModel, robustness_curve
from .simulate import (
    DimCollapse,
    Explicit,
    GaussianClusters,
    InfoImbalance,
    SimulationConfig,
    run_simulation,
)

NOISE_CHOICES = ("gaussian", "uniform", "laplace", "rademacher", "rank1")


def _load_matrix(path: str) -> np.ndarray:
    if path.endswith(".csv"):
        return fileio.read_csv_embeddings(path)
    return fileio.read_embeddings(path)


def _parse_grid(spec: str) -> list[float]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"lambda grid must be start:stop:step, got {spec!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"lambda grid must be numeric, got {spec!r}") from exc
    if step <= 0:
        if start == stop:
            return [start]
        raise ConfigError(f"lambda grid step must be > 0, got {step}")
    if stop < start:
        raise ConfigError(f"lambda grid stop {stop} below start {start}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [start + step * k for k in range(count)]


@click.group()
def cli():
    """Analyze, close, and stress-test the modality gap in embedding files."""


@cli.command()
@click.option("--x", "x_path", required=True, type=str, help="First modality (EMB1 or .csv).")
@click.option("--y", "y_path", required=True, type=str, help="Second modality (EMB1 or .csv).")
@click.option("--tau", type=float, default=None, help="Also report contrastive loss and assignment stats (bijective pairs only).")
@click.option("--out", "out_path", required=True, type=str, help="Output JSON path.")
def analyze(x_path, y_path, tau, out_path):
    """Gap, per-row orthogonality, and optional soft-assignment diagnostics."""
    pairs = PairedEmbeddings(_load_matrix(x_path), _load_matrix(y_path))
    report = orthogonality_report(pairs)
    abs_x = np.abs(report.cos_x)
    abs_y = np.abs(report.cos_y)
    doc = {
        "n_x": int(pairs.x.shape[0]),
        "n_y": int(pairs.y.shape[0]),
        "d": int(pairs.d),
        "gap_norm": report.gap_norm,
        "cross_mean_dist": report.cross_mean_dist,
        "global_gap": [float(v) for v in report.global_gap],
        "cos_summary": {
            "mean_abs_cos": report.mean_abs_cos,
            "mean_abs_cos_x": float(abs_x.mean()),
            "mean_abs_cos_y": float(abs_y.mean()),
            "max_abs_cos_x": float(abs_x.max()),
            "max_abs_cos_y": float(abs_y.max()),
            "mean_within_x": float(report.within_x.mean()),
            "mean_within_y": float(report.within_y.mean()),
        },
        "rows": {
            "cos_x": [float(v) for v in report.cos_x],
            "cos_y": [float(v) for v in report.cos_y],
            "within_x": [float(v) for v in report.within_x],
            "within_y": [float(v) for v in report.within_y],
            "local_gap_norms": (
                [float(v) for v in report.local_gap_norms]
                if report.local_gap_norms is not None
                else None
            ),
        },
    }
    if tau is not None:
        stats = stochasticity_stats(soft_assignments(pairs.require_bijective(), tau))
        doc["contrastive"] = {
            "tau": float(tau),
            "loss": contrastive_loss(pairs, tau),
            "mean_sx": stats.mean_sx,
            "mean_sy": stats.mean_sy,
            "var_sx": stats.var_sx,
            "var_sy": stats.var_sy,
        }
    fileio.write_json_report(doc, out_path)


@cli.command()
@click.option("--x", "x_path", required=True, type=str)
@click.option("--y", "y_path", required=True, type=str)
@click.option("--move", "moved", required=True, type=click.Choice(["x", "y"]), help="Which modality to translate (the retrieved one).")
@click.option("--epsilon", required=True, type=float, help="Variance-fraction threshold; 0 projects the gap out of every component.")
@click.option("--lambda", "lam", required=True, type=float, help="Closing fraction; 1 matches the means along the projected gap.")
@click.option("--out", "out_path", required=True, type=str, help="Output EMB1 path for the translated modality.")
def close(x_path, y_path, moved, epsilon, lam, out_path):
    """Translate one modality along the orthogonally-projected gap."""
    pairs = PairedEmbeddings(_load_matrix(x_path), _load_matrix(y_path))
    plan = make_closing_plan(pairs, moved=moved, epsilon=epsilon, lam=lam)
    closed = apply_plan(pairs, plan)
    fileio.write_embeddings(closed.x if moved == "x" else closed.y, out_path, "f64")


@cli.command()
@click.option("--x", "x_path", required=True, type=str, help="Retrieved modality; noise is added here and this side is moved.")
@click.option("--y", "y_path", required=True, type=str, help="Query modality; stays clean.")
@click.option("--noise", required=True, type=click.Choice(NOISE_CHOICES))
@click.option("--sigma", required=True, type=float)
@click.option("--k", "k_samples", required=True, type=int, help="Monte-Carlo noise samples per lambda.")
@click.option("--lambda-grid", "grid_spec", required=True, type=str, help="start:stop:step, stop inclusive.")
@click.option("--seed", required=True, type=int)
@click.option("--labels", "labels_path", type=str, default=None, help="LBL1 labels for the query rows; adds accuracy columns.")
@click.option("--out", "out_path", required=True, type=str, help="Output CSV path.")
def robustness(x_path, y_path, noise, sigma, k_samples, grid_spec, seed, labels_path, out_path):
    """Robustness (and optionally accuracy) across a closing-fraction sweep."""
    pairs = PairedEmbeddings(_load_matrix(x_path), _load_matrix(y_path))
    kind = "rank1_shift" if noise == "rank1" else noise
    model = NoiseModel(kind=kind, sigma=sigma)
    direction = exact_orthogonal_direction(global_gap(pairs), pairs.x)
    labels = fileio.read_labels(labels_path) if labels_path else None
    curve = robustness_curve(
        pairs,
        direction,
        _parse_grid(grid_spec),
        model,
        k_samples=k_samples,
        seed=seed,
        labels=labels,
    )
    fileio.write_text_atomic(out_path, fileio.curve_csv(curve))


@cli.command()
@click.option("--x", "x_path", required=True, type=str)
@click.option("--y", "y_path", required=True, type=str)
@click.option("--levels", required=True, type=int)
@click.option("--lo", type=float, default=-3.0, show_default=True)
@click.option("--hi", type=float, default=3.0, show_default=True)
@click.option("--lambda-grid", "grid_spec", required=True, type=str)
@click.option("--out", "out_path", required=True, type=str)
def quantize(x_path, y_path, levels, lo, hi, grid_spec, out_path):
    """Robustness to uniform scalar quantization across a closing sweep."""
    pairs = PairedEmbeddings(_load_matrix(x_path), _load_matrix(y_path))
    model = NoiseModel.quantize(levels, lo, hi)
    direction = exact_orthogonal_direction(global_gap(pairs), pairs.x)
    curve = robustness_curve(pairs, direction, _parse_grid(grid_spec), model)
    fileio.write_text_atomic(out_path, fileio.curve_csv(curve))


_SCENARIO_KEYS = {
    "gaussian_clusters": {"mu_x", "mu_y", "sigma"},
    "dim_collapse": {"axis", "spread"},
    "info_imbalance": set(),
    "explicit": {"x_path", "y_path"},
}

_CONFIG_KEYS = {
    "scenario",
    "n_per_modality",
    "d",
    "tau",
    "lr",
    "iterations",
    "sphere_constrained",
    "log_every",
    "seed",
}


def _build_sim_config(cfg: dict) -> SimulationConfig:
    base_dir = cfg.pop("__dir__")
    unknown = set(cfg) - _CONFIG_KEYS
    if unknown:
        raise BadConfig(f"unknown config keys: {sorted(unknown)}")
    missing = _CONFIG_KEYS - set(cfg)
    if missing:
        raise BadConfig(f"missing config keys: {sorted(missing)}")
    sc = cfg["scenario"]
    if not isinstance(sc, dict) or "kind" not in sc:
        raise BadConfig("scenario must be an object with a 'kind' key")
    kind = sc["kind"]
    if kind not in _SCENARIO_KEYS:
        raise BadConfig(f"unknown scenario kind {kind!r}")
    extras = set(sc) - _SCENARIO_KEYS[kind] - {"kind"}
    if extras:
        raise BadConfig(f"unknown scenario keys for {kind}: {sorted(extras)}")
    missing_sc = _SCENARIO_KEYS[kind] - set(sc)
    if missing_sc:
        raise BadConfig(f"missing scenario keys for {kind}: {sorted(missing_sc)}")
    if kind == "gaussian_clusters":
        init = GaussianClusters(tuple(sc["mu_x"]), tuple(sc["mu_y"]), float(sc["sigma"]))
    elif kind == "dim_collapse":
        init = DimCollapse(int(sc["axis"]), float(sc["spread"]))
    elif kind == "info_imbalance":
        init = InfoImbalance()
    else:
        x0 = _load_matrix(os.path.join(base_dir, sc["x_path"]))
        y0 = _load_matrix(os.path.join(base_dir, sc["y_path"]))
        init = Explicit(x0, y0)
    try:
        return SimulationConfig(
            n_per_modality=int(cfg["n_per_modality"]),
            d=int(cfg["d"]),
            init=init,
            tau=float(cfg["tau"]),
            lr=float(cfg["lr"]),
            iterations=int(cfg["iterations"]),
            sphere_constrained=bool(cfg["sphere_constrained"]),
            log_every=int(cfg["log_every"]),
            seed=int(cfg["seed"]),
        )
    except (TypeError, ValueError) as exc:
        raise BadConfig(f"bad config value: {exc}") from exc


@cli.command()
@click.option("--config", "config_path", required=True, type=str, help="JSON experiment config.")
@click.option("--out", "out_path", required=True, type=str, help="Output trajectory CSV.")
def simulate(config_path, out_path):
    """Run the gradient-descent dynamics described by a config file."""
    cfg = _build_sim_config(fileio.load_experiment_config(config_path))
    records = run_simulation(cfg)
    fileio.write_text_atomic(out_path, fileio.trajectory_csv(records))


@cli.command("diagnose-noise")
@click.option("--clean", "clean_path", required=True, type=str)
@click.option("--noisy", "noisy_paths", required=True, type=str, multiple=True)
@click.option("--out", "out_path", required=True, type=str)
def diagnose_noise(clean_path, noisy_paths, out_path):
    """Score how dimension-correlated each noisy copy's perturbation is."""
    clean = _load_matrix(clean_path)
    results = []
    for p in noisy_paths:
        score = noise_correlation_score(clean, _load_matrix(p))
        results.append({"noisy": p, "d_c": score.d_c, "c_frobenius": score.c_frobenius})
    fileio.write_json_report({"clean": clean_path, "results": results}, out_path)


def dispatch(argv) -> int:
    """Run the CLI on argv (no program name), returning the exit code."""
    try:
        cli.main(args=list(argv), prog_name="gapkit", standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        print(f"gapkit: error: {exc.format_message()}", file=sys.stderr)
        return 2
    except click.ClickException as exc:
        print(f"gapkit: error: {exc.format_message()}", file=sys.stderr)
        return 2
    except click.exceptions.Abort:
        print("gapkit: error: aborted", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"gapkit: error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"gapkit: error: {exc}", file=sys.stderr)
        return 3
    except GapkitError as exc:
        print(f"gapkit: error: {exc}", file=sys.stderr)
        return 3


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
