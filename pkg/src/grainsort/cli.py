"""Command-line front end: simulate, extract, train, predict, evaluate, report.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 solver
non-convergence.  GRAINSORT_THREADS caps how many method chains are
evaluated concurrently (default 1, fully sequential).
"""

from __future__ import annotations

import functools
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional

import click
import numpy as np

from . import config as cfgmod
from . import dataset as ds
from . import evaluation, features, radar, svm
from .errors import (
    ConfigError,
    DataError,
    DimensionMismatchError,
    GrainsortError,
    exit_code_for,
)


def _thread_cap() -> int:
    raw = os.environ.get("GRAINSORT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"GRAINSORT_THREADS must be an integer, got {raw!r}")


def _handle_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except GrainsortError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exit_code_for(exc))

    return wrapper


def _provenance_lines(cfg: dict, extra: Optional[dict] = None) -> List[str]:
    lines = [
        f"# config_hash={cfgmod.config_hash(cfg)}",
        f"# seed={cfg['seed']}",
    ]
    for key, value in (extra or {}).items():
        lines.append(f"# {key}={value}")
    return lines


def _snr_tag(snr) -> str:
    return "noiseless" if snr is None else f"snr{snr:g}"


def _simulate_ascans(cfg: dict, snr) -> list:
    params = cfgmod.radar_params(cfg)
    scene = cfgmod.scene(cfg)
    d = cfg["dataset"]
    return radar.generate_dataset(
        params,
        scene,
        d["per_class_counts"],
        snr,
        cfg["seed"],
        fill_fraction_range=d["fill_fraction_range"],
        cone_height_range=d["cone_height_range"],
    )


@click.group()
def cli():
    """Radar grain-surface classification experiments."""


@cli.command()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON experiment config; defaults are used when omitted.")
@click.option("--seed", type=int, default=None, help="Override the master seed.")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Output directory (overrides config out_dir).")
@click.option("--snr", "snr_override", type=float, default=None,
              help="Simulate at this single SNR instead of the config list.")
@click.option("--csv", "also_csv", is_flag=True,
              help="Additionally export each dataset as a flat CSV.")
@_handle_errors
def simulate(config_path, seed, out_dir, snr_override, also_csv):
    """Simulate a labelled A-scan dataset and write the binary container."""
    cfg = cfgmod.load_config(config_path, seed=seed, out_dir=out_dir)
    if snr_override is not None:
        cfg["dataset"]["snr_db"] = [snr_override]
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    params = cfgmod.radar_params(cfg)
    manifest = {
        "config_hash": cfgmod.config_hash(cfg),
        "seed": cfg["seed"],
        "per_class_counts": cfg["dataset"]["per_class_counts"],
        "class_names": list(radar.CLASS_NAMES),
        "n_freq": params.n_freq,
        "files": [],
    }
    for snr in cfg["dataset"]["snr_db"]:
        ascans = _simulate_ascans(cfg, snr)
        name = f"dataset_{_snr_tag(snr)}.gsrd"
        ds.save_dataset(out / name, params, ascans)
        manifest["files"].append(
            {"path": name, "snr_db": snr, "n_records": len(ascans)}
        )
        click.echo(f"wrote {out / name} ({len(ascans)} records)")
        if also_csv:
            csv_name = f"dataset_{_snr_tag(snr)}.csv"
            ds.export_csv(out / csv_name, ascans)
            click.echo(f"wrote {out / csv_name}")
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8"
    )
    click.echo(f"wrote {out / 'manifest.json'}")


@cli.command()
@click.argument("dataset_path", type=click.Path())
@click.option("--method", "method_tag", required=True,
              type=click.Choice(features.METHOD_TAGS), help="Feature chain to run.")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
@_handle_errors
def extract(dataset_path, method_tag, config_path, out_dir):
    """Extract one feature chain from a dataset into a CSV."""
    cfg = cfgmod.load_config(config_path, out_dir=out_dir)
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    _, ascans = ds.load_dataset(dataset_path)
    fparams = cfgmod.feature_params(cfg)
    X, y = features.extract_matrix(ascans, method_tag, fparams)
    file_hash = hashlib.sha256(Path(dataset_path).read_bytes()).hexdigest()
    name = "features_" + method_tag.replace("+", "_") + ".csv"
    header = ["method_tag", "label"] + [f"f_{i}" for i in range(X.shape[1])]
    lines = _provenance_lines(cfg, {"dataset_sha256": file_hash})
    lines.append(",".join(header))
    for label, row in zip(y, X):
        lines.append(
            ",".join([method_tag, str(int(label))] + [repr(float(v)) for v in row])
        )
    (out / name).write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo(f"wrote {out / name} ({X.shape[0]} rows x {X.shape[1]} features)")


@cli.command()
@click.argument("dataset_path", type=click.Path())
@click.option("--method", "method_tag", required=True,
              type=click.Choice(features.METHOD_TAGS))
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
@_handle_errors
def train(dataset_path, method_tag, config_path, seed, out_dir):
    """Train a multiclass SVM on a dataset and persist it as JSON."""
    cfg = cfgmod.load_config(config_path, seed=seed, out_dir=out_dir)
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    params, ascans = ds.load_dataset(dataset_path)
    fparams = cfgmod.feature_params(cfg)
    X, y = features.extract_matrix(ascans, method_tag, fparams)
    model = svm.train_multiclass(
        X, y, cfgmod.kernel_spec(cfg),
        tol=cfg["svm"]["tol"], max_passes=cfg["svm"]["max_passes"],
    )
    extra = {
        "method_tag": method_tag,
        "n_freq": params.n_freq,
        "feature_params": {
            "gray_levels": fparams.gray_levels,
            "stft_window_len": fparams.stft_window_len,
            "stft_hop": fparams.stft_hop,
            "stft_fft_len": fparams.stft_fft_len,
            "dwt_wavelet": fparams.dwt_wavelet,
            "dwt_levels": fparams.dwt_levels,
        },
        "config_hash": cfgmod.config_hash(cfg),
        "seed": cfg["seed"],
    }
    svm.save_model(out / "model.json", model, extra=extra)
    click.echo(f"wrote {out / 'model.json'}")


@cli.command()
@click.argument("model_path", type=click.Path())
@click.argument("dataset_path", type=click.Path())
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Also write predictions.csv here.")
@_handle_errors
def predict(model_path, dataset_path, out_dir):
    """Classify the A-scans of a dataset with a stored model."""
    model, doc = svm.load_model(model_path)
    params, ascans = ds.load_dataset(dataset_path)
    if doc.get("n_freq") is not None and params.n_freq != doc["n_freq"]:
        raise DimensionMismatchError(
            f"dataset holds {params.n_freq}-point sweeps, model was trained "
            f"on {doc['n_freq']}"
        )
    fp = doc.get("feature_params", {})
    fparams = features.FeatureParams(**fp) if fp else features.FeatureParams()
    method_tag = doc.get("method_tag")
    if method_tag is None:
        raise DataError("model file does not name its feature chain")
    X, _ = features.extract_matrix(ascans, method_tag, fparams)
    labels = np.asarray(svm.predict(model, X))
    for value in labels:
        click.echo(radar.CLASS_NAMES[int(value)])
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        lines = [
            f"# config_hash={doc.get('config_hash', '')}",
            f"# seed={doc.get('seed', '')}",
            "index,label_id,label_name",
        ]
        for i, value in enumerate(labels):
            lines.append(f"{i},{int(value)},{radar.CLASS_NAMES[int(value)]}")
        (out / "predictions.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        click.echo(f"wrote {out / 'predictions.csv'}")


def _evaluate_method(cfg, ascans, method_tag, kernel, classifier):
    return evaluation.cross_validate(
        ascans,
        method_tag,
        kernel,
        k=cfg["cv"]["k"],
        seed=cfg["seed"],
        feature_params=cfgmod.feature_params(cfg),
        tol=cfg["svm"]["tol"],
        max_passes=cfg["svm"]["max_passes"],
        classifier=classifier,
    )


def _grid_search(cfg, ascans, method_tag, classifier):
    """Flat (C, gamma) grid; returns best report by macro ACC plus the scan."""
    best = None
    scan = []
    for c_val in cfg["grid"]["C"]:
        for gamma in cfg["grid"]["gamma"]:
            kernel = cfgmod.kernel_spec(cfg, c=c_val, gamma=gamma)
            report = _evaluate_method(cfg, ascans, method_tag, kernel, classifier)
            acc = report.metric("ACC")[0]
            scan.append({"C": c_val, "gamma": gamma, "macro_acc": acc})
            if best is None or acc > best[0]:
                best = (acc, kernel, report)
    return best[2], best[1], scan


def _report_payload(report: evaluation.MetricsReport) -> dict:
    return {
        "method_tag": report.method_tag,
        "k": report.k,
        "mean": {n: float(report.mean[i]) for i, n in enumerate(evaluation.METRIC_NAMES)},
        "std": {n: float(report.std[i]) for i, n in enumerate(evaluation.METRIC_NAMES)},
        "folds": {
            n: [float(v) for v in report.fold_macro[:, i]]
            for i, n in enumerate(evaluation.METRIC_NAMES)
        },
        "per_class_mean": {
            n: [float(v) for v in report.fold_per_class.mean(axis=0)[:, i]]
            for i, n in enumerate(evaluation.METRIC_NAMES)
        },
        "zeroed_folds": [list(z) for z in report.zeroed_folds],
    }


def _write_report_files(out: Path, tag: str, cfg: dict, reports) -> List[Path]:
    csv_lines = _provenance_lines(cfg)
    k = reports[0].k
    csv_lines.append(
        ",".join(["method", "metric", "mean", "std"] + [f"fold_{i}" for i in range(k)])
    )
    for report in reports:
        for row in evaluation.report_rows(report):
            csv_lines.append(",".join(row))
    csv_path = out / f"report_{tag}.csv"
    csv_path.write_text("\n".join(csv_lines) + "\n", encoding="utf-8")

    table = evaluation.format_table(reports)
    txt_path = out / f"report_{tag}.txt"
    txt_path.write_text(
        "\n".join(_provenance_lines(cfg)) + "\n" + table + "\n", encoding="utf-8"
    )
    return [csv_path, txt_path]


@cli.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--method", "method_tags", multiple=True,
              type=click.Choice(features.METHOD_TAGS),
              help="Restrict to these chains (default: config methods).")
@click.option("--echo-classifier", is_flag=True,
              help="Replace the SVM with a label-echo oracle (reporting debug).")
@click.option("--grid", "use_grid", is_flag=True,
              help="Flat grid search over the config kernel grid per method.")
@_handle_errors
def evaluate(config_path, seed, out_dir, method_tags, echo_classifier, use_grid):
    """Cross-validate every configured method chain and write reports."""
    cfg = cfgmod.load_config(config_path, seed=seed, out_dir=out_dir)
    if method_tags:
        cfg["methods"] = list(method_tags)
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    classifier = "echo" if echo_classifier else "svm"
    threads = _thread_cap()
    summary = {
        "config_hash": cfgmod.config_hash(cfg),
        "seed": cfg["seed"],
        "k": cfg["cv"]["k"],
        "kernel": cfg["kernel"],
        "classifier": classifier,
        "methods": list(cfg["methods"]),
        "results": {},
    }
    written = []
    for snr in cfg["dataset"]["snr_db"]:
        tag = _snr_tag(snr)
        ascans = _simulate_ascans(cfg, snr)

        def run_one(method_tag):
            if use_grid:
                report, kernel, scan = _grid_search(cfg, ascans, method_tag, classifier)
                return method_tag, report, {"C": kernel.c, "gamma": kernel.gamma}, scan
            kernel = cfgmod.kernel_spec(cfg)
            return method_tag, _evaluate_method(cfg, ascans, method_tag, kernel, classifier), None, None

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(run_one, cfg["methods"]))
        else:
            results = [run_one(m) for m in cfg["methods"]]

        reports = [r[1] for r in results]
        snr_block = {}
        for method_tag, report, best_kernel, scan in results:
            payload = _report_payload(report)
            if best_kernel is not None:
                payload["best_kernel"] = best_kernel
                payload["grid_scan"] = scan
            snr_block[method_tag] = payload
        summary["results"][tag] = snr_block
        written += _write_report_files(out, tag, cfg, reports)
        click.echo(f"[{tag}]")
        click.echo(evaluation.format_table(reports))

    summary_path = out / "summary.json"
    summary_path.write_text(
        json.dumps(summary, indent=1, sort_keys=True), encoding="utf-8"
    )
    written.append(summary_path)
    for path in written:
        click.echo(f"wrote {path}")


@cli.command()
@click.argument("summary_path", type=click.Path())
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Re-render report files into this directory.")
@_handle_errors
def report(summary_path, out_dir):
    """Render the text table from a stored evaluation summary."""
    path = Path(summary_path)
    if not path.exists():
        raise DataError(f"summary file not found: {path}")
    try:
        summary = json.loads(path.read_text(encoding="utf-8"))
        results = summary["results"]
    except (json.JSONDecodeError, KeyError) as exc:
        raise DataError(f"not a valid evaluation summary: {exc}") from exc
    rendered = []
    for tag, block in results.items():
        lines = [f"[{tag}]"]
        header = ["Method"] + list(evaluation.METRIC_NAMES)
        body = []
        order = [m for m in summary.get("methods", []) if m in block]
        order += [m for m in block if m not in order]
        for method_tag in order:
            payload = block[method_tag]
            cells = [method_tag + "+SVM"]
            for name in evaluation.METRIC_NAMES:
                mean = 100 * payload["mean"][name]
                std = 100 * payload["std"][name]
                cells.append(f"{mean:.2f}±{std:.2f}")
            body.append(cells)
        widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
        lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
        lines.append("  ".join("-" * w for w in widths))
        for cells in body:
            lines.append("  ".join(c.ljust(w) for c, w in zip(cells, widths)))
        rendered.append("\n".join(lines))
    text = "\n\n".join(rendered)
    click.echo(text)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report_rendered.txt").write_text(text + "\n", encoding="utf-8")
        click.echo(f"wrote {out / 'report_rendered.txt'}")


def main():
    cli(prog_name="grainsort")


if __name__ == "__main__":
    main()
