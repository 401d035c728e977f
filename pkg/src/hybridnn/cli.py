"""Command-line interface.

Subcommands: gen-sinusoid, prep-audio, train, search, decode-weights,
probe-phase, report, crop-sweep.  Global flags: --seed, --config <json>,
--out <dir>.  Exit codes: 0 success, 2 config error, 3 data error,
4 infeasible search.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis, datasets, experiments
from .errors import ConfigError, DataError, InfeasibleSearchError
from .graph import Hyperparams, train
from .nas import SearchConfig, run_search

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INFEASIBLE = 4


def _load_config(args, required=()):
    if args.config is None:
        config = {}
    else:
        try:
            with open(args.config) as handle:
                config = json.load(handle)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {args.config}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    for key in required:
        if key not in config:
            raise ConfigError(f"config is missing the {key!r} section")
    return config


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path, payload):
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2)


def cmd_gen_sinusoid(args):
    config = _load_config(args)
    out = _out_dir(args)
    count = int(config.get("count", 10000))
    data = datasets.generate_sinusoid_dataset(count, args.seed)
    np.savez(out / "sinusoid.npz", predictors=data["predictors"],
             targets=data["targets"], latent=data["latent"])
    _write_json(out / "manifest.json", {
        "kind": "sinusoid", "count": count, "seed": args.seed,
        "predictors": list(data["predictors"].shape), "targets": list(data["targets"].shape),
    })
    print(f"wrote {count} samples to {out / 'sinusoid.npz'}")
    return EXIT_OK


def cmd_prep_audio(args):
    config = _load_config(args)
    out = _out_dir(args)
    source = config.get("source", "audiomnist")
    if source == "proxy":
        count = int(config.get("count", 2000))
        waveforms, labels = datasets.generate_digit_proxy(count, args.seed)
        records = [{"index": i, "label": int(l), "samples": len(w)}
                   for i, (w, l) in enumerate(zip(waveforms, labels))]
    elif source == "audiomnist":
        records = datasets.load_audiomnist(config.get("root", "."))
        labels = [r["label"] for r in records]
    else:
        raise ConfigError(f"unknown audio source {source!r}")
    splits = datasets.stratified_split(labels, args.seed)
    _write_json(out / "manifest.json", {"source": source, "count": len(records),
                                        "seed": args.seed, "records": records})
    datasets.save_split(out / "split.json", splits)
    print(f"{len(records)} clips; split sizes: "
          + ", ".join(f"{k}={len(v)}" for k, v in splits.items()))
    return EXIT_OK


def cmd_train(args):
    config = _load_config(args, required=("task", "model"))
    out = _out_dir(args)
    task = experiments.task_from_config(config["task"], args.seed)
    model, manifest = experiments.model_from_config(config["model"], task, args.seed)
    hp_cfg = config.get("hyperparams", {})
    hp = Hyperparams(
        lr=float(hp_cfg.get("lr", 1e-3)),
        epochs=int(hp_cfg.get("epochs", 10)),
        batch_size=int(hp_cfg.get("batch_size", 64)),
        optimizer=hp_cfg.get("optimizer", "adam"),
        seed=args.seed,
    )
    report = train(model, task, hp)
    _write_json(out / "report.json", {"task": config["task"], "model": manifest,
                                      "hyperparams": hp.to_json(), **report.to_json()})
    experiments.save_checkpoint(out / "checkpoint.json", model, manifest)
    print(f"trained {report.param_count} parameters; "
          f"val loss {report.final_val_loss:.4f}, test loss {report.test_loss}")
    return EXIT_OK


def cmd_search(args):
    config = _load_config(args, required=("task",))
    out = _out_dir(args)
    task = experiments.task_from_config(config["task"], args.seed)
    search_cfg = config.get("search", {})
    search_cfg.setdefault("seed", args.seed)
    if search_cfg.get("max_params") is None:
        search_cfg["max_params"] = math.inf
    known = {f.name for f in SearchConfig.__dataclass_fields__.values()}
    unknown = set(search_cfg) - known
    if unknown:
        raise ConfigError(f"unknown search options: {sorted(unknown)}")
    for key in ("block_range", "channel_choices", "kernel_choices", "pool_choices",
                "dropout_choices", "lr_range", "optimizers"):
        if key in search_cfg:
            search_cfg[key] = tuple(search_cfg[key])
    sc = SearchConfig(**search_cfg)
    state = run_search(task, sc, store_path=out / "trials.jsonl")
    _write_json(out / "best.json", state.to_json())
    print(f"search done: {len(state.trials)} trials, best val loss "
          f"{state.best_loss:.4f} at {state.best_param_count} parameters")
    return EXIT_OK


def cmd_decode_weights(args):
    out = _out_dir(args)
    model, _ = experiments.load_checkpoint(args.checkpoint)
    config = _load_config(args)
    layer_name = config.get("layer", "layer1")
    layer = model.layer(layer_name) if hasattr(model, "layer") else None
    if layer is None:
        raise ConfigError(f"checkpointed model has no addressable layer {layer_name!r}")
    wm = analysis.reorder_rows(analysis.weight_map_from_dense(layer))
    tolerance = float(config.get("tolerance", 0.15))
    report = analysis.detect_complex_blocks(wm, tolerance)
    with open(out / "heatmap.svg", "w") as handle:
        handle.write(analysis.render_heatmap(wm))
    _write_json(out / "blocks.json", {
        "layer": layer_name,
        "tolerance": tolerance,
        "row_order": wm.permutation.tolist(),
        "bias_signs": analysis.bias_signs(wm).tolist(),
        "blocks": [
            {"rows": list(b.rows), "cols": list(b.cols),
             "w_r": b.w_r, "w_i": b.w_i, "residual": b.residual}
            for b in report.blocks
        ],
    })
    print(f"{len(report)} template blocks below residual {tolerance}")
    return EXIT_OK


def cmd_probe_phase(args):
    out = _out_dir(args)
    model, _ = experiments.load_checkpoint(args.checkpoint)
    config = _load_config(args)
    traces = analysis.phase_sweep_probe(
        model,
        amplitude=float(config.get("amplitude", 1.0)),
        frequency=float(config.get("frequency", 8.0)),
        n_points=int(config.get("n_points", 181)),
    )
    with open(out / "traces.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        names = sorted(traces["activations"])
        header = ["phase"] + [f"out{i}" for i in range(traces["outputs"].shape[1])]
        for name in names:
            header += [f"{name}#{i}" for i in range(traces["activations"][name].shape[1])]
        writer.writerow(header)
        for row in range(len(traces["phase"])):
            values = [traces["phase"][row]] + list(traces["outputs"][row])
            for name in names:
                values += list(traces["activations"][name][row])
            writer.writerow([f"{v:.6g}" for v in values])
    print(f"wrote {len(traces['phase'])} sweep points to {out / 'traces.csv'}")
    return EXIT_OK


def cmd_report(args):
    config = _load_config(args, required=("runs",))
    out = _out_dir(args)
    rows = []
    for entry in config["runs"]:
        path = Path(entry["report"])
        if not path.exists():
            raise DataError(f"missing run report {path}")
        with open(path) as handle:
            run = json.load(handle)
        rows.append({
            "snr_db": entry.get("snr_db"),
            "model": entry.get("label", run["model"]["kind"]),
            "test_loss": run["test_loss"],
            "params": run["param_count"],
        })
    table_csv, table_md = analysis.noise_comparison_table(rows)
    (out / "table.csv").write_text(table_csv)
    (out / "table.md").write_text(table_md)
    print(table_md)
    return EXIT_OK


def cmd_crop_sweep(args):
    config = _load_config(args, required=("task",))
    out = _out_dir(args)
    model, _ = experiments.load_checkpoint(args.checkpoint)
    ratios = config.get("ratios")
    rows = experiments.crop_sweep(model, config["task"], args.seed, ratios=ratios)
    with open(out / "crop_curve.csv", "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=["crop_ratio", "test_loss", "test_accuracy"])
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} sweep points to {out / 'crop_curve.csv'}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hybridnn",
        description="hybrid real/complex network experiments",
    )
    parser.add_argument("--seed", type=int, default=0, help="global random seed")
    parser.add_argument("--config", type=str, default=None, help="JSON config file")
    parser.add_argument("--out", type=str, default="out", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-sinusoid", help="generate the sinusoid regression dataset")
    sub.add_parser("prep-audio", help="index audio data and persist the split")
    sub.add_parser("train", help="train a model described by the config")
    sub.add_parser("search", help="run the phase-wise architecture search")
    for name, helptext in (
        ("decode-weights", "reorder weights and detect complex-multiply blocks"),
        ("probe-phase", "sweep the phase parameter and trace activations"),
        ("crop-sweep", "evaluate accuracy across crop ratios"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--checkpoint", required=True, help="checkpoint JSON path")
    sub.add_parser("report", help="emit comparison tables from run reports")
    return parser


_COMMANDS = {
    "gen-sinusoid": cmd_gen_sinusoid,
    "prep-audio": cmd_prep_audio,
    "train": cmd_train,
    "search": cmd_search,
    "decode-weights": cmd_decode_weights,
    "probe-phase": cmd_probe_phase,
    "report": cmd_report,
    "crop-sweep": cmd_crop_sweep,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InfeasibleSearchError as exc:
        print(f"infeasible search: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
