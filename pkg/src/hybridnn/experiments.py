"""Experiment harness: task builders, model builders, checkpoints, sweeps.

Glue between the dataset pipelines and the training/search machinery, shared
by the CLI and the test suite.  Tasks and models are described by small JSON
dicts so every experiment is reproducible from a config file and a seed.
"""

from __future__ import annotations

import json

import numpy as np

from . import datasets
from .errors import ConfigError
from .graph import (
    NetworkGraph,
    TaskSpec,
    config_from_json,
    config_to_json,
)
from .layers import build_mlp
from .tensor import tensor_from_json, tensor_to_json


def _plain_split(n, seed, fractions=(0.8, 0.1, 0.1)):
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x59171)))
    order = rng.permutation(n)
    n_val = int(round(n * fractions[1]))
    n_test = int(round(n * fractions[2]))
    return {
        "val": np.sort(order[:n_val]),
        "test": np.sort(order[n_val:n_val + n_test]),
        "train": np.sort(order[n_val + n_test:]),
    }


def build_sinusoid_task(count, seed) -> TaskSpec:
    """Regression: 36 spectrum predictors -> [frequency, a*sin(p), a*cos(p)]."""
    data = datasets.generate_sinusoid_dataset(count, seed)
    return TaskSpec(
        name="sinusoid",
        input_domain="real",
        output_domain="real",
        n_outputs=3,
        loss="mse",
        y=data["targets"],
        splits=_plain_split(count, seed),
        x_real=data["predictors"],
        input_channels={"real": data["predictors"].shape[1]},
    )


def _digit_features(waveforms, seed, snr_db, representation, max_bins, time_pool, crop):
    return datasets.clips_to_features(
        waveforms, seed=seed, snr_db=snr_db, crop=crop,
        representation=representation, max_bins=max_bins, time_pool=time_pool,
    )


def build_digit_task(waveforms, labels, seed, snr_db=0.0, representation="complex",
                     max_bins=64, time_pool=3, crop=None, name="digits") -> TaskSpec:
    """Spoken-digit classification from compressed STFT features.

    Time frames become conv channels and frequency is the convolution axis.
    ``representation="complex"`` feeds the complex grid directly (hybrid or
    complex networks); ``"interleaved"`` feeds re/im interleaved along the
    frequency axis (real networks).
    """
    feats = _digit_features(waveforms, seed, snr_db, representation, max_bins, time_pool, crop)
    labels = np.asarray(labels)
    splits = datasets.stratified_split(labels, seed)
    domain = "complex" if representation == "complex" else "real"
    task = TaskSpec(
        name=name,
        input_domain=domain,
        output_domain="real",
        n_outputs=10,
        loss="cross_entropy",
        y=labels,
        splits=splits,
        input_channels={domain: feats.shape[1]},
        input_length=feats.shape[2],
    )
    if domain == "complex":
        task.x_complex = feats
    else:
        task.x_real = feats
    return task


def build_digit_proxy_task(count, seed, **kwargs) -> TaskSpec:
    waveforms, labels = datasets.generate_digit_proxy(count, seed)
    return build_digit_task(waveforms, labels, seed, name="digit_proxy", **kwargs)


def build_audiomnist_task(root, seed, limit=None, **kwargs) -> TaskSpec:
    records = datasets.load_audiomnist(root)
    if limit:
        records = records[:limit]
    waveforms = [datasets.read_wav(r["path"])[1] for r in records]
    labels = [r["label"] for r in records]
    return build_digit_task(waveforms, labels, seed, name="audiomnist", **kwargs)


def task_from_config(cfg: dict, seed) -> TaskSpec:
    """Build a task from its JSON description."""
    try:
        kind = cfg["kind"]
        options = {k: v for k, v in cfg.items() if k != "kind"}
        if kind == "sinusoid":
            return build_sinusoid_task(options.pop("count", 10000), seed)
        if kind == "digit_proxy":
            count = options.pop("count", 2000)
            return build_digit_proxy_task(count, seed, **options)
        if kind == "audiomnist":
            root = options.pop("root")
            return build_audiomnist_task(root, seed, **options)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad task config: {exc}") from exc
    raise ConfigError(f"unknown task kind {cfg.get('kind')!r}")


def model_from_config(cfg: dict, task: TaskSpec, seed):
    """Build a model; returns (model, manifest) with the manifest rebuildable."""
    try:
        kind = cfg["kind"]
        if kind == "mlp":
            in_features = cfg.get("in_features") or task.input_channels["real"]
            layer_sizes = list(cfg["layer_sizes"])
            activation = cfg.get("activation", "ELU")
            model = build_mlp(in_features, layer_sizes, activation=activation, seed=seed)
            manifest = {
                "kind": "mlp", "in_features": in_features,
                "layer_sizes": layer_sizes, "activation": activation, "seed": seed,
            }
            return model, manifest
        if kind == "graph":
            arch = dict(cfg["architecture"])
            if not arch.get("input", {}).get("channels"):
                arch["input"]["channels"] = dict(task.input_channels)
            if arch["input"].get("length") is None:
                arch["input"]["length"] = task.input_length
            config = config_from_json(arch)
            model = NetworkGraph(config, seed=seed)
            manifest = {"kind": "graph", "architecture": config_to_json(config), "seed": seed}
            return model, manifest
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad model config: {exc}") from exc
    raise ConfigError(f"unknown model kind {cfg.get('kind')!r}")


def model_from_manifest(manifest: dict):
    if manifest["kind"] == "mlp":
        return build_mlp(
            manifest["in_features"], manifest["layer_sizes"],
            activation=manifest["activation"], seed=manifest["seed"],
        )
    if manifest["kind"] == "graph":
        return NetworkGraph(config_from_json(manifest["architecture"]), seed=manifest["seed"])
    raise ConfigError(f"unknown model kind {manifest['kind']!r}")


def save_checkpoint(path, model, manifest):
    """JSON checkpoint: model manifest plus every named parameter tensor."""
    tensors = {p.name: tensor_to_json(p) for p in model.parameters()}
    with open(path, "w") as handle:
        json.dump({"model": manifest, "tensors": tensors}, handle)


def load_checkpoint(path):
    with open(path) as handle:
        payload = json.load(handle)
    model = model_from_manifest(payload["model"])
    tensors = payload["tensors"]
    for p in model.parameters():
        if p.name not in tensors:
            raise ConfigError(f"checkpoint is missing tensor {p.name!r}")
        p.data[...] = tensor_from_json(tensors[p.name]).data
    return model, payload["model"]


def crop_sweep(model, task_cfg: dict, seed, ratios=None):
    """Accuracy across signed crop ratios (noise disabled, fixed placement).

    Returns rows of {crop_ratio, test_accuracy, test_loss}; ratio 0 is the
    uncropped baseline.  Only the task's test split is featurized, once per
    ratio; crop placement is deterministic, so repeated sweeps agree exactly.
    """
    from .graph import evaluate_split

    ratios = [round(float(r), 3) for r in
              (ratios if ratios is not None else np.arange(-0.8, 0.8001, 0.1))]
    cfg = dict(task_cfg)
    kind = cfg.pop("kind", None)
    cfg.pop("snr_db", None)
    cfg.pop("crop", None)
    if kind == "digit_proxy":
        waveforms, labels = datasets.generate_digit_proxy(cfg.pop("count", 2000), seed)
    elif kind == "audiomnist":
        records = datasets.load_audiomnist(cfg.pop("root"))
        if cfg.get("limit"):
            records = records[:cfg.pop("limit")]
        waveforms = [datasets.read_wav(r["path"])[1] for r in records]
        labels = np.asarray([r["label"] for r in records])
    else:
        raise ConfigError(f"crop sweep does not support task kind {kind!r}")
    test_idx = datasets.stratified_split(labels, seed)["test"]
    test_waves = [waveforms[i] for i in test_idx]
    test_labels = np.asarray(labels)[test_idx]
    rows = []
    for ratio in ratios:
        task = build_digit_task(test_waves, test_labels, seed, snr_db=None, crop=ratio,
                                name="crop_sweep", **cfg)
        task.splits = {"train": np.array([], dtype=int), "val": np.array([], dtype=int),
                       "test": np.arange(len(test_labels))}
        loss, accuracy = evaluate_split(model, task, "test")
        rows.append({"crop_ratio": ratio, "test_loss": loss, "test_accuracy": accuracy})
    return rows
