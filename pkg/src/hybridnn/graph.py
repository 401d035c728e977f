"""The four-path hybrid building block, series networks, pruning, training.

A block holds up to four paths named by their input/output domains:

* ``RR``: real conv -> real activation (+ optional functions)
* ``RC``: real conv -> real activation -> real-to-complex conversion
* ``CR``: complex conv -> complex activation -> complex-to-real conversion
* ``CC``: complex conv -> complex activation (+ optional functions)

Per path the optional functions run conv -> activation -> pool -> norm ->
dropout, with the domain conversion applied last on the cross-domain paths.
Like-domain path outputs are concatenated (same-domain path first, then the
converted cross-domain contribution) into the block's real and complex
outputs.  Blocks compose in series; dependency pruning removes any path that
is not on a route from a used network input to a required output head.
"""

from __future__ import annotations

import copy
import time
from dataclasses import dataclass, field

import numpy as np

from . import activations as act
from . import conversion as cv
from .errors import ConfigError, GraphError
from .layers import (
    AvgPool1d,
    BatchAmplitudeNorm,
    Conv1d,
    Dense,
    Dropout,
    count_parameters,
    make_optimizer,
)
from .tensor import Tensor, concat, mse, softmax_cross_entropy

PATH_ORDER = ("RR", "RC", "CR", "CC")
PATH_IN_DOMAIN = {"RR": "real", "RC": "real", "CR": "complex", "CC": "complex"}
PATH_OUT_DOMAIN = {"RR": "real", "RC": "complex", "CR": "real", "CC": "complex"}


# -- configuration ---------------------------------------------------------------


@dataclass
class PathConfig:
    out_channels: int
    kernel: int
    groups: int = 1
    stride: int = 1
    activation: str = "none"
    conversion: cv.ConversionSpec | None = None
    pool: int | None = None
    norm: bool = False
    dropout: float = 0.0


@dataclass
class BlockConfig:
    paths: dict = field(default_factory=dict)  # path name -> PathConfig


@dataclass
class HeadConfig:
    domain: str  # "real" or "complex"
    size: int
    pooling: str = "mean"  # "mean" or "flatten"
    conversion: cv.ConversionSpec | None = None  # input adaptation if trunk lacks the domain


@dataclass
class InputConfig:
    domain: str  # "real", "complex", or "both"
    channels: dict = field(default_factory=dict)  # domain -> channel count
    length: int | None = None  # static length, required for flatten heads
    to_real: cv.ConversionSpec | None = None
    to_complex: cv.ConversionSpec | None = None


@dataclass
class GraphConfig:
    input: InputConfig
    blocks: list
    heads: list

    def clone(self):
        return copy.deepcopy(self)


def _validate_path(name, cfg):
    if name not in PATH_ORDER:
        raise ConfigError(f"unknown path {name!r}; expected one of {PATH_ORDER}")
    if cfg.out_channels < 1 or cfg.kernel < 1 or cfg.groups < 1 or cfg.stride < 1:
        raise ConfigError(f"path {name}: channels/kernel/stride/groups must be positive")
    if not 0.0 <= cfg.dropout < 1.0:
        raise ConfigError(f"path {name}: dropout must be in [0, 1)")
    cross = name in ("RC", "CR")
    if cross and cfg.conversion is None:
        raise ConfigError(f"path {name} requires a domain conversion")
    if not cross and cfg.conversion is not None:
        raise ConfigError(f"path {name} must not carry a domain conversion")
    if cross:
        want = "R2C" if name == "RC" else "C2R"
        if cfg.conversion.direction != want:
            raise ConfigError(f"path {name} needs a {want} conversion")
    if name == "RC" and cfg.out_channels % cfg.conversion.in_arity:
        raise ConfigError(
            f"path RC: conv channels {cfg.out_channels} not divisible by "
            f"conversion arity {cfg.conversion.in_arity}"
        )
    real_path = name in ("RR", "RC")
    if cfg.activation == act.NO_ACTIVATION_NAME:
        if not cross:
            raise ConfigError(
                f"path {name}: 'none' activation is only allowed immediately "
                "before a domain conversion"
            )
    elif real_path:
        if not act.is_real_activation(cfg.activation):
            raise ConfigError(f"path {name}: {cfg.activation!r} is not a real activation")
    else:
        if not act.is_complex_activation(cfg.activation):
            raise ConfigError(f"path {name}: {cfg.activation!r} is not a complex activation")
    if cfg.norm and real_path:
        raise ConfigError(f"path {name}: magnitude normalization applies to complex paths only")


def validate_config(config: GraphConfig):
    if config.input.domain not in ("real", "complex", "both"):
        raise ConfigError(f"bad input domain {config.input.domain!r}")
    if not config.blocks:
        raise ConfigError("a network needs at least one block")
    if not config.heads:
        raise ConfigError("a network needs at least one output head")
    for i, block in enumerate(config.blocks):
        if not block.paths:
            raise ConfigError(f"block {i}: all paths pruned")
        for name, path in block.paths.items():
            _validate_path(name, path)
    for head in config.heads:
        if head.domain not in ("real", "complex"):
            raise ConfigError(f"bad head domain {head.domain!r}")
        if head.size < 1:
            raise ConfigError("head size must be positive")


# -- JSON round trip --------------------------------------------------------------


def _conversion_to_json(spec):
    if spec is None:
        return None
    return {"kind": spec.kind, "n_phases": spec.n_phases, "direction": spec.direction}


def _conversion_from_json(obj, direction):
    if obj is None:
        return None
    if isinstance(obj, str):
        return cv.ConversionSpec(direction, obj)
    return cv.ConversionSpec(direction, obj["kind"], obj.get("n_phases", 3))


def config_to_json(config: GraphConfig) -> dict:
    return {
        "input": {
            "domain": config.input.domain,
            "channels": dict(config.input.channels),
            "length": config.input.length,
            "to_real": _conversion_to_json(config.input.to_real),
            "to_complex": _conversion_to_json(config.input.to_complex),
        },
        "blocks": [
            {
                "paths": {
                    name: {
                        "conv": {"c": p.out_channels, "k": p.kernel, "n": p.groups,
                                 "stride": p.stride},
                        "activation": p.activation,
                        "conversion": _conversion_to_json(p.conversion),
                        "pool": p.pool,
                        "norm": p.norm,
                        "dropout": p.dropout,
                    }
                    for name, p in block.paths.items()
                }
            }
            for block in config.blocks
        ],
        "heads": [
            {
                "domain": h.domain,
                "size": h.size,
                "pooling": h.pooling,
                "conversion": _conversion_to_json(h.conversion),
            }
            for h in config.heads
        ],
    }


def config_from_json(obj: dict) -> GraphConfig:
    try:
        inp = obj["input"]
        blocks = []
        for b in obj["blocks"]:
            paths = {}
            for name, p in b["paths"].items():
                conv_dir = "R2C" if name == "RC" else "C2R"
                paths[name] = PathConfig(
                    out_channels=int(p["conv"]["c"]),
                    kernel=int(p["conv"]["k"]),
                    groups=int(p["conv"].get("n", 1)),
                    stride=int(p["conv"].get("stride", 1)),
                    activation=p.get("activation", "none"),
                    conversion=_conversion_from_json(p.get("conversion"), conv_dir),
                    pool=p.get("pool"),
                    norm=bool(p.get("norm", False)),
                    dropout=float(p.get("dropout", 0.0)),
                )
            blocks.append(BlockConfig(paths=paths))
        heads = [
            HeadConfig(
                domain=h["domain"],
                size=int(h["size"]),
                pooling=h.get("pooling", "mean"),
                conversion=_conversion_from_json(
                    h.get("conversion"), "C2R" if h["domain"] == "real" else "R2C"
                ),
            )
            for h in obj["heads"]
        ]
        length = inp.get("length")
        config = GraphConfig(
            input=InputConfig(
                domain=inp["domain"],
                channels={k: int(v) for k, v in inp.get("channels", {}).items()},
                length=int(length) if length is not None else None,
                to_real=_conversion_from_json(inp.get("to_real"), "C2R"),
                to_complex=_conversion_from_json(inp.get("to_complex"), "R2C"),
            ),
            blocks=blocks,
            heads=heads,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed architecture description: {exc}") from exc
    validate_config(config)
    return config


# -- domain liveness, pruning, io adaptation ----------------------------------------


def _entry_domains(config: GraphConfig):
    domains = set()
    if config.input.domain in ("real", "both"):
        domains.add("real")
    if config.input.domain in ("complex", "both"):
        domains.add("complex")
    if config.input.to_real is not None and "complex" in domains:
        domains.add("real")
    if config.input.to_complex is not None and "real" in domains:
        domains.add("complex")
    return domains


def _forward_avail(config: GraphConfig):
    """Domains available before each block (index 0..n_blocks)."""
    avail = [_entry_domains(config)]
    for block in config.blocks:
        produced = {
            PATH_OUT_DOMAIN[name]
            for name in block.paths
            if PATH_IN_DOMAIN[name] in avail[-1]
        }
        avail.append(produced)
    return avail


def prune_dependencies(config: GraphConfig) -> GraphConfig:
    """Keep only paths on a route from a used input to a required head.

    Idempotent; parameter count never increases.  Raises
    :class:`~hybridnn.errors.GraphError` naming any head whose domain cannot
    be produced.
    """
    config = config.clone()
    avail = _forward_avail(config)
    trunk_out = avail[-1]
    needed = set()
    for head in config.heads:
        # a head with a conversion consumes the other trunk (matching the
        # forward pass); otherwise it consumes its own domain
        other = "complex" if head.domain == "real" else "real"
        source = other if head.conversion is not None else head.domain
        if source not in trunk_out:
            raise GraphError(f"required {head.domain} output is unreachable")
        needed.add(source)
    for i in range(len(config.blocks) - 1, -1, -1):
        block = config.blocks[i]
        live = {
            name: path
            for name, path in block.paths.items()
            if PATH_IN_DOMAIN[name] in avail[i] and PATH_OUT_DOMAIN[name] in needed
        }
        if not live:
            raise GraphError(f"block {i} has no live paths; required outputs unreachable")
        block.paths = {name: live[name] for name in PATH_ORDER if name in live}
        needed = {PATH_IN_DOMAIN[name] for name in live}
    if config.input.to_real is not None and "real" not in needed:
        config.input.to_real = None
    if config.input.to_complex is not None and "complex" not in needed:
        config.input.to_complex = None
    return config


def adapt_io(config: GraphConfig, input_domain, output_domain, policy="convert") -> GraphConfig:
    """Fit a network to the task's input/output domains.

    ``policy="convert"`` inserts input conversions when the first block needs
    a domain the input does not provide; ``policy="prune"`` leaves the missing
    domain unavailable so the dependent paths fall to the pruning pass.
    Output heads not required by ``output_domain`` are removed.  The result is
    pruned before being returned.
    """
    if policy not in ("convert", "prune"):
        raise ConfigError(f"unknown io adaptation policy {policy!r}")
    config = config.clone()
    config.input.domain = input_domain
    provided = _entry_domains(config)
    wanted = {PATH_IN_DOMAIN[name] for name in config.blocks[0].paths}
    if policy == "convert":
        if "real" in wanted and "real" not in provided:
            config.input.to_real = config.input.to_real or cv.ConversionSpec("C2R", "Cartesian")
        if "complex" in wanted and "complex" not in provided:
            config.input.to_complex = config.input.to_complex or cv.ConversionSpec("R2C", "Real")
    want_heads = {"real", "complex"} if output_domain == "both" else {output_domain}
    kept = [h for h in config.heads if h.domain in want_heads]
    for domain in want_heads - {h.domain for h in kept}:
        kept.append(HeadConfig(domain=domain, size=config.heads[0].size))
    config.heads = kept
    trunk_out = _forward_avail(config)[-1]
    for head in config.heads:
        if head.domain not in trunk_out:
            other = "complex" if head.domain == "real" else "real"
            if other in trunk_out:
                direction = "C2R" if head.domain == "real" else "R2C"
                kind = "Cartesian" if direction == "C2R" else "Real"
                head.conversion = head.conversion or cv.ConversionSpec(direction, kind)
    return prune_dependencies(config)


# -- materialized network -----------------------------------------------------------


class _Path:
    def __init__(self, name, cfg, in_channels, rng, prefix):
        domain = "real" if PATH_IN_DOMAIN[name] == "real" else "complex"
        self.name = name
        self.cfg = cfg
        self.conv = Conv1d(
            domain, in_channels, cfg.out_channels, cfg.kernel,
            stride=cfg.stride, groups=cfg.groups, rng=rng, name=f"{prefix}.conv",
        )
        if domain == "real":
            self.activation = act.RealActivation(cfg.activation)
        else:
            self.activation = act.ComplexActivation(cfg.activation)
        self.pool = AvgPool1d(cfg.pool, name=f"{prefix}.pool") if cfg.pool else None
        self.norm = (
            BatchAmplitudeNorm(cfg.out_channels, name=f"{prefix}.norm") if cfg.norm else None
        )
        self.dropout = Dropout(cfg.dropout, name=f"{prefix}.dropout") if cfg.dropout else None
        self.conversion = cfg.conversion

    @property
    def out_channels(self):
        c = self.cfg.out_channels
        if self.conversion is None:
            return c
        if self.conversion.direction == "R2C":
            return c // self.conversion.in_arity
        return c * self.conversion.out_arity

    def out_length(self, in_length):
        if in_length is None:
            return None
        length = -(-in_length // self.cfg.stride)  # "same" padding: ceil(L/s)
        if self.pool is not None:
            length //= self.pool.kernel
        return length

    def __call__(self, x, training=False, rng=None):
        y = self.conv(x)
        y = self.activation(y)
        if self.pool is not None:
            y = self.pool(y)
        if self.norm is not None:
            y = self.norm(y, training=training)
        if self.dropout is not None:
            y = self.dropout(y, training=training, rng=rng)
        if self.conversion is not None:
            y = cv.r2c(self.conversion, y) if self.conversion.direction == "R2C" else cv.c2r(self.conversion, y)
        return y

    def parameters(self):
        return self.conv.parameters()


class HybridBlock:
    """One functional block; ports are the named real/complex inputs/outputs."""

    def __init__(self, cfg: BlockConfig, real_in, complex_in, rng, prefix="block",
                 real_len=None, complex_len=None):
        self.paths = {}
        for name in PATH_ORDER:
            if name not in cfg.paths:
                continue
            in_ch = real_in if PATH_IN_DOMAIN[name] == "real" else complex_in
            if not in_ch:
                raise GraphError(f"{prefix}.{name}: no {PATH_IN_DOMAIN[name]} input available")
            self.paths[name] = _Path(name, cfg.paths[name], in_ch, rng, f"{prefix}.{name}")
        if not self.paths:
            raise GraphError(f"{prefix}: all paths pruned")
        self.prefix = prefix
        self.real_out_length = self._out_length("real", real_len, complex_len)
        self.complex_out_length = self._out_length("complex", real_len, complex_len)

    def _out_length(self, out_domain, real_len, complex_len):
        lengths = set()
        for name, path in self.paths.items():
            if PATH_OUT_DOMAIN[name] != out_domain:
                continue
            in_len = real_len if PATH_IN_DOMAIN[name] == "real" else complex_len
            lengths.add(path.out_length(in_len))
        if len(lengths) > 1 and None not in lengths:
            raise GraphError(
                f"{self.prefix}: {out_domain} paths produce mismatched lengths {sorted(lengths)}"
            )
        return lengths.pop() if lengths else None

    @property
    def real_out_channels(self):
        return sum(p.out_channels for n, p in self.paths.items() if PATH_OUT_DOMAIN[n] == "real")

    @property
    def complex_out_channels(self):
        return sum(p.out_channels for n, p in self.paths.items() if PATH_OUT_DOMAIN[n] == "complex")

    def __call__(self, real_in, complex_in, training=False, rng=None, record=None):
        if real_in is None and complex_in is None:
            raise GraphError(f"{self.prefix}: at least one input must be present")
        real_parts, complex_parts = [], []
        for name in ("RR", "CR", "CC", "RC"):  # same-domain contributions first
            path = self.paths.get(name)
            if path is None:
                continue
            x = real_in if PATH_IN_DOMAIN[name] == "real" else complex_in
            if x is None:
                raise GraphError(f"{self.prefix}.{name}: missing {PATH_IN_DOMAIN[name]} input")
            y = path(x, training=training, rng=rng)
            if record is not None:
                record[f"{self.prefix}.{name}"] = y.data.copy()
            (real_parts if PATH_OUT_DOMAIN[name] == "real" else complex_parts).append(y)
        real_out = concat(real_parts, axis=1) if real_parts else None
        complex_out = concat(complex_parts, axis=1) if complex_parts else None
        return real_out, complex_out

    def parameters(self):
        params = []
        for name in PATH_ORDER:
            if name in self.paths:
                params.extend(self.paths[name].parameters())
        return params


def block_forward(block: HybridBlock, real_in=None, complex_in=None, training=False, rng=None):
    return block(real_in, complex_in, training=training, rng=rng)


class _Head:
    def __init__(self, cfg: HeadConfig, real_ch, complex_ch, rng, prefix,
                 real_len=None, complex_len=None):
        self.cfg = cfg
        self.conversion = cfg.conversion
        source_ch = real_ch if cfg.domain == "real" else complex_ch
        length = real_len if cfg.domain == "real" else complex_len
        if self.conversion is not None:
            source = complex_ch if cfg.domain == "real" else real_ch
            length = complex_len if cfg.domain == "real" else real_len
            if cfg.domain == "real":
                source_ch = source * self.conversion.out_arity
            else:
                source_ch = source // self.conversion.in_arity
        if not source_ch:
            raise GraphError(f"required {cfg.domain} output is unreachable")
        in_features = source_ch
        if cfg.pooling == "flatten":
            if length is None:
                raise ConfigError(
                    "a flatten head needs a static input length; set input.length"
                )
            in_features = source_ch * length
        self.dense = Dense(cfg.domain, in_features, cfg.size, rng=rng, name=f"{prefix}.dense")

    def __call__(self, real_out, complex_out, record=None, prefix=""):
        x = real_out if self.cfg.domain == "real" else complex_out
        if self.conversion is not None:
            trunk = complex_out if self.cfg.domain == "real" else real_out
            if trunk is None:
                raise GraphError(f"required {self.cfg.domain} output is unreachable")
            x = cv.c2r(self.conversion, trunk) if self.cfg.domain == "real" else cv.r2c(self.conversion, trunk)
        if x is None:
            raise GraphError(f"required {self.cfg.domain} output is unreachable")
        if self.cfg.pooling == "mean":
            x = x.mean(axis=2)
        else:
            b = x.shape[0]
            x = x.transpose(0, 2, 1).reshape(b, -1)
        out = self.dense(x)
        if record is not None:
            record[f"head.{self.cfg.domain}"] = out.data.copy()
        return out

    def parameters(self):
        return self.dense.parameters()


class NetworkGraph:
    """Series composition of hybrid blocks with input adapters and heads."""

    def __init__(self, config: GraphConfig, seed=0):
        validate_config(config)
        self.config = config
        self.seed = seed
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        base_real = config.input.channels.get("real", 0) if config.input.domain != "complex" else 0
        base_complex = config.input.channels.get("complex", 0) if config.input.domain != "real" else 0
        real_ch, complex_ch = base_real, base_complex
        if config.input.to_real is not None and base_complex:
            real_ch += base_complex * config.input.to_real.out_arity
        if config.input.to_complex is not None and base_real:
            complex_ch += base_real // config.input.to_complex.in_arity
        real_len = complex_len = config.input.length
        self.blocks = []
        for i, bcfg in enumerate(config.blocks):
            block = HybridBlock(bcfg, real_ch, complex_ch, rng, prefix=f"b{i}",
                                real_len=real_len, complex_len=complex_len)
            self.blocks.append(block)
            real_ch = block.real_out_channels
            complex_ch = block.complex_out_channels
            real_len = block.real_out_length
            complex_len = block.complex_out_length
        self.heads = [
            _Head(hcfg, real_ch, complex_ch, rng, prefix=f"head_{hcfg.domain}",
                  real_len=real_len, complex_len=complex_len)
            for hcfg in config.heads
        ]

    def apply(self, inputs, training=False, rng=None, record=None):
        r = inputs.get("real") if self.config.input.domain != "complex" else None
        z = inputs.get("complex") if self.config.input.domain != "real" else None
        r0, z0 = r, z
        if self.config.input.to_real is not None and z0 is not None:
            converted = cv.c2r(self.config.input.to_real, z0)
            r = concat([r, converted], axis=1) if r is not None else converted
        if self.config.input.to_complex is not None and r0 is not None:
            converted = cv.r2c(self.config.input.to_complex, r0)
            z = concat([z, converted], axis=1) if z is not None else converted
        for block in self.blocks:
            r, z = block(r, z, training=training, rng=rng, record=record)
        return {
            head.cfg.domain: head(r, z, record=record)
            for head in self.heads
        }

    def parameters(self):
        params = []
        for block in self.blocks:
            params.extend(block.parameters())
        for head in self.heads:
            params.extend(head.parameters())
        return params


def network_forward(graph: NetworkGraph, inputs, training=False, rng=None, record=None):
    return graph.apply(inputs, training=training, rng=rng, record=record)


# -- tasks and training ---------------------------------------------------------------


@dataclass
class TaskSpec:
    """A dataset plus the contract a model must satisfy to solve it."""

    name: str
    input_domain: str
    output_domain: str
    n_outputs: int
    loss: str  # "cross_entropy" or "mse"
    y: np.ndarray
    splits: dict
    x_real: np.ndarray | None = None
    x_complex: np.ndarray | None = None
    input_channels: dict = field(default_factory=dict)
    input_length: int | None = None
    evaluate: object = None  # optional NAS evaluation override


@dataclass
class Hyperparams:
    lr: float = 1e-3
    epochs: int = 10
    batch_size: int = 32
    optimizer: str = "adam"
    seed: int = 0

    def to_json(self):
        return {
            "lr": self.lr, "epochs": self.epochs, "batch_size": self.batch_size,
            "optimizer": self.optimizer, "seed": self.seed,
        }


@dataclass
class TrainReport:
    param_count: int
    seed: int
    epochs: list
    test_loss: float | None = None
    test_accuracy: float | None = None
    aborted: bool = False
    wall_time: float = 0.0

    def to_json(self):
        return {
            "param_count": self.param_count,
            "seed": self.seed,
            "epochs": self.epochs,
            "test_loss": self.test_loss,
            "test_accuracy": self.test_accuracy,
            "aborted": self.aborted,
            "wall_time": self.wall_time,
        }

    @property
    def final_val_loss(self):
        return self.epochs[-1]["val_loss"]


def _batch_inputs(task, idx):
    inputs = {}
    if task.x_real is not None:
        inputs["real"] = Tensor(task.x_real[idx])
    if task.x_complex is not None:
        inputs["complex"] = Tensor(task.x_complex[idx])
    return inputs


def _batch_loss(model, task, idx, training=False, rng=None):
    out = model.apply(_batch_inputs(task, idx), training=training, rng=rng)["real"]
    if task.loss == "cross_entropy":
        return out, softmax_cross_entropy(out, task.y[idx])
    return out, mse(out, Tensor(task.y[idx]))


def evaluate_split(model, task, split, batch_size=256):
    """Mean loss (and accuracy for classification) over one split."""
    idx = np.asarray(task.splits[split])
    total, correct = 0.0, 0
    for lo in range(0, len(idx), batch_size):
        chunk = idx[lo:lo + batch_size]
        out, loss = _batch_loss(model, task, chunk, training=False)
        total += loss.item() * len(chunk)
        if task.loss == "cross_entropy":
            correct += int((out.data.argmax(axis=1) == task.y[chunk]).sum())
    loss = total / max(len(idx), 1)
    accuracy = correct / len(idx) if task.loss == "cross_entropy" and len(idx) else None
    return loss, accuracy


def train(model, task: TaskSpec, hp: Hyperparams, prune_callback=None) -> TrainReport:
    """Minibatch training, deterministic under ``hp.seed``.

    ``prune_callback(epoch, val_loss) -> bool`` may abort mid-run (used by
    the search pruner); the report is then flagged ``aborted``.
    """
    t0 = time.perf_counter()
    seq = np.random.SeedSequence((hp.seed, 0xB10C))
    batch_rng, dropout_rng = [np.random.default_rng(s) for s in seq.spawn(2)]
    params = model.parameters()
    opt = make_optimizer(hp.optimizer, params, hp.lr)
    train_idx = np.asarray(task.splits["train"])
    history = []
    train_loss, _ = evaluate_split(model, task, "train", hp.batch_size)
    val_loss, _ = evaluate_split(model, task, "val", hp.batch_size)
    history.append({"epoch": 0, "train_loss": train_loss, "val_loss": val_loss})
    aborted = False
    for epoch in range(1, hp.epochs + 1):
        order = batch_rng.permutation(len(train_idx))
        epoch_loss, seen = 0.0, 0
        for lo in range(0, len(order), hp.batch_size):
            chunk = train_idx[order[lo:lo + hp.batch_size]]
            opt.zero_grad()
            _, loss = _batch_loss(model, task, chunk, training=True, rng=dropout_rng)
            value = loss.item()
            if not np.isfinite(value):
                raise RuntimeError(
                    f"non-finite loss {value} at epoch {epoch} "
                    f"(lr={hp.lr}, optimizer={hp.optimizer})"
                )
            loss.backward()
            opt.step()
            epoch_loss += value * len(chunk)
            seen += len(chunk)
        val_loss, _ = evaluate_split(model, task, "val", hp.batch_size)
        history.append({
            "epoch": epoch,
            "train_loss": epoch_loss / max(seen, 1),
            "val_loss": val_loss,
        })
        if prune_callback is not None and prune_callback(epoch, val_loss):
            aborted = True
            break
    test_loss, test_accuracy = (None, None)
    if len(task.splits.get("test", ())) and not aborted:
        test_loss, test_accuracy = evaluate_split(model, task, "test", hp.batch_size)
    return TrainReport(
        param_count=count_parameters(model),
        seed=hp.seed,
        epochs=history,
        test_loss=test_loss,
        test_accuracy=test_accuracy,
        aborted=aborted,
        wall_time=time.perf_counter() - t0,
    )
