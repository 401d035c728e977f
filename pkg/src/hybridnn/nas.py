"""Phase-wise architecture search with parameter-count constraints.

The search walks a fixed sequence of phases: io customisation, block-count
selection, an iterative path-selection/dependency-check loop, structure
refinement (channels, kernels, optional functions), activation and domain
conversion choice, and finally hyperparameter choice.  Validation loss is
the sole objective through block-count selection; every later phase keeps
total parameter counts inside the configured [min, max] window, always
measured on the materialized network, never estimated.

Trials are recorded append-only (newline-delimited JSON when a path is
given); re-running with the same seed and config reproduces the trial
sequence exactly up to wall-clock timings.  Candidate proposal is pluggable:
the default sampler is seeded uniform random search, and a median pruner can
abort trials whose mid-training validation loss exceeds the running median.
"""

from __future__ import annotations

import json
import math
import threading
import time
from dataclasses import dataclass

import numpy as np

from . import activations as act
from . import conversion as cv
from .errors import GraphError, InfeasibleSearchError
from .graph import (
    BlockConfig,
    GraphConfig,
    HeadConfig,
    Hyperparams,
    InputConfig,
    NetworkGraph,
    PathConfig,
    TaskSpec,
    adapt_io,
    config_to_json,
    prune_dependencies,
    train,
)
from .layers import count_parameters

PHASES = (
    "Customisation",
    "BlockNumber",
    "InputSelection",
    "DependencyCheck",
    "StructureRefinement",
    "ActivationDCChoice",
    "HyperparameterChoice",
    "Done",
)


@dataclass
class SearchConfig:
    trials_per_phase: int = 8
    block_range: tuple = (2, 3, 4, 5, 6, 7)
    channel_choices: tuple = (4, 8, 16, 32)
    kernel_choices: tuple = (3, 5, 9)
    pool_choices: tuple = (None, 2)
    dropout_choices: tuple = (0.0, 0.1, 0.25)
    min_params: int = 0
    max_params: float = math.inf
    seed: int = 0
    epochs_per_trial: int = 4
    batch_size: int = 64
    preliminary_lr: float = 1e-3
    lr_range: tuple = (1e-4, 1e-2)
    optimizers: tuple = ("adam", "sgd")
    io_policy: str = "convert"  # or "prune": drop ports instead of converting
    iteration_cap: int = 5
    pruner: str | None = None  # None or "median"

    def to_json(self):
        return {
            "trials_per_phase": self.trials_per_phase,
            "block_range": list(self.block_range),
            "channel_choices": list(self.channel_choices),
            "kernel_choices": list(self.kernel_choices),
            "pool_choices": list(self.pool_choices),
            "dropout_choices": list(self.dropout_choices),
            "min_params": self.min_params,
            "max_params": None if math.isinf(self.max_params) else self.max_params,
            "seed": self.seed,
            "epochs_per_trial": self.epochs_per_trial,
            "batch_size": self.batch_size,
            "preliminary_lr": self.preliminary_lr,
            "lr_range": list(self.lr_range),
            "optimizers": list(self.optimizers),
            "io_policy": self.io_policy,
            "iteration_cap": self.iteration_cap,
            "pruner": self.pruner,
        }


@dataclass
class Trial:
    trial_id: int
    phase: str
    architecture: dict
    hyperparams: dict
    validation_loss: float
    param_count: int
    status: str  # "complete", "pruned", or "failed"
    wall_time: float = 0.0

    def to_json(self):
        return {
            "trial_id": self.trial_id,
            "phase": self.phase,
            "architecture": self.architecture,
            "hyperparams": self.hyperparams,
            "validation_loss": None if math.isinf(self.validation_loss) else self.validation_loss,
            "param_count": self.param_count,
            "status": self.status,
            "wall_time": self.wall_time,
        }

    def deterministic_fields(self):
        """Everything except wall-clock time, for reproducibility checks."""
        record = self.to_json()
        record.pop("wall_time")
        return record


class TrialStore:
    """Append-only trial log; concurrent appends are serialized by a lock."""

    def __init__(self, path=None):
        self.path = path
        self.trials = []
        self._lock = threading.Lock()

    def append(self, trial: Trial):
        with self._lock:
            self.trials.append(trial)
            if self.path is not None:
                with open(self.path, "a") as handle:
                    handle.write(json.dumps(trial.to_json()) + "\n")

    @staticmethod
    def load(path):
        records = []
        with open(path) as handle:
            for line in handle:
                if line.strip():
                    records.append(json.loads(line))
        return records


class RandomSampler:
    """Seeded uniform random proposals; ignores the trial history."""

    def __init__(self, rng):
        self.rng = rng

    def propose(self, trial_history, space):
        candidate = {}
        for name, spec in space.items():
            kind = spec[0]
            if kind == "choice":
                options = spec[1]
                candidate[name] = options[int(self.rng.integers(len(options)))]
            elif kind == "log_uniform":
                lo, hi = spec[1], spec[2]
                candidate[name] = float(np.exp(self.rng.uniform(np.log(lo), np.log(hi))))
            else:
                raise ValueError(f"unknown sample space kind {kind!r}")
        return candidate


class MedianPruner:
    """Abort trials whose validation loss exceeds the running median.

    The comparison pool is the set of already-completed trials' validation
    losses at the same epoch, so the first trial can never be aborted.
    """

    def __init__(self):
        self.history = {}  # epoch -> list of recorded losses

    def callback(self):
        def should_prune(epoch, val_loss):
            pool = self.history.get(epoch)
            if not pool:
                return False
            return val_loss > float(np.median(pool))

        return should_prune

    def register(self, epoch_history):
        for entry in epoch_history:
            self.history.setdefault(entry["epoch"], []).append(entry["val_loss"])


@dataclass
class SearchState:
    phase: str
    task: TaskSpec
    config: SearchConfig
    rng: np.random.Generator
    store: TrialStore
    sampler: RandomSampler
    best_architecture: GraphConfig | None = None
    best_loss: float = math.inf
    best_param_count: int = 0
    best_hyperparams: Hyperparams | None = None
    next_trial_id: int = 0
    pruner: MedianPruner | None = None
    best_infeasible: Trial | None = None

    @property
    def trials(self):
        return self.store.trials

    def to_json(self):
        return {
            "phase": self.phase,
            "best_architecture": config_to_json(self.best_architecture),
            "best_validation_loss": self.best_loss,
            "best_param_count": self.best_param_count,
            "best_hyperparams": self.best_hyperparams.to_json(),
            "constraints": {
                "min_params": self.config.min_params,
                "max_params": None if math.isinf(self.config.max_params) else self.config.max_params,
            },
            "seed": self.config.seed,
            "n_trials": len(self.trials),
        }


# -- architecture template ------------------------------------------------------------


def base_architecture(task: TaskSpec, n_blocks: int) -> GraphConfig:
    """All-four-path template prior to customisation."""
    blocks = []
    for _ in range(n_blocks):
        blocks.append(BlockConfig(paths={
            "RR": PathConfig(8, 5, activation="ReLU"),
            "RC": PathConfig(8, 5, activation="ReLU",
                             conversion=cv.ConversionSpec("R2C", "Real")),
            "CR": PathConfig(8, 5, activation="cTanh",
                             conversion=cv.ConversionSpec("C2R", "Mag")),
            "CC": PathConfig(8, 5, activation="cTanh"),
        }))
    heads = [HeadConfig(domain=d, size=task.n_outputs)
             for d in (("real", "complex") if task.output_domain == "both" else (task.output_domain,))]
    return GraphConfig(
        input=InputConfig(domain=task.input_domain, channels=dict(task.input_channels),
                          length=task.input_length),
        blocks=blocks,
        heads=heads,
    )


# -- evaluation -------------------------------------------------------------------------


def _feasible(state, count):
    return state.config.min_params <= count <= state.config.max_params


def _evaluate_candidate(state: SearchState, graph_config: GraphConfig,
                        hp: Hyperparams | None, enforce_constraints: bool) -> Trial:
    trial_id = state.next_trial_id
    state.next_trial_id += 1
    hp = hp or Hyperparams(
        lr=state.config.preliminary_lr,
        epochs=state.config.epochs_per_trial,
        batch_size=state.config.batch_size,
        seed=trial_id,
    )
    hp.seed = int(np.random.SeedSequence((state.config.seed, trial_id)).generate_state(1)[0])
    start = time.perf_counter()
    arch_json = config_to_json(graph_config)

    def finish(val_loss, count, status):
        trial = Trial(
            trial_id=trial_id, phase=state.phase, architecture=arch_json,
            hyperparams=hp.to_json(), validation_loss=val_loss,
            param_count=count, status=status,
            wall_time=time.perf_counter() - start,
        )
        state.store.append(trial)
        return trial

    if state.task.evaluate is not None:
        val_loss, count = state.task.evaluate(graph_config, hp, hp.seed)
        if enforce_constraints and not _feasible(state, count):
            return finish(math.inf, count, "failed")
        return finish(val_loss, count, "complete")
    try:
        net = NetworkGraph(graph_config, seed=hp.seed)
    except GraphError:
        return finish(math.inf, 0, "failed")
    count = count_parameters(net)
    if enforce_constraints and not _feasible(state, count):
        return finish(math.inf, count, "failed")
    callback = state.pruner.callback() if state.pruner is not None else None
    report = train(net, state.task, hp, prune_callback=callback)
    if report.aborted:
        return finish(report.final_val_loss, count, "pruned")
    if state.pruner is not None:
        state.pruner.register(report.epochs)
    return finish(report.final_val_loss, count, "complete")


def _consider(state: SearchState, trial: Trial, graph_config: GraphConfig,
              hp: Hyperparams | None, enforce_constraints: bool):
    if trial.status != "complete":
        if enforce_constraints and not _feasible(state, trial.param_count):
            if (state.best_infeasible is None
                    or trial.param_count < state.best_infeasible.param_count):
                state.best_infeasible = trial
        return False
    incumbent_ok = state.best_architecture is not None and (
        not enforce_constraints or _feasible(state, state.best_param_count)
    )
    if trial.validation_loss < state.best_loss or not incumbent_ok:
        state.best_architecture = graph_config
        state.best_loss = trial.validation_loss
        state.best_param_count = trial.param_count
        if hp is not None:
            state.best_hyperparams = hp
        return True
    return False


# -- phases -----------------------------------------------------------------------------


def _measured_count(config: GraphConfig) -> int:
    """Parameter count of the materialized network (never an estimate)."""
    return count_parameters(NetworkGraph(config, seed=0))


def phase_customisation(state: SearchState) -> SearchState:
    """Fit the template's io ports to the task and drop dead routing."""
    state.phase = "Customisation"
    template = base_architecture(state.task, state.config.block_range[0])
    state.best_architecture = adapt_io(
        template, state.task.input_domain, state.task.output_domain,
        policy=state.config.io_policy,
    )
    state.best_param_count = _measured_count(state.best_architecture)
    return state


def phase_block_number(state: SearchState) -> SearchState:
    """Pick the block count by validation loss (no parameter constraint yet)."""
    state.phase = "BlockNumber"
    candidates = list(state.config.block_range)
    if len(candidates) == 1:
        # nothing to compare; adopt without spending training budget
        config = adapt_io(
            base_architecture(state.task, candidates[0]),
            state.task.input_domain, state.task.output_domain,
            policy=state.config.io_policy,
        )
        state.best_architecture = config
        state.best_param_count = _measured_count(config)
        return state
    for n_blocks in candidates:
        config = adapt_io(
            base_architecture(state.task, n_blocks),
            state.task.input_domain, state.task.output_domain,
            policy=state.config.io_policy,
        )
        trial = _evaluate_candidate(state, config, None, enforce_constraints=False)
        _consider(state, trial, config, None, enforce_constraints=False)
    return state


def _random_path_mask(state, config):
    """Propose per-block path keep-masks over the currently present paths."""
    proposal = config.clone()
    for block in proposal.blocks:
        names = list(block.paths)
        space = {name: ("choice", (True, False)) for name in names}
        keep = state.sampler.propose(state.trials, space)
        if not any(keep.values()):
            keep[names[int(state.rng.integers(len(names)))]] = True
        block.paths = {n: p for n, p in block.paths.items() if keep[n]}
    return proposal


def phase_input_selection(state: SearchState) -> SearchState:
    """Trial per-block path on/off masks; proposals are pruned before training."""
    state.phase = "InputSelection"
    base = state.best_architecture
    for _ in range(state.config.trials_per_phase):
        proposal = _random_path_mask(state, base)
        try:
            proposal = prune_dependencies(proposal)
        except GraphError:
            continue  # mask disconnects the required outputs; not a viable trial
        trial = _evaluate_candidate(state, proposal, None, enforce_constraints=True)
        _consider(state, trial, proposal, None, enforce_constraints=True)
    return state


def phase_dependency_check(state: SearchState) -> bool:
    """Prune the incumbent; returns True if anything was removed."""
    state.phase = "DependencyCheck"
    pruned = prune_dependencies(state.best_architecture)
    changed = config_to_json(pruned) != config_to_json(state.best_architecture)
    state.best_architecture = pruned
    return changed


def _structure_space(state, config):
    space = {}
    for i, block in enumerate(config.blocks):
        space[f"b{i}.pool"] = ("choice", state.config.pool_choices)
        for name, path in block.paths.items():
            arity = path.conversion.in_arity if name == "RC" else 1
            channels = tuple(c for c in state.config.channel_choices if c % arity == 0)
            space[f"b{i}.{name}.c"] = ("choice", channels or (arity,))
            space[f"b{i}.{name}.k"] = ("choice", state.config.kernel_choices)
            space[f"b{i}.{name}.dropout"] = ("choice", state.config.dropout_choices)
            if name in ("CC", "CR"):
                space[f"b{i}.{name}.norm"] = ("choice", (False, True))
    return space


def phase_structure_refinement(state: SearchState) -> SearchState:
    """Sample channels, kernels, and optional functions within the budget."""
    state.phase = "StructureRefinement"
    base = state.best_architecture
    found_feasible = state.best_architecture is not None and _feasible(state, state.best_param_count)
    for _ in range(state.config.trials_per_phase):
        choice = state.sampler.propose(state.trials, _structure_space(state, base))
        proposal = base.clone()
        for i, block in enumerate(proposal.blocks):
            for name, path in block.paths.items():
                path.out_channels = choice[f"b{i}.{name}.c"]
                path.kernel = choice[f"b{i}.{name}.k"]
                path.dropout = choice[f"b{i}.{name}.dropout"]
                path.pool = choice[f"b{i}.pool"]
                if name in ("CC", "CR"):
                    path.norm = choice[f"b{i}.{name}.norm"]
                if path.groups > 1 and path.out_channels % path.groups:
                    path.groups = 1
        trial = _evaluate_candidate(state, proposal, None, enforce_constraints=True)
        if trial.status == "complete":
            found_feasible = True
        _consider(state, trial, proposal, None, enforce_constraints=True)
    if not found_feasible:
        raise InfeasibleSearchError(
            f"no architecture satisfies {state.config.min_params} <= parameters "
            f"<= {state.config.max_params}",
            best_infeasible=state.best_infeasible,
        )
    return state


def _activation_space(state, config):
    space = {}
    real_names = act.REAL_ACTIVATIONS
    complex_names = act.COMPLEX_ACTIVATIONS
    for i, block in enumerate(config.blocks):
        for name, path in block.paths.items():
            if name == "RR":
                space[f"b{i}.RR.act"] = ("choice", real_names)
            elif name == "RC":
                space[f"b{i}.RC.act"] = ("choice", real_names + (act.NO_ACTIVATION_NAME,))
                kinds = tuple(k for k, a in cv.R2C_ARITY.items() if path.out_channels % a == 0)
                space[f"b{i}.RC.conv"] = ("choice", kinds)
            elif name == "CC":
                space[f"b{i}.CC.act"] = ("choice", complex_names)
            else:
                space[f"b{i}.CR.act"] = ("choice", complex_names + (act.NO_ACTIVATION_NAME,))
                space[f"b{i}.CR.conv"] = ("choice", tuple(cv.C2R_OUTPUTS))
    return space


def phase_activation_dc_choice(state: SearchState) -> SearchState:
    """Sample activation names and domain conversion kinds per path."""
    state.phase = "ActivationDCChoice"
    base = state.best_architecture
    for _ in range(state.config.trials_per_phase):
        choice = state.sampler.propose(state.trials, _activation_space(state, base))
        proposal = base.clone()
        for i, block in enumerate(proposal.blocks):
            for name, path in block.paths.items():
                path.activation = choice[f"b{i}.{name}.act"]
                if name == "RC":
                    path.conversion = cv.ConversionSpec("R2C", choice[f"b{i}.RC.conv"])
                elif name == "CR":
                    path.conversion = cv.ConversionSpec("C2R", choice[f"b{i}.CR.conv"])
        trial = _evaluate_candidate(state, proposal, None, enforce_constraints=True)
        _consider(state, trial, proposal, None, enforce_constraints=True)
    return state


def phase_hyperparameter_choice(state: SearchState) -> SearchState:
    """Sample the learning rate (log-uniform) and the optimizer kind."""
    state.phase = "HyperparameterChoice"
    base = state.best_architecture
    for _ in range(state.config.trials_per_phase):
        choice = state.sampler.propose(state.trials, {
            "lr": ("log_uniform", *state.config.lr_range),
            "optimizer": ("choice", state.config.optimizers),
        })
        hp = Hyperparams(
            lr=choice["lr"], epochs=state.config.epochs_per_trial,
            batch_size=state.config.batch_size, optimizer=choice["optimizer"],
        )
        trial = _evaluate_candidate(state, base, hp, enforce_constraints=True)
        _consider(state, trial, base, hp, enforce_constraints=True)
    return state


def run_search(task: TaskSpec, config: SearchConfig, store_path=None) -> SearchState:
    """Execute all phases in order and return the final state.

    The only permitted cycle is InputSelection <-> DependencyCheck, capped at
    ``config.iteration_cap`` rounds.  Raises
    :class:`~hybridnn.errors.InfeasibleSearchError` when the parameter window
    admits no architecture; the error carries the best infeasible trial.
    """
    state = SearchState(
        phase=PHASES[0],
        task=task,
        config=config,
        rng=np.random.default_rng(np.random.SeedSequence((config.seed, 0xA5))),
        store=TrialStore(store_path),
        sampler=None,
        pruner=MedianPruner() if config.pruner == "median" else None,
    )
    state.sampler = RandomSampler(state.rng)
    state.best_hyperparams = Hyperparams(
        lr=config.preliminary_lr, epochs=config.epochs_per_trial,
        batch_size=config.batch_size,
    )
    phase_customisation(state)
    phase_block_number(state)
    for _ in range(config.iteration_cap):
        before = config_to_json(state.best_architecture)
        phase_input_selection(state)
        phase_dependency_check(state)
        if config_to_json(state.best_architecture) == before:
            break  # mask fixpoint
    phase_structure_refinement(state)
    phase_activation_dc_choice(state)
    phase_hyperparameter_choice(state)
    state.phase = "Done"
    # the result must already be minimal: pruning it again is a no-op
    assert config_to_json(prune_dependencies(state.best_architecture)) == config_to_json(
        state.best_architecture
    )
    return state
