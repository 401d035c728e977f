"""Weight-matrix forensics and experiment reporting.

A trained real network that solves a complex-valued problem tends to grow
2x2 weight sub-blocks of the form [[a, -b], [b, a]] over interleaved re/im
input pairs, i.e. real-valued emulations of one complex multiply.  This
module extracts weight maps from dense layers, reorders output rows by
similarity so related rows sit together, fits every adjacent 2x2 block
against that template, and renders the maps as SVG heatmaps.  It also emits
the CSV/Markdown comparison tables used by the experiment CLI.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import datasets
from .tensor import Tensor


# -- weight maps -------------------------------------------------------------------


@dataclass
class WeightMap:
    """Normalized [out, in+1] weight matrix; column 0 is the bias."""

    matrix: np.ndarray
    permutation: np.ndarray  # row order relative to the original layer
    scale: float  # max-|entry| divisor used for normalization

    @property
    def n_out(self):
        return self.matrix.shape[0]


def weight_map_from_dense(layer) -> WeightMap:
    """Extract [bias | weights] from a real dense layer, scaled to [-1, 1]."""
    w = layer.weight.data
    if np.iscomplexobj(w):
        raise TypeError("use complex_layer_to_real_weightmap for complex layers")
    bias = layer.bias.data if layer.bias is not None else np.zeros(w.shape[0])
    matrix = np.concatenate([bias[:, None], w], axis=1)
    scale = float(np.abs(matrix).max()) or 1.0
    return WeightMap(matrix / scale, np.arange(w.shape[0]), scale)


def complex_layer_to_real_weightmap(layer) -> WeightMap:
    """Expand a complex dense/conv layer into its real-equivalent matrix.

    Every complex tap w acting on a complex input becomes the 2x2 block
    [[Re w, -Im w], [Im w, Re w]] over interleaved (re, im) columns; rows
    interleave the output's re/im pair.
    """
    w = layer.weight.data
    if not np.iscomplexobj(w):
        raise TypeError("expected a complex layer")
    flat = w.reshape(w.shape[0], -1)  # [out, taps]
    out_n, taps = flat.shape
    real = np.zeros((2 * out_n, 2 * taps))
    real[0::2, 0::2] = flat.real
    real[0::2, 1::2] = -flat.imag
    real[1::2, 0::2] = flat.imag
    real[1::2, 1::2] = flat.real
    bias = np.zeros(2 * out_n)
    if layer.bias is not None:
        bias[0::2] = layer.bias.data.real
        bias[1::2] = layer.bias.data.imag
    matrix = np.concatenate([bias[:, None], real], axis=1)
    scale = float(np.abs(matrix).max()) or 1.0
    return WeightMap(matrix / scale, np.arange(2 * out_n), scale)


def reorder_rows(weights: WeightMap) -> WeightMap:
    """Greedy chain ordering by cosine similarity over full rows.

    Starts from the most similar row pair and repeatedly appends the unplaced
    row most similar to the current chain end.  Ties break on the lower row
    index, so the permutation is deterministic.
    """
    m = weights.matrix
    n = m.shape[0]
    if n < 2:
        return WeightMap(m.copy(), weights.permutation.copy(), weights.scale)
    norms = np.linalg.norm(m, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = m / safe[:, None]
    sim = unit @ unit.T
    np.fill_diagonal(sim, -np.inf)
    start = np.unravel_index(np.argmax(sim), sim.shape)
    chain = [int(min(start)), int(max(start))]
    placed = set(chain)
    while len(chain) < n:
        tail = chain[-1]
        best, best_sim = -1, -np.inf
        for j in range(n):
            if j in placed:
                continue
            if sim[tail, j] > best_sim:
                best, best_sim = j, sim[tail, j]
        chain.append(best)
        placed.add(best)
    order = np.asarray(chain)
    return WeightMap(m[order], weights.permutation[order], weights.scale)


# -- complex block detection ----------------------------------------------------------


@dataclass
class BlockFit:
    """One 2x2 sub-block fitted against [[a, -b], [b, a]]."""

    rows: tuple
    cols: tuple  # input column pair (excluding the bias column)
    w_r: float
    w_i: float
    residual: float


@dataclass
class ComplexBlockReport:
    shape: tuple
    tolerance: float
    blocks: list = field(default_factory=list)

    def __len__(self):
        return len(self.blocks)


def _fit_block(block):
    """Orthogonal projection onto the complex-multiply template (closed form)."""
    w_r = (block[0, 0] + block[1, 1]) / 2.0
    w_i = (block[1, 0] - block[0, 1]) / 2.0
    template = np.array([[w_r, -w_i], [w_i, w_r]])
    norm = np.linalg.norm(block)
    if norm == 0.0:
        return w_r, w_i, 0.0
    return w_r, w_i, float(np.linalg.norm(block - template) / norm)


def detect_complex_blocks(weights, tolerance) -> ComplexBlockReport:
    """Scan adjacent row pairs and interleaved input column pairs.

    ``weights`` is a :class:`WeightMap` (bias column skipped) or a plain
    matrix without a bias column.  Reports every 2x2 block whose relative
    Frobenius residual against the complex-multiply template is below
    ``tolerance``; the residual is invariant to global scaling.
    """
    if not 0.0 < tolerance < 1.0:
        raise ValueError("tolerance must lie in (0, 1)")
    if isinstance(weights, WeightMap):
        matrix = weights.matrix[:, 1:]
        shape = weights.matrix.shape
    else:
        matrix = np.asarray(weights)
        shape = matrix.shape
    report = ComplexBlockReport(shape=shape, tolerance=tolerance)
    n_out, n_in = matrix.shape
    for i in range(n_out - 1):
        for j in range(0, n_in - 1, 2):
            block = matrix[i:i + 2, j:j + 2]
            w_r, w_i, residual = _fit_block(block)
            if residual < tolerance:
                report.blocks.append(BlockFit((i, i + 1), (j, j + 1), w_r, w_i, residual))
    return report


def bias_signs(weights: WeightMap):
    """Sign of the bias column per (reordered) output row."""
    return np.sign(weights.matrix[:, 0])


# -- phase sweep probing ----------------------------------------------------------------


def phase_sweep_probe(model, amplitude, frequency, n_points=181):
    """Sweep the phase parameter across [-pi, pi] and trace activations.

    Returns the sweep grid, the model outputs per point, and every recorded
    hidden activation as [n_points, units] traces.
    """
    grid = np.linspace(-math.pi, math.pi, n_points)
    predictors = np.stack([
        datasets.sinusoid_predictors(amplitude, frequency, p) for p in grid
    ])
    record = {}
    out = model(Tensor(predictors), record=record)
    traces = {name: np.asarray(values).reshape(n_points, -1) for name, values in record.items()}
    return {"phase": grid, "outputs": out.data, "activations": traces}


# -- rendering -----------------------------------------------------------------------


def _diverging_color(v):
    """[-1, 1] -> blue-white-red hex color."""
    v = float(np.clip(v, -1.0, 1.0))
    if v < 0:
        t = 1.0 + v
        r, g, b = int(60 + 195 * t), int(80 + 175 * t), 255
    else:
        t = 1.0 - v
        r, g, b = 255, int(80 + 175 * t), int(60 + 195 * t)
    return f"#{r:02x}{g:02x}{b:02x}"


def render_heatmap(weights, cell=12) -> str:
    """SVG heatmap of a weight map with a diverging color scale over [-1, 1]."""
    matrix = weights.matrix if isinstance(weights, WeightMap) else np.asarray(weights)
    if matrix.ndim != 2:
        raise ValueError("heatmap expects a 2-D matrix")
    rows, cols = matrix.shape
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{cols * cell}" '
        f'height="{rows * cell}" viewBox="0 0 {cols * cell} {rows * cell}">'
    ]
    for i in range(rows):
        for j in range(cols):
            parts.append(
                f'<rect x="{j * cell}" y="{i * cell}" width="{cell}" height="{cell}" '
                f'fill="{_diverging_color(matrix[i, j])}"><title>'
                f"[{i},{j}] = {matrix[i, j]:.4f}</title></rect>"
            )
    parts.append("</svg>")
    return "".join(parts)


# -- tabular reports ----------------------------------------------------------------------


NOISE_TABLE_COLUMNS = ("SNR", "Model", "Test loss", "Parameters")


def noise_comparison_table(rows):
    """CSV + Markdown for model-vs-model results under noise conditions.

    ``rows``: iterables of dicts with keys snr_db, model, test_loss, params.
    """
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(NOISE_TABLE_COLUMNS)
    md = ["| " + " | ".join(NOISE_TABLE_COLUMNS) + " |",
          "|" + "---|" * len(NOISE_TABLE_COLUMNS)]
    for row in rows:
        snr = "No noise" if row["snr_db"] is None else f"{row['snr_db']:g} dB"
        values = (snr, row["model"], f"{row['test_loss']:.4f}", str(row["params"]))
        writer.writerow(values)
        md.append("| " + " | ".join(values) + " |")
    return buf.getvalue(), "\n".join(md) + "\n"


def activation_choice_table(choices):
    """CSV of ranked per-block activation selections.

    ``choices``: list of dicts with 'rank' and 'blocks' (list of names).
    """
    buf = io.StringIO()
    writer = csv.writer(buf)
    width = max(len(c["blocks"]) for c in choices)
    writer.writerow(["rank"] + [str(i + 1) for i in range(width)])
    for c in sorted(choices, key=lambda c: c["rank"]):
        writer.writerow([c["rank"]] + list(c["blocks"]))
    return buf.getvalue()
