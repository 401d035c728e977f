"""Benchmark the convolution backends against each other.

Runs the forward pass and both backward passes for a spread of shapes in
both element domains, timing the compiled extension (when built) against the
numpy fallback.  Usage:

    python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from hybridnn import kernels

CASES = [
    # label, batch, in_ch, length, out_ch, kernel, groups
    ("small dense-ish", 64, 16, 36, 16, 1, 1),
    ("audio block", 32, 33, 160, 8, 5, 1),
    ("wide grouped", 16, 32, 481, 32, 9, 4),
    ("deep narrow", 128, 4, 99, 8, 3, 1),
]


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_case(mod, case, complex_dtype, repeats):
    _, b, c, length, o, k, groups = case
    rng = np.random.default_rng(0)
    shape_x, shape_w = (b, c, length), (o, c // groups, k)
    if complex_dtype:
        x = rng.normal(size=shape_x) + 1j * rng.normal(size=shape_x)
        w = rng.normal(size=shape_w) + 1j * rng.normal(size=shape_w)
    else:
        x = rng.normal(size=shape_x)
        w = rng.normal(size=shape_w)
    pads = ((k - 1) // 2, k // 2)
    y = mod.conv1d_forward(x, w, 1, pads[0], pads[1], groups)
    gy = np.ones_like(y)
    xc, wc = np.conj(x), np.conj(w)
    return {
        "forward": _time(lambda: mod.conv1d_forward(x, w, 1, pads[0], pads[1], groups), repeats),
        "grad_w": _time(lambda: mod.conv1d_grad_weight(gy, xc, k, 1, pads[0], groups), repeats),
        "grad_x": _time(lambda: mod.conv1d_grad_input(gy, wc, length, 1, pads[0], groups), repeats),
    }


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()
    backends = kernels.available_backends()
    print(f"selected backend: {kernels.BACKEND}; available: {', '.join(backends)}\n")
    header = f"{'case':<16} {'dtype':<8} {'pass':<8}" + "".join(f"{name:>12}" for name in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for case in CASES:
        for complex_dtype in (False, True):
            rows = {name: bench_case(mod, case, complex_dtype, args.repeats)
                    for name, mod in backends.items()}
            for pass_name in ("forward", "grad_w", "grad_x"):
                line = f"{case[0]:<16} {'complex' if complex_dtype else 'real':<8} {pass_name:<8}"
                for name in backends:
                    line += f"{rows[name][pass_name] * 1e3:>10.3f}ms"
                if len(backends) == 2:
                    ratio = rows["numpy"][pass_name] / rows["compiled"][pass_name]
                    line += f"{ratio:>9.2f}x"
                print(line)
    print("\n(speedup = numpy time / compiled time; >1 means the extension wins)")


if __name__ == "__main__":
    main()
