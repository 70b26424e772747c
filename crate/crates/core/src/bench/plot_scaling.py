"""Plot mean evaluations against problem size from a sweep summary.json.

Usage: python plot_scaling.py summary.json [out.png]
"""
import json
import math
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main():
    path = sys.argv[1] if len(sys.argv) > 1 else "summary.json"
    out = sys.argv[2] if len(sys.argv) > 2 else "scaling.png"
    with open(path) as f:
        summary = json.load(f)
    xs = [s["size"] for s in summary["sizes"]]
    ys = [s["mean_evals"] for s in summary["sizes"]]
    es = [s["std_evals"] for s in summary["sizes"]]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(xs, ys, yerr=es, fmt="o", label=summary["problem"])
    fit = summary.get("fit")
    if fit:
        grid = [xs[0] * (xs[-1] / xs[0]) ** (i / 50) for i in range(51)]
        ax.plot(grid, [fit["a"] * x ** fit["b"] * math.log(x) for x in grid],
                label="a x^%.2f log x" % fit["b"])
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("problem size")
    ax.set_ylabel("evaluations")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=120)


if __name__ == "__main__":
    main()
