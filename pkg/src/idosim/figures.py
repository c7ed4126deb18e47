"""Figure rendering for the report path.

Each renderer takes the same row data the delimited writers receive and
saves a PNG next to it. Rendering is presentation only; nothing here feeds
back into the numerics.
"""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _grouped(rows, key_col, x_col, y_col):
    series = defaultdict(list)
    for row in rows:
        series[row[key_col]].append((row[x_col], row[y_col]))
    return series


def sweep_figure(rows, path, ylabel: str):
    """Metric vs. swept parameter, one line per label."""
    if not rows:
        return
    param = rows[0][0]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for name, points in _grouped(rows, 3, 1, 4).items():
        xs, ys = zip(*points)
        ax.plot(xs, ys, marker="o", markersize=3, linewidth=1.2, label=name)
    ax.set_xlabel(param)
    ax.set_ylabel(ylabel)
    ax.grid(True, linestyle="--", alpha=0.5)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def trace_figure(rows, path, oracle: dict | None = None):
    """Learning-trace estimates vs. stage, one line per table index,
    with dashed oracle levels when available."""
    if not rows:
        return
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for name, points in _grouped(rows, 2, 0, 3).items():
        xs, ys = zip(*points)
        line, = ax.plot(xs, ys, linewidth=1.0, label=str(name))
        if oracle and name in oracle:
            ax.axhline(oracle[name], color=line.get_color(), linestyle="--",
                       linewidth=0.8, alpha=0.7)
    ax.set_xlabel("inspection stage")
    ax.set_ylabel("estimate")
    ax.grid(True, linestyle="--", alpha=0.5)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def value_table_figure(table, path, max_bars: int = 48):
    """Bar chart of a value table, truncated for very large tables."""
    rows = table.rows()[:max_bars]
    if not rows:
        return
    names, values = zip(*rows)
    fig, ax = plt.subplots(figsize=(max(6.4, 0.3 * len(names)), 4.2))
    ax.bar(range(len(values)), values)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel(f"{table.kind} value")
    ax.grid(True, axis="y", linestyle="--", alpha=0.5)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
