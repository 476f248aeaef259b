"""Objective-space scatter plots for finished runs.

One SVG per run directory: every evaluated point colored by repetition,
non-dominated points emphasized in bold with black edges.  The front points
are also embedded verbatim in the SVG as a machine-readable comment so the
plotted set can be cross-checked against the front CSVs.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .runner import read_front_rows  # noqa: E402

FRONT_MARKER = "FRONT_POINTS="


class MissingData(Exception):
    pass


def _load_run(run_dir: Path):
    rep_dirs = sorted(run_dir.glob("rep_*"))
    if not rep_dirs:
        raise MissingData(f"no repetition directories under {run_dir}")
    reps = []
    for rep_dir in rep_dirs:
        history = rep_dir / "history.csv"
        front = rep_dir / "front.csv"
        if not history.exists() or not front.exists():
            raise MissingData(f"missing CSVs under {rep_dir}")
        hist_rows = read_front_rows(history)
        front_rows = read_front_rows(front)
        if not front_rows:
            raise MissingData(f"empty front file {front}")
        reps.append((rep_dir.name, hist_rows, front_rows))
    return reps


def plot(run_dir, out_path=None) -> Path:
    """Render the objective-space scatter; returns the SVG path."""
    run_dir = Path(run_dir)
    reps = _load_run(run_dir)
    out_path = Path(out_path) if out_path else run_dir / "pareto.svg"

    plt.rcParams["svg.hashsalt"] = "btrecovery"
    fig, ax = plt.subplots(figsize=(7, 5))
    cmap = plt.get_cmap("tab10")
    front_points = []
    for idx, (name, hist_rows, front_rows) in enumerate(reps):
        color = cmap(idx % 10)
        xs = [float(r["mean_insertion_reward"]) for r in hist_rows]
        ys = [float(r["mean_force_reward"]) for r in hist_rows]
        ax.scatter(xs, ys, s=14, alpha=0.35, color=color, label=name)
        fx = [float(r["mean_insertion_reward"]) for r in front_rows]
        fy = [float(r["mean_force_reward"]) for r in front_rows]
        ax.scatter(fx, fy, s=70, color=color, edgecolors="black",
                   linewidths=1.2, zorder=3)
        front_points.extend(
            {"repetition": name, "insertion_reward": x, "force_reward": y}
            for x, y in zip(fx, fy))

    ax.set_xlabel("insertion reward")
    ax.set_ylabel("force reward")
    ax.set_title(f"objective trade-off: {run_dir.name}")
    ax.legend(loc="lower left", fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)

    _embed_front(out_path, front_points)
    return out_path


def _embed_front(svg_path: Path, front_points) -> None:
    payload = json.dumps(front_points, sort_keys=True)
    text = svg_path.read_text()
    head, sep, tail = text.partition("?>")
    comment = f"\n<!--{FRONT_MARKER}{payload}-->"
    svg_path.write_text(head + sep + comment + tail if sep else text + comment)


def read_embedded_front(svg_path) -> list:
    """Recover the front points embedded by :func:`plot`."""
    text = Path(svg_path).read_text()
    start = text.find(FRONT_MARKER)
    if start < 0:
        raise MissingData(f"no embedded front data in {svg_path}")
    start += len(FRONT_MARKER)
    end = text.index("-->", start)
    return json.loads(text[start:end])
