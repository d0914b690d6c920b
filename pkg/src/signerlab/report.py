"""Human-readable renderings of audit, sweep, eval, and experiment records.

Every report artifact is a line-record file whose first record names its
kind; ``render_report`` turns any of them back into a text table and a
matplotlib figure saved next to the delimited output.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .clustering import SweepRow
from .detector import EvalResult
from .errors import ParseError
from .experiment import ExperimentResult, ExperimentSummary
from .io import read_records, write_records
from .partitioning import OverlapReport, TestSubdivision
from .types import PARTITION_NAMES

OVERLAP_KIND = "overlap_report"
SWEEP_KIND = "sweep"
EVAL_KIND = "eval"
EXPERIMENT_KIND = "experiment"
HISTORY_KIND = "history"


# -- record serialization ------------------------------------------------------


def overlap_records(report: OverlapReport) -> list[dict[str, Any]]:
    records: list[dict[str, Any]] = [{"kind": OVERLAP_KIND}]
    for name in PARTITION_NAMES:
        records.append(
            {
                "record": "partition",
                "name": name,
                "n_videos": report.n_videos[name],
                "n_signers": report.n_signers[name],
                "hours": report.hours[name],
                "garbage_videos": report.garbage_videos[name],
                "exclusive_signers": report.exclusive[name],
            }
        )
    for (a, b), count in sorted(report.pairwise.items()):
        records.append({"record": "pair", "a": a, "b": b, "shared_signers": count})
    records.append({"record": "triple", "shared_signers": report.triple})
    return records


def parse_overlap_records(records: list[dict[str, Any]]) -> OverlapReport:
    partitions = {r["name"]: r for r in records if r.get("record") == "partition"}
    pairs = {
        (r["a"], r["b"]): int(r["shared_signers"])
        for r in records
        if r.get("record") == "pair"
    }
    triple = next(
        int(r["shared_signers"]) for r in records if r.get("record") == "triple"
    )
    return OverlapReport(
        signer_sets={name: set() for name in PARTITION_NAMES},
        pairwise=pairs,
        triple=triple,
        exclusive={
            n: int(partitions[n]["exclusive_signers"]) for n in PARTITION_NAMES
        },
        hours={n: float(partitions[n]["hours"]) for n in PARTITION_NAMES},
        n_videos={n: int(partitions[n]["n_videos"]) for n in PARTITION_NAMES},
        n_signers={n: int(partitions[n]["n_signers"]) for n in PARTITION_NAMES},
        garbage_videos={
            n: int(partitions[n]["garbage_videos"]) for n in PARTITION_NAMES
        },
    )


def sweep_records(rows: Sequence[SweepRow]) -> list[dict[str, Any]]:
    records: list[dict[str, Any]] = [{"kind": SWEEP_KIND}]
    for row in rows:
        records.append(
            {
                "epsilon": row.epsilon,
                "n_signers": row.n_signers,
                "garbage_videos": row.garbage_videos,
                "accuracy": row.accuracy,
                "noise_rows": row.noise_rows,
            }
        )
    return records


def parse_sweep_records(records: list[dict[str, Any]]) -> list[SweepRow]:
    return [
        SweepRow(
            epsilon=float(r["epsilon"]),
            n_signers=int(r["n_signers"]),
            garbage_videos=int(r["garbage_videos"]),
            accuracy=float(r["accuracy"]),
            noise_rows=int(r["noise_rows"]),
        )
        for r in records
        if "epsilon" in r
    ]


def eval_records(result: EvalResult, partition: str = "test") -> list[dict[str, Any]]:
    return [
        {"kind": EVAL_KIND},
        {
            "partition": partition,
            "accuracy": result.accuracy,
            "tp": result.tp,
            "fp": result.fp,
            "tn": result.tn,
            "fn": result.fn,
            "n_units": result.n_units,
        },
    ]


def parse_eval_records(records: list[dict[str, Any]]) -> list[tuple[str, EvalResult]]:
    out = []
    for r in records:
        if "accuracy" not in r:
            continue
        out.append(
            (
                str(r.get("partition", "test")),
                EvalResult(
                    accuracy=float(r["accuracy"]),
                    tp=int(r["tp"]),
                    fp=int(r["fp"]),
                    tn=int(r["tn"]),
                    fn=int(r["fn"]),
                    n_units=int(r["n_units"]),
                ),
            )
        )
    return out


def experiment_records(summary: ExperimentSummary) -> list[dict[str, Any]]:
    records: list[dict[str, Any]] = [{"kind": EXPERIMENT_KIND}]
    for r in summary.results:
        records.append(
            {
                "record": "run",
                "seed": r.seed,
                "acc_with_overlap": r.acc_with_overlap,
                "acc_no_overlap": r.acc_no_overlap,
                "absolute_gap": r.absolute_gap,
                "relative_decrease": r.relative_decrease,
            }
        )
    records.append(
        {
            "record": "summary",
            "median_gap": summary.median_gap,
            "median_relative_decrease": summary.median_relative_decrease,
        }
    )
    return records


def parse_experiment_records(records: list[dict[str, Any]]) -> ExperimentSummary:
    runs = tuple(
        ExperimentResult(
            seed=int(r["seed"]),
            acc_with_overlap=float(r["acc_with_overlap"]),
            acc_no_overlap=float(r["acc_no_overlap"]),
            absolute_gap=float(r["absolute_gap"]),
            relative_decrease=float(r["relative_decrease"]),
        )
        for r in records
        if r.get("record") == "run"
    )
    summary = next(r for r in records if r.get("record") == "summary")
    return ExperimentSummary(
        results=runs,
        median_gap=float(summary["median_gap"]),
        median_relative_decrease=float(summary["median_relative_decrease"]),
    )


def history_records(history: Sequence[float]) -> list[dict[str, Any]]:
    records: list[dict[str, Any]] = [{"kind": HISTORY_KIND}]
    records.extend(
        {"epoch": i, "dev_accuracy": acc} for i, acc in enumerate(history)
    )
    return records


def subdivision_records(sub: TestSubdivision) -> list[dict[str, Any]]:
    return [
        {
            "with_overlap": sub.with_overlap,
            "no_overlap": sub.no_overlap,
            "stats": sub.stats,
        }
    ]


# -- text rendering -------------------------------------------------------------


def format_overlap_text(report: OverlapReport) -> str:
    lines = ["Signer overlap audit"]
    for name in PARTITION_NAMES:
        lines.append(
            f"  {name:<5} {report.n_signers[name]:>5} signers  "
            f"{report.hours[name]:>8.2f} h  {report.n_videos[name]:>5} videos  "
            f"({report.garbage_videos[name]} garbage)"
        )
    lines.append("  shared signers (Venn):")
    for (a, b), count in sorted(report.pairwise.items()):
        lines.append(f"    {a} ∩ {b}: {count}")
    lines.append(f"    train ∩ dev ∩ test: {report.triple}")
    lines.append(
        "    exclusive: "
        + "  ".join(f"{n} {report.exclusive[n]}" for n in PARTITION_NAMES)
    )
    lines.append(
        "  verdict: "
        + ("signer-disjoint" if report.is_disjoint() else "OVERLAP PRESENT")
    )
    return "\n".join(lines)


def format_sweep_table(rows: Sequence[SweepRow]) -> str:
    lines = [
        "Epsilon   Signers   Garbage videos   Noise rows   Accuracy [%]",
        "-" * 62,
    ]
    for row in rows:
        lines.append(
            f"{row.epsilon:<9.4f} {row.n_signers:<9d} {row.garbage_videos:<16d} "
            f"{row.noise_rows:<12d} {100.0 * row.accuracy:.1f}"
        )
    return "\n".join(lines)


def format_eval_text(results: list[tuple[str, EvalResult]]) -> str:
    lines = ["Partition   Accuracy [%]   TP     FP     TN     FN     Units"]
    for partition, r in results:
        lines.append(
            f"{partition:<11} {100.0 * r.accuracy:<14.2f} {r.tp:<6d} {r.fp:<6d} "
            f"{r.tn:<6d} {r.fn:<6d} {r.n_units}"
        )
    return "\n".join(lines)


def format_experiment_text(summary: ExperimentSummary) -> str:
    lines = [
        "Overlap effect (video-random vs signer-disjoint test accuracy)",
        "run   with overlap [%]   no overlap [%]   gap [pts]   rel. decrease [%]",
    ]
    for k, r in enumerate(summary.results):
        lines.append(
            f"{k:<5d} {100 * r.acc_with_overlap:<18.2f} "
            f"{100 * r.acc_no_overlap:<16.2f} {r.absolute_gap:<11.2f} "
            f"{r.relative_decrease:.2f}"
        )
    lines.append(
        f"median gap: {summary.median_gap:.2f} points   "
        f"median relative decrease: {summary.median_relative_decrease:.2f}%"
    )
    return "\n".join(lines)


# -- figures --------------------------------------------------------------------


def plot_overlap(report: OverlapReport, path: str | Path) -> None:
    """Three-circle diagram with per-set and shared signer counts."""
    fig, ax = plt.subplots(figsize=(6, 5))
    centers = {"train": (0.5, 0.62), "dev": (0.36, 0.38), "test": (0.64, 0.38)}
    colors = {"train": "tab:gray", "dev": "tab:blue", "test": "tab:red"}
    for name, (cx, cy) in centers.items():
        ax.add_patch(
            plt.Circle((cx, cy), 0.26, alpha=0.3, color=colors[name], ec="black")
        )
        ax.annotate(
            f"{name}\n{report.n_signers[name]} signers\n{report.hours[name]:.2f} h",
            (cx, cy + (0.12 if name == "train" else -0.12)),
            ha="center",
            fontsize=10,
        )
    mids = {
        ("train", "dev"): (0.38, 0.52),
        ("train", "test"): (0.62, 0.52),
        ("dev", "test"): (0.5, 0.33),
    }
    for pair, (mx, my) in mids.items():
        ax.annotate(
            str(report.pairwise[pair]), (mx, my), ha="center", fontsize=12, weight="bold"
        )
    ax.annotate(str(report.triple), (0.5, 0.46), ha="center", fontsize=12)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_aspect("equal")
    ax.axis("off")
    ax.set_title("Signers per partition and shared across partitions")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_sweep(rows: Sequence[SweepRow], path: str | Path) -> None:
    eps = [r.epsilon for r in rows]
    fig, ax1 = plt.subplots(figsize=(7, 4.5))
    ax1.plot(eps, [100 * r.accuracy for r in rows], "o-", color="tab:blue")
    ax1.set_xlabel("epsilon")
    ax1.set_ylabel("clustering accuracy [%]", color="tab:blue")
    ax2 = ax1.twinx()
    ax2.plot(eps, [r.garbage_videos for r in rows], "s--", color="tab:red")
    ax2.set_ylabel("videos in garbage class", color="tab:red")
    ax1.set_title("Epsilon sweep")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_eval(results: list[tuple[str, EvalResult]], path: str | Path) -> None:
    fig, axes = plt.subplots(
        1, max(len(results), 1), figsize=(4 * max(len(results), 1), 3.8)
    )
    if len(results) <= 1:
        axes = [axes]
    for ax, (partition, r) in zip(axes, results):
        matrix = [[r.tn, r.fp], [r.fn, r.tp]]
        ax.imshow(matrix, cmap="Blues")
        for yi in range(2):
            for xi in range(2):
                ax.text(xi, yi, str(matrix[yi][xi]), ha="center", va="center")
        ax.set_xticks([0, 1], ["pred non-signing", "pred signing"])
        ax.set_yticks([0, 1], ["true non-signing", "true signing"])
        ax.set_title(f"{partition}: {100 * r.accuracy:.2f}%")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_experiment(summary: ExperimentSummary, path: str | Path) -> None:
    seeds = range(len(summary.results))
    width = 0.38
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.bar(
        [s - width / 2 for s in seeds],
        [100 * r.acc_with_overlap for r in summary.results],
        width,
        label="with signer overlap",
    )
    ax.bar(
        [s + width / 2 for s in seeds],
        [100 * r.acc_no_overlap for r in summary.results],
        width,
        label="signer-disjoint",
    )
    ax.set_xticks(list(seeds), [str(k) for k in seeds])
    ax.set_xlabel("run")
    ax.set_ylabel("test accuracy [%]")
    ax.set_title(f"Overlap effect (median gap {summary.median_gap:.2f} points)")
    ax.legend()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_history(history: Sequence[float], path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(len(history)), [100 * a for a in history], "o-")
    ax.set_xlabel("epoch")
    ax.set_ylabel("dev accuracy [%]")
    ax.set_title("Training history")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


# -- dispatch -------------------------------------------------------------------


def render_report(input_path: str | Path, out_base: str | Path) -> tuple[str, Path]:
    """Render any report record file to ``<out_base>.txt`` + ``<out_base>.png``.

    Returns the text and the figure path.
    """
    records = read_records(input_path)
    if not records or "kind" not in records[0]:
        raise ParseError(str(input_path), 1, "missing report kind header")
    kind = records[0]["kind"]
    out_base = Path(out_base)
    figure_path = out_base.with_suffix(".png")
    if kind == OVERLAP_KIND:
        report = parse_overlap_records(records)
        text = format_overlap_text(report)
        plot_overlap(report, figure_path)
    elif kind == SWEEP_KIND:
        rows = parse_sweep_records(records)
        text = format_sweep_table(rows)
        plot_sweep(rows, figure_path)
    elif kind == EVAL_KIND:
        results = parse_eval_records(records)
        text = format_eval_text(results)
        plot_eval(results, figure_path)
    elif kind == EXPERIMENT_KIND:
        summary = parse_experiment_records(records)
        text = format_experiment_text(summary)
        plot_experiment(summary, figure_path)
    elif kind == HISTORY_KIND:
        history = [float(r["dev_accuracy"]) for r in records if "epoch" in r]
        text = "\n".join(
            f"epoch {i}: dev accuracy {100 * a:.2f}%" for i, a in enumerate(history)
        )
        plot_history(history, figure_path)
    else:
        raise ParseError(str(input_path), 1, f"unknown report kind {kind!r}")
    from .io import atomic_write_text

    atomic_write_text(out_base.with_suffix(".txt"), text + "\n")
    return text, figure_path


def save_report(records: list[dict[str, Any]], path: str | Path) -> None:
    write_records(path, records)
