"""Report rendering: JSON metrics plus CSV tables and PNG charts.

Each report writes three sibling files from one payload so scripted consumers
(JSON), spreadsheets (CSV), and humans (PNG) all read the same numbers.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .pipeline import HierarchicalRepresentation
from .tasks import QAItem, RankedList, RetrievalQuery, exact_match, recall_at_k


def _write_json(path: Path, payload: dict[str, Any]) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _save_figure(fig: "plt.Figure", path: Path) -> None:
    fig.savefig(path, format="png", dpi=100)
    plt.close(fig)


def storage_summary(reps: Sequence[HierarchicalRepresentation]) -> dict[str, Any]:
    videos = [
        {
            "chapters_bytes": rep.stats.chapters_bytes,
            "story_bytes": rep.stats.story_bytes,
            "total_bytes": rep.stats.total_bytes,
            "video_id": rep.video_id,
        }
        for rep in sorted(reps, key=lambda r: r.video_id)
    ]
    total = sum(v["total_bytes"] for v in videos)
    return {
        "mean_total_bytes": total / len(videos) if videos else 0.0,
        "video_count": len(videos),
        "videos": videos,
    }


def write_storage_report(reps: Sequence[HierarchicalRepresentation], out_base: str | Path) -> list[Path]:
    """Write <base>.json/.csv/.png; returns the written paths."""
    base = Path(out_base)
    summary = storage_summary(reps)
    json_path = base.with_suffix(".json")
    csv_path = base.with_suffix(".csv")
    png_path = base.with_suffix(".png")

    _write_json(json_path, summary)
    _write_csv(
        csv_path,
        ("video_id", "chapters_bytes", "story_bytes", "total_bytes"),
        [(v["video_id"], v["chapters_bytes"], v["story_bytes"], v["total_bytes"]) for v in summary["videos"]],
    )

    fig, ax = plt.subplots(figsize=(max(6, len(summary["videos"]) * 0.35), 4))
    ids = [v["video_id"] for v in summary["videos"]]
    totals = [v["total_bytes"] for v in summary["videos"]]
    ax.bar(range(len(ids)), totals, color="#4878a8")
    ax.axhline(summary["mean_total_bytes"], color="#c44e52", linestyle="--", label="mean")
    ax.set_xticks(range(len(ids)))
    ax.set_xticklabels(ids, rotation=90, fontsize=6)
    ax.set_ylabel("bytes")
    ax.set_title("Stored representation size per video")
    ax.legend()
    fig.tight_layout()
    _save_figure(fig, png_path)
    return [json_path, csv_path, png_path]


def retrieval_summary(
    ranked_lists: Sequence[RankedList],
    queries: Sequence[RetrievalQuery],
    ks: Sequence[int],
) -> dict[str, Any]:
    truth_ids = [q.video_id for q in queries]
    return {
        "query_count": len(queries),
        "recall": {f"r@{k}": recall_at_k(ranked_lists, truth_ids, k) for k in sorted(ks)},
    }


def _truth_rank(ranked: RankedList, truth_id: str) -> int | None:
    for position, (vid, _) in enumerate(ranked, start=1):
        if vid == truth_id:
            return position
    return None


def write_retrieval_report(
    ranked_lists: Sequence[RankedList],
    queries: Sequence[RetrievalQuery],
    ks: Sequence[int],
    out_base: str | Path,
) -> list[Path]:
    base = Path(out_base)
    metrics = retrieval_summary(ranked_lists, queries, ks)
    json_path = base.with_suffix(".json")
    csv_path = base.with_suffix(".csv")
    png_path = base.with_suffix(".png")

    _write_json(json_path, metrics)
    rows = []
    for ranked, query in zip(ranked_lists, queries):
        top_id, top_score = ranked[0] if ranked else ("", float("nan"))
        rows.append(
            (query.query, query.video_id, _truth_rank(ranked, query.video_id), top_id, f"{top_score:.6f}")
        )
    _write_csv(csv_path, ("query", "truth_video_id", "truth_rank", "top_video_id", "top_score"), rows)

    recalls = metrics["recall"]
    fig, ax = plt.subplots(figsize=(5, 4))
    labels = sorted(recalls, key=lambda name: int(name.split("@")[1]))
    ax.bar(labels, [recalls[name] for name in labels], color="#4878a8")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("recall")
    ax.set_title("Retrieval recall@k")
    fig.tight_layout()
    _save_figure(fig, png_path)
    return [json_path, csv_path, png_path]


def qa_summary(results: Sequence[tuple[QAItem, str, str]]) -> dict[str, Any]:
    """``results`` rows are (item, long_answer, short_answer)."""
    matches = [exact_match(short, item.answer) for item, _, short in results]
    return {
        "exact_match_accuracy": sum(matches) / len(matches) if matches else 0.0,
        "question_count": len(results),
    }


def write_qa_report(results: Sequence[tuple[QAItem, str, str]], out_base: str | Path) -> list[Path]:
    base = Path(out_base)
    summary = qa_summary(results)
    json_path = base.with_suffix(".json")
    csv_path = base.with_suffix(".csv")
    png_path = base.with_suffix(".png")

    _write_json(json_path, summary)
    _write_csv(
        csv_path,
        ("video_id", "question", "truth_answer", "short_answer", "exact_match", "long_answer"),
        [
            (item.video_id, item.question, item.answer, short, int(exact_match(short, item.answer)), long)
            for item, long, short in results
        ],
    )

    correct = sum(1 for item, _, short in results if exact_match(short, item.answer))
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.bar(["correct", "wrong"], [correct, len(results) - correct], color=["#4878a8", "#c44e52"])
    ax.set_ylabel("questions")
    ax.set_title(f"Exact match accuracy: {summary['exact_match_accuracy']:.2f}")
    fig.tight_layout()
    _save_figure(fig, png_path)
    return [json_path, csv_path, png_path]
