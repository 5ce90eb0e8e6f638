"""Independent reference implementations the tests compare against.

Everything here is recomputed from the documented contracts with numpy and
naive loops, deliberately avoiding the package's own math helpers. The two
exact-value conventions that are part of the contract (cosine of identical
vectors is exactly 1.0; the mean of identical vectors is that vector) are
reproduced here because tie cases depend on them.
"""

from __future__ import annotations

import numpy as np


def oracle_cosine(a, b) -> float:
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    if nx == 0.0 or ny == 0.0:
        return 0.0
    if np.array_equal(x, y):
        return 1.0
    return float(np.clip(float(x @ y) / (nx * ny), -1.0, 1.0))


def oracle_frame_decisions(key_emb, nonkey_embs) -> list[bool]:
    """Retain/remove decision per non-key frame, in order."""
    sims = [oracle_cosine(key_emb, emb) for emb in nonkey_embs]
    if not sims:
        return []
    mean = float(np.mean(sims))
    return [s <= mean for s in sims]


def oracle_window_mean(history) -> np.ndarray:
    arr = np.stack([np.asarray(h, dtype=float) for h in history])
    if bool(np.all(arr == arr[0])):
        return np.array(arr[0], copy=True)
    return arr.mean(axis=0)


def oracle_chapter_similarities(embs, l: int) -> list:
    sims: list = []
    for i in range(len(embs)):
        if i == 0:
            sims.append(None)
            continue
        history = embs[max(0, i - l) : i]
        sims.append(oracle_cosine(embs[i], oracle_window_mean(history)))
    return sims


def oracle_chapter_decisions(embs, l: int) -> list[bool]:
    sims = oracle_chapter_similarities(embs, l)
    defined = [s for s in sims if s is not None]
    if not defined:
        return [True] * len(embs)
    threshold = float(np.mean(defined))
    return [s is None or s <= threshold for s in sims]


def oracle_uniform_indices(start: int, end: int, n: int) -> list[int]:
    length = end - start
    m = min(n, length)
    return [start + (j * length) // m for j in range(m)]


def oracle_score_video(query_emb, candidate_embs) -> float:
    if not candidate_embs:
        return -1.0
    return max(oracle_cosine(query_emb, c) for c in candidate_embs)


def oracle_recall_at_k(ranked_id_lists, truth_ids, k: int) -> float:
    hits = sum(1 for ids, truth in zip(ranked_id_lists, truth_ids) if truth in ids[:k])
    return hits / len(ranked_id_lists)


def oracle_position(cx: float, cy: float) -> str:
    """Direct transcription of the nine region conditions."""
    if cx < 0.33 and cy < 0.33:
        return "top-left"
    if 0.33 <= cx < 0.66 and cy < 0.33:
        return "top"
    if cx >= 0.66 and cy < 0.33:
        return "top-right"
    if cx < 0.33 and 0.33 <= cy < 0.66:
        return "left"
    if 0.33 <= cx < 0.66 and 0.33 <= cy < 0.66:
        return "center"
    if cx >= 0.66 and 0.33 <= cy < 0.66:
        return "right"
    if cx < 0.33 and cy >= 0.66:
        return "bottom-left"
    if 0.33 <= cx < 0.66 and cy >= 0.66:
        return "bottom"
    assert cx >= 0.66 and cy >= 0.66
    return "bottom-right"


def oracle_size(area: float) -> str:
    if area < 0.33:
        return "small"
    if 0.33 <= area < 0.66:
        return "medium"
    assert area >= 0.66
    return "large"
