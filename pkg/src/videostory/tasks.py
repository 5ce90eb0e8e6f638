"""Downstream harnesses over persisted representations.

Retrieval reconceives text-to-video search as text-to-text: a query embedding
is compared against the story and every retained chapter of each video, and
the video's score is the best of those cosines. Partially-relevant retrieval
is the same scorer with the story excluded (moment queries are local). QA
selects the most relevant chapters, rebuilds a compact video description, and
asks the LLM twice: once for a long answer, once to compress it.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .agents.base import Agents
from .errors import DimensionError, EmptyInputError, ParseError
from .pipeline import Chapter, HierarchicalRepresentation, load_representation
from .prompting import PromptTemplateSet, render_qa_prompt, render_short_answer_prompt
from .redundancy import cosine

Vector = tuple[float, ...]
RankedList = list[tuple[str, float]]

DEFAULT_QA_CLIPS = 5

# Score reported when a video has no retained text at all; below any cosine.
EMPTY_VIDEO_SCORE = -1.0


@dataclass(frozen=True)
class QAConfig:
    """How many clip chapters accompany the story in the QA prompt."""

    k: int = DEFAULT_QA_CLIPS

    def __post_init__(self) -> None:
        if self.k < 0:
            raise ValueError(f"qa clip count must be >= 0, got {self.k}")


@dataclass(frozen=True)
class RetrievalQuery:
    query: str
    video_id: str


@dataclass(frozen=True)
class QAItem:
    question: str
    video_id: str
    answer: str


class Corpus:
    """Immutable-after-load collection of representations with embedding cache."""

    def __init__(self, agents: Agents) -> None:
        self.agents = agents
        self.entries: dict[str, HierarchicalRepresentation] = {}
        self._story_embs: dict[str, Vector | None] = {}
        self._chapter_embs: dict[str, list[Vector]] = {}
        self._dim: int | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def _check_dim(self, vector: Vector, video_id: str) -> Vector:
        if self._dim is None:
            self._dim = len(vector)
        elif len(vector) != self._dim:
            raise DimensionError(
                f"corpus embeddings are {self._dim}-dimensional, {video_id} has {len(vector)}"
            )
        return vector

    def add(self, rep: HierarchicalRepresentation) -> None:
        if rep.video_id in self.entries:
            raise ValueError(f"duplicate video_id {rep.video_id!r}")
        story_emb: Vector | None = None
        if rep.story.text:
            story_emb = self._check_dim(tuple(self.agents.embed_text(rep.story.text)), rep.video_id)
        chapter_embs = [
            self._check_dim(tuple(ch.embedding), rep.video_id) for ch in rep.retained_chapters()
        ]
        self.entries[rep.video_id] = rep
        self._story_embs[rep.video_id] = story_emb
        self._chapter_embs[rep.video_id] = chapter_embs

    @classmethod
    def from_directory(cls, path: str | Path, agents: Agents) -> "Corpus":
        corpus = cls(agents)
        files = sorted(Path(path).glob("*.json"))
        if not files:
            raise EmptyInputError(f"no representation files (*.json) under {path}")
        for file in files:
            corpus.add(load_representation(file))
        return corpus

    def candidate_embeddings(self, video_id: str, include_story: bool = True) -> list[Vector]:
        candidates = list(self._chapter_embs[video_id])
        story = self._story_embs[video_id]
        if include_story and story is not None:
            candidates.append(story)
        return candidates

    def score(self, query_emb: Sequence[float], video_id: str, include_story: bool = True) -> float:
        candidates = self.candidate_embeddings(video_id, include_story)
        if not candidates:
            return EMPTY_VIDEO_SCORE
        return max(cosine(query_emb, c) for c in candidates)


def score_video(
    query_emb: Sequence[float],
    rep: HierarchicalRepresentation,
    story_emb: Sequence[float] | None = None,
    include_story: bool = True,
) -> float:
    """Max cosine over the retained chapters plus (optionally) the story.

    The story embedding is not persisted, so callers pass it in; ``None``
    scores chapters only.
    """
    candidates: list[Sequence[float]] = [ch.embedding for ch in rep.retained_chapters()]
    if include_story and story_emb is not None:
        candidates.append(story_emb)
    if not candidates:
        return EMPTY_VIDEO_SCORE
    return max(cosine(query_emb, c) for c in candidates)


def rank(query: str, corpus: Corpus, include_story: bool = True) -> RankedList:
    """All videos ordered by descending score, ties by ascending video_id."""
    if not query:
        raise EmptyInputError("query must be nonempty")
    query_emb = tuple(corpus.agents.embed_text(query))
    scored = [(vid, corpus.score(query_emb, vid, include_story)) for vid in corpus.entries]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored


def rank_embedding(query_emb: Sequence[float], corpus: Corpus, include_story: bool = True) -> RankedList:
    """Like rank(), for callers that already hold the query embedding."""
    scored = [(vid, corpus.score(query_emb, vid, include_story)) for vid in corpus.entries]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored


def recall_at_k(ranked_lists: Sequence[RankedList], truth_ids: Sequence[str], k: int) -> float:
    """Fraction of queries whose true video appears in the top k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(ranked_lists) != len(truth_ids):
        raise ValueError("one truth id is required per ranked list")
    if not ranked_lists:
        raise EmptyInputError("recall needs at least one query")
    hits = sum(
        1
        for ranked, truth in zip(ranked_lists, truth_ids)
        if truth in {vid for vid, _ in ranked[:k]}
    )
    return hits / len(ranked_lists)


def select_relevant_clips(
    question: str,
    rep: HierarchicalRepresentation,
    agents: Agents,
    k: int = DEFAULT_QA_CLIPS,
) -> list[Chapter]:
    """Top-k retained chapters by similarity to the question, best first.

    k=0 selects nothing (story-only mode); ties break toward earlier clips.
    """
    if k == 0:
        return []
    chapters = rep.retained_chapters()
    if not chapters:
        return []
    question_emb = agents.embed_text(question)
    ranked = sorted(
        chapters,
        key=lambda ch: (-cosine(question_emb, ch.embedding), ch.clip_index),
    )
    return ranked[:k]


def answer(
    question: str,
    rep: HierarchicalRepresentation,
    agents: Agents,
    config: QAConfig = QAConfig(),
    templates: PromptTemplateSet | None = None,
) -> tuple[str, str]:
    """(long answer, short answer) for one question over one video."""
    if not question.strip():
        raise EmptyInputError("question must be nonempty")
    selected = select_relevant_clips(question, rep, agents, config.k)
    parts = [ch.text for ch in sorted(selected, key=lambda ch: ch.clip_index)]
    if rep.story.text:
        parts.append(rep.story.text)
    if not parts:
        raise EmptyInputError(f"representation {rep.video_id!r} has no retained text")
    video_info = " ".join(parts)
    long_answer = agents.complete(render_qa_prompt(video_info, question, templates))
    short_answer = agents.complete(render_short_answer_prompt(question, long_answer, templates))
    return long_answer, short_answer


_WHITESPACE = re.compile(r"\s+")
_TERMINAL_PUNCTUATION = ".,!?;:"


def normalize_answer(text: str) -> str:
    collapsed = _WHITESPACE.sub(" ", text.casefold().strip())
    return collapsed.rstrip(_TERMINAL_PUNCTUATION).rstrip()


def exact_match(pred: str, truth: str) -> bool:
    return normalize_answer(pred) == normalize_answer(truth)


def exact_match_accuracy(pairs: Iterable[tuple[str, str]]) -> float:
    items = list(pairs)
    if not items:
        raise EmptyInputError("accuracy needs at least one (pred, truth) pair")
    return sum(1 for pred, truth in items if exact_match(pred, truth)) / len(items)


def _load_json_array(path: str | Path) -> list[dict]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, list) or not all(isinstance(item, dict) for item in data):
        raise ParseError(f"{path}: expected a JSON array of objects")
    return data


def _str_field(item: Mapping, key: str, path: str | Path) -> str:
    value = item.get(key)
    if not isinstance(value, str) or not value:
        raise ParseError(f"{path}: every entry needs a nonempty string {key!r}")
    return value


def load_retrieval_queries(path: str | Path) -> list[RetrievalQuery]:
    return [
        RetrievalQuery(query=_str_field(item, "query", path), video_id=_str_field(item, "video_id", path))
        for item in _load_json_array(path)
    ]


def load_qa_items(path: str | Path) -> list[QAItem]:
    return [
        QAItem(
            question=_str_field(item, "question", path),
            video_id=_str_field(item, "video_id", path),
            answer=_str_field(item, "answer", path),
        )
        for item in _load_json_array(path)
    ]
