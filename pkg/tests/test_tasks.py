import hashlib
import json
import math

import numpy as np
import pytest

from videostory.agents import AgentConfig, ScriptedFixtures, StubAgents
from videostory.errors import DimensionError, EmptyInputError, ParseError
from videostory.pipeline import save_representation
from videostory.prompting import render_qa_prompt, render_short_answer_prompt
from videostory.tasks import (
    Corpus,
    EMPTY_VIDEO_SCORE,
    QAConfig,
    answer,
    exact_match,
    exact_match_accuracy,
    load_qa_items,
    load_retrieval_queries,
    normalize_answer,
    rank,
    rank_embedding,
    recall_at_k,
    score_video,
    select_relevant_clips,
)

from conftest import make_synthetic_rep
from oracles import oracle_recall_at_k, oracle_score_video


# Basis vectors matching the stub's 16-dim embedding space.
def basis(i: int, dim: int = 16) -> tuple[float, ...]:
    return tuple(1.0 if j == i else 0.0 for j in range(dim))


E1, E2, E3 = basis(0), basis(1), basis(2)


class TestScoreVideo:
    def test_planted_exact_match_scores_one(self):
        rep = make_synthetic_rep("v", [("a.", E1), ("b.", E2)])
        assert score_video(E1, rep) == 1.0

    def test_orthogonal_scores_zero(self):
        rep = make_synthetic_rep("v", [("a.", E1)])
        assert score_video(E2, rep) == 0.0

    def test_story_embedding_participates(self):
        rep = make_synthetic_rep("v", [("a.", E2)], story_text="story")
        assert score_video(E1, rep, story_emb=E1) == 1.0
        assert score_video(E1, rep, story_emb=E1, include_story=False) == 0.0

    def test_no_candidates_scores_sentinel(self):
        rep = make_synthetic_rep("v", [("a.", E1)])
        rep.clips[0].chapter.retained = False
        assert score_video(E2, rep) == EMPTY_VIDEO_SCORE

    def test_matches_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            dim = int(rng.integers(2, 9))
            count = int(rng.integers(0, 5))
            embs = [tuple(rng.normal(size=dim).tolist()) for _ in range(count)]
            rep = make_synthetic_rep("v", [(f"c{i}.", e) for i, e in enumerate(embs)] or [("x.", tuple(rng.normal(size=dim)))])
            if count == 0:
                for record in rep.clips:
                    record.chapter.retained = False
            query = tuple(rng.normal(size=dim).tolist())
            got = score_video(query, rep, include_story=False)
            want = oracle_score_video(query, embs)
            assert math.isclose(got, want, abs_tol=1e-12) or got == want == EMPTY_VIDEO_SCORE


class TestCorpusAndRank:
    def corpus(self, stub_agents):
        corpus = Corpus(stub_agents)
        corpus.add(make_synthetic_rep("vid-a", [("alpha.", E1)]))
        corpus.add(make_synthetic_rep("vid-b", [("beta.", E2)]))
        corpus.add(make_synthetic_rep("vid-c", [("gamma.", E3)]))
        return corpus

    def test_rank_embedding_orders_by_score(self, stub_agents):
        ranked = rank_embedding(E2, self.corpus(stub_agents))
        assert [vid for vid, _ in ranked] == ["vid-b", "vid-a", "vid-c"]
        assert ranked[0][1] == 1.0

    def test_ties_break_by_video_id(self, stub_agents):
        corpus = Corpus(stub_agents)
        corpus.add(make_synthetic_rep("vid-z", [("z.", E1)]))
        corpus.add(make_synthetic_rep("vid-a", [("a.", E1)]))
        ranked = rank_embedding(E1, corpus)
        assert [vid for vid, _ in ranked] == ["vid-a", "vid-z"]

    def test_rank_embeds_query_text(self, stub_agents):
        corpus = Corpus(stub_agents)
        rep = make_synthetic_rep("vid-a", [("alpha.", tuple(stub_agents.embed_text("alpha.")))])
        corpus.add(rep)
        ranked = rank("alpha.", corpus)
        assert ranked[0] == ("vid-a", 1.0)

    def test_rank_rejects_empty_query(self, stub_agents):
        with pytest.raises(EmptyInputError):
            rank("", self.corpus(stub_agents))

    def test_duplicate_video_id_rejected(self, stub_agents):
        corpus = self.corpus(stub_agents)
        with pytest.raises(ValueError):
            corpus.add(make_synthetic_rep("vid-a", [("again.", E1)]))

    def test_dimension_mismatch_rejected(self, stub_agents):
        corpus = self.corpus(stub_agents)
        with pytest.raises(DimensionError):
            corpus.add(make_synthetic_rep("vid-d", [("delta.", (1.0, 0.0))]))

    def test_story_counts_only_when_included(self, stub_agents):
        corpus = Corpus(stub_agents)
        story_text = "the story"
        rep = make_synthetic_rep("vid-s", [("chapter.", E2)], story_text=story_text)
        corpus.add(rep)
        story_emb = tuple(stub_agents.embed_text(story_text))
        with_story = corpus.score(story_emb, "vid-s", include_story=True)
        without = corpus.score(story_emb, "vid-s", include_story=False)
        assert math.isclose(with_story, 1.0, abs_tol=1e-9)
        assert without < with_story

    def test_from_directory_loads_all(self, stub_agents, tmp_path):
        for vid in ("vid-a", "vid-b"):
            save_representation(make_synthetic_rep(vid, [("t.", E1)]), tmp_path / f"{vid}.json")
        corpus = Corpus.from_directory(tmp_path, stub_agents)
        assert sorted(corpus.entries) == ["vid-a", "vid-b"]

    def test_from_directory_requires_files(self, stub_agents, tmp_path):
        with pytest.raises(EmptyInputError):
            Corpus.from_directory(tmp_path, stub_agents)


class TestRecall:
    def test_hand_example(self):
        ranked = [
            [("a", 0.9), ("b", 0.8)],
            [("b", 0.7), ("a", 0.6)],
            [("a", 0.5), ("b", 0.4)],
        ]
        truths = ["a", "a", "b"]
        assert recall_at_k(ranked, truths, 1) == pytest.approx(1 / 3)
        assert recall_at_k(ranked, truths, 2) == 1.0

    def test_monotone_in_k(self):
        rng = np.random.default_rng(3)
        vids = [f"v{i}" for i in range(10)]
        ranked = []
        truths = []
        for _ in range(30):
            order = list(rng.permutation(vids))
            ranked.append([(v, 1.0 - i * 0.01) for i, v in enumerate(order)])
            truths.append(str(rng.choice(vids)))
        values = [recall_at_k(ranked, truths, k) for k in (1, 5, 10)]
        assert values == sorted(values)
        id_lists = [[vid for vid, _ in ranked_list] for ranked_list in ranked]
        for k in (1, 5, 10):
            assert recall_at_k(ranked, truths, k) == oracle_recall_at_k(id_lists, truths, k)

    def test_guards(self):
        with pytest.raises(ValueError):
            recall_at_k([[("a", 1.0)]], ["a"], 0)
        with pytest.raises(ValueError):
            recall_at_k([[("a", 1.0)]], ["a", "b"], 1)
        with pytest.raises(EmptyInputError):
            recall_at_k([], [], 1)


class TestSelectRelevantClips:
    def test_most_similar_first(self, stub_agents):
        question = "what color is the kayak"
        near = tuple(stub_agents.embed_text(question))
        rep = make_synthetic_rep("v", [("far.", E1), ("near.", near)])
        selected = select_relevant_clips(question, rep, stub_agents, k=1)
        assert [ch.text for ch in selected] == ["near."]

    def test_k_zero_selects_nothing(self, stub_agents):
        rep = make_synthetic_rep("v", [("a.", E1)])
        assert select_relevant_clips("q", rep, stub_agents, k=0) == []

    def test_k_larger_than_count_selects_all(self, stub_agents):
        rep = make_synthetic_rep("v", [("a.", E1), ("b.", E2)])
        selected = select_relevant_clips("q", rep, stub_agents, k=10)
        assert len(selected) == 2

    def test_ties_prefer_earlier_clips(self, stub_agents):
        rep = make_synthetic_rep("v", [("first.", E1), ("second.", E1), ("third.", E1)])
        selected = select_relevant_clips("q", rep, stub_agents, k=2)
        assert [ch.clip_index for ch in selected] == [0, 1]


class TestAnswer:
    def scripted_agents(self, rep, question, long_text, short_text, k=5):
        stub = StubAgents(AgentConfig(), seed=0)
        selected = select_relevant_clips(question, rep, stub, k)
        parts = [ch.text for ch in sorted(selected, key=lambda ch: ch.clip_index)]
        if rep.story.text:
            parts.append(rep.story.text)
        video_info = " ".join(parts)
        qa_prompt = render_qa_prompt(video_info, question)
        short_prompt = render_short_answer_prompt(question, long_text)
        fixtures = ScriptedFixtures(
            completions={
                hashlib.sha256(qa_prompt.encode("utf-8")).hexdigest(): long_text,
                hashlib.sha256(short_prompt.encode("utf-8")).hexdigest(): short_text,
            }
        )
        return StubAgents(AgentConfig(), seed=0, fixtures=fixtures)

    def test_scripted_round_trip(self):
        rep = make_synthetic_rep(
            "v",
            [("A man paddles a kayak.", E1), ("He lands on the bank.", E2)],
            story_text="First he paddles, then he lands.",
        )
        question = "what is the man doing"
        agents = self.scripted_agents(rep, question, "The man is kayaking.", "kayaking")
        long_answer, short_answer = answer(question, rep, agents)
        assert long_answer == "The man is kayaking."
        assert short_answer == "kayaking"

    def test_story_only_mode(self):
        rep = make_synthetic_rep("v", [("chapter text.", E1)], story_text="Only the story.")
        question = "what happens"
        agents = self.scripted_agents(rep, question, "Nothing much.", "nothing", k=0)
        long_answer, short_answer = answer(question, rep, agents, QAConfig(k=0))
        assert long_answer == "Nothing much."
        assert short_answer == "nothing"

    def test_no_retained_text_raises(self, stub_agents):
        rep = make_synthetic_rep("v", [("a.", E1)])
        rep.clips[0].chapter.retained = False
        with pytest.raises(EmptyInputError):
            answer("question", rep, stub_agents)

    def test_empty_question_rejected(self, stub_agents):
        rep = make_synthetic_rep("v", [("a.", E1)])
        with pytest.raises(EmptyInputError):
            answer("   ", rep, stub_agents)

    def test_qa_config_validates_k(self):
        with pytest.raises(ValueError):
            QAConfig(k=-1)


class TestExactMatch:
    @pytest.mark.parametrize(
        "pred,truth",
        [
            ("Black", "black"),
            (" beach soccer ", "beach soccer"),
            ("no.", "no"),
            ("Yes!", "yes"),
            ("two  words", "two words"),
            ("TWO WORDS", "two words"),
            ("answer...", "answer"),
        ],
    )
    def test_matches(self, pred, truth):
        assert exact_match(pred, truth)

    @pytest.mark.parametrize("pred,truth", [("no", "yes"), ("black", "blue"), ("", "x")])
    def test_non_matches(self, pred, truth):
        assert not exact_match(pred, truth)

    def test_normalize(self):
        assert normalize_answer("  The  RED Kayak!? ") == "the red kayak"

    def test_accuracy(self):
        pairs = [("yes", "yes"), ("no", "yes"), ("Black", "black"), ("a", "b")]
        assert exact_match_accuracy(pairs) == 0.5
        with pytest.raises(EmptyInputError):
            exact_match_accuracy([])


class TestLoaders:
    def test_retrieval_queries(self, tmp_path):
        path = tmp_path / "queries.json"
        path.write_text(
            json.dumps([{"query": "a man kayaks", "video_id": "vid-a"}]), encoding="utf-8"
        )
        queries = load_retrieval_queries(path)
        assert queries[0].query == "a man kayaks"
        assert queries[0].video_id == "vid-a"

    def test_qa_items(self, tmp_path):
        path = tmp_path / "qa.json"
        path.write_text(
            json.dumps([{"question": "q", "video_id": "v", "answer": "a"}]), encoding="utf-8"
        )
        items = load_qa_items(path)
        assert items[0].question == "q"
        assert items[0].answer == "a"

    def test_missing_field_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps([{"query": "only"}]), encoding="utf-8")
        with pytest.raises(ParseError):
            load_retrieval_queries(path)

    def test_non_array_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"query": "x"}), encoding="utf-8")
        with pytest.raises(ParseError):
            load_retrieval_queries(path)

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("[{", encoding="utf-8")
        with pytest.raises(ParseError):
            load_qa_items(path)
