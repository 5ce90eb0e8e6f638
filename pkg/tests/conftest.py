import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from videostory.agents import AgentConfig, StubAgents
from videostory.ingest import ClipSpan
from videostory.pipeline import Chapter, ClipRecord, HierarchicalRepresentation, Story, compute_stats
from videostory.prompting import bucket_temporal, load_templates

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def templates():
    return load_templates()


@pytest.fixture()
def stub_agents():
    return StubAgents(AgentConfig(), seed=0)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN


def make_synthetic_rep(
    video_id: str,
    chapters: list[tuple[str, tuple[float, ...]]],
    story_text: str = "",
    total_frames: int = 400,
    fps: float = 25.0,
) -> HierarchicalRepresentation:
    """Representation with planted chapter texts/embeddings, one clip each."""
    count = len(chapters)
    records = []
    built = []
    for i, (text, embedding) in enumerate(chapters):
        start = i * (total_frames // max(count, 1))
        end = total_frames if i == count - 1 else (i + 1) * (total_frames // count)
        span = ClipSpan(clip_index=i, start_frame=start, end_frame=end)
        chapter = Chapter(
            clip_index=i,
            text=text,
            embedding=tuple(embedding),
            temporal_bucket=bucket_temporal(start / total_frames),
        )
        built.append(chapter)
        records.append(
            ClipRecord(
                clip_index=i,
                span=span,
                retained_frames=[start],
                action=None,
                detections={start: []},
                captions=[],
                chapter=chapter,
                temporal_bucket=chapter.temporal_bucket,
                partial=False,
                errors=[],
            )
        )
    story = Story(text=story_text)
    return HierarchicalRepresentation(
        video_id=video_id,
        fps=fps,
        total_frames=total_frames,
        clips=records,
        story=story,
        stats=compute_stats(built, story),
    )


@pytest.fixture()
def make_rep():
    return make_synthetic_rep
