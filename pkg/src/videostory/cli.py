"""Command-line interface.

Exit codes: 0 success, 1 fatal, 2 completed with recorded per-item failures.
Representation files are written atomically (temp file + rename) and existing
outputs are never overwritten without --force.
"""

from __future__ import annotations

import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

import click

from .agents.base import Agents
from .config import EngineConfig, resolve_config
from .errors import VideoStoryError
from .frames import DirectoryFrameProvider, FrameProvider, SyntheticFrameProvider
from .ingest import VideoMeta, load_keyframe_index, load_video_meta
from .pipeline import (
    HierarchicalRepresentation,
    build_representation,
    dumps_representation,
    load_representation,
)
from .prompting import load_templates
from .reports import write_qa_report, write_retrieval_report, write_storage_report
from .tasks import Corpus, QAConfig, answer, load_qa_items, load_retrieval_queries, rank

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


def _fail(message: str) -> "SystemExit":
    click.echo(f"error: {message}", err=True)
    return SystemExit(EXIT_FATAL)


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except FileNotFoundError:
            pass
        raise


def _guard_overwrite(paths: Sequence[Path], force: bool) -> None:
    existing = [str(p) for p in paths if p.exists()]
    if existing and not force:
        raise _fail(f"refusing to overwrite {', '.join(existing)} (use --force)")


def _provider_for(meta: VideoMeta) -> FrameProvider:
    if meta.frame_source:
        return DirectoryFrameProvider(meta.frame_source)
    return SyntheticFrameProvider()


def _config_options(command):
    for option in reversed(
        [
            click.option("--config", "config_path", type=click.Path(path_type=Path), default=None, help="INI config file."),
            click.option("--stub", "stub", is_flag=True, flag_value=True, default=None, help="Use deterministic offline agents."),
            click.option("--seed", type=int, default=None, help="Seed for stub agents."),
            click.option("--frames-per-clip", type=int, default=None, help="Frames sampled per clip."),
            click.option("--memory-window", type=int, default=None, help="Chapter window for textual reduction."),
            click.option("--qa-k", type=int, default=None, help="Chapters fed to the QA prompt (0 = story only)."),
            click.option("--workers", type=int, default=None, help="Worker pool size."),
            click.option("--force", is_flag=True, default=False, help="Overwrite existing outputs."),
        ]
    ):
        command = option(command)
    return command


def _resolve(config_path, stub, seed, frames_per_clip, memory_window, qa_k, workers) -> EngineConfig:
    try:
        return resolve_config(
            config_path,
            stub=stub,
            seed=seed,
            frames_per_clip=frames_per_clip,
            memory_window=memory_window,
            qa_k=qa_k,
            workers=workers,
        )
    except (VideoStoryError, OSError) as exc:
        raise _fail(str(exc))


@click.group()
@click.version_option(package_name="videostory")
def main() -> None:
    """Turn long videos into chaptered textual stories and query them."""


def _interpret_one(
    meta_path: Path,
    keyframes_path: Path,
    out_path: Path,
    config: EngineConfig,
    agents: Agents,
    clip_workers: int,
) -> HierarchicalRepresentation:
    meta = load_video_meta(meta_path)
    keyframes = load_keyframe_index(keyframes_path, meta)
    rep = build_representation(
        meta,
        keyframes,
        agents,
        provider=_provider_for(meta),
        frames_per_clip=config.frames_per_clip,
        memory_window=config.memory_window,
        templates=load_templates(config.template_dir),
        workers=clip_workers,
    )
    _atomic_write(out_path, dumps_representation(rep).encode("utf-8"))
    return rep


def _severity(rep: HierarchicalRepresentation) -> int:
    failed = len(rep.failed_clips())
    if rep.clips and failed == len(rep.clips):
        return EXIT_FATAL
    if failed or any(clip.partial for clip in rep.clips):
        return EXIT_PARTIAL
    return EXIT_OK


def _batch_pairs(meta_dir: Path, keyframes_dir: Path) -> list[tuple[Path, Path, str]]:
    pairs = []
    for meta_path in sorted(meta_dir.glob("*.meta.json")):
        stem = meta_path.name[: -len(".meta.json")]
        keyframes_path = keyframes_dir / f"{stem}.keyframes.json"
        if not keyframes_path.is_file():
            raise _fail(f"{meta_path} has no matching {keyframes_path.name}")
        pairs.append((meta_path, keyframes_path, stem))
    if not pairs:
        raise _fail(f"no *.meta.json files under {meta_dir}")
    return pairs


@main.command()
@click.argument("meta_path", type=click.Path(path_type=Path))
@click.argument("keyframes_path", type=click.Path(path_type=Path))
@click.argument("out_path", type=click.Path(path_type=Path))
@_config_options
def interpret(meta_path: Path, keyframes_path: Path, out_path: Path, config_path, stub, seed, frames_per_clip, memory_window, qa_k, workers, force) -> None:
    """Build hierarchical representations.

    Three file paths process one video. Three directories process every
    <name>.meta.json / <name>.keyframes.json pair into OUT_PATH/<name>.json,
    spreading videos over the worker pool.
    """
    config = _resolve(config_path, stub, seed, frames_per_clip, memory_window, qa_k, workers)
    agents = config.make_agents()

    if meta_path.is_dir():
        if not keyframes_path.is_dir():
            raise _fail("keyframes path must be a directory when meta path is one")
        pairs = _batch_pairs(meta_path, keyframes_path)
        targets = [out_path / f"{stem}.json" for _, _, stem in pairs]
        _guard_overwrite(targets, force)

        def run(pair: tuple[Path, Path, str]) -> tuple[str, int, str]:
            meta_file, keyframes_file, stem = pair
            try:
                rep = _interpret_one(meta_file, keyframes_file, out_path / f"{stem}.json", config, agents, clip_workers=1)
            except (VideoStoryError, OSError) as exc:
                return stem, EXIT_FATAL, str(exc)
            return stem, _severity(rep), "; ".join(err for clip in rep.clips for err in clip.errors)

        if config.workers > 1 and len(pairs) > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                results = list(pool.map(run, pairs))
        else:
            results = [run(pair) for pair in pairs]

        worst_ok = True
        any_ok = False
        for stem, severity, detail in results:
            if severity == EXIT_OK:
                any_ok = True
                click.echo(f"{stem}: ok")
            else:
                worst_ok = False
                click.echo(f"{stem}: {'failed' if severity == EXIT_FATAL else 'partial'} ({detail})", err=True)
        if worst_ok:
            sys.exit(EXIT_OK)
        sys.exit(EXIT_PARTIAL if any_ok else EXIT_FATAL)

    _guard_overwrite([out_path], force)
    try:
        rep = _interpret_one(meta_path, keyframes_path, out_path, config, agents, clip_workers=config.workers)
    except (VideoStoryError, OSError) as exc:
        raise _fail(str(exc))
    severity = _severity(rep)
    if severity == EXIT_FATAL:
        first_error = rep.clips[0].errors[0] if rep.clips and rep.clips[0].errors else "all clips failed"
        raise _fail(f"{rep.video_id}: every clip failed: {first_error}")
    if severity == EXIT_PARTIAL:
        for clip in rep.clips:
            for err in clip.errors:
                click.echo(f"warning: clip {clip.clip_index}: {err}", err=True)
        click.echo(f"wrote {out_path} (partial)")
        sys.exit(EXIT_PARTIAL)
    click.echo(f"wrote {out_path}")
    sys.exit(EXIT_OK)


def _load_corpus(rep_dir: Path, agents: Agents) -> Corpus:
    try:
        return Corpus.from_directory(rep_dir, agents)
    except (VideoStoryError, OSError) as exc:
        raise _fail(str(exc))


@main.command()
@click.argument("rep_dir", type=click.Path(path_type=Path))
@click.argument("queries_path", type=click.Path(path_type=Path))
@click.argument("out_base", type=click.Path(path_type=Path))
@click.option("-k", "k_values", type=int, multiple=True, default=(1, 5, 10), show_default=True, help="Recall cutoffs; repeatable.")
@click.option("--no-story", is_flag=True, default=False, help="Score against chapters only (partially-relevant mode).")
@_config_options
def retrieve(rep_dir: Path, queries_path: Path, out_base: Path, k_values, no_story, config_path, stub, seed, frames_per_clip, memory_window, qa_k, workers, force) -> None:
    """Rank every video for each query and report recall@k."""
    config = _resolve(config_path, stub, seed, frames_per_clip, memory_window, qa_k, workers)
    outputs = [out_base.with_suffix(suffix) for suffix in (".json", ".csv", ".png")]
    _guard_overwrite(outputs, force)
    agents = config.make_agents()
    corpus = _load_corpus(rep_dir, agents)
    try:
        queries = load_retrieval_queries(queries_path)
        ranked_lists = [rank(q.query, corpus, include_story=not no_story) for q in queries]
        out_base.parent.mkdir(parents=True, exist_ok=True)
        written = write_retrieval_report(ranked_lists, queries, k_values, out_base)
    except (VideoStoryError, OSError) as exc:
        raise _fail(str(exc))
    for path in written:
        click.echo(f"wrote {path}")
    sys.exit(EXIT_OK)


@main.command()
@click.argument("rep_dir", type=click.Path(path_type=Path))
@click.argument("questions_path", type=click.Path(path_type=Path))
@click.argument("out_base", type=click.Path(path_type=Path))
@_config_options
def qa(rep_dir: Path, questions_path: Path, out_base: Path, config_path, stub, seed, frames_per_clip, memory_window, qa_k, workers, force) -> None:
    """Answer questions against stored representations and score exact match."""
    config = _resolve(config_path, stub, seed, frames_per_clip, memory_window, qa_k, workers)
    outputs = [out_base.with_suffix(suffix) for suffix in (".json", ".csv", ".png")]
    _guard_overwrite(outputs, force)
    agents = config.make_agents()
    try:
        items = load_qa_items(questions_path)
        reps = {rep.video_id: rep for rep in _load_reps(rep_dir)}
    except (VideoStoryError, OSError) as exc:
        raise _fail(str(exc))

    qa_config = QAConfig(k=config.qa_k)
    templates = load_templates(config.template_dir)
    results = []
    failures = []
    for item in items:
        rep = reps.get(item.video_id)
        if rep is None:
            failures.append(f"{item.video_id}: no representation file")
            continue
        try:
            long_answer, short_answer = answer(item.question, rep, agents, qa_config, templates)
        except VideoStoryError as exc:
            failures.append(f"{item.video_id}: {exc}")
            continue
        results.append((item, long_answer, short_answer))

    if not results:
        raise _fail(failures[0] if failures else "no questions to answer")
    out_base.parent.mkdir(parents=True, exist_ok=True)
    try:
        written = write_qa_report(results, out_base)
    except OSError as exc:
        raise _fail(str(exc))
    for path in written:
        click.echo(f"wrote {path}")
    for failure in failures:
        click.echo(f"warning: {failure}", err=True)
    sys.exit(EXIT_PARTIAL if failures else EXIT_OK)


def _load_reps(rep_dir: Path) -> list[HierarchicalRepresentation]:
    files = sorted(rep_dir.glob("*.json"))
    if not files:
        raise _fail(f"no representation files (*.json) under {rep_dir}")
    return [load_representation(path) for path in files]


@main.command("report-storage")
@click.argument("rep_dir", type=click.Path(path_type=Path))
@click.argument("out_base", type=click.Path(path_type=Path))
@_config_options
def report_storage(rep_dir: Path, out_base: Path, config_path, stub, seed, frames_per_clip, memory_window, qa_k, workers, force) -> None:
    """Tabulate stored-bytes statistics for a directory of representations."""
    _resolve(config_path, stub, seed, frames_per_clip, memory_window, qa_k, workers)
    outputs = [out_base.with_suffix(suffix) for suffix in (".json", ".csv", ".png")]
    _guard_overwrite(outputs, force)
    try:
        reps = _load_reps(rep_dir)
        out_base.parent.mkdir(parents=True, exist_ok=True)
        written = write_storage_report(reps, out_base)
    except (VideoStoryError, OSError) as exc:
        raise _fail(str(exc))
    for rep in sorted(reps, key=lambda r: r.video_id):
        click.echo(f"{rep.video_id}\t{rep.stats.total_bytes}")
    mean = sum(r.stats.total_bytes for r in reps) / len(reps)
    click.echo(f"mean\t{mean:.6f}")
    for path in written:
        click.echo(f"wrote {path}", err=True)
    sys.exit(EXIT_OK)


def run() -> None:
    """Entry point that maps usage errors onto the fatal exit code.

    Click's default convention exits 2 for malformed invocations, which
    would be indistinguishable from a partial-success run.
    """
    try:
        main(standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        sys.exit(EXIT_FATAL)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_FATAL)
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    run()
