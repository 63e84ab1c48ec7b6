"""Tokenized text ingestion, frequency-ranked vocabularies, checkpoint manifests."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataError

# A sentence is an immutable sequence of whitespace-free tokens.
Sentence = tuple[str, ...]


def tokenize(line: str) -> Sentence:
    """Split on runs of whitespace, trimming the edges."""
    return tuple(line.split())


def load_sentences(path) -> list[Sentence]:
    """Read one whitespace-tokenized sentence per line (UTF-8, LF or CRLF)."""
    raw = Path(path).read_bytes()
    lines = raw.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    sentences = []
    for lineno, chunk in enumerate(lines, start=1):
        try:
            text = chunk.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DataError(f"undecodable UTF-8 bytes ({exc.reason})", path=path, line=lineno) from exc
        sentences.append(tokenize(text))
    return sentences


@dataclass(frozen=True)
class LoadReport:
    """Line numbers (1-based) of empty sentences seen during ingestion."""

    empty_source_lines: tuple[int, ...] = ()
    empty_target_lines: tuple[int, ...] = ()


@dataclass(frozen=True)
class ParallelCorpus:
    pairs: tuple[tuple[Sentence, Sentence], ...]
    line_count: int
    report: LoadReport = field(default_factory=LoadReport)

    def __len__(self) -> int:
        return self.line_count

    def sources(self) -> list[Sentence]:
        return [src for src, _ in self.pairs]

    def targets(self) -> list[Sentence]:
        return [tgt for _, tgt in self.pairs]


def load_parallel(source_path, target_path) -> ParallelCorpus:
    """Load aligned source/target files, one sentence pair per line.

    Empty lines are kept as empty sentences and flagged in the load report;
    a line-count mismatch between the two files is an error.
    """
    sources = load_sentences(source_path)
    targets = load_sentences(target_path)
    if len(sources) != len(targets):
        raise DataError(
            f"line-count mismatch: {source_path} has {len(sources)} lines, "
            f"{target_path} has {len(targets)}"
        )
    report = LoadReport(
        empty_source_lines=tuple(i for i, s in enumerate(sources, start=1) if not s),
        empty_target_lines=tuple(i for i, t in enumerate(targets, start=1) if not t),
    )
    return ParallelCorpus(tuple(zip(sources, targets)), len(sources), report)


@dataclass(frozen=True)
class VocabEntry:
    id: int
    count: int
    rank: int


@dataclass(frozen=True)
class Vocabulary:
    """Token statistics with dense ids and frequency ranks.

    Rank 1 is the most frequent token; ties are broken by lexicographic
    token order so ranks are deterministic across runs and platforms.
    """

    entries: dict[str, VocabEntry]
    total_tokens: int

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def rank(self, token: str) -> int | None:
        entry = self.entries.get(token)
        return entry.rank if entry is not None else None

    def count(self, token: str) -> int:
        entry = self.entries.get(token)
        return entry.count if entry is not None else 0


def build_vocabulary(sentences: Iterable[Sequence[str]]) -> Vocabulary:
    """Count token frequencies and assign ranks by descending count."""
    counts: Counter[str] = Counter()
    for sentence in sentences:
        counts.update(sentence)
    if not counts:
        raise ValueError("cannot build a vocabulary from empty input")
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    entries = {
        token: VocabEntry(id=i, count=count, rank=i + 1)
        for i, (token, count) in enumerate(ordered)
    }
    return Vocabulary(entries=entries, total_tokens=sum(counts.values()))


@dataclass(frozen=True)
class ManifestEntry:
    step: int
    translations_path: Path
    predictions_path: Path | None = None


@dataclass(frozen=True)
class CheckpointManifest:
    entries: tuple[ManifestEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def steps(self) -> list[int]:
        return [entry.step for entry in self.entries]


def load_manifest(path) -> CheckpointManifest:
    """Load a checkpoint manifest.

    Format: TSV with columns ``step<TAB>translations_path[<TAB>predictions_path]``,
    ``#``-prefixed comment lines ignored. Steps must be strictly increasing and
    relative paths are resolved against the manifest location.
    """
    path = Path(path)
    base = path.resolve().parent
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"undecodable UTF-8 bytes ({exc.reason})", path=path) from exc

    entries: list[ManifestEntry] = []
    previous_step = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        columns = stripped.split("\t")
        if len(columns) not in (2, 3):
            raise DataError(
                f"malformed row: expected 2 or 3 tab-separated columns, got {len(columns)}",
                path=path,
                line=lineno,
            )
        try:
            step = int(columns[0])
        except ValueError:
            raise DataError(f"malformed step {columns[0]!r}", path=path, line=lineno) from None
        if step <= 0:
            raise DataError(f"step must be positive, got {step}", path=path, line=lineno)
        if previous_step is not None and step <= previous_step:
            raise DataError(
                f"steps must be strictly increasing: {step} follows {previous_step}",
                path=path,
                line=lineno,
            )
        previous_step = step

        resolved = []
        for column in columns[1:]:
            file_path = Path(column)
            if not file_path.is_absolute():
                file_path = base / file_path
            if not file_path.is_file():
                raise DataError(f"referenced file does not exist: {file_path}", path=path, line=lineno)
            resolved.append(file_path)
        entries.append(
            ManifestEntry(
                step=step,
                translations_path=resolved[0],
                predictions_path=resolved[1] if len(resolved) == 2 else None,
            )
        )
    return CheckpointManifest(tuple(entries))
