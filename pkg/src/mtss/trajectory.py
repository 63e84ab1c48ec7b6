"""Per-checkpoint metric trajectories, training-stage detection, teacher choice.

A trajectory is one metrics row per manifest checkpoint: BLEU against the
references, per-token LM scores for each trained order, alignment
monotonicity (fuzzy reordering score and Kendall tau) of the translations
against the held-out sources, frequency-bucket proportions, and optional
token accuracy when a predictions file is listed. A failing checkpoint aborts
only its own row, with the reason recorded.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .align import AlignmentModel, train_aligner, viterbi_align
from .corpus import CheckpointManifest, Sentence, Vocabulary, load_sentences
from .errors import DataError
from .metrics import (
    FrequencyBuckets,
    bleu,
    frequency_rank_profile,
    read_predictions_jsonl,
    token_accuracy_by_frequency,
)
from .ngram import NGramLM
from .reorder import corpus_reordering_scores

_METRIC_RANGES = {
    "bleu": (0.0, 100.0),
    "frs": (0.0, 1.0),
    "kendall": (0.0, 1.0),
}


def sanitize_label(label: str) -> str:
    return label.replace("-", "_").replace("+", "_plus")


def _check_range(name: str, value: float) -> None:
    if name.startswith("lm"):
        if value > 0.0:
            raise ValueError(f"{name} must be <= 0, got {value}")
        return
    if name.startswith(("freq_", "acc_")):
        low, high = 0.0, 1.0
    elif name in _METRIC_RANGES:
        low, high = _METRIC_RANGES[name]
    else:
        return
    if not low <= value <= high:
        raise ValueError(f"{name} out of range [{low}, {high}]: {value}")


@dataclass(frozen=True)
class TrajectoryRow:
    step: int
    metrics: dict[str, float]
    flags: tuple[str, ...] = ()
    error: str | None = None

    def __post_init__(self):
        for name, value in self.metrics.items():
            _check_range(name, value)


@dataclass(frozen=True)
class MetricTrajectory:
    rows: tuple[TrajectoryRow, ...]
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        steps = [row.step for row in self.rows]
        if steps != sorted(set(steps)):
            raise ValueError(f"steps must be strictly increasing: {steps}")

    def series(self, name: str) -> list[tuple[int, float]]:
        return [(row.step, row.metrics[name]) for row in self.rows if name in row.metrics]

    def metric_names(self) -> list[str]:
        names: list[str] = []
        for row in self.rows:
            for name in row.metrics:
                if name not in names:
                    names.append(name)
        return names


@dataclass(frozen=True)
class AlignerConfig:
    """How alignments are produced per checkpoint.

    Mode "per-checkpoint" retrains the aligner on each checkpoint's
    translations (the default, so alignments track each model state); mode
    "shared" reuses one pre-trained model, which is faster but changes
    comparability and is recorded in the trajectory metadata.
    """

    mode: str = "per-checkpoint"
    iterations: int = 5
    diagonal_tension: float = 4.0
    null_prob: float = 0.08
    shared_model: AlignmentModel | None = None

    def __post_init__(self):
        if self.mode not in ("per-checkpoint", "shared"):
            raise ValueError(f"unknown aligner mode {self.mode!r}")
        if self.mode == "shared" and self.shared_model is None:
            raise ValueError("shared aligner mode requires a shared_model")


def compute_trajectory(
    manifest: CheckpointManifest,
    references: Sequence[Sentence],
    heldout_sources: Sequence[Sentence] | None,
    lms: Mapping[int, NGramLM],
    vocab: Vocabulary,
    buckets: FrequencyBuckets = FrequencyBuckets(),
    aligner: AlignerConfig | None = AlignerConfig(),
    min_frs_len: int = 2,
    min_kendall_len: int = 10,
) -> MetricTrajectory:
    rows = []
    for entry in manifest.entries:
        try:
            rows.append(
                _checkpoint_row(
                    entry.step,
                    entry.translations_path,
                    entry.predictions_path,
                    references,
                    heldout_sources,
                    lms,
                    vocab,
                    buckets,
                    aligner,
                    min_frs_len,
                    min_kendall_len,
                )
            )
        except (DataError, ValueError, OSError) as exc:
            rows.append(TrajectoryRow(step=entry.step, metrics={}, error=str(exc)))
    metadata = {
        "alignment_mode": aligner.mode if aligner is not None else "disabled",
        "lm_orders": ",".join(str(order) for order in sorted(lms)),
        "buckets": ",".join(str(bound) for bound in buckets.boundaries),
    }
    if aligner is not None:
        metadata["aligner_iterations"] = str(aligner.iterations)
        metadata["aligner_diagonal_tension"] = repr(aligner.diagonal_tension)
        metadata["aligner_null_prob"] = repr(aligner.null_prob)
    return MetricTrajectory(rows=tuple(rows), metadata=metadata)


def _checkpoint_row(
    step,
    translations_path,
    predictions_path,
    references,
    heldout_sources,
    lms,
    vocab,
    buckets,
    aligner,
    min_frs_len,
    min_kendall_len,
) -> TrajectoryRow:
    translations = load_sentences(translations_path)
    if len(translations) != len(references):
        raise DataError(
            f"translation/reference line-count mismatch: {len(translations)} vs {len(references)}",
            path=translations_path,
        )
    metrics: dict[str, float] = {}
    flags: list[str] = []

    bleu_result = bleu(translations, references)
    metrics["bleu"] = bleu_result.score
    if bleu_result.zero_precision:
        flags.append("bleu_zero_precision")

    for order in sorted(lms):
        metrics[f"lm{order}"] = lms[order].score_corpus(translations).per_token_log10

    if aligner is not None:
        if heldout_sources is None:
            raise DataError("alignment metrics need held-out sources")
        if len(heldout_sources) != len(translations):
            raise DataError(
                f"held-out source/translation line-count mismatch: "
                f"{len(heldout_sources)} vs {len(translations)}",
                path=translations_path,
            )
        pairs = list(zip(heldout_sources, translations))
        if aligner.mode == "shared":
            model = aligner.shared_model
        else:
            model = train_aligner(
                pairs,
                iterations=aligner.iterations,
                diagonal_tension=aligner.diagonal_tension,
                null_prob=aligner.null_prob,
            )
        alignments = [viterbi_align(model, src, tgt) for src, tgt in pairs]
        summary = corpus_reordering_scores(alignments, min_frs_len, min_kendall_len)
        if summary.mean_frs is not None:
            metrics["frs"] = summary.mean_frs
        else:
            flags.append("frs_unavailable")
        if summary.mean_kendall is not None:
            metrics["kendall"] = summary.mean_kendall
        else:
            flags.append("kendall_unavailable")

    for label, proportion in frequency_rank_profile(translations, vocab, buckets).items():
        metrics[f"freq_{sanitize_label(label)}"] = proportion

    if predictions_path is not None:
        records = read_predictions_jsonl(predictions_path)
        accuracy = token_accuracy_by_frequency(records, vocab, buckets)
        for label, bucket in accuracy.buckets.items():
            metrics[f"acc_{sanitize_label(label)}"] = bucket.accuracy
        metrics["acc_overall"] = accuracy.overall.accuracy

    return TrajectoryRow(step=step, metrics=metrics, flags=tuple(flags))


@dataclass(frozen=True)
class StageBoundaries:
    """Steps ending the first two training stages, with the applied rules.

    Stage 1 (target-side language modeling) ends at the peak of the 2-gram
    per-token LM score; stage 2 (approaching word-by-word translation) ends at
    the earliest step whose BLEU is within ``delta_bleu`` of the maximum.
    Peaks of every available LM order are reported for inspection.
    """

    stage1_end_step: int
    stage2_end_step: int
    stage1_rationale: str
    stage2_rationale: str
    clamped: bool
    lm_peaks: dict[int, int]


def _argmax_step(series: Sequence[tuple[int, float]]) -> tuple[int, float]:
    best_step, best_value = series[0]
    for step, value in series[1:]:
        if value > best_value:
            best_step, best_value = step, value
    return best_step, best_value


def detect_stages(trajectory: MetricTrajectory, delta_bleu: float = 0.5) -> StageBoundaries:
    if delta_bleu < 0.0:
        raise ValueError("delta_bleu must be >= 0")
    lm2 = trajectory.series("lm2")
    bleu_series = trajectory.series("bleu")
    if len(lm2) < 3 or len(bleu_series) < 3:
        raise ValueError(
            "stage detection needs lm2 and bleu series with at least 3 checkpoints "
            f"(got {len(lm2)} and {len(bleu_series)})"
        )
    stage1_step, stage1_value = _argmax_step(lm2)

    bleu_max = max(value for _, value in bleu_series)
    stage2_step = next(step for step, value in bleu_series if value >= bleu_max - delta_bleu)
    stage2_rationale = (
        f"earliest step with bleu >= max - {delta_bleu} ({bleu_max - delta_bleu:.4f})"
    )
    clamped = False
    if stage2_step < stage1_step:
        stage2_step = stage1_step
        stage2_rationale += "; clamped up to the stage-1 boundary"
        clamped = True

    lm_peaks = {}
    for name in trajectory.metric_names():
        if name.startswith("lm") and name[2:].isdigit():
            lm_peaks[int(name[2:])] = _argmax_step(trajectory.series(name))[0]

    return StageBoundaries(
        stage1_end_step=stage1_step,
        stage2_end_step=stage2_step,
        stage1_rationale=f"peak 2-gram per-token LM score ({stage1_value:.6f})",
        stage2_rationale=stage2_rationale,
        clamped=clamped,
        lm_peaks=lm_peaks,
    )


@dataclass(frozen=True)
class TeacherRecommendation:
    step: int
    bleu_at_step: float
    bleu_max: float
    frs_at_step: float
    delta: float


def recommend_teacher(
    trajectory: MetricTrajectory, delta_bleu: float = 0.5
) -> TeacherRecommendation:
    """Pick the most monotonic checkpoint whose BLEU is near the maximum.

    Among checkpoints with bleu >= max(bleu) - delta_bleu, return the one with
    the highest fuzzy reordering score, breaking ties toward the earliest
    step. Only rows carrying both metrics are considered.
    """
    if delta_bleu < 0.0:
        raise ValueError("delta_bleu must be >= 0")
    candidates = [
        (row.step, row.metrics["bleu"], row.metrics["frs"])
        for row in trajectory.rows
        if "bleu" in row.metrics and "frs" in row.metrics
    ]
    if not candidates:
        raise ValueError("no checkpoints with both bleu and frs")
    bleu_max = max(value for _, value, _ in candidates)
    band = [c for c in candidates if c[1] >= bleu_max - delta_bleu]
    best = band[0]
    for candidate in band[1:]:
        if candidate[2] > best[2]:
            best = candidate
    recommendation = TeacherRecommendation(
        step=best[0],
        bleu_at_step=best[1],
        bleu_max=bleu_max,
        frs_at_step=best[2],
        delta=delta_bleu,
    )
    assert recommendation.bleu_at_step >= bleu_max - delta_bleu
    return recommendation


_FIXED_COLUMNS = ("bleu", "lm2", "lm3", "lm4", "lm5", "lm6", "frs", "kendall")


def _column_order(trajectory: MetricTrajectory) -> list[str]:
    names = trajectory.metric_names()
    ordered = [name for name in _FIXED_COLUMNS if name in names]
    ordered += [name for name in names if name.startswith("freq_") and name not in ordered]
    ordered += [name for name in names if name.startswith("acc_") and name not in ordered]
    ordered += sorted(name for name in names if name not in ordered)
    return ordered


def write_trajectory_csv(
    trajectory: MetricTrajectory, path, extra_metadata: Mapping[str, str] | None = None
) -> None:
    metadata = dict(trajectory.metadata)
    if extra_metadata:
        metadata.update(extra_metadata)
    columns = _column_order(trajectory)
    out = io.StringIO()
    for key, value in metadata.items():
        out.write(f"# {key}: {value}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["step", *columns, "flags", "error"])
    for row in trajectory.rows:
        cells = [str(row.step)]
        cells += [repr(row.metrics[c]) if c in row.metrics else "" for c in columns]
        cells.append(";".join(row.flags))
        cells.append(row.error or "")
        writer.writerow(cells)
    Path(path).write_text(out.getvalue(), encoding="utf-8")


def read_trajectory_csv(path) -> MetricTrajectory:
    path = Path(path)
    metadata: dict[str, str] = {}
    data_lines = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            metadata[key.strip()] = value.strip()
        else:
            data_lines.append(line)
    if not data_lines:
        raise DataError("trajectory file has no header", path=path)
    parsed = list(csv.reader(data_lines))
    header = parsed[0]
    if header[:1] != ["step"] or header[-2:] != ["flags", "error"]:
        raise DataError("malformed trajectory header", path=path)
    rows = []
    for lineno, cells in enumerate(parsed[1:], start=2):
        if len(cells) != len(header):
            raise DataError(f"expected {len(header)} cells, got {len(cells)}", path=path, line=lineno)
        try:
            step = int(cells[0])
        except ValueError:
            raise DataError(f"malformed step {cells[0]!r}", path=path, line=lineno) from None
        metrics = {}
        for name, cell in zip(header[1:-2], cells[1:-2]):
            if cell == "":
                continue
            try:
                metrics[name] = float(cell)
            except ValueError:
                raise DataError(f"malformed value {cell!r} for {name}", path=path, line=lineno) from None
        flags = tuple(flag for flag in cells[-2].split(";") if flag)
        error = cells[-1] or None
        rows.append(TrajectoryRow(step=step, metrics=metrics, flags=flags, error=error))
    return MetricTrajectory(rows=tuple(rows), metadata=metadata)
