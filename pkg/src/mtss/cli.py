"""Single executable exposing every operation as a subcommand.

Exit codes: 0 success, 1 usage error (usage text on stderr), 2 data error
with file/line context and no stack dump. ``--json`` switches stdout to a
machine-readable document carrying the same numbers plus run metadata.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from . import __version__
from .arpa import export_arpa, import_arpa
from .align import (
    SentenceAlignment,
    dump_ttable,
    emit_pharaoh,
    parse_pharaoh_line,
    train_aligner,
    viterbi_align,
)
from .config import (
    RunConfig,
    build_metadata,
    load_config_file,
    merge_config,
    metadata_lines,
)
from .corpus import build_vocabulary, load_manifest, load_sentences
from .errors import DataError, MtssError
from .metrics import (
    FrequencyBuckets,
    bleu,
    frequency_rank_profile,
    read_predictions_jsonl,
    token_accuracy_by_frequency,
)
from .ngram import train_from_sentences
from .plotting import render_series_svg
from .reorder import corpus_reordering_scores
from .trajectory import (
    AlignerConfig,
    compute_trajectory,
    detect_stages,
    read_trajectory_csv,
    recommend_teacher,
    write_trajectory_csv,
)

DEFAULT_BUCKETS = "10,50,500,5000"


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class _Param:
    key: str
    type: type = str
    default: Any = None
    required: bool = False
    choices: tuple[str, ...] | None = None
    help: str = ""

    @property
    def flag(self) -> str:
        return "--" + self.key.replace("_", "-")

    @property
    def dest(self) -> str:
        return "param_" + self.key


_ALIGNER_PARAMS = (
    _Param("iters", int, 5, help="EM iterations"),
    _Param("lambda", float, 4.0, help="diagonal tension of the alignment prior"),
    _Param("p0", float, 0.08, help="null-alignment probability"),
)

_SUBCOMMANDS: dict[str, tuple[_Param, ...]] = {
    "train-lm": (
        _Param("order", int, 3, help="n-gram order (1..6)"),
        _Param("in", required=True, help="training text, one tokenized sentence per line"),
        _Param("out", required=True, help="output ARPA model path"),
        _Param("discount_mode", str, "modified", choices=("modified", "fixed")),
    ),
    "score-lm": (
        _Param("model", required=True, help="ARPA model path"),
        _Param("in", required=True, help="text to score"),
        _Param("per_sentence", bool, help="also print one line per sentence"),
        _Param("total", bool, help="report the total log10 score instead of per-token"),
    ),
    "align": (
        _Param("src", required=True),
        _Param("tgt", required=True),
        *_ALIGNER_PARAMS,
        _Param("out", required=True, help="output alignments, pharaoh format"),
        _Param("ttable_out", help="optional TSV dump of the lexical table"),
    ),
    "reorder-score": (
        _Param("alignments", required=True, help="pharaoh alignment file"),
        _Param("src", required=True),
        _Param("tgt", required=True),
        _Param("out", required=True, help="output CSV"),
        _Param("min_frs_len", int, 2),
        _Param("min_kt_len", int, 10),
    ),
    "bleu": (
        _Param("hyp", required=True),
        _Param("ref", required=True),
        _Param("max_order", int, 4),
    ),
    "accuracy": (
        _Param("pred", required=True, help="JSONL predictions ({'ref': [...], 'top1': [...]})"),
        _Param("vocab_from", required=True, help="training target text for frequency ranks"),
        _Param("buckets", str, DEFAULT_BUCKETS),
    ),
    "freq-profile": (
        _Param("in", required=True),
        _Param("vocab_from", required=True),
        _Param("buckets", str, DEFAULT_BUCKETS),
    ),
    "trajectory": (
        _Param("manifest", required=True),
        _Param("refs", required=True, help="reference translations for BLEU"),
        _Param("train_tgt", required=True, help="training target text for LMs and ranks"),
        _Param("heldout_src", required=True, help="source sentences for alignment metrics"),
        _Param("out", required=True, help="output trajectory CSV"),
        _Param("plot", help="optional SVG chart path"),
        _Param("orders", str, "2,3,4,5", help="LM orders to train"),
        _Param("discount_mode", str, "modified", choices=("modified", "fixed")),
        _Param("aligner_mode", str, "per-checkpoint", choices=("per-checkpoint", "shared")),
        *_ALIGNER_PARAMS,
        _Param("buckets", str, DEFAULT_BUCKETS),
        _Param("min_frs_len", int, 2),
        _Param("min_kt_len", int, 10),
    ),
    "detect-stages": (
        _Param("trajectory", required=True, help="trajectory CSV"),
        _Param("delta", float, 0.5, help="BLEU band width"),
    ),
    "recommend-teacher": (
        _Param("trajectory", required=True, help="trajectory CSV"),
        _Param("delta", float, 0.5, help="BLEU band width"),
    ),
}


def build_parser() -> tuple[_Parser, dict[str, _Parser]]:
    parser = _Parser(prog="mtss", description=__doc__)
    parser.add_argument("--version", action="version", version=f"mtss {__version__}")
    subactions = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    subparsers: dict[str, _Parser] = {}
    for name, params in _SUBCOMMANDS.items():
        sub = subactions.add_parser(name)
        for param in params:
            if param.type is bool:
                sub.add_argument(param.flag, dest=param.dest, action="store_true",
                                 default=None, help=param.help)
            else:
                sub.add_argument(param.flag, dest=param.dest, type=param.type, default=None,
                                 choices=param.choices, help=param.help)
        sub.add_argument("--config", type=Path, default=None, help="TOML config file")
        sub.add_argument("--seed", type=int, default=None)
        sub.add_argument("--deterministic", action="store_true", default=None)
        sub.add_argument("--threads", type=int, default=None)
        sub.add_argument("--output-dir", dest="output_dir", type=Path, default=None)
        sub.add_argument("--json", dest="json_output", action="store_true", default=None)
        subparsers[name] = sub
    return parser, subparsers


def _resolve(args: argparse.Namespace, subparsers: dict[str, _Parser]) -> RunConfig:
    params = _SUBCOMMANDS[args.command]
    known = {param.key: param.type for param in params}
    file_values = load_config_file(args.config) if args.config is not None else {}
    cli_values: dict[str, Any] = {param.key: getattr(args, param.dest) for param in params}
    cli_values["seed"] = args.seed
    cli_values["deterministic"] = args.deterministic
    cli_values["threads"] = args.threads
    cli_values["output_dir"] = str(args.output_dir) if args.output_dir is not None else None
    cli_values["json"] = args.json_output
    merged = merge_config(args.command, known, file_values, cli_values)

    threads = merged.pop("threads", None)
    if threads is None and os.environ.get("MTSS_THREADS"):
        try:
            threads = int(os.environ["MTSS_THREADS"])
        except ValueError:
            raise DataError(f"MTSS_THREADS is not an integer: {os.environ['MTSS_THREADS']!r}")
    if threads is None:
        threads = os.cpu_count() or 1
    if threads < 1:
        raise DataError(f"thread count must be >= 1, got {threads}")

    output_dir = merged.pop("output_dir", None)
    cfg = RunConfig(
        subcommand=args.command,
        seed=merged.pop("seed", None),
        deterministic=bool(merged.pop("deterministic", None) or False),
        threads=threads,
        output_dir=Path(output_dir) if output_dir else None,
        json_output=bool(merged.pop("json", None) or False),
        values=merged,
    )
    for param in params:
        if cfg.values.get(param.key) is None:
            if param.default is not None:
                cfg.values[param.key] = param.default
            elif param.required:
                subparsers[args.command].error(f"missing required parameter {param.flag}")
        elif param.choices and cfg.values[param.key] not in param.choices:
            subparsers[args.command].error(
                f"invalid value for {param.flag}: {cfg.values[param.key]!r} "
                f"(choose from {', '.join(param.choices)})"
            )
    return cfg


def _emit_json(meta: dict[str, str], result: Any) -> None:
    print(json.dumps({"meta": meta, "result": result}, sort_keys=True, indent=2))


def _write_sidecar(path: Path, meta: dict[str, str]) -> None:
    sidecar = path.with_name(path.name + ".meta.json")
    sidecar.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _cmd_train_lm(cfg: RunConfig) -> int:
    sentences = load_sentences(cfg.require("in"))
    lm = train_from_sentences(sentences, cfg.get("order"), cfg.get("discount_mode"))
    out = cfg.resolve_output(cfg.require("out"))
    export_arpa(lm, out)
    meta = build_metadata(cfg, {"in": cfg.require("in")})
    _write_sidecar(out, meta)
    counts = {k + 1: len(table) for k, table in enumerate(lm.probs)}
    if cfg.json_output:
        _emit_json(meta, {"order": lm.order, "ngram_entries": counts, "model": str(out)})
    else:
        print(f"trained order-{lm.order} model: " +
              " ".join(f"{k}-grams={n}" for k, n in counts.items()))
        print(f"wrote {out}")
    return 0


def _cmd_score_lm(cfg: RunConfig) -> int:
    lm = import_arpa(cfg.require("model"))
    sentences = load_sentences(cfg.require("in"))
    if not sentences:
        raise DataError("nothing to score: input is empty", path=cfg.require("in"))
    per_sentence = [lm.score_sentence(s) for s in sentences]
    total = sum(s.total_log10 for s in per_sentence)
    tokens = sum(s.token_count for s in per_sentence)
    headline = total if cfg.get("total") else total / tokens
    meta = build_metadata(cfg, {"model": cfg.require("model"), "in": cfg.require("in")})
    if cfg.json_output:
        result = {
            "score": headline,
            "total_log10": total,
            "token_count": tokens,
            "per_token_log10": total / tokens,
        }
        if cfg.get("per_sentence"):
            result["sentences"] = [
                {"total_log10": s.total_log10, "token_count": s.token_count}
                for s in per_sentence
            ]
        _emit_json(meta, result)
        return 0
    if cfg.get("per_sentence"):
        for i, score in enumerate(per_sentence):
            print(f"{i}\t{score.total_log10!r}\t{score.token_count}\t{score.per_token_log10!r}")
    print(f"score: {headline!r}")
    print(f"total_log10: {total!r} tokens: {tokens} per_token_log10: {total / tokens!r}")
    return 0


def _cmd_align(cfg: RunConfig) -> int:
    sources = load_sentences(cfg.require("src"))
    targets = load_sentences(cfg.require("tgt"))
    if len(sources) != len(targets):
        raise DataError(
            f"line-count mismatch: {len(sources)} source vs {len(targets)} target sentences"
        )
    pairs = list(zip(sources, targets))
    model = train_aligner(
        pairs,
        iterations=cfg.get("iters"),
        diagonal_tension=cfg.get("lambda"),
        null_prob=cfg.get("p0"),
    )
    alignments = [viterbi_align(model, src, tgt) for src, tgt in pairs]
    out = cfg.resolve_output(cfg.require("out"))
    lines = [emit_pharaoh(a) for a in alignments]
    out.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    meta = build_metadata(cfg, {"src": cfg.require("src"), "tgt": cfg.require("tgt")})
    meta["final_log_likelihood"] = repr(model.log_likelihoods[-1])
    _write_sidecar(out, meta)
    if cfg.get("ttable_out"):
        dump_ttable(model, cfg.resolve_output(cfg.get("ttable_out")))
    if cfg.json_output:
        _emit_json(meta, {
            "pairs": len(pairs),
            "log_likelihoods": list(model.log_likelihoods),
            "alignments": str(out),
        })
    else:
        print(f"aligned {len(pairs)} pairs; final log-likelihood {model.log_likelihoods[-1]!r}")
        print(f"wrote {out}")
    return 0


def _cmd_reorder_score(cfg: RunConfig) -> int:
    sources = load_sentences(cfg.require("src"))
    targets = load_sentences(cfg.require("tgt"))
    alignment_path = Path(cfg.require("alignments"))
    raw_lines = alignment_path.read_text(encoding="utf-8").splitlines()
    if not (len(sources) == len(targets) == len(raw_lines)):
        raise DataError(
            f"line-count mismatch: {len(raw_lines)} alignments, "
            f"{len(sources)} source, {len(targets)} target sentences"
        )
    alignments = []
    for lineno, (line, src, tgt) in enumerate(zip(raw_lines, sources, targets), start=1):
        try:
            links = parse_pharaoh_line(line, src_len=len(src), tgt_len=len(tgt))
            alignments.append(SentenceAlignment(links, len(src), len(tgt)))
        except (DataError, ValueError) as exc:
            raise DataError(str(exc), path=alignment_path, line=lineno) from None
    summary = corpus_reordering_scores(
        alignments, cfg.get("min_frs_len"), cfg.get("min_kt_len")
    )
    meta = build_metadata(cfg, {
        "alignments": alignment_path, "src": cfg.require("src"), "tgt": cfg.require("tgt"),
    })
    meta["skipped_frs"] = str(summary.skipped_frs)
    meta["skipped_kendall"] = str(summary.skipped_kendall)
    meta["empty_alignments"] = str(summary.empty_alignments)

    out = cfg.resolve_output(cfg.require("out"))
    buffer = io.StringIO()
    for line in metadata_lines(meta):
        buffer.write(line + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["sentence_id", "src_len", "frs", "kendall", "skipped_reason"])
    for row in summary.sentences:
        writer.writerow([
            row.index,
            row.src_len,
            "" if row.frs is None else repr(row.frs),
            "" if row.kendall is None else repr(row.kendall),
            row.skipped_reason or "",
        ])
    writer.writerow([
        "corpus_mean",
        "",
        "" if summary.mean_frs is None else repr(summary.mean_frs),
        "" if summary.mean_kendall is None else repr(summary.mean_kendall),
        "",
    ])
    out.write_text(buffer.getvalue(), encoding="utf-8")

    result = {
        "mean_frs": summary.mean_frs,
        "mean_kendall": summary.mean_kendall,
        "frs_sentences": summary.frs_sentences,
        "kendall_sentences": summary.kendall_sentences,
        "skipped_frs": summary.skipped_frs,
        "skipped_kendall": summary.skipped_kendall,
        "empty_alignments": summary.empty_alignments,
    }
    if cfg.json_output:
        _emit_json(meta, result)
    else:
        frs_text = "absent" if summary.mean_frs is None else repr(summary.mean_frs)
        kt_text = "absent" if summary.mean_kendall is None else repr(summary.mean_kendall)
        print(f"mean_frs: {frs_text} ({summary.frs_sentences} sentences, "
              f"{summary.skipped_frs} skipped)")
        print(f"mean_kendall: {kt_text} ({summary.kendall_sentences} sentences, "
              f"{summary.skipped_kendall} skipped)")
        print(f"wrote {out}")
    return 0


def _cmd_bleu(cfg: RunConfig) -> int:
    hyps = load_sentences(cfg.require("hyp"))
    refs = load_sentences(cfg.require("ref"))
    if len(hyps) != len(refs):
        raise DataError(
            f"line-count mismatch: {len(hyps)} hypotheses vs {len(refs)} references"
        )
    try:
        result = bleu(hyps, refs, max_order=cfg.get("max_order"))
    except ValueError as exc:
        raise DataError(str(exc)) from None
    meta = build_metadata(cfg, {"hyp": cfg.require("hyp"), "ref": cfg.require("ref")})
    if cfg.json_output:
        _emit_json(meta, {
            "bleu": result.score,
            "precisions": [[m, t] for m, t in result.precisions],
            "brevity_penalty": result.brevity_penalty,
            "hyp_tokens": result.hyp_tokens,
            "ref_tokens": result.ref_tokens,
            "zero_precision": result.zero_precision,
        })
        return 0
    if result.zero_precision:
        print("warning: an n-gram order has zero matches; score is 0 by definition",
              file=sys.stderr)
    print(f"{result.score:.2f}")
    return 0


def _load_buckets_and_vocab(cfg: RunConfig):
    vocab = build_vocabulary(load_sentences(cfg.require("vocab_from")))
    buckets = FrequencyBuckets.parse(cfg.get("buckets"))
    return vocab, buckets


def _cmd_accuracy(cfg: RunConfig) -> int:
    records = read_predictions_jsonl(cfg.require("pred"))
    if not records:
        raise DataError("predictions file is empty", path=cfg.require("pred"))
    vocab, buckets = _load_buckets_and_vocab(cfg)
    result = token_accuracy_by_frequency(records, vocab, buckets)
    meta = build_metadata(cfg, {"pred": cfg.require("pred"), "vocab_from": cfg.require("vocab_from")})
    if cfg.json_output:
        _emit_json(meta, {
            "buckets": {
                label: {"accuracy": b.accuracy, "matches": b.matches, "positions": b.positions}
                for label, b in result.buckets.items()
            },
            "overall": {
                "accuracy": result.overall.accuracy,
                "matches": result.overall.matches,
                "positions": result.overall.positions,
            },
        })
        return 0
    for label, bucket in result.buckets.items():
        print(f"{label}: {bucket.accuracy!r} ({bucket.matches}/{bucket.positions})")
    print(f"overall: {result.overall.accuracy!r} "
          f"({result.overall.matches}/{result.overall.positions})")
    return 0


def _cmd_freq_profile(cfg: RunConfig) -> int:
    sentences = load_sentences(cfg.require("in"))
    vocab, buckets = _load_buckets_and_vocab(cfg)
    try:
        profile = frequency_rank_profile(sentences, vocab, buckets)
    except ValueError as exc:
        raise DataError(str(exc), path=cfg.require("in")) from None
    meta = build_metadata(cfg, {"in": cfg.require("in"), "vocab_from": cfg.require("vocab_from")})
    if cfg.json_output:
        _emit_json(meta, {"proportions": profile})
        return 0
    for label, proportion in profile.items():
        print(f"{label}: {proportion!r}")
    return 0


def _cmd_trajectory(cfg: RunConfig) -> int:
    manifest = load_manifest(cfg.require("manifest"))
    references = load_sentences(cfg.require("refs"))
    if not references:
        raise DataError("reference file is empty", path=cfg.require("refs"))
    train_tgt = load_sentences(cfg.require("train_tgt"))
    if not any(train_tgt):
        raise DataError("training target file has no tokens", path=cfg.require("train_tgt"))
    heldout = load_sentences(cfg.require("heldout_src"))
    if len(heldout) != len(references):
        raise DataError(
            f"held-out source/reference line-count mismatch: "
            f"{len(heldout)} vs {len(references)}"
        )
    vocab = build_vocabulary(train_tgt)
    buckets = FrequencyBuckets.parse(cfg.get("buckets"))

    try:
        orders = [int(part) for part in str(cfg.get("orders")).split(",") if part.strip()]
    except ValueError:
        raise DataError(f"malformed LM order list {cfg.get('orders')!r}") from None
    lms = {
        order: train_from_sentences(train_tgt, order, cfg.get("discount_mode"))
        for order in orders
    }

    if cfg.get("aligner_mode") == "shared":
        shared = train_aligner(
            list(zip(heldout, references)),
            iterations=cfg.get("iters"),
            diagonal_tension=cfg.get("lambda"),
            null_prob=cfg.get("p0"),
        )
        aligner = AlignerConfig(
            mode="shared",
            iterations=cfg.get("iters"),
            diagonal_tension=cfg.get("lambda"),
            null_prob=cfg.get("p0"),
            shared_model=shared,
        )
    else:
        aligner = AlignerConfig(
            mode="per-checkpoint",
            iterations=cfg.get("iters"),
            diagonal_tension=cfg.get("lambda"),
            null_prob=cfg.get("p0"),
        )

    trajectory = compute_trajectory(
        manifest,
        references,
        heldout,
        lms,
        vocab,
        buckets,
        aligner,
        cfg.get("min_frs_len"),
        cfg.get("min_kt_len"),
    )
    meta = build_metadata(cfg, {
        "manifest": cfg.require("manifest"),
        "refs": cfg.require("refs"),
        "train_tgt": cfg.require("train_tgt"),
        "heldout_src": cfg.require("heldout_src"),
    })
    out = cfg.resolve_output(cfg.require("out"))
    write_trajectory_csv(trajectory, out, extra_metadata=meta)

    if cfg.get("plot"):
        series = {}
        for name in ["bleu"] + [f"lm{o}" for o in sorted(lms)] + ["frs", "kendall"]:
            points = trajectory.series(name)
            if points:
                series[name] = points
        render_series_svg(series, cfg.resolve_output(cfg.get("plot")), metadata=meta)

    if cfg.json_output:
        _emit_json(meta, {
            "rows": [
                {"step": row.step, "metrics": row.metrics,
                 "flags": list(row.flags), "error": row.error}
                for row in trajectory.rows
            ],
            "out": str(out),
        })
        return 0
    for row in trajectory.rows:
        if row.error is not None:
            print(f"step={row.step} error: {row.error}")
            continue
        shown = " ".join(
            f"{name}={row.metrics[name]:.4f}"
            for name in ("bleu", "frs", "kendall")
            if name in row.metrics
        )
        print(f"step={row.step} {shown}")
    print(f"wrote {out}")
    return 0


def _read_trajectory_arg(cfg: RunConfig):
    return read_trajectory_csv(cfg.require("trajectory"))


def _cmd_detect_stages(cfg: RunConfig) -> int:
    trajectory = _read_trajectory_arg(cfg)
    try:
        stages = detect_stages(trajectory, delta_bleu=cfg.get("delta"))
    except ValueError as exc:
        raise DataError(str(exc), path=cfg.require("trajectory")) from None
    meta = build_metadata(cfg, {"trajectory": cfg.require("trajectory")})
    if cfg.json_output:
        _emit_json(meta, {
            "stage1_end_step": stages.stage1_end_step,
            "stage2_end_step": stages.stage2_end_step,
            "stage1_rationale": stages.stage1_rationale,
            "stage2_rationale": stages.stage2_rationale,
            "clamped": stages.clamped,
            "lm_peaks": {str(k): v for k, v in stages.lm_peaks.items()},
        })
        return 0
    print(f"stage1_end_step: {stages.stage1_end_step} ({stages.stage1_rationale})")
    print(f"stage2_end_step: {stages.stage2_end_step} ({stages.stage2_rationale})")
    for order in sorted(stages.lm_peaks):
        print(f"lm{order}_peak_step: {stages.lm_peaks[order]}")
    return 0


def _cmd_recommend_teacher(cfg: RunConfig) -> int:
    trajectory = _read_trajectory_arg(cfg)
    try:
        rec = recommend_teacher(trajectory, delta_bleu=cfg.get("delta"))
    except ValueError as exc:
        raise DataError(str(exc), path=cfg.require("trajectory")) from None
    meta = build_metadata(cfg, {"trajectory": cfg.require("trajectory")})
    if cfg.json_output:
        _emit_json(meta, {
            "step": rec.step,
            "bleu_at_step": rec.bleu_at_step,
            "bleu_max": rec.bleu_max,
            "frs_at_step": rec.frs_at_step,
            "delta": rec.delta,
        })
        return 0
    print(f"recommended_step: {rec.step}")
    print(f"bleu_at_step: {rec.bleu_at_step!r} (max {rec.bleu_max!r}, delta {rec.delta!r})")
    print(f"frs_at_step: {rec.frs_at_step!r}")
    return 0


_HANDLERS: dict[str, Callable[[RunConfig], int]] = {
    "train-lm": _cmd_train_lm,
    "score-lm": _cmd_score_lm,
    "align": _cmd_align,
    "reorder-score": _cmd_reorder_score,
    "bleu": _cmd_bleu,
    "accuracy": _cmd_accuracy,
    "freq-profile": _cmd_freq_profile,
    "trajectory": _cmd_trajectory,
    "detect-stages": _cmd_detect_stages,
    "recommend-teacher": _cmd_recommend_teacher,
}


def main(argv=None) -> int:
    parser, subparsers = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _resolve(args, subparsers)
        return _HANDLERS[args.command](cfg)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except (DataError, MtssError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        # anticipated data problems (bad parameter values, unreadable files)
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
