#!/usr/bin/env python3
"""End-to-end demo on synthetic checkpoints.

Builds a bijective-dictionary parallel corpus, fakes five training
checkpoints by corrupting the clean translations less and less (local window
shuffles plus mild token dropout), then runs the full pipeline: trajectory
CSV + SVG, stage detection, and teacher recommendation.

Usage: python scripts/synthetic_trajectory_demo.py --out-dir demo_out
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from mtss.cli import main as mtss  # noqa: E402

WINDOWS = (5, 4, 3, 2, 0)
DROPOUTS = (0.08, 0.06, 0.04, 0.02, 0.0)


def make_corpus(rng, n_sentences=160, vocab=25, lengths=(10, 16)):
    pairs = []
    for _ in range(n_sentences):
        length = rng.randint(*lengths)
        chosen = rng.sample(range(vocab), length)
        pairs.append(
            (tuple(f"s{i}" for i in chosen), tuple(f"t{i}" for i in chosen))
        )
    return pairs


def corrupt(tokens, window, dropout, rng):
    tokens = list(tokens)
    if window > 1:
        shuffled = []
        for start in range(0, len(tokens), window):
            block = tokens[start : start + window]
            rng.shuffle(block)
            shuffled.extend(block)
        tokens = shuffled
    if dropout > 0.0:
        kept = [tok for tok in tokens if rng.random() >= dropout]
        tokens = kept or tokens[:1]
    return tuple(tokens)


def write_lines(path, sentences):
    path.write_text("\n".join(" ".join(s) for s in sentences) + "\n", encoding="utf-8")


def run(out_dir: Path, seed: int) -> int:
    rng = random.Random(seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    pairs = make_corpus(rng)
    sources = [src for src, _ in pairs]
    references = [tgt for _, tgt in pairs]
    write_lines(out_dir / "heldout.src", sources)
    write_lines(out_dir / "dev.tgt", references)
    write_lines(out_dir / "train.tgt", references)

    manifest_rows = []
    for index, (window, dropout) in enumerate(zip(WINDOWS, DROPOUTS), start=1):
        step = index * 1000
        translations = [corrupt(tgt, window, dropout, rng) for tgt in references]
        write_lines(out_dir / f"ckpt_{step}.txt", translations)
        manifest_rows.append(f"{step}\tckpt_{step}.txt")
    (out_dir / "checkpoints.tsv").write_text(
        "# synthetic pseudo-checkpoints, least to most converged\n"
        + "\n".join(manifest_rows)
        + "\n",
        encoding="utf-8",
    )

    base = [
        "--manifest", str(out_dir / "checkpoints.tsv"),
        "--refs", str(out_dir / "dev.tgt"),
        "--train-tgt", str(out_dir / "train.tgt"),
        "--heldout-src", str(out_dir / "heldout.src"),
    ]
    code = mtss([
        "trajectory", *base,
        "--out", str(out_dir / "trajectory.csv"),
        "--plot", str(out_dir / "trajectory.svg"),
        "--deterministic", "--seed", str(seed),
    ])
    if code != 0:
        return code
    print()
    code = mtss(["detect-stages", "--trajectory", str(out_dir / "trajectory.csv")])
    if code != 0:
        return code
    print()
    return mtss([
        "recommend-teacher", "--trajectory", str(out_dir / "trajectory.csv"),
        "--delta", "0.5",
    ])


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", type=Path, default=Path("demo_out"))
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    sys.exit(run(args.out_dir, args.seed))
