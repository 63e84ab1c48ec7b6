"""ARPA text format import/export for backoff n-gram models.

Standard layout: a ``\\data\\`` header with per-order entry counts, then one
``\\k-grams:`` section per order with tab-separated ``log10prob<TAB>tokens``
lines, a trailing ``<TAB>log10backoff`` column for context n-grams, and a
final ``\\end\\``. Context-only n-grams (begin-marker prefixes) carry the
conventional dummy probability -99. Log values are written with ``repr`` so a
round trip reproduces the exact doubles.
"""

from __future__ import annotations

from pathlib import Path

from .errors import DataError
from .ngram import BOS, BOS_ID, EOS, EOS_ID, NGramLM, UNK, UNK_ID

_DUMMY_LOGPROB = -99.0


def export_arpa(lm: NGramLM, path) -> None:
    reverse = lm.id_to_token()
    sections = []
    for k in range(1, lm.order + 1):
        grams = set(lm.probs[k - 1])
        if k < lm.order:
            grams.update(lm.backoffs[k - 1])
        rows = []
        for gram in sorted(grams, key=lambda g: tuple(reverse[i] for i in g)):
            logprob = lm.probs[k - 1].get(gram, _DUMMY_LOGPROB)
            text = " ".join(reverse[i] for i in gram)
            if k < lm.order and gram in lm.backoffs[k - 1]:
                rows.append(f"{logprob!r}\t{text}\t{lm.backoffs[k - 1][gram]!r}")
            else:
                rows.append(f"{logprob!r}\t{text}")
        sections.append(rows)

    lines = ["", "\\data\\"]
    for k, rows in enumerate(sections, start=1):
        lines.append(f"ngram {k}={len(rows)}")
    for k, rows in enumerate(sections, start=1):
        lines.append("")
        lines.append(f"\\{k}-grams:")
        lines.extend(rows)
    lines.append("")
    lines.append("\\end\\")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def import_arpa(path) -> NGramLM:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"undecodable UTF-8 bytes ({exc.reason})", path=path) from exc
    lines = text.splitlines()
    pos = 0

    def skip_blank(i: int) -> int:
        while i < len(lines) and not lines[i].strip():
            i += 1
        return i

    pos = skip_blank(pos)
    if pos >= len(lines) or lines[pos].strip() != "\\data\\":
        raise DataError("malformed ARPA header: expected \\data\\", path=path, line=pos + 1)
    pos += 1

    declared: dict[int, int] = {}
    while pos < len(lines) and lines[pos].strip():
        line = lines[pos].strip()
        if not line.startswith("ngram "):
            raise DataError(f"malformed ARPA count line: {line!r}", path=path, line=pos + 1)
        try:
            k_text, n_text = line[len("ngram "):].split("=")
            declared[int(k_text)] = int(n_text)
        except ValueError:
            raise DataError(f"malformed ARPA count line: {line!r}", path=path, line=pos + 1) from None
        pos += 1
    if not declared or sorted(declared) != list(range(1, max(declared) + 1)):
        raise DataError("malformed ARPA header: missing n-gram orders", path=path)
    order = max(declared)

    vocab = {BOS: BOS_ID, EOS: EOS_ID, UNK: UNK_ID}
    probs: list[dict[tuple[int, ...], float]] = [dict() for _ in range(order)]
    backoffs: list[dict[tuple[int, ...], float]] = [dict() for _ in range(order - 1)]

    for k in range(1, order + 1):
        pos = skip_blank(pos)
        section = f"\\{k}-grams:"
        if pos >= len(lines) or lines[pos].strip() != section:
            raise DataError(f"expected section {section}", path=path, line=pos + 1)
        pos += 1
        read = 0
        while pos < len(lines) and lines[pos].strip() and not lines[pos].startswith("\\"):
            fields = lines[pos].split("\t")
            if len(fields) not in (2, 3):
                raise DataError(
                    f"malformed entry in section {section}: {lines[pos]!r}", path=path, line=pos + 1
                )
            try:
                logprob = float(fields[0])
            except ValueError:
                raise DataError(
                    f"malformed log probability in section {section}: {fields[0]!r}",
                    path=path,
                    line=pos + 1,
                ) from None
            tokens = fields[1].split(" ")
            if len(tokens) != k:
                raise DataError(
                    f"expected {k} tokens in section {section}, got {len(tokens)}",
                    path=path,
                    line=pos + 1,
                )
            for token in tokens:
                if token not in vocab:
                    vocab[token] = len(vocab)
            gram = tuple(vocab[token] for token in tokens)
            probs[k - 1][gram] = logprob
            if len(fields) == 3:
                if k >= order:
                    raise DataError(
                        "backoff weight on a highest-order entry", path=path, line=pos + 1
                    )
                try:
                    backoffs[k - 1][gram] = float(fields[2])
                except ValueError:
                    raise DataError(
                        f"malformed backoff weight: {fields[2]!r}", path=path, line=pos + 1
                    ) from None
            read += 1
            pos += 1
        if read != declared[k]:
            raise DataError(
                f"section \\{k}-grams declares {declared[k]} entries but contains {read}",
                path=path,
            )

    pos = skip_blank(pos)
    if pos >= len(lines) or lines[pos].strip() != "\\end\\":
        raise DataError("missing \\end\\ terminator", path=path)

    return NGramLM(order=order, vocab=vocab, probs=tuple(probs), backoffs=tuple(backoffs))
