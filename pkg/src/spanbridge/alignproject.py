"""Word-alignment-based span projection (the traditional baseline).

Alignments are consumed, never computed. A span's token range is mapped to
the min..max of the target tokens its source tokens align to; sentences
with unprojectable or overlapping target spans are filtered, so projected
outputs always keep source-equal span counts.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import AnnotatedSentence, FormatError, LabeledSpan
from .easyproject import FILTERED, PROJECTED, ProjectionOutcome, ProjectionReport


@dataclass(frozen=True)
class Alignment:
    """0-based (src_token_index, tgt_token_index) link set."""

    links: frozenset[tuple[int, int]]

    def __post_init__(self):
        object.__setattr__(self, "links", frozenset(self.links))

    def targets_of(self, src_index: int) -> set[int]:
        return {j for i, j in self.links if i == src_index}


@dataclass(frozen=True)
class AlignedPair:
    src_tokens: tuple[str, ...]
    tgt_tokens: tuple[str, ...]
    alignment: Alignment

    def __post_init__(self):
        object.__setattr__(self, "src_tokens", tuple(self.src_tokens))
        object.__setattr__(self, "tgt_tokens", tuple(self.tgt_tokens))
        for i, j in self.alignment.links:
            if not (0 <= i < len(self.src_tokens) and 0 <= j < len(self.tgt_tokens)):
                raise FormatError(f"alignment link {i}-{j} out of range")


def parse_pharaoh(line: str, n_src: int, n_tgt: int) -> Alignment:
    """Parse whitespace-separated "i-j" pairs into a deduplicated link set."""
    links = set()
    for pos, token in enumerate(line.split()):
        left, sep, right = token.partition("-")
        if not sep or not left.isdigit() or not right.isdigit():
            raise FormatError(f"malformed alignment pair {token!r} at position {pos}")
        i, j = int(left), int(right)
        if i >= n_src or j >= n_tgt:
            raise FormatError(
                f"alignment pair {token!r} at position {pos} out of range "
                f"({n_src} source / {n_tgt} target tokens)"
            )
        links.add((i, j))
    return Alignment(frozenset(links))


UNPROJECTABLE = None


def project_span_aligned(span_range: tuple[int, int], alignment: Alignment) -> tuple[int, int] | None:
    """Map a [s, e) source token range to the min..max covered target range.

    Returns None (unprojectable) when no source token in the range is aligned.
    """
    s, e = span_range
    targets = {j for i, j in alignment.links if s <= i < e}
    if not targets:
        return None
    return (min(targets), max(targets) + 1)


def _token_bounds(tokens: tuple[str, ...]) -> list[tuple[int, int]]:
    bounds = []
    offset = 0
    for t in tokens:
        bounds.append((offset, offset + len(t)))
        offset += len(t) + 1
    return bounds


def project_sentence_aligned(
    sentence: AnnotatedSentence, pair: AlignedPair
) -> ProjectionOutcome:
    """Project all spans of a sentence through a word alignment.

    The sentence must whitespace-tokenize to pair.src_tokens with every span
    on token boundaries (contract error otherwise). Unprojectable spans and
    overlapping projected ranges filter the sentence.
    """
    if tuple(sentence.text.split(" ")) != pair.src_tokens:
        raise FormatError("sentence text does not match the aligned source tokens")
    src_bounds = _token_bounds(pair.src_tokens)
    starts = {s: i for i, (s, _) in enumerate(src_bounds)}
    ends = {e: i for i, (_, e) in enumerate(src_bounds)}

    diagnostics: list[str] = []
    projected_ranges: list[tuple[int, int, str]] = []
    for span in sentence.spans:
        if span.start not in starts or span.end not in ends:
            raise FormatError(f"span {span.id} ({span.start},{span.end}) not on token boundary")
        tok_range = (starts[span.start], ends[span.end] + 1)
        target = project_span_aligned(tok_range, pair.alignment)
        if target is None:
            return ProjectionOutcome(
                FILTERED, "Unprojectable",
                diagnostics=(f"span {span.id} has no aligned target tokens",),
            )
        unaligned = [
            i for i in range(*tok_range) if not pair.alignment.targets_of(i)
        ]
        if unaligned:
            diagnostics.append(
                f"boundary-risk: span {span.id} has unaligned source tokens {unaligned}; "
                "target range may be truncated"
            )
        projected_ranges.append((target[0], target[1], span.label))

    ordered = sorted(projected_ranges)
    for (_, prev_end, _), (next_start, _, _) in zip(ordered, ordered[1:]):
        if next_start < prev_end:
            return ProjectionOutcome(
                FILTERED, "Overlap",
                diagnostics=("two spans project to overlapping target ranges",),
            )

    tgt_bounds = _token_bounds(pair.tgt_tokens)
    spans = tuple(
        LabeledSpan(k, tgt_bounds[ts][0], tgt_bounds[te - 1][1], label)
        for k, (ts, te, label) in enumerate(ordered)
    )
    out = AnnotatedSentence(" ".join(pair.tgt_tokens), spans, sentence.meta)
    return ProjectionOutcome(PROJECTED, sentence=out, diagnostics=tuple(diagnostics))


def project_corpus_aligned(
    sentences: list[AnnotatedSentence], pairs: list[AlignedPair]
) -> tuple[list[AnnotatedSentence], ProjectionReport]:
    """Alignment-based analogue of project_corpus, with the same filtering rule."""
    if len(sentences) != len(pairs):
        raise FormatError(
            f"{len(sentences)} sentences but {len(pairs)} aligned pairs"
        )
    report = ProjectionReport()
    projected: list[AnnotatedSentence] = []
    for sentence, pair in zip(sentences, pairs):
        outcome = project_sentence_aligned(sentence, pair)
        report.add(outcome)
        if outcome.status == PROJECTED:
            projected.append(outcome.sentence)
    return projected, report
