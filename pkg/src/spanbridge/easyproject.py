"""Mark -> translate -> extract -> assign labels -> filter.

The projection pipeline inserts markers around annotated spans, sends the
marked sentence through a translation backend, recovers the marked spans
from the translation, and attaches labels either by marker identity (XML,
placeholder) or by fuzzy/positional matching against independently
translated mentions (brackets, quotes).
"""

from __future__ import annotations

import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .core import AnnotatedSentence, LabeledSpan, QaExample, RelationLink
from .markers import (
    PLACEHOLDER,
    SQUARE_BRACKET,
    VALID,
    XML_INDEXED,
    MarkerScheme,
    PreexistingMarkerError,
    extract_markers,
    insert_markers,
)
from .translate import TranslateRequest, translate

MATCH_FUZZY = "fuzzy"
MATCH_SEQUENTIAL = "sequential"

FALLBACK_POSITIONAL = "positional"
FALLBACK_DROP = "drop"

PROJECTED = "Projected"
FILTERED = "Filtered"
FAILED = "Failed"


# ---------------------------------------------------------------------------
# Fuzzy ratio (gestalt pattern matching over codepoints, no junk heuristics)


def _longest_match(a: str, b: str, alo: int, ahi: int, blo: int, bhi: int):
    """Longest common substring of a[alo:ahi] and b[blo:bhi].

    Ties go to the earliest start in a, then the earliest start in b.
    """
    best_i, best_j, best_size = alo, blo, 0
    j2len: dict[int, int] = {}
    for i in range(alo, ahi):
        new_j2len: dict[int, int] = {}
        ch = a[i]
        for j in range(blo, bhi):
            if b[j] == ch:
                k = j2len.get(j - 1, 0) + 1
                new_j2len[j] = k
                if k > best_size:
                    best_i, best_j, best_size = i - k + 1, j - k + 1, k
        j2len = new_j2len
    return best_i, best_j, best_size


def _matching_blocks(a: str, b: str, alo: int, ahi: int, blo: int, bhi: int) -> int:
    i, j, k = _longest_match(a, b, alo, ahi, blo, bhi)
    if k == 0:
        return 0
    return (
        k
        + _matching_blocks(a, b, alo, i, blo, j)
        + _matching_blocks(a, b, i + k, ahi, j + k, bhi)
    )


def fuzzy_ratio(a: str, b: str) -> float:
    """Similarity in [0, 1]: 2*M / (len(a) + len(b)), where M is the total
    length of matching blocks found by recursively taking the longest common
    substring and recursing on both remainders. Two empty strings -> 1.0."""
    total = len(a) + len(b)
    if total == 0:
        return 1.0
    m = _matching_blocks(a, b, 0, len(a), 0, len(b))
    return 2.0 * m / total


# ---------------------------------------------------------------------------
# Label assignment


@dataclass(frozen=True)
class MatcherConfig:
    mode: str = MATCH_FUZZY
    threshold: float = 0.5
    on_no_match: str = FALLBACK_POSITIONAL
    nfc_normalize: bool = False

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must be in [0, 1]")
        if self.mode not in (MATCH_FUZZY, MATCH_SEQUENTIAL):
            raise ValueError(f"unknown matcher mode {self.mode!r}")
        if self.on_no_match not in (FALLBACK_POSITIONAL, FALLBACK_DROP):
            raise ValueError(f"unknown fallback {self.on_no_match!r}")


@dataclass(frozen=True)
class Assignment:
    """candidate_for[t] = source-candidate index assigned to bracketed span t."""

    candidate_for: tuple[int, ...]
    low_confidence: bool


def assign_labels_fuzzy(
    bracketed_texts: list[str],
    candidate_mentions: list[str],
    cfg: MatcherConfig,
) -> Assignment | None:
    """One-to-one assignment of candidates to bracketed spans.

    Greedy in descending ratio order; only pairs with ratio strictly above
    the threshold are confident. Leftovers are matched left-to-right with
    the low-confidence flag, or the whole sentence is dropped (None),
    depending on cfg.on_no_match.
    """
    n = len(bracketed_texts)
    if n != len(candidate_mentions):
        raise ValueError("bracketed span count must equal candidate count")
    if cfg.mode == MATCH_SEQUENTIAL:
        return Assignment(tuple(range(n)), False)

    def norm(s: str) -> str:
        return unicodedata.normalize("NFC", s) if cfg.nfc_normalize else s

    spans = [norm(t) for t in bracketed_texts]
    cands = [norm(t) for t in candidate_mentions]
    # sort by descending ratio; ties broken by source span (candidate) order
    scored = sorted(
        ((fuzzy_ratio(spans[t], cands[c]), c, t) for t in range(n) for c in range(n)),
        key=lambda x: (-x[0], x[1], x[2]),
    )
    cand_for: list[int | None] = [None] * n
    used_cand = [False] * n
    for ratio, c, t in scored:
        if ratio <= cfg.threshold:
            break
        if cand_for[t] is None and not used_cand[c]:
            cand_for[t] = c
            used_cand[c] = True
    leftovers_t = [t for t in range(n) if cand_for[t] is None]
    if leftovers_t:
        if cfg.on_no_match == FALLBACK_DROP:
            return None
        leftovers_c = [c for c in range(n) if not used_cand[c]]
        for t, c in zip(leftovers_t, leftovers_c):
            cand_for[t] = c
    return Assignment(tuple(cand_for), bool(leftovers_t))


# ---------------------------------------------------------------------------
# Projection pipeline


@dataclass(frozen=True)
class ProjectionOutcome:
    status: str
    reason: str = ""
    sentence: AnnotatedSentence | None = None
    qa: QaExample | None = None
    diagnostics: tuple[str, ...] = ()
    low_confidence: bool = False


@dataclass
class ProjectionReport:
    total: int = 0
    projected: int = 0
    filtered: int = 0
    failed: int = 0
    reasons: dict[str, int] = field(default_factory=dict)

    def add(self, outcome: ProjectionOutcome):
        self.total += 1
        if outcome.status == PROJECTED:
            self.projected += 1
        elif outcome.status == FILTERED:
            self.filtered += 1
        else:
            self.failed += 1
        if outcome.reason:
            self.reasons[outcome.reason] = self.reasons.get(outcome.reason, 0) + 1

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "projected": self.projected,
            "filtered": self.filtered,
            "failed": self.failed,
            "reasons": dict(sorted(self.reasons.items())),
        }


def _needs_candidates(scheme: MarkerScheme, cfg: MatcherConfig) -> bool:
    # XML/placeholder markers carry label identity; sequential matching is positional
    return scheme.kind not in (XML_INDEXED, PLACEHOLDER) and cfg.mode == MATCH_FUZZY


def project_sentence(
    sentence: AnnotatedSentence,
    backend,
    scheme: MarkerScheme,
    cfg: MatcherConfig | None = None,
    src_lang: str = "src",
    tgt_lang: str = "tgt",
) -> ProjectionOutcome:
    """Project one sentence's annotations onto its translation."""
    cfg = cfg or MatcherConfig()
    if not sentence.text:
        return ProjectionOutcome(PROJECTED, sentence=sentence)
    try:
        marked = insert_markers(sentence, scheme)
    except PreexistingMarkerError as e:
        return ProjectionOutcome(FILTERED, "PreexistingMarker", diagnostics=(str(e),))

    span_texts = sentence.span_texts()
    items = [marked.text]
    if _needs_candidates(scheme, cfg) and span_texts:
        items.extend(span_texts)
    response = translate(TranslateRequest(tuple(items), src_lang, tgt_lang), backend)
    bad = [it.status for it in response.items if not it.ok]
    if bad:
        return ProjectionOutcome(FAILED, "BackendError", diagnostics=tuple(bad))
    translated = response.items[0].output
    candidate_mentions = [it.output for it in response.items[1:]]

    result = extract_markers(translated, scheme, marked.marker_map)
    if result.status != VALID:
        return ProjectionOutcome(FILTERED, result.status, diagnostics=(result.diagnostic,))

    n = len(sentence.spans)
    diagnostics: list[str] = []
    low_confidence = False
    # source span id for each found span, in found (target) order
    if scheme.kind in (XML_INDEXED, PLACEHOLDER):
        source_for = [marker_id for marker_id, _, _ in result.found_spans]
    elif cfg.mode == MATCH_FUZZY:
        found_texts = [result.clean_text[s:e] for _, s, e in result.found_spans]
        assignment = assign_labels_fuzzy(found_texts, candidate_mentions, cfg)
        if assignment is None:
            return ProjectionOutcome(FILTERED, "NoConfidentMatch")
        source_for = list(assignment.candidate_for)
        low_confidence = assignment.low_confidence
        if low_confidence:
            diagnostics.append("positional fallback used for some spans")
    else:
        source_for = list(range(n))

    try:
        target_spans = tuple(
            LabeledSpan(t, start, end, sentence.spans[source_for[t]].label)
            for t, (_, start, end) in enumerate(result.found_spans)
        )
        target_id_for = {source_for[t]: t for t in range(n)}
        relations = tuple(
            RelationLink(r.kind, target_id_for[r.head_span_id], target_id_for[r.tail_span_id])
            for r in sentence.relations
            if r.head_span_id in target_id_for and r.tail_span_id in target_id_for
        )
        out = AnnotatedSentence(result.clean_text, target_spans, sentence.meta, relations)
    except ValueError as e:
        return ProjectionOutcome(FILTERED, "InvalidTargetSpans", diagnostics=(str(e),))
    return ProjectionOutcome(
        PROJECTED, sentence=out, diagnostics=tuple(diagnostics), low_confidence=low_confidence
    )


def project_corpus(
    sentences: list[AnnotatedSentence],
    backend,
    scheme: MarkerScheme,
    cfg: MatcherConfig | None = None,
    src_lang: str = "src",
    tgt_lang: str = "tgt",
    jobs: int = 1,
) -> tuple[list[AnnotatedSentence], ProjectionReport]:
    """Project a corpus; returns projected sentences in input order plus a
    report tallying projected/filtered/failed counts per reason."""
    cfg = cfg or MatcherConfig()

    def work(s: AnnotatedSentence) -> ProjectionOutcome:
        return project_sentence(s, backend, scheme, cfg, src_lang, tgt_lang)

    if jobs > 1 and len(sentences) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(work, sentences))
    else:
        outcomes = [work(s) for s in sentences]

    report = ProjectionReport()
    projected: list[AnnotatedSentence] = []
    for outcome in outcomes:
        report.add(outcome)
        if outcome.status == PROJECTED:
            assert outcome.sentence is not None
            projected.append(outcome.sentence)
    return projected, report


def project_qa(
    example: QaExample,
    backend,
    scheme: MarkerScheme,
    src_lang: str = "src",
    tgt_lang: str = "tgt",
) -> ProjectionOutcome:
    """Project a QA example: the answer is marked in the context, the context
    (markers in) and the question (no markers) are translated together, and
    the answer offsets are recomputed in the clean translated context."""
    context = AnnotatedSentence(example.context, (example.answer,))
    try:
        marked = insert_markers(context, scheme)
    except PreexistingMarkerError as e:
        return ProjectionOutcome(FILTERED, "PreexistingMarker", diagnostics=(str(e),))
    response = translate(
        TranslateRequest((marked.text, example.question), src_lang, tgt_lang), backend
    )
    bad = [it.status for it in response.items if not it.ok]
    if bad:
        return ProjectionOutcome(FAILED, "BackendError", diagnostics=tuple(bad))
    result = extract_markers(response.items[0].output, scheme, marked.marker_map)
    if result.status != VALID:
        return ProjectionOutcome(FILTERED, result.status, diagnostics=(result.diagnostic,))
    _, start, end = result.found_spans[0]
    try:
        out = QaExample(
            id=example.id,
            question=response.items[1].output,
            context=result.clean_text,
            answer=LabeledSpan(0, start, end, "ANSWER"),
        )
    except ValueError as e:
        return ProjectionOutcome(FILTERED, "InvalidTargetSpans", diagnostics=(str(e),))
    return ProjectionOutcome(PROJECTED, qa=out)
