"""Annotation data model and corpus format I/O.

Offsets are always counted in Unicode codepoints, never bytes. All types
are immutable after construction and safe to share between threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


class FormatError(ValueError):
    """Raised when an input file violates its format contract."""


@dataclass(frozen=True)
class LabeledSpan:
    """A labeled character span: [start, end) codepoint offsets into a sentence."""

    id: int
    start: int
    end: int
    label: str

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise FormatError(f"span {self.id}: invalid offsets [{self.start}, {self.end})")
        if not self.label or any(c.isspace() for c in self.label):
            raise FormatError(f"span {self.id}: label must be non-empty without whitespace")

    def slice(self, text: str) -> str:
        return text[self.start:self.end]


@dataclass(frozen=True)
class RelationLink:
    """A typed link (relation or event-argument role) between two spans of one sentence."""

    kind: str
    head_span_id: int
    tail_span_id: int


@dataclass(frozen=True)
class AnnotatedSentence:
    text: str
    spans: tuple[LabeledSpan, ...] = ()
    meta: tuple[tuple[str, str], ...] = ()
    relations: tuple[RelationLink, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "spans", tuple(self.spans))
        object.__setattr__(self, "relations", tuple(self.relations))
        if isinstance(self.meta, dict):
            object.__setattr__(self, "meta", tuple(sorted(self.meta.items())))
        else:
            object.__setattr__(self, "meta", tuple(self.meta))
        n = len(self.text)
        prev_end = 0
        for i, s in enumerate(self.spans):
            if s.id != i:
                raise FormatError(f"span ids must be 0..n-1 in order; got id {s.id} at position {i}")
            if s.end > n:
                raise FormatError(f"span {s.id} end {s.end} exceeds text length {n}")
            if s.start < prev_end:
                raise FormatError(f"span {s.id} overlaps previous span or is out of order")
            prev_end = s.end
        span_ids = {s.id for s in self.spans}
        for r in self.relations:
            if r.head_span_id not in span_ids or r.tail_span_id not in span_ids:
                raise FormatError(f"relation {r.kind} references missing span id")

    @property
    def meta_dict(self) -> dict[str, str]:
        return dict(self.meta)

    def span_texts(self) -> list[str]:
        return [s.slice(self.text) for s in self.spans]


@dataclass(frozen=True)
class QaExample:
    """A QA item: context with exactly one answer span."""

    id: str
    question: str
    context: str
    answer: LabeledSpan

    def __post_init__(self):
        if self.answer.label != "ANSWER":
            raise FormatError(f"{self.id}: answer span label must be ANSWER")
        if self.answer.end > len(self.context):
            raise FormatError(f"{self.id}: answer span exceeds context length")

    @property
    def answer_text(self) -> str:
        return self.answer.slice(self.context)


# ---------------------------------------------------------------------------
# BIO <-> span conversion


def spans_from_bio(tokens: list[str], tags: list[str], lenient: bool = False) -> list[LabeledSpan]:
    """Derive spans from BIO2 tags, with offsets over the single-space-joined tokens.

    In strict mode an I-X tag without a preceding B-X/I-X run, or a label
    change inside a run, is an error; lenient mode treats it as B-X.
    """
    if len(tokens) != len(tags):
        raise FormatError(f"length mismatch: {len(tokens)} tokens vs {len(tags)} tags")
    spans: list[LabeledSpan] = []
    offset = 0
    cur_label = None
    cur_start = 0
    cur_end = 0

    def close_run():
        nonlocal cur_label
        if cur_label is not None:
            spans.append(LabeledSpan(len(spans), cur_start, cur_end, cur_label))
            cur_label = None

    for i, (token, tag) in enumerate(zip(tokens, tags)):
        tok_start = offset
        tok_end = offset + len(token)
        offset = tok_end + 1  # joining space
        if tag == "O":
            close_run()
        elif tag.startswith("B-"):
            close_run()
            cur_label, cur_start, cur_end = tag[2:], tok_start, tok_end
        elif tag.startswith("I-"):
            label = tag[2:]
            if cur_label == label:
                cur_end = tok_end
            elif lenient:
                close_run()
                cur_label, cur_start, cur_end = label, tok_start, tok_end
            elif cur_label is None:
                raise FormatError(f"I-{label} without preceding B-{label} at token {i}")
            else:
                raise FormatError(f"label change inside run at token {i}")
        else:
            raise FormatError(f"bad BIO tag {tag!r} at token {i}")
    close_run()
    return spans


def bio_from_spans(tokens: list[str], spans: list[LabeledSpan]) -> list[str]:
    """Inverse of spans_from_bio: spans must align exactly to token boundaries."""
    bounds = []
    offset = 0
    for token in tokens:
        bounds.append((offset, offset + len(token)))
        offset += len(token) + 1
    tags = ["O"] * len(tokens)
    starts = {s: i for i, (s, _) in enumerate(bounds)}
    ends = {e: i for i, (_, e) in enumerate(bounds)}
    for span in spans:
        if span.start not in starts or span.end not in ends:
            raise FormatError(f"span {span.id} ({span.start},{span.end}) not on token boundary")
        first, last = starts[span.start], ends[span.end]
        tags[first] = f"B-{span.label}"
        for i in range(first + 1, last + 1):
            tags[i] = f"I-{span.label}"
    return tags


# ---------------------------------------------------------------------------
# CoNLL


def parse_conll(text: str, lenient: bool = False) -> list[AnnotatedSentence]:
    """Parse token TAB tag lines (BIO2), blank line separated sentences.

    "-DOCSTART-" lines are skipped. Tokens are joined with single spaces.
    """
    sentences: list[AnnotatedSentence] = []
    tokens: list[str] = []
    tags: list[str] = []
    lines: list[int] = []

    def flush():
        nonlocal tokens, tags, lines
        if tokens:
            try:
                spans = spans_from_bio(tokens, tags, lenient=lenient)
            except FormatError as e:
                # spans_from_bio reports a token index; translate it to a line number
                msg = str(e)
                for i, ln in enumerate(lines):
                    if msg.endswith(f"at token {i}"):
                        msg = msg[: -len(f"at token {i}")] + f"at line {ln}"
                        break
                raise FormatError(msg) from None
            sentences.append(AnnotatedSentence(" ".join(tokens), tuple(spans)))
        tokens, tags, lines = [], [], []

    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            flush()
            continue
        if line.startswith("-DOCSTART-"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: expected 'token<TAB>tag', got {len(parts)} columns")
        tokens.append(parts[0])
        tags.append(parts[1])
        lines.append(lineno)
    flush()
    return sentences


def emit_conll(sentences: list[AnnotatedSentence]) -> str:
    """Emit CoNLL text such that parse_conll(emit_conll(x)) == x."""
    blocks = []
    for sent in sentences:
        tokens = sent.text.split(" ")
        try:
            tags = bio_from_spans(tokens, list(sent.spans))
        except FormatError as e:
            raise FormatError(f"cannot emit sentence {sent.text[:40]!r}: {e}") from None
        blocks.append("\n".join(f"{t}\t{g}" for t, g in zip(tokens, tags)))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


# ---------------------------------------------------------------------------
# Span-JSON lines (native interchange format)


def sentence_to_json(sent: AnnotatedSentence) -> dict:
    obj: dict = {
        "text": sent.text,
        "spans": [{"start": s.start, "end": s.end, "label": s.label} for s in sent.spans],
        "meta": sent.meta_dict,
    }
    if sent.relations:
        obj["relations"] = [
            {"kind": r.kind, "head": r.head_span_id, "tail": r.tail_span_id}
            for r in sent.relations
        ]
    return obj


def sentence_from_json(obj: dict) -> AnnotatedSentence:
    spans = tuple(
        LabeledSpan(i, s["start"], s["end"], s["label"])
        for i, s in enumerate(obj.get("spans", []))
    )
    relations = tuple(
        RelationLink(r["kind"], r["head"], r["tail"]) for r in obj.get("relations", [])
    )
    return AnnotatedSentence(obj["text"], spans, obj.get("meta", {}), relations)


def parse_jsonl(text: str) -> list[AnnotatedSentence]:
    sentences = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            sentences.append(sentence_from_json(json.loads(line)))
        except (json.JSONDecodeError, KeyError, FormatError) as e:
            raise FormatError(f"line {lineno}: {e}") from None
    return sentences


def emit_jsonl(sentences: list[AnnotatedSentence]) -> str:
    return "".join(
        json.dumps(sentence_to_json(s), ensure_ascii=False, sort_keys=True) + "\n"
        for s in sentences
    )


# ---------------------------------------------------------------------------
# SQuAD v1.1 JSON


def parse_squad(text: str) -> list[QaExample]:
    """Parse SQuAD v1.1 JSON; each qa must have exactly one answer whose text
    equals the context slice at answer_start."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"bad JSON: {e}") from None
    examples = []
    for article in doc.get("data", []):
        for para in article.get("paragraphs", []):
            context = para["context"]
            for qa in para.get("qas", []):
                answers = qa.get("answers", [])
                if len(answers) != 1:
                    raise FormatError(f"{qa.get('id')}: expected exactly one answer, got {len(answers)}")
                ans = answers[0]
                start = ans["answer_start"]
                end = start + len(ans["text"])
                if context[start:end] != ans["text"]:
                    raise FormatError(
                        f"{qa.get('id')}: answer text {ans['text']!r} does not match "
                        f"context slice at offset {start}"
                    )
                examples.append(
                    QaExample(
                        id=str(qa["id"]),
                        question=qa["question"],
                        context=context,
                        answer=LabeledSpan(0, start, end, "ANSWER"),
                    )
                )
    return examples


def emit_squad(examples: list[QaExample], title: str = "spanbridge") -> str:
    """Emit SQuAD v1.1 JSON with canonical (alphabetical) key ordering.

    Examples sharing a context are grouped into one paragraph, preserving
    first-seen context order.
    """
    paragraphs: list[dict] = []
    by_context: dict[str, dict] = {}
    for ex in examples:
        para = by_context.get(ex.context)
        if para is None:
            para = {"context": ex.context, "qas": []}
            by_context[ex.context] = para
            paragraphs.append(para)
        para["qas"].append(
            {
                "answers": [{"answer_start": ex.answer.start, "text": ex.answer_text}],
                "id": ex.id,
                "question": ex.question,
            }
        )
    doc = {"data": [{"paragraphs": paragraphs, "title": title}], "version": "1.1"}
    return json.dumps(doc, ensure_ascii=False, sort_keys=True)
