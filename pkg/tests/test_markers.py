import pytest
from hypothesis import given, settings, strategies as st

from spanbridge.core import AnnotatedSentence, LabeledSpan
from spanbridge.markers import (
    COUNT_MISMATCH,
    STRUCTURE_ERROR,
    VALID,
    MarkerScheme,
    PreexistingMarkerError,
    extract_markers,
    insert_markers,
    strip_markers,
)

CHURCHILL = AnnotatedSentence(
    "Churchill was born in England in 1874 .",
    (
        LabeledSpan(0, 0, 9, "PER"),
        LabeledSpan(1, 22, 29, "LOC"),
        LabeledSpan(2, 33, 37, "DATE"),
    ),
)


class TestInsert:
    def test_square_bracket(self):
        marked = insert_markers(CHURCHILL, MarkerScheme("brackets"))
        assert marked.text == "[ Churchill ] was born in [ England ] in [ 1874 ] ."

    def test_xml_indexed(self):
        marked = insert_markers(CHURCHILL, MarkerScheme("xml"))
        assert marked.text == (
            "<a> Churchill </a> was born in <b> England </b> in <c> 1874 </c> ."
        )

    def test_placeholder(self):
        marked = insert_markers(CHURCHILL, MarkerScheme("placeholder"))
        assert marked.text == "PER0 was born in LOC1 in DATE2 ."
        assert marked.marker_map == (
            (0, "PER0", "Churchill"), (1, "LOC1", "England"), (2, "DATE2", "1874"),
        )

    def test_double_quote(self):
        marked = insert_markers(CHURCHILL, MarkerScheme("quotes"))
        assert marked.text == '" Churchill " was born in " England " in " 1874 " .'

    def test_no_pad(self):
        marked = insert_markers(CHURCHILL, MarkerScheme("brackets", pad_with_space=False))
        assert marked.text == "[Churchill] was born in [England] in [1874] ."

    def test_zero_spans(self):
        sent = AnnotatedSentence("nothing here", ())
        marked = insert_markers(sent, MarkerScheme("brackets"))
        assert marked.text == sent.text
        assert marked.marker_map == ()

    def test_preexisting_marker_rejected(self):
        sent = AnnotatedSentence("a [sic] b", (LabeledSpan(0, 0, 1, "X"),))
        with pytest.raises(PreexistingMarkerError):
            insert_markers(sent, MarkerScheme("brackets"))
        quoted = AnnotatedSentence('he said " hi "', (LabeledSpan(0, 0, 2, "X"),))
        with pytest.raises(PreexistingMarkerError):
            insert_markers(quoted, MarkerScheme("quotes"))

    def test_xml_tag_alphabet_past_z(self):
        spans = tuple(LabeledSpan(i, 2 * i, 2 * i + 1, "X") for i in range(28))
        sent = AnnotatedSentence(" ".join("t" * 1 for _ in range(28)), spans)
        marked = insert_markers(sent, MarkerScheme("xml"))
        assert "<aa>" in marked.text and "<ab>" in marked.text
        result = extract_markers(marked.text, MarkerScheme("xml"), marked.marker_map)
        assert result.status == VALID


class TestExtract:
    def test_valid_brackets_anonymous(self):
        scheme = MarkerScheme("brackets")
        expected = tuple((i, "[", "]") for i in range(5))
        text = "据 [ 记者 ] 报道 [ 离婚 ] 了 [ 一 ] 次 [ 二 ] 和 [ 三 ] 。"
        result = extract_markers(text, scheme, expected)
        assert result.status == VALID
        assert len(result.found_spans) == 5
        assert all(marker_id is None for marker_id, _, _ in result.found_spans)
        assert result.clean_text[result.found_spans[0][1]:result.found_spans[0][2]] == "记者"

    def test_garbled_xml_structure_error(self):
        scheme = MarkerScheme("xml")
        result = extract_markers("据<e>记者<e，报道/e>。", scheme, ((0, "<e>", "</e>"),))
        assert result.status == STRUCTURE_ERROR

    def test_unbalanced_count_mismatch(self):
        scheme = MarkerScheme("brackets")
        expected = ((0, "[", "]"), (1, "[", "]"))
        result = extract_markers("[a] [b", scheme, expected)
        assert result.status == COUNT_MISMATCH

    def test_nested_structure_error(self):
        scheme = MarkerScheme("brackets")
        expected = ((0, "[", "]"), (1, "[", "]"))
        assert extract_markers("[ a [ b ] ]", scheme, expected).status == STRUCTURE_ERROR

    def test_interleaved_xml_structure_error(self):
        scheme = MarkerScheme("xml")
        expected = ((0, "<a>", "</a>"), (1, "<b>", "</b>"))
        result = extract_markers("<a> x <b> y </a> z </b>", scheme, expected)
        assert result.status == STRUCTURE_ERROR

    def test_unknown_tag_count_mismatch(self):
        scheme = MarkerScheme("xml")
        result = extract_markers("<q> x </q>", scheme, ((0, "<a>", "</a>"),))
        assert result.status == COUNT_MISMATCH

    def test_locale_quote_folding(self):
        scheme = MarkerScheme("quotes")
        expected = ((0, '"', '"'),)
        result = extract_markers("он сказал « привет » да", scheme, expected)
        assert result.status == VALID
        marker_id, start, end = result.found_spans[0]
        assert result.clean_text[start:end] == "привет"

    def test_whitespace_variation_same_span_text(self):
        scheme = MarkerScheme("brackets")
        expected = ((0, "[", "]"),)
        for text in ["x [ y ] z", "x [y] z", "x [  y ] z", "x [y ] z"]:
            result = extract_markers(text, scheme, expected)
            assert result.status == VALID
            _, start, end = result.found_spans[0]
            assert result.clean_text[start:end] == "y"

    def test_placeholder_missing_token(self):
        scheme = MarkerScheme("placeholder")
        expected = ((0, "PER0", "Churchill"), (1, "LOC1", "England"))
        result = extract_markers("PER0 was born .", scheme, expected)
        assert result.status == COUNT_MISMATCH

    def test_placeholder_decode(self):
        scheme = MarkerScheme("placeholder")
        expected = ((0, "PER0", "Churchill"), (1, "LOC1", "England"))
        result = extract_markers("LOC1 से PER0 थे .", scheme, expected)
        assert result.status == VALID
        spans = {mid: result.clean_text[s:e] for mid, s, e in result.found_spans}
        assert spans == {0: "Churchill", 1: "England"}
        assert result.clean_text == "England से Churchill थे ."


class TestStrip:
    def test_brackets(self):
        assert strip_markers("[ a ] b", MarkerScheme("brackets")) == "a b"

    def test_xml(self):
        assert strip_markers("<a> x </a>.", MarkerScheme("xml")) == "x ."

    def test_no_markers_identity(self):
        assert strip_markers("plain  text", MarkerScheme("brackets")) == "plain  text"

    def test_quotes_with_variants(self):
        assert strip_markers("« a » b", MarkerScheme("quotes")) == "a b"


SENT = st.builds(
    lambda tokens, span_positions: _build_sentence(tokens, span_positions),
    st.lists(st.text(alphabet="abcdefgXYZ中文жли", min_size=1, max_size=5),
             min_size=1, max_size=8),
    st.sets(st.integers(0, 7)),
)


def _build_sentence(tokens, span_positions):
    bounds = []
    offset = 0
    for t in tokens:
        bounds.append((offset, offset + len(t)))
        offset += len(t) + 1
    spans = []
    for pos in sorted(span_positions):
        if pos < len(tokens):
            spans.append(LabeledSpan(len(spans), bounds[pos][0], bounds[pos][1], "X"))
    return AnnotatedSentence(" ".join(tokens), tuple(spans))


class TestRoundTripProperties:
    @given(SENT, st.sampled_from(["brackets", "xml", "quotes"]))
    @settings(max_examples=200)
    def test_insert_extract_round_trip(self, sentence, kind):
        scheme = MarkerScheme(kind)
        marked = insert_markers(sentence, scheme)
        result = extract_markers(marked.text, scheme, marked.marker_map)
        assert result.status == VALID
        assert result.clean_text == sentence.text
        recovered = sorted((s, e) for _, s, e in result.found_spans)
        assert recovered == [(s.start, s.end) for s in sentence.spans]

    @given(SENT, st.sampled_from(["brackets", "xml", "quotes"]))
    @settings(max_examples=200)
    def test_strip_recovers_text(self, sentence, kind):
        scheme = MarkerScheme(kind)
        marked = insert_markers(sentence, scheme)
        assert strip_markers(marked.text, scheme) == sentence.text

    @given(SENT)
    @settings(max_examples=200)
    def test_placeholder_substitution_round_trip(self, sentence):
        scheme = MarkerScheme("placeholder")
        marked = insert_markers(sentence, scheme)
        text = marked.text
        # substitute right-to-left by recorded token
        for span_id, token, original in reversed(marked.marker_map):
            idx = text.rfind(token)
            assert idx >= 0
            text = text[:idx] + original + text[idx + len(token):]
        assert text == sentence.text
