"""spanbridge: span annotation projection across languages.

Projects span-level annotations (NER, QA answers, event triggers) from a
source-language corpus onto machine-translated text via mark-then-translate
with fuzzy label assignment, or via word-alignment heuristics, with the
shared count-equality filtering rule and evaluation metrics.
"""

from .core import (
    AnnotatedSentence,
    FormatError,
    LabeledSpan,
    QaExample,
    RelationLink,
)
from .easyproject import (
    MatcherConfig,
    ProjectionOutcome,
    ProjectionReport,
    fuzzy_ratio,
    project_corpus,
    project_qa,
    project_sentence,
)
from .markers import MarkerScheme, extract_markers, insert_markers, strip_markers
from .metrics import BleuConfig, corpus_bleu, corpus_stats, projection_rate

__version__ = "0.1.0"

__all__ = [
    "AnnotatedSentence",
    "BleuConfig",
    "FormatError",
    "LabeledSpan",
    "MarkerScheme",
    "MatcherConfig",
    "ProjectionOutcome",
    "ProjectionReport",
    "QaExample",
    "RelationLink",
    "corpus_bleu",
    "corpus_stats",
    "extract_markers",
    "fuzzy_ratio",
    "insert_markers",
    "project_corpus",
    "project_qa",
    "project_sentence",
    "projection_rate",
    "strip_markers",
    "__version__",
]
