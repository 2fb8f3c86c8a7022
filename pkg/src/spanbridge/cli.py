"""spanbridge command line: mark, project, align-project, build-ftdata,
stats, bleu, rate, warm-cache.

Exit codes: 0 = all sentences projected; 2 = completed but some items were
filtered or failed (report written); 1 = usage/config error; 3 = I/O or
backend-fatal error. Diagnostics go to stderr, data to files/stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

from . import alignproject, core, easyproject, ftdata, markers, metrics, translate as tr

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARTIAL = 2
EXIT_FATAL = 3

SCHEME_BY_FLAG = {
    "brackets": markers.SQUARE_BRACKET,
    "xml": markers.XML_INDEXED,
    "quotes": markers.DOUBLE_QUOTE,
    "placeholder": markers.PLACEHOLDER,
}


class UsageError(Exception):
    pass


def _atomic_write(path: str, content: str):
    """Write via a temp file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".spanbridge-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as f:
        return f.read()


def _load_corpus(path: str, fmt: str, lenient: bool) -> list[core.AnnotatedSentence]:
    text = _read(path)
    if fmt == "conll":
        return core.parse_conll(text, lenient=lenient)
    return core.parse_jsonl(text)


def _scheme_from_args(args) -> markers.MarkerScheme:
    return markers.MarkerScheme(SCHEME_BY_FLAG[args.scheme], pad_with_space=not args.no_pad)


def _matcher_from_args(args) -> easyproject.MatcherConfig:
    scheme = SCHEME_BY_FLAG[args.scheme]
    if args.matcher is not None and scheme in (markers.XML_INDEXED, markers.PLACEHOLDER):
        raise UsageError(
            f"--matcher cannot be combined with --scheme {args.scheme}: "
            f"{args.scheme} markers carry label identity, so no matching is needed"
        )
    return easyproject.MatcherConfig(
        mode=args.matcher or easyproject.MATCH_FUZZY,
        threshold=args.threshold,
        on_no_match=easyproject.FALLBACK_DROP if args.drop_unmatched
        else easyproject.FALLBACK_POSITIONAL,
    )


def _backend_from_args(args):
    if args.backend == "identity":
        return tr.IdentityBackend()
    if args.backend == "lexicon":
        token_map = {}
        if args.lexicon:
            token_map = json.loads(_read(args.lexicon))
        return tr.LexiconBackend(tr.LexiconBackendConfig(token_map, reorder=args.reorder))
    if args.backend == "cache":
        if not args.cache:
            raise UsageError("--backend cache requires --cache PATH")
        upstream = None
        url = os.environ.get("SPANBRIDGE_MT_URL", args.mt_url)
        if url and not args.offline:
            upstream = tr.HttpBackend(url, timeout_ms=args.timeout_ms, retries=args.retries)
        return tr.CacheBackend(tr.TranslationCache(args.cache), upstream, offline=args.offline)
    if args.backend == "http":
        url = os.environ.get("SPANBRIDGE_MT_URL", args.mt_url)
        if not url:
            raise UsageError("--backend http requires --mt-url or SPANBRIDGE_MT_URL")
        return tr.HttpBackend(url, timeout_ms=args.timeout_ms, retries=args.retries)
    raise UsageError(f"unknown backend {args.backend!r}")


def _add_backend_flags(p: argparse.ArgumentParser):
    p.add_argument("--backend", default="identity",
                   choices=["identity", "lexicon", "cache", "http"])
    p.add_argument("--lexicon", help="JSON token map for the lexicon backend")
    p.add_argument("--reorder", default=tr.REORDER_NONE,
                   help="lexicon reorder: none, reverse, or seed:<int>")
    p.add_argument("--cache", help="JSONL translation cache path")
    p.add_argument("--offline", action="store_true",
                   help="cache backend: fail on cache misses instead of calling upstream")
    p.add_argument("--mt-url", default=None, help="HTTP backend base URL")
    p.add_argument("--timeout-ms", type=int, default=30000)
    p.add_argument("--retries", type=int, default=tr.DEFAULT_RETRIES)
    p.add_argument("--src-lang", default="src")
    p.add_argument("--tgt-lang", default="tgt")


def _add_scheme_flags(p: argparse.ArgumentParser):
    p.add_argument("--scheme", default="brackets", choices=sorted(SCHEME_BY_FLAG))
    p.add_argument("--no-pad", action="store_true",
                   help="do not pad markers with spaces (unsegmented scripts)")


def _add_input_flags(p: argparse.ArgumentParser):
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", default="jsonl", choices=["jsonl", "conll"])
    p.add_argument("--lenient-bio", action="store_true",
                   help="treat stray I-X tags as B-X when parsing CoNLL")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spanbridge",
        description="Span annotation projection toolkit (mark-then-translate "
                    "and word-alignment baselines).",
    )
    parser.add_argument("--config", help="key=value file pre-setting any flag (flags win)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mark", help="insert markers around annotated spans")
    _add_input_flags(p)
    _add_scheme_flags(p)
    p.add_argument("--out", required=True, help="output JSONL of marked text + marker maps")

    p = sub.add_parser("project", help="mark-then-translate projection")
    _add_input_flags(p)
    _add_scheme_flags(p)
    _add_backend_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="write projection report JSON here")
    p.add_argument("--matcher", choices=["fuzzy", "sequential"], default=None)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--drop-unmatched", action="store_true",
                   help="drop sentences with no confident fuzzy match instead of "
                        "falling back to positional assignment")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("align-project", help="word-alignment baseline projection")
    _add_input_flags(p)
    p.add_argument("--translations", required=True, help="one translation per line")
    p.add_argument("--alignments", required=True, help="one Pharaoh line per sentence")
    p.add_argument("--out", required=True)
    p.add_argument("--report")

    p = sub.add_parser("build-ftdata", help="build bracketed fine-tuning pairs")
    p.add_argument("--src", required=True, help="annotated source JSONL")
    p.add_argument("--tgt", required=True, help="target sentences, one per line")
    p.add_argument("--out", required=True, help="output TSV: marked_src TAB marked_tgt")
    p.add_argument("--k", type=int, default=5000)
    p.add_argument("--case-sensitive", action="store_true")
    p.add_argument("--sort", default="descending", choices=["descending", "ascending"])
    _add_backend_flags(p)

    p = sub.add_parser("stats", help="corpus statistics as JSON")
    _add_input_flags(p)

    p = sub.add_parser("bleu", help="corpus BLEU (optionally stripping markers)")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--strip-scheme", choices=sorted(SCHEME_BY_FLAG))
    p.add_argument("--max-n", type=int, default=4)

    p = sub.add_parser("rate", help="projection rate from a report JSON")
    p.add_argument("--report", required=True)

    p = sub.add_parser("warm-cache", help="fill the translation cache from a live backend")
    p.add_argument("--in", dest="infile", required=True, help="texts, one per line")
    _add_backend_flags(p)
    p.add_argument("--cache-out", required=True, help="JSONL cache to append to")
    return parser


def _apply_config_file(argv: list[str]) -> list[str]:
    """Prepend defaults from a key=value config file; explicit flags win
    because argparse takes the last occurrence."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    path = argv[idx + 1]
    pre: list[str] = []
    for line in _read(path).splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        flag = "--" + key.replace("_", "-")
        if value.lower() == "true":
            pre.append(flag)
        elif value.lower() != "false":
            pre.extend([flag, value])
    rest = argv[:idx] + argv[idx + 2:]
    # subcommand must stay first; insert config defaults right after it
    return rest[:1] + pre + rest[1:]


def _cmd_mark(args) -> int:
    scheme = _scheme_from_args(args)
    sentences = _load_corpus(args.infile, args.format, args.lenient_bio)
    lines = []
    skipped = 0
    for sentence in sentences:
        try:
            marked = markers.insert_markers(sentence, scheme)
        except markers.PreexistingMarkerError as e:
            print(f"skipped: {e}", file=sys.stderr)
            skipped += 1
            continue
        lines.append(json.dumps(
            {"text": marked.text, "marker_map": list(marked.marker_map)},
            ensure_ascii=False, sort_keys=True))
    _atomic_write(args.out, "".join(line + "\n" for line in lines))
    return EXIT_PARTIAL if skipped else EXIT_OK


def _cmd_project(args) -> int:
    scheme = _scheme_from_args(args)
    cfg = _matcher_from_args(args)
    backend = _backend_from_args(args)
    sentences = _load_corpus(args.infile, args.format, args.lenient_bio)
    projected, report = easyproject.project_corpus(
        sentences, backend, scheme, cfg,
        src_lang=args.src_lang, tgt_lang=args.tgt_lang, jobs=args.jobs,
    )
    _atomic_write(args.out, core.emit_jsonl(projected))
    if args.report:
        _atomic_write(args.report, json.dumps(report.to_json(), sort_keys=True) + "\n")
    if report.failed or report.filtered:
        print(f"projected {report.projected}/{report.total} "
              f"(filtered {report.filtered}, failed {report.failed})", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_align_project(args) -> int:
    sentences = _load_corpus(args.infile, args.format, args.lenient_bio)
    translations = _read(args.translations).splitlines()
    alignment_lines = _read(args.alignments).splitlines()
    if not (len(sentences) == len(translations) == len(alignment_lines)):
        raise UsageError(
            f"index mismatch: {len(sentences)} sentences, {len(translations)} "
            f"translations, {len(alignment_lines)} alignment lines"
        )
    pairs = []
    for sentence, translation, line in zip(sentences, translations, alignment_lines):
        src_tokens = tuple(sentence.text.split(" "))
        tgt_tokens = tuple(translation.split())
        alignment = alignproject.parse_pharaoh(line, len(src_tokens), len(tgt_tokens))
        pairs.append(alignproject.AlignedPair(src_tokens, tgt_tokens, alignment))
    projected, report = alignproject.project_corpus_aligned(sentences, pairs)
    _atomic_write(args.out, core.emit_jsonl(projected))
    if args.report:
        _atomic_write(args.report, json.dumps(report.to_json(), sort_keys=True) + "\n")
    return EXIT_PARTIAL if (report.filtered or report.failed) else EXIT_OK


def _cmd_build_ftdata(args) -> int:
    backend = _backend_from_args(args)
    src_sentences = core.parse_jsonl(_read(args.src))
    tgt_lines = _read(args.tgt).splitlines()
    if len(src_sentences) != len(tgt_lines):
        raise UsageError(
            f"index mismatch: {len(src_sentences)} source sentences, "
            f"{len(tgt_lines)} target lines"
        )
    cfg = ftdata.FtDataConfig(
        k=args.k, match_case_fold=not args.case_sensitive, length_sort=args.sort
    )
    pairs = [ftdata.ParallelPair(s, t) for s, t in zip(src_sentences, tgt_lines)]
    out = ftdata.build_ft_pairs(pairs, backend, cfg,
                                src_lang=args.src_lang, tgt_lang=args.tgt_lang)
    _atomic_write(args.out, "".join(f"{s}\t{t}\n" for s, t in out))
    return EXIT_OK


def _cmd_stats(args) -> int:
    sentences = _load_corpus(args.infile, args.format, args.lenient_bio)
    stats = metrics.corpus_stats(sentences)
    print(json.dumps(stats.to_json(), sort_keys=True))
    return EXIT_OK


def _cmd_bleu(args) -> int:
    hyp_lines = _read(args.hyp).splitlines()
    ref_lines = _read(args.ref).splitlines()
    if args.strip_scheme:
        scheme = markers.MarkerScheme(SCHEME_BY_FLAG[args.strip_scheme])
        hyp_lines = [markers.strip_markers(h, scheme) for h in hyp_lines]
    score = metrics.corpus_bleu(
        [h.split() for h in hyp_lines],
        [r.split() for r in ref_lines],
        metrics.BleuConfig(max_n=args.max_n),
    )
    print(json.dumps({"bleu": score}))
    return EXIT_OK


def _cmd_rate(args) -> int:
    report = json.loads(_read(args.report))
    if report.get("total", 0) < 1:
        raise UsageError("projection rate undefined: report has no sentences")
    print(json.dumps({"projection_rate": report["projected"] / report["total"]}))
    return EXIT_OK


def _cmd_warm_cache(args) -> int:
    backend = _backend_from_args(args)
    texts = [line for line in _read(args.infile).splitlines() if line]
    request = tr.TranslateRequest(tuple(texts), args.src_lang, args.tgt_lang)
    new, errors = tr.warm_cache([request], backend, args.cache_out)
    print(json.dumps({"new_entries": new, "errors": errors}))
    return EXIT_PARTIAL if errors else EXIT_OK


_COMMANDS = {
    "mark": _cmd_mark,
    "project": _cmd_project,
    "align-project": _cmd_align_project,
    "build-ftdata": _cmd_build_ftdata,
    "stats": _cmd_stats,
    "bleu": _cmd_bleu,
    "rate": _cmd_rate,
    "warm-cache": _cmd_warm_cache,
}


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        argv = _apply_config_file(list(argv))
    except OSError as e:
        print(f"error: cannot read config file: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:  # includes FormatError from parsers
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"fatal: {e}", file=sys.stderr)
        return EXIT_FATAL


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
