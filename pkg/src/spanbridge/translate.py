"""Pluggable translation boundary.

Backends take a batched TranslateRequest and return a TranslateResponse of
the same length and order, including on error paths. The MT system itself
is always external; the lexicon backend is a deterministic test double.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

OK = "Ok"

REORDER_NONE = "none"
REORDER_REVERSE = "reverse"

DEFAULT_BATCH_SIZE = 32
DEFAULT_MAX_IN_FLIGHT = 4
DEFAULT_RETRIES = 3
DEFAULT_BACKOFF_MS = 500


@dataclass(frozen=True)
class TranslateRequest:
    items: tuple[str, ...]
    src_lang: str
    tgt_lang: str

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.src_lang or not self.tgt_lang:
            raise ValueError("src_lang and tgt_lang must be non-empty")
        if any(not item for item in self.items):
            raise ValueError("request items must be non-empty strings")


@dataclass(frozen=True)
class TranslatedItem:
    output: str
    status: str = OK  # OK or an error message prefixed "BackendError"

    @property
    def ok(self) -> bool:
        return self.status == OK


@dataclass(frozen=True)
class TranslateResponse:
    items: tuple[TranslatedItem, ...]

    def outputs(self) -> list[str]:
        return [i.output for i in self.items]


def backend_error(message: str) -> TranslatedItem:
    return TranslatedItem("", f"BackendError: {message}")


class IdentityBackend:
    """Returns every input unchanged. The projection no-op reference."""

    def translate(self, request: TranslateRequest) -> TranslateResponse:
        return TranslateResponse(tuple(TranslatedItem(t) for t in request.items))


# marker tokens the lexicon backend passes through and keeps paired
_MARKER_TOKEN_RE = re.compile(r'^(\[|\]|"|</?[a-zA-Z]+>)$')


@dataclass(frozen=True)
class LexiconBackendConfig:
    token_map: tuple[tuple[str, str], ...]
    reorder: str = REORDER_NONE  # none | reverse | seed:<int>
    passthrough_markers: bool = True

    def __post_init__(self):
        if isinstance(self.token_map, dict):
            object.__setattr__(self, "token_map", tuple(sorted(self.token_map.items())))
        for key, _ in self.token_map:
            if _MARKER_TOKEN_RE.match(key):
                raise ValueError(f"marker token {key!r} may not be a lexicon key")


class LexiconBackend:
    """Deterministic word-for-word test double.

    Splits on whitespace, maps known tokens (unknown tokens pass through)
    and reorders the sentence units. A marker pair and the span tokens it
    wraps move as one unit, so markers stay wrapped around their spans.
    """

    def __init__(self, config: LexiconBackendConfig):
        self.config = config
        self._map = dict(config.token_map)

    def _translate_one(self, text: str) -> str:
        tokens = text.split()
        units: list[list[str]] = []
        pending: list[str] | None = None
        quote_open = False
        for tok in tokens:
            is_marker = self.config.passthrough_markers and bool(_MARKER_TOKEN_RE.match(tok))
            mapped = tok if is_marker else self._map.get(tok, tok)
            if is_marker:
                if tok == '"':
                    if quote_open:
                        pending.append(mapped)
                        units.append(pending)
                        pending = None
                        quote_open = False
                    else:
                        pending = [mapped]
                        quote_open = True
                elif tok in ("[",) or (tok.startswith("<") and not tok.startswith("</")):
                    pending = [mapped]
                else:  # closing marker
                    if pending is None:
                        units.append([mapped])
                    else:
                        pending.append(mapped)
                        units.append(pending)
                        pending = None
            else:
                if pending is not None:
                    pending.append(mapped)
                else:
                    units.append([mapped])
        if pending is not None:
            units.append(pending)

        reorder = self.config.reorder
        if reorder == REORDER_REVERSE:
            units.reverse()
        elif reorder.startswith("seed:"):
            rng = random.Random(int(reorder.split(":", 1)[1]))
            rng.shuffle(units)
        return " ".join(tok for unit in units for tok in unit)

    def translate(self, request: TranslateRequest) -> TranslateResponse:
        return TranslateResponse(
            tuple(TranslatedItem(self._translate_one(t)) for t in request.items)
        )


def _cache_key(src_lang: str, tgt_lang: str, text: str) -> tuple[str, str, str]:
    return (src_lang, tgt_lang, hashlib.sha256(text.encode("utf-8")).hexdigest())


class TranslationCache:
    """Append-only JSONL cache; records {"src_lang","tgt_lang","input","output"}.

    Single writer, concurrent readers. Lookups are deterministic: the first
    record for a key wins.
    """

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()
        self._entries: dict[tuple[str, str, str], str] = {}
        if os.path.exists(path):
            with open(path, encoding="utf-8") as f:
                for line in f:
                    if not line.strip():
                        continue
                    rec = json.loads(line)
                    key = _cache_key(rec["src_lang"], rec["tgt_lang"], rec["input"])
                    self._entries.setdefault(key, rec["output"])

    def get(self, src_lang: str, tgt_lang: str, text: str) -> str | None:
        return self._entries.get(_cache_key(src_lang, tgt_lang, text))

    def put(self, src_lang: str, tgt_lang: str, text: str, output: str) -> bool:
        """Store an entry; returns False if the key was already cached."""
        key = _cache_key(src_lang, tgt_lang, text)
        with self._lock:
            if key in self._entries:
                return False
            self._entries[key] = output
            rec = {"src_lang": src_lang, "tgt_lang": tgt_lang, "input": text, "output": output}
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
        return True


class CacheBackend:
    """Answers from a JSONL cache; misses go to the upstream backend (and are
    recorded) or fail with "uncached" in offline mode."""

    def __init__(self, cache: TranslationCache, upstream=None, offline: bool = False):
        self.cache = cache
        self.upstream = upstream
        self.offline = offline

    def translate(self, request: TranslateRequest) -> TranslateResponse:
        results: list[TranslatedItem | None] = []
        miss_indices: list[int] = []
        for i, text in enumerate(request.items):
            hit = self.cache.get(request.src_lang, request.tgt_lang, text)
            if hit is not None:
                results.append(TranslatedItem(hit))
            else:
                results.append(None)
                miss_indices.append(i)
        if miss_indices:
            if self.offline or self.upstream is None:
                for i in miss_indices:
                    results[i] = backend_error("uncached")
            else:
                sub = TranslateRequest(
                    tuple(request.items[i] for i in miss_indices),
                    request.src_lang, request.tgt_lang,
                )
                upstream_resp = self.upstream.translate(sub)
                for i, item in zip(miss_indices, upstream_resp.items):
                    results[i] = item
                    if item.ok:
                        self.cache.put(request.src_lang, request.tgt_lang,
                                       request.items[i], item.output)
        return TranslateResponse(tuple(results))


class HttpBackend:
    """POST {base_url}/translate with {"texts","src_lang","tgt_lang"};
    expects {"translations": [...]}. Retries with exponential backoff."""

    def __init__(self, base_url: str, timeout_ms: int = 30_000,
                 retries: int = DEFAULT_RETRIES, backoff_ms: int = DEFAULT_BACKOFF_MS):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout_ms / 1000.0
        self.retries = retries
        self.backoff = backoff_ms / 1000.0

    def translate(self, request: TranslateRequest) -> TranslateResponse:
        import requests

        body = {
            "texts": list(request.items),
            "src_lang": request.src_lang,
            "tgt_lang": request.tgt_lang,
        }
        last_error = "no attempts made"
        for attempt in range(self.retries):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                resp = requests.post(f"{self.base_url}/translate", json=body,
                                     timeout=self.timeout)
            except requests.RequestException as e:
                last_error = str(e)
                continue
            if 200 <= resp.status_code < 300:
                translations = resp.json()["translations"]
                if len(translations) != len(request.items):
                    last_error = "response length mismatch"
                    continue
                return TranslateResponse(tuple(TranslatedItem(t) for t in translations))
            last_error = f"HTTP {resp.status_code}"
        return TranslateResponse(
            tuple(backend_error(last_error) for _ in request.items)
        )


def translate(request: TranslateRequest, backend,
              batch_size: int = DEFAULT_BATCH_SIZE,
              max_in_flight: int = DEFAULT_MAX_IN_FLIGHT) -> TranslateResponse:
    """Translate a request in batches, preserving item order and length."""
    items = request.items
    if not items:
        return TranslateResponse(())
    batches = [
        TranslateRequest(items[i:i + batch_size], request.src_lang, request.tgt_lang)
        for i in range(0, len(items), batch_size)
    ]
    if len(batches) == 1 or max_in_flight <= 1:
        responses = [backend.translate(b) for b in batches]
    else:
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            responses = list(pool.map(backend.translate, batches))
    merged: list[TranslatedItem] = []
    for r in responses:
        merged.extend(r.items)
    return TranslateResponse(tuple(merged))


def warm_cache(requests_list: list[TranslateRequest], backend,
               cache_path: str) -> tuple[int, int]:
    """Fill a JSONL cache from a live backend.

    Returns (new_entries, errors). Idempotent: rerunning adds zero entries.
    Items the backend fails on are skipped and counted as errors.
    """
    cache = TranslationCache(cache_path)
    new = 0
    errors = 0
    for req in requests_list:
        todo = [t for t in req.items
                if cache.get(req.src_lang, req.tgt_lang, t) is None]
        if not todo:
            continue
        resp = backend.translate(TranslateRequest(tuple(todo), req.src_lang, req.tgt_lang))
        for text, item in zip(todo, resp.items):
            if item.ok:
                if cache.put(req.src_lang, req.tgt_lang, text, item.output):
                    new += 1
            else:
                errors += 1
    return new, errors
