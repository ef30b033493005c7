"""Similarity backends and top-k candidate pair generation.

Three backends score canonical sentence pairs on [0, 1]:

* ``char_ngram``: cosine similarity of TF-IDF weighted character n-gram
  vectors. Document frequency is computed over distinct classes so duplicated
  records cannot skew weights.
* ``levenshtein``: 1 - editDistance(a, b) / max(|a|, |b|).
* ``external_embedding``: cosine of provider vectors, mapped from [-1, 1] to
  [0, 1] via (x + 1) / 2. The provider contract is one POST {endpoint}/embed
  with body {"texts": [...]} returning {"vectors": [...]}.

The batch top-k path and the per-pair scorer share one dot-product routine
over pre-normalized sparse vectors, iterated in ascending term order, so a
brute-force all-pairs selection reproduces the exact same floats, pairs and
ranks as the inverted-index fast path.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from .errors import ProviderError
from .normalize import ExactClasses

logger = logging.getLogger(__name__)

BACKEND_KINDS = ("char_ngram", "levenshtein", "external_embedding")


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "char_ngram"
    n: int = 3
    endpoint: str | None = None

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("n-gram size must be >= 1")
        if (self.endpoint is not None) != (self.kind == "external_embedding"):
            raise ValueError("endpoint must be present iff kind is external_embedding")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n": self.n, "endpoint": self.endpoint}

    @classmethod
    def from_dict(cls, d: dict) -> "BackendConfig":
        return cls(kind=d["kind"], n=int(d.get("n", 3)), endpoint=d.get("endpoint"))


def pair_key(a: int, b: int) -> str:
    """Canonical unordered key for a class pair."""
    lo, hi = (a, b) if a <= b else (b, a)
    return f"{lo}-{hi}"


@dataclass(frozen=True)
class CandidatePair:
    left_class: int
    right_class: int
    score: float
    rank: int

    def __post_init__(self):
        if self.left_class == self.right_class:
            raise ValueError("a class cannot be its own candidate neighbor")
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score {self.score} outside [0, 1]")

    @property
    def key(self) -> str:
        return pair_key(self.left_class, self.right_class)


@dataclass
class CandidateSet:
    pairs: list[CandidatePair]
    k: int
    backend: BackendConfig

    def __len__(self) -> int:
        return len(self.pairs)

    def pair_keys(self) -> list[str]:
        """Distinct canonical keys in first-occurrence order."""
        seen: set[str] = set()
        out: list[str] = []
        for p in self.pairs:
            if p.key not in seen:
                seen.add(p.key)
                out.append(p.key)
        return out

    def key_set(self) -> set[str]:
        return {p.key for p in self.pairs}

    def dump_jsonl(self, path: str | Path) -> None:
        lines = [json.dumps({"left_class": p.left_class, "right_class": p.right_class,
                             "score": p.score, "rank": p.rank, "pair_key": p.key})
                 for p in self.pairs]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load_jsonl(cls, path: str | Path, k: int = 0,
                   backend: BackendConfig | None = None) -> "CandidateSet":
        pairs = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            pairs.append(CandidatePair(left_class=int(obj["left_class"]),
                                       right_class=int(obj["right_class"]),
                                       score=float(obj["score"]), rank=int(obj["rank"])))
        inferred_k = max((p.rank for p in pairs), default=0)
        return cls(pairs=pairs, k=k or inferred_k, backend=backend or BackendConfig())


def char_ngrams(text: str, n: int) -> list[str]:
    """Overlapping character n-grams; a text shorter than n is one gram."""
    if len(text) < n:
        return [text]
    return [text[i:i + n] for i in range(len(text) - n + 1)]


class CharNgramScorer:
    """TF-IDF weighted character n-gram cosine over a fitted text collection."""

    def __init__(self, n: int = 3):
        self.n = n
        self.vectors: list[dict[int, float]] = []
        self.sorted_terms: list[tuple[int, ...]] = []
        self.postings: dict[int, list[int]] = {}

    def fit(self, texts: list[str]) -> "CharNgramScorer":
        docs = [dict() for _ in texts]
        df: dict[str, int] = {}
        for i, text in enumerate(texts):
            counts: dict[str, int] = {}
            for gram in char_ngrams(text, self.n):
                counts[gram] = counts.get(gram, 0) + 1
            docs[i] = counts
            for gram in counts:
                df[gram] = df.get(gram, 0) + 1
        vocab = {gram: tid for tid, gram in enumerate(sorted(df))}
        ndocs = len(texts)
        idf = {vocab[g]: math.log((1.0 + ndocs) / (1.0 + c)) + 1.0 for g, c in df.items()}
        self.vectors = []
        self.sorted_terms = []
        self.postings = {}
        for i, counts in enumerate(docs):
            ids = sorted(vocab[g] for g in counts)
            weights = {}
            sq = 0.0
            by_id = {vocab[g]: c for g, c in counts.items()}
            for tid in ids:
                w = by_id[tid] * idf[tid]
                weights[tid] = w
                sq += w * w
            norm = math.sqrt(sq)
            self.vectors.append({tid: w / norm for tid, w in weights.items()})
            self.sorted_terms.append(tuple(ids))
            for tid in ids:
                self.postings.setdefault(tid, []).append(i)
        return self

    def pair_score(self, i: int, j: int) -> float:
        """Dot product over shared terms in ascending term order."""
        ti, tj = self.sorted_terms[i], self.sorted_terms[j]
        wi, wj = self.vectors[i], self.vectors[j]
        a = b = 0
        s = 0.0
        while a < len(ti) and b < len(tj):
            if ti[a] == tj[b]:
                s += wi[ti[a]] * wj[ti[a]]
                a += 1
                b += 1
            elif ti[a] < tj[b]:
                a += 1
            else:
                b += 1
        return min(1.0, max(0.0, s))

    def scores_for(self, i: int) -> dict[int, float]:
        """Nonzero neighbor scores of document i.

        Accumulates over i's terms in ascending order, so each per-neighbor sum
        sees the same float addition order as pair_score.
        """
        wi = self.vectors[i]
        acc: dict[int, float] = {}
        for tid in self.sorted_terms[i]:
            w = wi[tid]
            for j in self.postings[tid]:
                if j != i:
                    acc[j] = acc.get(j, 0.0) + w * self.vectors[j][tid]
        return {j: min(1.0, max(0.0, s)) for j, s in acc.items()}


def levenshtein_distance(a: str, b: str) -> int:
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        append = cur.append
        for j, cb in enumerate(b, 1):
            append(min(prev[j] + 1, cur[j - 1] + 1,
                       prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


class LevenshteinScorer:
    def __init__(self):
        self.texts: list[str] = []
        self._memo: dict[tuple[int, int], float] = {}

    def fit(self, texts: list[str]) -> "LevenshteinScorer":
        self.texts = list(texts)
        self._memo = {}
        return self

    def pair_score(self, i: int, j: int) -> float:
        key = (i, j) if i <= j else (j, i)
        hit = self._memo.get(key)
        if hit is None:
            a, b = self.texts[key[0]], self.texts[key[1]]
            hit = 1.0 - levenshtein_distance(a, b) / max(len(a), len(b))
            self._memo[key] = hit
        return hit

    def scores_for(self, i: int) -> dict[int, float]:
        return {j: self.pair_score(i, j) for j in range(len(self.texts)) if j != i}


def levenshtein_score(a: str, b: str) -> float:
    if not a and not b:
        return 1.0
    return 1.0 - levenshtein_distance(a, b) / max(len(a), len(b))


class EmbeddingClient:
    """Batch client for the embedding provider wire protocol.

    Vectors are cached keyed by (endpoint, sha256 of text) so reruns are cheap
    and deterministic. Credentials come only from the
    SPECLINEAGE_PROVIDER_TOKEN environment variable.
    """

    def __init__(self, endpoint: str, batch_size: int = 64, timeout: float = 30.0,
                 cache_path: str | Path | None = None, max_retries: int = 2,
                 session: requests.Session | None = None):
        self.endpoint = endpoint.rstrip("/")
        self.batch_size = batch_size
        self.timeout = timeout
        self.cache_path = Path(cache_path) if cache_path else None
        self.max_retries = max_retries
        self.session = session or requests.Session()
        self._cache: dict[str, list[float]] = {}
        if self.cache_path and self.cache_path.exists():
            try:
                stored = json.loads(self.cache_path.read_text(encoding="utf-8"))
                self._cache = stored.get(self.endpoint, {})
            except (OSError, json.JSONDecodeError):
                logger.warning("ignoring unreadable embedding cache at %s", self.cache_path)

    @staticmethod
    def _key(text: str) -> str:
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def embed(self, texts: list[str]) -> list[list[float]]:
        missing: list[str] = []
        seen: set[str] = set()
        for t in texts:
            k = self._key(t)
            if k not in self._cache and k not in seen:
                seen.add(k)
                missing.append(t)
        done = len(texts) - len(missing)
        for start in range(0, len(missing), self.batch_size):
            chunk = missing[start:start + self.batch_size]
            vectors = self._post(chunk, completed=done + start)
            for t, v in zip(chunk, vectors):
                self._cache[self._key(t)] = v
        if missing and self.cache_path:
            self._save_cache()
        return [self._cache[self._key(t)] for t in texts]

    def _post(self, chunk: list[str], completed: int) -> list[list[float]]:
        url = f"{self.endpoint}/embed"
        headers = {}
        token = os.environ.get("SPECLINEAGE_PROVIDER_TOKEN")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        last_exc: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = self.session.post(url, json={"texts": chunk},
                                         headers=headers, timeout=self.timeout)
            except requests.RequestException as exc:
                last_exc = exc
                time.sleep(0.1 * (attempt + 1))
                continue
            if resp.status_code != 200:
                raise ProviderError(f"provider returned HTTP {resp.status_code}",
                                    self.endpoint, resp.text[:200], completed)
            try:
                data = resp.json()
            except ValueError:
                raise ProviderError("provider response is not JSON",
                                    self.endpoint, resp.text[:200], completed) from None
            vectors = data.get("vectors")
            if (not isinstance(vectors, list) or len(vectors) != len(chunk)
                    or not all(isinstance(v, list) and v for v in vectors)):
                raise ProviderError("malformed vectors payload", self.endpoint,
                                    json.dumps(data)[:200], completed)
            dims = {len(v) for v in vectors}
            if len(dims) != 1:
                raise ProviderError("provider returned mixed vector dimensions",
                                    self.endpoint, json.dumps(sorted(dims)), completed)
            return [[float(x) for x in v] for v in vectors]
        raise ProviderError(f"provider unreachable: {last_exc}", self.endpoint,
                            "", completed)

    def _save_cache(self) -> None:
        stored: dict = {}
        if self.cache_path.exists():
            try:
                stored = json.loads(self.cache_path.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError):
                stored = {}
        stored[self.endpoint] = self._cache
        self.cache_path.write_text(json.dumps(stored, sort_keys=True), encoding="utf-8")


def _cosine(a: list[float], b: list[float]) -> float:
    dot = sq_a = sq_b = 0.0
    for x, y in zip(a, b):
        dot += x * y
        sq_a += x * x
        sq_b += y * y
    if sq_a == 0.0 or sq_b == 0.0:
        return 0.0
    return dot / math.sqrt(sq_a) / math.sqrt(sq_b)


class ExternalScorer:
    def __init__(self, client: EmbeddingClient):
        self.client = client
        self.vectors: list[list[float]] = []

    def fit(self, texts: list[str]) -> "ExternalScorer":
        self.vectors = self.client.embed(texts)
        return self

    def pair_score(self, i: int, j: int) -> float:
        c = _cosine(self.vectors[i], self.vectors[j])
        return min(1.0, max(0.0, (c + 1.0) / 2.0))

    def scores_for(self, i: int) -> dict[int, float]:
        return {j: self.pair_score(i, j) for j in range(len(self.vectors)) if j != i}


def make_scorer(backend: BackendConfig, client: EmbeddingClient | None = None):
    if backend.kind == "char_ngram":
        return CharNgramScorer(n=backend.n)
    if backend.kind == "levenshtein":
        return LevenshteinScorer()
    return ExternalScorer(client or EmbeddingClient(backend.endpoint))


def score(a: str, b: str, backend: BackendConfig,
          client: EmbeddingClient | None = None) -> float:
    """Similarity of two canonical sentences under the given backend."""
    if not a or not b:
        raise ValueError("scoring requires non-empty canonical texts")
    if a == b:
        # Identity is exactly 1 under every backend; float cosine would not be.
        return 1.0
    if backend.kind == "levenshtein":
        return levenshtein_score(a, b)
    scorer = make_scorer(backend, client)
    scorer.fit([a, b])
    return scorer.pair_score(0, 1)


def top_k_candidates(classes: ExactClasses | list[str], backend: BackendConfig,
                     k: int, client: EmbeddingClient | None = None) -> CandidateSet:
    """For each class, its k highest-scoring other classes.

    Neighbors are ordered by descending score, ties broken by ascending class
    position. Emits D*k pairs for D classes when D > k; D-1 per class with a
    warning otherwise.
    """
    texts = classes.texts() if isinstance(classes, ExactClasses) else list(classes)
    ndocs = len(texts)
    if ndocs < 2:
        raise ValueError("candidate generation requires at least two classes")
    if k < 1:
        raise ValueError("k must be >= 1")
    k_eff = min(k, ndocs - 1)
    if k >= ndocs:
        logger.warning("k=%d >= class count %d; emitting %d neighbors per class",
                       k, ndocs, k_eff)
    scorer = make_scorer(backend, client)
    scorer.fit(texts)
    pairs: list[CandidatePair] = []
    for i in range(ndocs):
        scores = scorer.scores_for(i)
        ranked = sorted(scores.items(), key=lambda p: (-p[1], p[0]))[:k_eff]
        if len(ranked) < k_eff:
            # Classes sharing no n-grams score exactly 0; fill ascending.
            present = set(scores)
            for j in range(ndocs):
                if j != i and j not in present:
                    ranked.append((j, 0.0))
                    if len(ranked) == k_eff:
                        break
        for rank, (j, s) in enumerate(ranked, start=1):
            pairs.append(CandidatePair(left_class=i, right_class=j, score=s, rank=rank))
    return CandidateSet(pairs=pairs, k=k, backend=backend)
