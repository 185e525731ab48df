"""Test error pattern (TEP) generation.

Patterns are tuples of 0-based, strictly increasing positions in
ascending-reliability coordinates: position 0 is the least reliable bit the
decoder sees.  Files and printed traces use 1-based indices.
"""

from __future__ import annotations

import heapq
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .channels import ChannelModel, bpsk_modulate, hard_demod, llr, transmit
from .gf2 import CodeSpec, encode, systematic_form

log = logging.getLogger(__name__)

ORDERINGS = ("HW", "LW", "ILW", "EW", "ML", "LUT")
_SORTED_ORDERINGS = ("HW", "LW", "ILW", "EW", "ML")

Pattern = tuple


def format_support(pattern: Sequence[int]) -> str:
    """``{1,2}``-style rendering with 1-based indices."""
    return "{" + ",".join(str(j + 1) for j in pattern) + "}"


def pattern_vector(pattern: Sequence[int], m: int) -> np.ndarray:
    e = np.zeros(m, dtype=np.uint8)
    e[list(pattern)] = 1
    return e


def lw_value(pattern: Sequence[int]) -> int:
    return sum(j + 1 for j in pattern)


def ilw_value(pattern: Sequence[int]) -> int:
    """Sum of (1-based position) x (rank within the support)."""
    return sum((j + 1) * r for r, j in enumerate(pattern, start=1))


@dataclass(eq=False)
class TepList:
    """An ordered list of error patterns of common length ``m``."""

    ordering: str
    m: int
    patterns: list
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.ordering not in ORDERINGS:
            raise ValueError(f"unknown ordering {self.ordering!r}")
        self.patterns = [tuple(int(j) for j in p) for p in self.patterns]
        if self.weights is None:
            self.weights = np.zeros(len(self.patterns))
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (len(self.patterns),):
            raise ValueError("one weight per pattern required")
        for p in self.patterns:
            if any(b <= a for a, b in zip(p, p[1:])) or (p and not 0 <= p[0] <= p[-1] < self.m):
                raise ValueError(f"invalid support {p} for length {self.m}")
        self._padded = None
        self._dense = None

    def __len__(self):
        return len(self.patterns)

    def __iter__(self):
        return iter(self.patterns)

    def __eq__(self, other):
        if not isinstance(other, TepList):
            return NotImplemented
        return (
            self.ordering == other.ordering
            and self.m == other.m
            and self.patterns == other.patterns
            and np.array_equal(self.weights, other.weights)
        )

    def head(self, M: int) -> "TepList":
        return TepList(self.ordering, self.m, self.patterns[:M], self.weights[:M])

    def padded_supports(self) -> np.ndarray:
        """``(len, max_weight)`` index array padded with ``m`` (a dummy slot)."""
        if self._padded is None:
            self._padded = pad_supports(self.patterns, self.m)
        return self._padded

    def to_matrix(self) -> np.ndarray:
        out = np.zeros((len(self.patterns), self.m), dtype=np.uint8)
        for r, p in enumerate(self.patterns):
            out[r, list(p)] = 1
        return out

    def dense(self) -> np.ndarray:
        """Cached read-only float copy of :meth:`to_matrix` for matrix products."""
        if self._dense is None:
            self._dense = self.to_matrix().astype(np.float32)
            self._dense.setflags(write=False)
        return self._dense


def pad_supports(patterns: Sequence[Sequence[int]], m: int) -> np.ndarray:
    width = max((len(p) for p in patterns), default=0)
    out = np.full((len(patterns), max(width, 1)), m, dtype=np.intp)
    for r, p in enumerate(patterns):
        out[r, : len(p)] = p
    return out


# -- increasing-weight enumeration -------------------------------------------


class IncreasingWeightGenerator:
    """Streams every subset of ``range(m)`` in non-decreasing additive weight.

    Slot ``S[j]`` holds the single pending candidate whose largest position is
    ``j``; its successor extends the next pattern in the history ``A`` whose
    largest position is below ``j``.  A slot whose successor parent has not
    been emitted yet waits until it has.  Ties go to the smallest ``j``.
    History entries below every slot's parent pointer are discarded.

    Weights of a pattern are accumulated in increasing position order, so
    equal subsets always get bit-identical float weights.
    """

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1:
            raise ValueError("weights must be a vector")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        self.w = [float(v) for v in w]
        self.m = len(self.w)
        self.emitted = 0
        # History A: absolute index -> (pattern, weight, max position)
        self._hist: list = []
        self._hist_base = 0
        # Slot state: candidate (pattern, weight), parent index, number used
        self._cand: list = [None] * self.m
        self._parent = [0] * self.m
        self._used = [0] * self.m
        self._valid = set(range(self.m))
        self._heap: list = []
        self._waiting: set = set()
        self._started = False

    def __iter__(self):
        return self

    def _hist_get(self, idx):
        return self._hist[idx - self._hist_base]

    def _append(self, pattern, weight):
        top = pattern[-1] if pattern else -1
        self._hist.append((pattern, weight, top))
        idx = self._hist_base + len(self._hist) - 1
        if self._waiting:
            for j in [j for j in self._waiting if j > top]:
                self._waiting.discard(j)
                self._assign(j, idx)

    def _assign(self, j, idx):
        parent, pw, _ = self._hist_get(idx)
        cand = parent + (j,)
        self._cand[j] = (cand, pw + self.w[j])
        self._parent[j] = idx
        heapq.heappush(self._heap, (pw + self.w[j], j))

    def _advance(self, j):
        """Find the next parent for slot ``j`` after its current one."""
        self._used[j] += 1
        if j < 60 and self._used[j] >= (1 << j):
            self._valid.discard(j)
            self._cand[j] = None
            return
        idx = self._parent[j] + 1
        end = self._hist_base + len(self._hist)
        while idx < end and self._hist[idx - self._hist_base][2] >= j:
            idx += 1
        if idx < end:
            self._assign(j, idx)
        else:
            self._cand[j] = None
            self._parent[j] = idx - 1
            self._waiting.add(j)

    def _prune(self):
        live = [self._parent[j] for j in self._valid]
        low = min(live) if live else self._hist_base + len(self._hist)
        drop = low - self._hist_base
        if drop > 4096 and drop > len(self._hist) // 2:
            del self._hist[:drop]
            self._hist_base = low

    def __next__(self):
        if not self._started:
            self._started = True
            self._append((), 0.0)
            for j in range(self.m):
                self._assign(j, 0)
            self.emitted = 1
            return (), 0.0
        while self._heap:
            weight, j = heapq.heappop(self._heap)
            if self._cand[j] is None or self._cand[j][1] != weight:
                continue
            pattern, _ = self._cand[j]
            self._append(pattern, weight)
            self._advance(j)
            self.emitted += 1
            if self.emitted % 8192 == 0:
                self._prune()
            return pattern, weight
        raise StopIteration


def gen_increasing_weight(weights, M: int, ordering: str = "EW") -> TepList:
    """First ``M`` patterns in non-decreasing additive weight.

    ``weights`` must be non-negative and non-decreasing (positions sorted by
    ascending reliability).
    """
    w = np.asarray(weights, dtype=float)
    if M < 1:
        raise ValueError("M must be at least 1")
    if np.any(np.diff(w) < 0):
        raise ValueError("weights must be non-decreasing")
    gen = IncreasingWeightGenerator(w)
    patterns, ws = [], []
    limit = M if len(w) >= 63 else min(M, 1 << len(w))
    for _ in range(limit):
        p, wt = next(gen)
        patterns.append(p)
        ws.append(wt)
    return TepList(ordering, len(w), patterns, np.array(ws))


def ml_tep_stream(reliabilities) -> IncreasingWeightGenerator:
    """Per-frame patterns in non-decreasing weighted Hamming distance.

    ``reliabilities`` are the frame's |L| values sorted ascending.
    """
    r = np.asarray(reliabilities, dtype=float)
    if np.any(np.diff(r) < 0):
        raise ValueError("reliabilities must be sorted ascending")
    return IncreasingWeightGenerator(r)


def hw_teps(m: int, M: int) -> TepList:
    return gen_increasing_weight(np.ones(m), M, "HW")


def lw_teps(m: int, M: int) -> TepList:
    return gen_increasing_weight(np.arange(1, m + 1, dtype=float), M, "LW")


def _ilw_key(pattern):
    return (ilw_value(pattern), len(pattern), tuple(reversed(pattern)))


def ilw_teps(m: int, M: int) -> TepList:
    """Best-first search over the ILW tree.

    Every non-empty pattern has one parent: drop its last position when the
    position just below it is also set, else decrement the last position.
    Both moves lower the ILW value, so popping the heap yields it in order.
    Ties: fewer ones first, then colexicographic.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    heap = [(_ilw_key(()), ())]
    patterns, weights = [], []
    while heap and len(patterns) < M:
        key, p = heapq.heappop(heap)
        patterns.append(p)
        weights.append(float(key[0]))
        top = p[-1] if p else -1
        if top + 1 < m:
            ext = p + (top + 1,)
            heapq.heappush(heap, (_ilw_key(ext), ext))
            if p:
                inc = p[:-1] + (top + 1,)
                heapq.heappush(heap, (_ilw_key(inc), inc))
    return TepList("ILW", m, patterns, np.array(weights))


def ew_teps(profile, M: int) -> TepList:
    """Patterns ordered by expected weighted Hamming distance."""
    expected = getattr(profile, "expected", profile)
    return gen_increasing_weight(expected, M, "EW")


# -- empirical (LUT) patterns ------------------------------------------------


def frame_error_coordinates(code: CodeSpec, llrs: np.ndarray, errors: np.ndarray, mode: str) -> np.ndarray:
    """Map true hard-decision errors into the decoder's TEP coordinates.

    ``llrs`` and ``errors`` are ``(frames, n)``.  Returns ``(frames, width)``
    error bits sorted by ascending reliability over the positions each
    decoder mode flips.
    """
    rel = np.abs(llrs)
    if mode == "grand":
        order = np.argsort(rel, axis=1, kind="stable")
        return np.take_along_axis(errors, order, axis=1)
    if mode == "posd":
        order = np.argsort(rel[:, : code.k], axis=1, kind="stable")
        return np.take_along_axis(errors[:, : code.k], order, axis=1)
    if mode == "osd":
        out = np.empty((len(llrs), code.k), dtype=errors.dtype)
        for f in range(len(llrs)):
            mrb = most_reliable_basis(code, llrs[f])
            out[f] = errors[f, mrb]
        return out
    raise ValueError(f"unknown mode {mode!r}")


def most_reliable_basis(code: CodeSpec, llrs) -> np.ndarray:
    """Positions of the OSD information set, ordered by ascending reliability."""
    rel = np.abs(np.asarray(llrs, dtype=float))
    phi1 = np.argsort(-rel, kind="stable")
    _, phi2 = systematic_form(code.generator[:, phi1])
    mrb = phi1[phi2[: code.k]]
    return mrb[np.argsort(rel[mrb], kind="stable")]


def lut_teps(model: ChannelModel, code: CodeSpec, mode: str, min_count: int, max_frames: int,
             rng: np.random.Generator, batch: int = 4096) -> TepList:
    """Rank observed error patterns by frequency over simulated frames.

    Only patterns seen at least ``min_count`` times are kept, most frequent
    first (ties: fewer ones, then colexicographic).  Weights hold the
    observed relative frequency.  An empty list is returned, with a
    warning, when no pattern reaches ``min_count``.
    """
    if min_count < 1:
        raise ValueError("min_count must be at least 1")
    width = code.n if mode == "grand" else code.k
    counts: Counter = Counter()
    done = 0
    while done < max_frames:
        b = min(batch, max_frames - done)
        msgs = rng.integers(0, 2, size=(b, code.k), dtype=np.uint8)
        cw = encode(code, msgs)
        y, h = transmit(model, bpsk_modulate(cw), rng)
        L = llr(model, y, h)
        err = hard_demod(L) ^ cw
        coords = frame_error_coordinates(code, L, err, mode)
        packed = np.packbits(coords, axis=1)
        keys, freq = np.unique(packed, axis=0, return_counts=True)
        for key, c in zip(keys, freq):
            counts[key.tobytes()] += int(c)
        done += b
    kept = []
    for key, c in counts.items():
        if c >= min_count:
            bits = np.unpackbits(np.frombuffer(key, dtype=np.uint8))[:width]
            p = tuple(int(j) for j in np.flatnonzero(bits))
            kept.append((-c, len(p), tuple(reversed(p)), p))
    if not kept:
        log.warning("no error pattern reached %d occurrences in %d frames", min_count, max_frames)
        return TepList("LUT", width, [], np.zeros(0))
    kept.sort()
    return TepList("LUT", width, [k[3] for k in kept], np.array([-k[0] / max_frames for k in kept]))


# -- comparison and persistence ----------------------------------------------


def overlap(a: TepList, b: TepList, M: int) -> float:
    """Percentage of the first ``M`` patterns of ``a`` also among the first ``M`` of ``b``."""
    if a.m != b.m:
        raise ValueError(f"pattern lengths differ: {a.m} vs {b.m}")
    if M < 1 or len(a) < M or len(b) < M:
        raise ValueError(f"both lists need at least M={M} patterns (have {len(a)} and {len(b)})")
    return 100.0 * len(set(a.patterns[:M]) & set(b.patterns[:M])) / M


class TepFormatError(ValueError):
    pass


def save_teps(teps: TepList, path) -> None:
    lines = [f"tepfile v1 {teps.ordering} {teps.m} {len(teps)}"]
    for p, w in zip(teps.patterns, teps.weights):
        lines.append(" ".join([repr(float(w))] + [str(j + 1) for j in p]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_teps(path) -> TepList:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text:
        raise TepFormatError("empty TEP file")
    head = text[0].split()
    if len(head) != 5 or head[:2] != ["tepfile", "v1"]:
        raise TepFormatError(f"bad header {text[0]!r}")
    ordering = head[2]
    if ordering not in ORDERINGS:
        raise TepFormatError(f"unknown ordering {ordering!r}")
    try:
        m, count = int(head[3]), int(head[4])
    except ValueError as exc:
        raise TepFormatError(f"bad header {text[0]!r}") from exc
    body = text[1:]
    if len(body) != count:
        raise TepFormatError(f"header announces {count} patterns, file has {len(body)}")
    patterns, weights = [], []
    for lineno, line in enumerate(body, start=2):
        parts = line.split()
        if not parts:
            raise TepFormatError(f"line {lineno}: missing weight")
        try:
            weights.append(float(parts[0]))
            idx = tuple(int(t) - 1 for t in parts[1:])
        except ValueError as exc:
            raise TepFormatError(f"line {lineno}: {exc}") from exc
        if any(j < 0 or j >= m for j in idx) or any(b <= a for a, b in zip(idx, idx[1:])):
            raise TepFormatError(f"line {lineno}: support must be increasing within [1, {m}]")
        patterns.append(idx)
    return TepList(ordering, m, patterns, np.array(weights))


# -- convenience -----------------------------------------------------------


def make_teps(order: str, M: int, *, n: int, k: int, mode: str, model: ChannelModel = None,
              code: CodeSpec = None, rng=None, min_count: int = 10, max_frames: int = 100_000) -> TepList:
    """Build a TEP list by ordering name for a decoder mode.

    EW lists use the LLR order statistics when the channel has a closed-form
    LLR distribution and the received-signal path otherwise.
    """
    from .channels import GaussianMixture
    from .reliability import expected_profile, expected_profile_from_signal, reliability_for

    order = order.upper()
    width = n if mode == "grand" else k
    if order == "HW":
        return hw_teps(width, M)
    if order == "LW":
        return lw_teps(width, M)
    if order == "ILW":
        return ilw_teps(width, M)
    if order == "EW":
        if model is None:
            raise ValueError("EW patterns need a channel model")
        if isinstance(model, GaussianMixture):
            profile = expected_profile_from_signal(model, n, k, mode)
        else:
            profile = expected_profile(reliability_for(model), n, k, mode)
        return ew_teps(profile, M)
    if order == "LUT":
        if model is None or code is None:
            raise ValueError("LUT patterns need a channel model and a code")
        teps = lut_teps(model, code, mode, min_count, max_frames, np.random.default_rng(rng))
        return teps.head(M)
    raise ValueError(f"unsupported ordering {order!r}")
