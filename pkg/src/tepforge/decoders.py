"""GRAND, OSD and POSD decoders driven by test error patterns.

Every decoder accepts either a pre-generated :class:`~tepforge.teps.TepList`
or :data:`ML_ONLINE`, which runs the increasing-weight enumeration on each
frame's own sorted reliabilities.  Patterns are always expressed in
ascending-reliability coordinates over the positions the decoder flips.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import islice
from typing import Iterator, Optional, Union

import numpy as np

from .channels import Awgn, ChannelModel, GaussianMixture, hard_demod, llr, log_pdf_given_bit
from .gf2 import CodeSpec, as_bits, encode, systematic_form
from .teps import TepList, ml_tep_stream, pad_supports

DECODED = "decoded"
ABANDONED = "abandoned"


class MlOnline:
    """Marker for per-frame maximum-likelihood pattern generation."""

    def __repr__(self):
        return "ML_ONLINE"


ML_ONLINE = MlOnline()
TepSource = Union[TepList, MlOnline]


@dataclass
class DecodeResult:
    codeword: Optional[np.ndarray]
    status: str
    queries: int
    whd: float = float("nan")


def whd(codeword, llrs) -> float:
    """Weighted Hamming distance between a word and the hard decisions."""
    c = as_bits(codeword, "codeword")
    L = np.asarray(llrs, dtype=float)
    if c.shape != L.shape:
        raise ValueError(f"length mismatch: {c.shape} vs {L.shape}")
    return float(np.sum((c ^ hard_demod(L)) * np.abs(L)))


def pattern_whd(pattern, llrs) -> float:
    """Sum of |L| over the positions an error vector flips."""
    e = as_bits(pattern, "pattern")
    L = np.asarray(llrs, dtype=float)
    if e.shape != L.shape:
        raise ValueError(f"length mismatch: {e.shape} vs {L.shape}")
    return float(np.sum(e * np.abs(L)))


def generalized_distance(received, candidate, model: ChannelModel) -> float:
    """Sum over positions of ln P(y | hard decision) - ln P(y | candidate bit)."""
    if not isinstance(model, (Awgn, GaussianMixture)):
        raise TypeError(f"conditional densities not available for {type(model).__name__}")
    y = np.asarray(received, dtype=float)
    c = as_bits(candidate, "candidate")
    if c.shape != y.shape:
        raise ValueError(f"length mismatch: {c.shape} vs {y.shape}")
    theta = hard_demod(llr(model, y))
    return float(np.sum(log_pdf_given_bit(model, y, theta) - log_pdf_given_bit(model, y, c)))


# -- pattern batching --------------------------------------------------------


def _check_width(teps: TepSource, width: int):
    if isinstance(teps, TepList):
        if teps.m != width:
            raise ValueError(f"TEP width {teps.m} does not match decoder width {width}")
    elif not isinstance(teps, MlOnline):
        raise TypeError(f"unsupported TEP source {teps!r}")


def _pattern_batches(teps: TepSource, sorted_rel: np.ndarray, mq: int) -> Iterator[np.ndarray]:
    """Yield padded support arrays, growing the batch size geometrically."""
    width = len(sorted_rel)
    size = 16
    if isinstance(teps, TepList):
        padded = teps.padded_supports()
        total = min(mq, len(teps))
        start = 0
        while start < total:
            stop = min(total, start + size)
            yield padded[start:stop]
            start = stop
            size *= 4
    else:
        stream = ml_tep_stream(sorted_rel)
        left = mq if width >= 63 else min(mq, 1 << width)
        while left > 0:
            chunk = [p for p, _ in islice(stream, min(size, left))]
            if not chunk:
                return
            left -= len(chunk)
            yield pad_supports(chunk, width)
            size *= 4


def _xor_rows(rows: np.ndarray, supports: np.ndarray) -> np.ndarray:
    """XOR of ``rows[j]`` over each support; ``rows`` carries a zero sentinel row."""
    return np.bitwise_xor.reduce(rows[supports], axis=1)


# -- GRAND ---------------------------------------------------------------------


def _pack_columns(h: np.ndarray) -> np.ndarray:
    """Parity-check columns as rows of packed bytes."""
    return np.packbits(h.T.astype(np.uint8), axis=1)


def grand_decode(code: CodeSpec, llrs, teps: TepSource, mq: int) -> DecodeResult:
    """Flip patterns onto the hard decision until the syndrome vanishes."""
    L = np.asarray(llrs, dtype=float)
    if L.shape != (code.n,):
        raise ValueError(f"expected {code.n} LLRs, got {L.shape}")
    _check_width(teps, code.n)
    hd = hard_demod(L)
    order = np.argsort(np.abs(L), kind="stable")
    cols = _pack_columns(code.parity)
    s0 = np.bitwise_xor.reduce(cols[hd.astype(bool)], axis=0) if hd.any() else np.zeros(cols.shape[1], np.uint8)
    sorted_cols = np.concatenate([cols[order], np.zeros((1, cols.shape[1]), np.uint8)])
    queries = 0
    for supports in _pattern_batches(teps, np.abs(L)[order], mq):
        syn = _xor_rows(sorted_cols, supports)
        hit = np.flatnonzero(np.all(syn == s0, axis=1))
        if hit.size:
            q = int(hit[0])
            e = np.zeros(code.n, dtype=np.uint8)
            flips = supports[q][supports[q] < code.n]
            e[order[flips]] = 1
            word = hd ^ e
            return DecodeResult(word, DECODED, queries + q + 1, float(np.sum(e * np.abs(L))))
        queries += len(supports)
    return DecodeResult(None, ABANDONED, queries)


# -- OSD / POSD ----------------------------------------------------------------


def _best_reencoding(gen: np.ndarray, base_msg: np.ndarray, msg_order: np.ndarray, L: np.ndarray,
                     teps: TepSource, mq: int):
    """Minimum-WHD candidate ``(base ^ e) * gen`` over the TEPs.

    ``msg_order[t]`` is the message position flipped by TEP coordinate t.
    Returns ``(codeword, whd, queries)``; ties keep the earliest candidate.
    """
    k, n = gen.shape
    rel = np.abs(L)
    hd = hard_demod(L)
    c0 = ((base_msg.astype(np.int64) @ gen.astype(np.int64)) % 2).astype(np.uint8)
    rows = np.concatenate([gen[msg_order].astype(bool), np.zeros((1, n), bool)])
    diff0 = (c0 ^ hd).astype(bool)
    if isinstance(teps, TepList):
        # no early exit is possible, so score every candidate at once
        e = teps.dense()[:mq]
        if not len(e):
            return None, np.inf, 0
        flips = (e @ rows[:k].astype(np.float32)).astype(np.uint8) & 1
        # |f - d| = f (1 - 2d) + d for bits f, d
        w = flips @ np.where(diff0, -rel, rel) + rel[diff0].sum()
        q = int(np.argmin(w))
        return c0 ^ flips[q], float(w[q]), len(e)
    best_w, best_word = np.inf, None
    queries = 0
    for supports in _pattern_batches(teps, rel[msg_order], mq):
        flips = _xor_rows(rows, supports)
        w = (flips ^ diff0) @ rel
        q = int(np.argmin(w))
        if w[q] < best_w:
            best_w = float(w[q])
            best_word = c0 ^ flips[q].astype(np.uint8)
        queries += len(supports)
    return best_word, best_w, queries


def osd_decode(code: CodeSpec, llrs, teps: TepSource, mq: int) -> DecodeResult:
    """Re-encode flipped hard decisions on the most reliable basis."""
    L = np.asarray(llrs, dtype=float)
    if L.shape != (code.n,):
        raise ValueError(f"expected {code.n} LLRs, got {L.shape}")
    _check_width(teps, code.k)
    rel = np.abs(L)
    phi1 = np.argsort(-rel, kind="stable")
    g2, phi2 = systematic_form(code.generator[:, phi1])
    perm = phi1[phi2]
    Lp = L[perm]
    base = hard_demod(Lp[: code.k])
    msg_order = np.argsort(np.abs(Lp[: code.k]), kind="stable")
    word_p, w, queries = _best_reencoding(g2, base, msg_order, Lp, teps, mq)
    if word_p is None:
        return DecodeResult(None, ABANDONED, queries)
    word = np.empty_like(word_p)
    word[perm] = word_p
    return DecodeResult(word, DECODED, queries, w)


def posd_decode(code: CodeSpec, llrs, teps: TepSource, mq: int) -> DecodeResult:
    """Flip the message segment of a systematic code and re-encode."""
    L = np.asarray(llrs, dtype=float)
    if L.shape != (code.n,):
        raise ValueError(f"expected {code.n} LLRs, got {L.shape}")
    if not code.is_systematic:
        raise ValueError("POSD needs a generator in standard form [I | P]")
    _check_width(teps, code.k)
    base = hard_demod(L[: code.k])
    msg_order = np.argsort(np.abs(L[: code.k]), kind="stable")
    word, w, queries = _best_reencoding(code.generator, base, msg_order, L, teps, mq)
    if word is None:
        return DecodeResult(None, ABANDONED, queries)
    return DecodeResult(word, DECODED, queries, w)


DECODERS = {"grand": grand_decode, "osd": osd_decode, "posd": posd_decode}


def decode(kind: str, code: CodeSpec, llrs, teps: TepSource, mq: int) -> DecodeResult:
    try:
        fn = DECODERS[kind]
    except KeyError:
        raise ValueError(f"unknown decoder {kind!r}; expected one of {sorted(DECODERS)}") from None
    return fn(code, llrs, teps, mq)


def decoder_width(kind: str, code: CodeSpec) -> int:
    return code.n if kind == "grand" else code.k


def ml_decode_exhaustive(code: CodeSpec, llrs) -> np.ndarray:
    """Minimum-WHD codeword by enumerating the whole codebook (small k only)."""
    if code.k > 20:
        raise ValueError("exhaustive decoding limited to k <= 20")
    L = np.asarray(llrs, dtype=float)
    msgs = ((np.arange(1 << code.k)[:, None] >> np.arange(code.k)) & 1).astype(np.uint8)
    words = encode(code, msgs)
    dist = (words ^ hard_demod(L)) @ np.abs(L)
    return words[int(np.argmin(dist))]
