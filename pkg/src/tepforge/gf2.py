"""Binary linear block codes over GF(2).

Matrices and vectors are plain ``numpy.uint8`` arrays holding 0/1 entries.
Permutations are integer index arrays ``perm`` with the convention
``permuted = original[..., perm]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class CodeFormatError(ValueError):
    """Malformed code matrix file."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class CodeInvariantError(ValueError):
    """Generator and parity-check matrices are inconsistent."""


class RankDeficientError(ValueError):
    pass


def as_bits(a, name: str = "array") -> np.ndarray:
    arr = np.asarray(a)
    if arr.dtype == np.bool_:
        return arr.astype(np.uint8)
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"{name} must contain only 0/1 entries")
    return arr.astype(np.uint8)


def gf2_rank(matrix) -> int:
    m = as_bits(matrix, "matrix").astype(bool)
    m = m.copy()
    rows, cols = m.shape
    rank = 0
    for c in range(cols):
        if rank == rows:
            break
        hits = np.flatnonzero(m[rank:, c])
        if hits.size == 0:
            continue
        p = rank + hits[0]
        if p != rank:
            m[[rank, p]] = m[[p, rank]]
        mask = m[:, c].copy()
        mask[rank] = False
        m[mask] ^= m[rank]
        rank += 1
    return rank


def invert_permutation(perm) -> np.ndarray:
    perm = np.asarray(perm)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return inv


def apply_permutation(vec, perm) -> np.ndarray:
    return np.asarray(vec)[..., np.asarray(perm)]


def systematic_form(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Reduce a full-rank k x n matrix to ``[I_k | P]`` form.

    Returns ``(reduced, perm)`` where column ``j`` of ``reduced`` comes from
    column ``perm[j]`` of the input.  A pivot position whose column has no 1
    at or below the current row is swapped with the lowest-index later column
    that does; otherwise ``perm`` is the identity.  Among candidate pivot
    rows the lowest index wins.
    """
    m = as_bits(matrix, "matrix").astype(bool).copy()
    if m.ndim != 2:
        raise ValueError("matrix must be two-dimensional")
    k, n = m.shape
    perm = np.arange(n)
    for r in range(k):
        hits = np.flatnonzero(m[r:, r])
        if hits.size == 0:
            sub = m[r:, r + 1:]
            cols = np.flatnonzero(sub.any(axis=0))
            if cols.size == 0:
                raise RankDeficientError(f"matrix has rank {r} < {k}")
            c = r + 1 + cols[0]
            m[:, [r, c]] = m[:, [c, r]]
            perm[[r, c]] = perm[[c, r]]
            hits = np.flatnonzero(m[r:, r])
        p = r + hits[0]
        if p != r:
            m[[r, p]] = m[[p, r]]
        mask = m[:, r].copy()
        mask[r] = False
        m[mask] ^= m[r]
    return m.astype(np.uint8), perm


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.uint8)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CodeSpec:
    """An [n, k] binary linear code with generator and parity-check matrices."""

    n: int
    k: int
    generator: np.ndarray
    parity: np.ndarray

    def __post_init__(self):
        g = as_bits(self.generator, "generator")
        h = as_bits(self.parity, "parity")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"invalid dimensions n={self.n}, k={self.k}")
        if g.shape != (self.k, self.n):
            raise ValueError(f"generator shape {g.shape} != {(self.k, self.n)}")
        if h.shape != (self.n - self.k, self.n):
            raise ValueError(f"parity shape {h.shape} != {(self.n - self.k, self.n)}")
        if np.any((g.astype(np.int64) @ h.T.astype(np.int64)) % 2):
            raise CodeInvariantError("generator * parity^T != 0 over GF(2)")
        if gf2_rank(g) != self.k:
            raise CodeInvariantError("generator does not have full row rank")
        object.__setattr__(self, "generator", _freeze(g))
        object.__setattr__(self, "parity", _freeze(h))

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def is_systematic(self) -> bool:
        return bool(np.array_equal(self.generator[:, : self.k], np.eye(self.k, dtype=np.uint8)))

    def __eq__(self, other):
        if not isinstance(other, CodeSpec):
            return NotImplemented
        return (
            self.n == other.n
            and self.k == other.k
            and np.array_equal(self.generator, other.generator)
            and np.array_equal(self.parity, other.parity)
        )

    def __repr__(self):
        return f"CodeSpec(n={self.n}, k={self.k})"


def parity_from_generator(generator) -> np.ndarray:
    g = as_bits(generator, "generator")
    k, n = g.shape
    reduced, perm = systematic_form(g)
    p = reduced[:, k:]
    h_perm = np.concatenate([p.T, np.eye(n - k, dtype=np.uint8)], axis=1)
    h = np.empty_like(h_perm)
    h[:, perm] = h_perm
    return h


def code_from_generator(generator) -> CodeSpec:
    g = as_bits(generator, "generator")
    k, n = g.shape
    return CodeSpec(n, k, g, parity_from_generator(g))


def random_linear_code(n: int, k: int, seed=None) -> CodeSpec:
    """Seeded random linear code with generator ``[I_k | P]``, P uniform."""
    if not (1 <= k < n):
        raise ValueError(f"need 1 <= k < n, got n={n}, k={k}")
    rng = np.random.default_rng(seed)
    p = rng.integers(0, 2, size=(k, n - k), dtype=np.uint8)
    g = np.concatenate([np.eye(k, dtype=np.uint8), p], axis=1)
    h = np.concatenate([p.T, np.eye(n - k, dtype=np.uint8)], axis=1)
    return CodeSpec(n, k, g, h)


def encode(code: CodeSpec, message) -> np.ndarray:
    u = as_bits(message, "message")
    if u.shape[-1] != code.k:
        raise ValueError(f"message length {u.shape[-1]} != k={code.k}")
    return ((u.astype(np.int64) @ code.generator.astype(np.int64)) % 2).astype(np.uint8)


def syndrome(code: CodeSpec, word) -> np.ndarray:
    x = as_bits(word, "word")
    if x.shape[-1] != code.n:
        raise ValueError(f"word length {x.shape[-1]} != n={code.n}")
    return ((x.astype(np.int64) @ code.parity.T.astype(np.int64)) % 2).astype(np.uint8)


def is_codeword(code: CodeSpec, word) -> bool:
    return not syndrome(code, word).any()


def save_code(code: CodeSpec, path) -> None:
    """Write ``n k``, the k generator rows, then the n-k parity rows."""
    lines = [f"{code.n} {code.k}"]
    lines += ["".join(map(str, row)) for row in code.generator]
    lines += ["".join(map(str, row)) for row in code.parity]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_row(text: str, n: int, lineno: int) -> list[int]:
    if len(text) != n:
        raise CodeFormatError(f"expected {n} bits, found {len(text)}", lineno, min(len(text), n) + 1)
    for col, ch in enumerate(text, start=1):
        if ch not in "01":
            raise CodeFormatError(f"invalid character {ch!r}", lineno, col)
    return [int(ch) for ch in text]


def load_code(path) -> CodeSpec:
    """Read a code file; the parity block is optional and derived if absent.

    Blank lines and lines starting with ``#`` are ignored.
    """
    rows: list[tuple[int, str]] = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        s = raw.strip()
        if s and not s.startswith("#"):
            rows.append((lineno, s))
    if not rows:
        raise CodeFormatError("empty file, expected header 'n k'", 1)
    lineno, header = rows[0]
    parts = header.split()
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        raise CodeFormatError("expected header 'n k'", lineno)
    n, k = int(parts[0]), int(parts[1])
    if not 1 <= k <= n:
        raise CodeFormatError(f"invalid dimensions n={n}, k={k}", lineno)
    body = rows[1:]
    if len(body) not in (k, n):
        last = body[-1][0] + 1 if body else lineno + 1
        raise CodeFormatError(
            f"expected {k} generator rows (optionally followed by {n - k} parity rows), found {len(body)}",
            last,
        )
    matrix = np.array([_parse_row(s, n, ln) for ln, s in body], dtype=np.uint8).reshape(len(body), n)
    g = matrix[:k]
    if gf2_rank(g) != k:
        raise CodeInvariantError(f"generator rank {gf2_rank(g)} < k={k}")
    if len(body) == k:
        return code_from_generator(g)
    return CodeSpec(n, k, g, matrix[k:])
