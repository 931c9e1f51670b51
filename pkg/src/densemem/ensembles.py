"""Pattern ensembles, median binarization and pattern file I/O.

Binary format (little-endian)::

    b"DAMB" | version 0x01 | N: u32 | p: u32 | p*N bytes, row-major, 0x01=+1 0x00=-1

Text format: first line ``"<N> <p>"`` then ``p`` lines of ``N`` tokens in {-1, 1}.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import _kernels as K
from .core import ModelParams, PatternSet
from .rng import Xoshiro256

MAGIC = b"DAMB"
VERSION = 1
_HEADER = struct.Struct("<4sBII")


class PatternFileError(ValueError):
    """Base class for unreadable pattern files."""


class MalformedHeaderError(PatternFileError):
    pass


class InvalidEntryError(PatternFileError):
    pass


class TruncatedPayloadError(PatternFileError):
    pass


class EnsembleKind(str, Enum):
    RANDOM = "random_iid"
    CORRELATED = "correlated"
    FILE = "file"


@dataclass(frozen=True)
class EnsembleSpec:
    kind: EnsembleKind
    params: ModelParams | None = None
    copy_prob: float = 0.25
    copy_fraction: float | Fraction = Fraction(1, 3)
    source_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", EnsembleKind(self.kind))
        if not 0 <= self.copy_prob <= 1:
            raise ValueError("copy_prob must lie in [0, 1]")
        if not 0 <= self.copy_fraction <= 1:
            raise ValueError("copy_fraction must lie in [0, 1]")
        if self.kind is EnsembleKind.FILE and not self.source_path:
            raise ValueError("file ensemble needs source_path")
        if self.kind is not EnsembleKind.FILE and self.params is None:
            raise ValueError("generated ensembles need params")

    def build(self, rng: Xoshiro256) -> PatternSet:
        if self.kind is EnsembleKind.RANDOM:
            return generate_random(self.params, rng)
        if self.kind is EnsembleKind.CORRELATED:
            return generate_correlated(self.params, rng, self.copy_prob, self.copy_fraction)
        patterns = load_patterns(self.source_path)
        n = self.params.n if self.params is not None else 3
        return patterns.with_order(n)


def generate_random(params: ModelParams, rng: Xoshiro256) -> PatternSet:
    """i.i.d. +/-1 entries; +1 when the top bit of the next output is set."""
    out = np.empty((params.p, params.N), dtype=np.int8)
    K.fill_random(rng.state, out)
    return PatternSet(params, out)


def correlated_count(p: int, copy_fraction=Fraction(1, 3)) -> int:
    return math.floor(p * copy_fraction + 1e-9)


def generate_correlated(
    params: ModelParams,
    rng: Xoshiro256,
    copy_prob: float = 0.25,
    copy_fraction=Fraction(1, 3),
) -> PatternSet:
    """Random set whose leading patterns partially copy the first one.

    Patterns ``1 .. floor(p*copy_fraction)-1`` (0-based) take each coordinate
    from pattern 0 with probability ``copy_prob``; the rest stay i.i.d.
    """
    if params.p < 3:
        raise ValueError("correlated ensemble needs p >= 3")
    out = np.empty((params.p, params.N), dtype=np.int8)
    K.fill_random(rng.state, out)
    K.inject_copies(rng.state, out, correlated_count(params.p, copy_fraction), float(copy_prob))
    return PatternSet(params, out)


def binarize_median(vectors, n: int = 3) -> PatternSet:
    """Per-vector median threshold; entries at or above the median map to +1."""
    rows = [np.asarray(v, dtype=np.float64).reshape(-1) for v in vectors]
    if not rows:
        raise ValueError("binarize_median needs at least one vector")
    N = rows[0].shape[0]
    if N == 0 or any(r.shape[0] != N for r in rows):
        raise ValueError("all vectors must share one non-zero length")
    data = np.vstack(rows)
    med = np.median(data, axis=1, keepdims=True)
    pats = np.where(data >= med, 1, -1).astype(np.int8)
    return PatternSet(ModelParams(n=n, N=N, p=len(rows)), pats)


def save_patterns(patterns: PatternSet, path, fmt: str = "binary") -> int:
    """Write ``patterns``; returns bytes written."""
    path = Path(path)
    if fmt == "binary":
        payload = _HEADER.pack(MAGIC, VERSION, patterns.N, patterns.p)
        payload += (patterns.patterns > 0).astype(np.uint8).tobytes()
        path.write_bytes(payload)
        return len(payload)
    if fmt == "text":
        lines = [f"{patterns.N} {patterns.p}"]
        lines += [" ".join(str(int(v)) for v in row) for row in patterns.patterns]
        text = "\n".join(lines) + "\n"
        path.write_text(text, encoding="ascii")
        return len(text)
    raise ValueError(f"unknown pattern format {fmt!r}")


def load_patterns(path, n: int = 3) -> PatternSet:
    """Read either format; binary is recognized by its magic bytes."""
    data = Path(path).read_bytes()
    if data[:4] == MAGIC:
        return _parse_binary(data, n)
    return _parse_text(data, n)


def _parse_binary(data: bytes, n: int) -> PatternSet:
    if len(data) < _HEADER.size:
        raise MalformedHeaderError("binary header shorter than 13 bytes")
    _, version, N, p = _HEADER.unpack_from(data)
    if version != VERSION:
        raise MalformedHeaderError(f"unsupported version {version}")
    if N < 1 or p < 1:
        raise MalformedHeaderError("N and p must be positive")
    body = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size)
    if body.size < N * p:
        raise TruncatedPayloadError(f"expected {N * p} payload bytes, found {body.size}")
    if body.size > N * p:
        raise MalformedHeaderError(f"{body.size - N * p} trailing bytes after payload")
    if np.any(body > 1):
        raise InvalidEntryError("payload byte outside {0x00, 0x01}")
    pats = np.where(body == 1, 1, -1).astype(np.int8).reshape(p, N)
    return PatternSet(ModelParams(n=n, N=N, p=p), pats)


def _parse_text(data: bytes, n: int) -> PatternSet:
    try:
        lines = [ln for ln in data.decode("ascii").splitlines() if ln.strip()]
    except UnicodeDecodeError as exc:
        raise MalformedHeaderError("not a pattern file") from exc
    if not lines:
        raise MalformedHeaderError("empty pattern file")
    head = lines[0].split()
    if len(head) != 2 or not all(tok.isdigit() for tok in head):
        raise MalformedHeaderError(f"bad header line {lines[0]!r}")
    N, p = int(head[0]), int(head[1])
    if N < 1 or p < 1:
        raise MalformedHeaderError("N and p must be positive")
    rows = lines[1:]
    if len(rows) < p:
        raise TruncatedPayloadError(f"expected {p} pattern lines, found {len(rows)}")
    if len(rows) > p:
        raise MalformedHeaderError(f"{len(rows) - p} extra lines after the patterns")
    pats = np.empty((p, N), dtype=np.int8)
    for mu, row in enumerate(rows):
        toks = row.split()
        if len(toks) != N:
            raise TruncatedPayloadError(f"pattern line {mu + 1} has {len(toks)} entries, expected {N}")
        for i, tok in enumerate(toks):
            if tok not in ("1", "-1", "+1"):
                raise InvalidEntryError(f"entry {tok!r} at line {mu + 2} is not -1 or 1")
            pats[mu, i] = -1 if tok == "-1" else 1
    return PatternSet(ModelParams(n=n, N=N, p=p), pats)
