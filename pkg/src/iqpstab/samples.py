"""Measurement-outcome batches and the plain-text sample file format
(T lines of n '0'/'1' characters, LF endings, no header)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .f2linalg import BitMatrix, BitVector


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class SampleBatch:
    samples: BitMatrix
    prover: str = "unknown"
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return self.samples.rows

    @property
    def n(self) -> int:
        return self.samples.cols

    @classmethod
    def from_indices(cls, idx: np.ndarray, n: int, **kw) -> "SampleBatch":
        """Samples given as integers whose bit j is qubit j."""
        idx = np.asarray(idx, dtype=np.int64)
        bits = ((idx[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(np.uint8)
        return cls(BitMatrix.from_dense(bits) if idx.size else BitMatrix(0, n), **kw)

    def parities(self, s: BitVector) -> np.ndarray:
        """x . s for every sample, as uint8."""
        return (self.samples @ s).to_array()


def write_samples(batch: SampleBatch, path) -> None:
    dense = batch.samples.to_dense()
    with open(path, "w", newline="\n") as fh:
        for row in dense:
            fh.write("".join("1" if b else "0" for b in row))
            fh.write("\n")


def read_samples(path, n: Optional[int] = None) -> SampleBatch:
    rows = []
    with open(path, "r", newline="") as fh:
        text = fh.read()
    if text and not text.endswith("\n"):
        raise ParseError("missing final newline (truncated file?)", text.count("\n") + 1)
    for lineno, line in enumerate(text.split("\n")[:-1] if text else [], start=1):
        if not line or any(ch not in "01" for ch in line):
            raise ParseError("expected a non-empty string of '0'/'1'", lineno)
        if n is None:
            n = len(line)
        if len(line) != n:
            raise ParseError(f"expected {n} bits, got {len(line)}", lineno)
        rows.append([1 if ch == "1" else 0 for ch in line])
    if not rows:
        raise ParseError("no samples", 1)
    return SampleBatch(BitMatrix.from_dense(np.array(rows, dtype=np.uint8)), prover="file")
