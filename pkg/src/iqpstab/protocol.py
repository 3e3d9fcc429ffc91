"""Verifier estimate and accept/reject rule, and the provers that feed it."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .attacks import naive_sample, sample_by_rows
from .f2linalg import BitMatrix, BitVector
from .samples import SampleBatch
from .scheme import Instance
from .simulator import THETA, sample_outcomes
from .stabilizer import Correlation


@dataclass(frozen=True)
class Verdict:
    estimate: float
    ideal: float
    tolerance: float
    samples_used: int
    accept: bool

    def __str__(self) -> str:
        word = "ACCEPT" if self.accept else "REJECT"
        return (
            f"estimate={self.estimate:.6f} ideal={self.ideal:.6f} "
            f"tolerance={self.tolerance:.6f} T={self.samples_used} {word}"
        )


def default_tolerance(T: int) -> float:
    return 3 / math.sqrt(T)


def estimate_correlation(batch: SampleBatch, s: BitVector) -> float:
    """(1/T) sum_i (-1)^(x_i . s)."""
    if batch.n != s.len:
        raise ValueError(f"sample length {batch.n} does not match secret length {s.len}")
    if batch.T < 1:
        raise ValueError("need at least one sample")
    par = batch.parities(s).astype(np.int64)
    return float(batch.T - 2 * par.sum()) / batch.T


def verify(batch: SampleBatch, s: BitVector, ideal: Union[Correlation, float], tolerance: Optional[float] = None) -> Verdict:
    ideal_v = ideal.value if isinstance(ideal, Correlation) else float(ideal)
    tol = default_tolerance(batch.T) if tolerance is None else tolerance
    est = estimate_correlation(batch, s)
    return Verdict(est, ideal_v, tol, batch.T, abs(est - ideal_v) <= tol)


def bias_of(corr: float) -> float:
    if abs(corr) > 1 + 1e-12:
        raise ValueError("|corr| must be <= 1")
    return (corr + 1) / 2


# ---------------------------------------------------------------------------
# provers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HonestSim:
    theta: float = THETA

    def samples(self, inst: Instance, T: int, rng) -> SampleBatch:
        return sample_outcomes(inst.H, self.theta, T, rng)


@dataclass(frozen=True)
class NaiveCheat:
    s_prime: BitVector
    corr: float

    def samples(self, inst: Instance, T: int, rng) -> SampleBatch:
        return naive_sample(self.s_prime, self.corr, T, rng)


@dataclass(frozen=True)
class RowCheat:
    s_prime: BitVector
    corr: float

    def samples(self, inst: Instance, T: int, rng) -> SampleBatch:
        return sample_by_rows(inst.H, self.s_prime, self.corr, T, rng)


@dataclass(frozen=True)
class UniformRandom:
    def samples(self, inst: Instance, T: int, rng) -> SampleBatch:
        bits = rng.integers(0, 2, size=(T, inst.H.cols), dtype=np.uint8)
        return SampleBatch(BitMatrix.from_dense(bits), prover="uniform")


Prover = Union[HonestSim, NaiveCheat, RowCheat, UniformRandom]


def run_protocol(
    inst: Instance, prover: Prover, T: int, tolerance: Optional[float], rng: np.random.Generator
) -> Verdict:
    """Collect T samples from the prover and check them against the real secret."""
    batch = prover.samples(inst, T, rng)
    return verify(batch, inst.s, inst.correlation(), tolerance)
