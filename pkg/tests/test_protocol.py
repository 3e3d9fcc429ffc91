import math

import numpy as np
import pytest

from iqpstab.f2linalg import BitMatrix, BitVector
from iqpstab.protocol import (
    HonestSim,
    NaiveCheat,
    RowCheat,
    UniformRandom,
    bias_of,
    default_tolerance,
    estimate_correlation,
    run_protocol,
    verify,
)
from iqpstab.samples import SampleBatch
from iqpstab.scheme import qrc_construct, stabilizer_construct
from iqpstab.simulator import THETA, exact_correlation, sample_outcomes
from iqpstab.stabilizer import Correlation


def batch_of(rows):
    return SampleBatch(BitMatrix.from_dense(rows))


def test_estimate_examples():
    s = BitVector.from_str("101")
    assert estimate_correlation(batch_of([[0, 1, 0], [1, 1, 1]]), s) == 1.0
    assert estimate_correlation(batch_of([[0, 1, 0], [1, 0, 0]]), s) == 0.0


def test_estimate_rejects_bad_input():
    with pytest.raises(ValueError):
        estimate_correlation(batch_of([[0, 1]]), BitVector.ones(3))


def test_bias_examples():
    assert round(bias_of(2 ** -0.5), 3) == 0.854
    assert bias_of(0) == 0.5 and bias_of(-1) == 0
    with pytest.raises(ValueError):
        bias_of(1.5)


def test_large_tolerance_always_accepts(rng):
    b = SampleBatch(BitMatrix.random(100, 6, rng))
    assert verify(b, BitVector.ones(6), Correlation(1, 0), tolerance=2).accept


def test_verdict_ignores_sample_order(rng):
    inst = stabilizer_construct(10, 20, 2, 0, rng)
    b = HonestSim().samples(inst, 500, rng)
    shuffled = SampleBatch(b.samples.select_rows(rng.permutation(500)))
    assert verify(b, inst.s, inst.correlation()) == verify(shuffled, inst.s, inst.correlation())
    assert str(verify(b, inst.s, inst.correlation())).split()[-1] in ("ACCEPT", "REJECT")


def test_qrc7_honest_and_uniform():
    inst = qrc_construct(7, 5, 14, 0, np.random.default_rng(3))
    rng = np.random.default_rng(4)
    honest = run_protocol(inst, HonestSim(), 4000, None, rng)
    assert honest.accept and abs(honest.estimate - 2 ** -0.5) <= default_tolerance(4000)
    assert not run_protocol(inst, UniformRandom(), 4000, None, rng).accept


def test_naive_cheat_with_true_secret_accepts(rng):
    inst = qrc_construct(7, 5, 14, 0, rng)
    v = run_protocol(inst, NaiveCheat(inst.s, inst.correlation().value), 4000, None, rng)
    assert v.accept


def test_row_cheat_with_true_secret_accepts(rng):
    inst = stabilizer_construct(12, 24, 2, 0, rng)
    assert run_protocol(inst, RowCheat(inst.s, inst.correlation().value), 4000, None, rng).accept


def test_estimator_is_unbiased(rng):
    inst = stabilizer_construct(8, 16, 1, 0, rng)
    exact = exact_correlation(inst.H, inst.s)
    ests = [estimate_correlation(sample_outcomes(inst.H, THETA, 1000, rng), inst.s) for _ in range(40)]
    # each estimate has standard deviation <= 1/sqrt(1000); the mean of 40 has <= 1/200
    assert abs(np.mean(ests) - exact) <= 3 / math.sqrt(40 * 1000)
