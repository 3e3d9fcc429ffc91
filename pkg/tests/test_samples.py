import numpy as np
import pytest

from iqpstab.f2linalg import BitMatrix, BitVector
from iqpstab.samples import ParseError, SampleBatch, read_samples, write_samples


def test_round_trip(tmp_path, rng):
    batch = SampleBatch(BitMatrix.random(50, 13, rng))
    path = tmp_path / "x.txt"
    write_samples(batch, path)
    text = path.read_text()
    assert text.count("\n") == 50 and all(len(l) == 13 for l in text.splitlines())
    assert read_samples(path).samples == batch.samples


def test_from_indices_bit_order():
    batch = SampleBatch.from_indices(np.array([1, 6]), 3)
    assert batch.samples.to_dense().tolist() == [[1, 0, 0], [0, 1, 1]]


def test_parities():
    batch = SampleBatch(BitMatrix.from_dense([[1, 1, 0], [1, 0, 0]]))
    assert batch.parities(BitVector.from_str("110")).tolist() == [0, 1]


@pytest.mark.parametrize(
    "text,line",
    [("", 1), ("0101\n01", 2), ("0101\n0111x\n", 2), ("0101\n011\n", 2), ("0101\n\n", 2)],
)
def test_parse_errors(tmp_path, text, line):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(ParseError) as err:
        read_samples(path)
    assert err.value.line == line


def test_expected_width(tmp_path):
    path = tmp_path / "x.txt"
    path.write_text("0101\n")
    with pytest.raises(ParseError):
        read_samples(path, n=5)
