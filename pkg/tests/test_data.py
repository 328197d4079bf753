import io

import numpy as np
import pytest

from cvdecomp.data import DataError, Dataset, read_csv, write_csv


def test_round_trip_is_bit_identical(tmp_path, rng):
    ds = Dataset(rng.normal(size=(9, 3)), rng.normal(size=9))
    path = tmp_path / "d.csv"
    write_csv(ds, path)
    back = read_csv(path)
    assert back.X.tobytes() == ds.X.tobytes()
    assert back.y.tobytes() == ds.y.tobytes()


def test_reads_header_and_rows():
    ds = read_csv(io.StringIO("x1,x2,y\n1,2,3\n4.5,-6,7e-1\n"))
    np.testing.assert_array_equal(ds.X, [[1, 2], [4.5, -6]])
    np.testing.assert_array_equal(ds.y, [3, 0.7])


@pytest.mark.parametrize("text", [
    "",
    "x1,y\n",
    "a,b\n1,2\n",
    "x1,y\n1\n",
    "x1,y\n1,2,3\n",
    "x1,y\n1,2;5\n",
    "x1,y\n1,nan\n",
    "x1,y\n1,\"1,5\"\n",
])
def test_malformed_csv(text):
    with pytest.raises(DataError):
        read_csv(io.StringIO(text))


def test_dataset_validation():
    with pytest.raises(DataError):
        Dataset(np.zeros((3, 1)), np.zeros(2))
    with pytest.raises(DataError):
        Dataset(np.zeros((0, 1)), np.zeros(0))
    ds = Dataset([0.1, 0.2], [1, 2])
    assert ds.X.shape == (2, 1)
    with pytest.raises(ValueError):
        ds.X[0, 0] = 5.0
