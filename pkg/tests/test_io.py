import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from w2cusum.io import MAGIC, SeriesFormatError, detect_format, read_json, read_series, write_json, write_series

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


class TestSeriesFiles:
    @settings(suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(values=arrays(np.float64, st.integers(1, 200), elements=finite), fmt=st.sampled_from(["csv", "bin"]))
    def test_round_trip_exact(self, tmp_path, values, fmt):
        path = tmp_path / f"series.{fmt}"
        write_series(path, values, fmt=fmt)
        assert detect_format(path) == fmt
        np.testing.assert_array_equal(read_series(path).values, values)

    def test_header_skipped(self, tmp_path):
        path = tmp_path / "x.csv"
        write_series(path, [1.5, 2.5], header="value")
        np.testing.assert_array_equal(read_series(path).values, [1.5, 2.5])

    def test_format_from_suffix(self, tmp_path):
        path = tmp_path / "x.bin"
        write_series(path, np.arange(3.0))
        assert path.read_bytes().startswith(MAGIC)

    @pytest.mark.parametrize("body", ["1\n\nnan\n", "1\n2\n\n3\nNA\n", "1\n2,3\n", "1\ninf\n", "x\ny\n", ""])
    def test_rejects_bad_csv(self, tmp_path, body):
        path = tmp_path / "bad.csv"
        path.write_text(body)
        with pytest.raises(SeriesFormatError):
            read_series(path)

    def test_rejects_truncated_binary(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(MAGIC + b"\x00" * 12)
        with pytest.raises(SeriesFormatError):
            read_series(path)

    def test_rejects_nan_binary(self, tmp_path):
        path = tmp_path / "nan.bin"
        write_series(path, [1.0, np.nan], fmt="bin")
        with pytest.raises(SeriesFormatError, match="index 1"):
            read_series(path)

    def test_write_validation(self, tmp_path):
        with pytest.raises(ValueError):
            write_series(tmp_path / "x.csv", np.ones((2, 2)))
        with pytest.raises(ValueError):
            write_series(tmp_path / "x.csv", np.ones(2), fmt="parquet")


def test_json_round_trip(tmp_path):
    payload = {"b": [1, 2.5], "a": {"nested": None}}
    write_json(tmp_path / "r.json", payload)
    assert read_json(tmp_path / "r.json") == payload
    assert (tmp_path / "r.json").read_text().index('"a"') < (tmp_path / "r.json").read_text().index('"b"')
