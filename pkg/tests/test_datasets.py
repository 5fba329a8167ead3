"""Tests for CSV ingestion in services/datasets.py."""

import numpy as np
import pandas as pd
import pytest

from services.datasets import ingest_csv
from services.errors import DatasetError, TlpaInputError
from services.reporting import write_table


class TestIngestCsv:
    def test_named_column(self, write_csv):
        dataset = ingest_csv(write_csv("waves.csv", "wave\n6.1\n7.2\n"), column="wave")
        np.testing.assert_array_equal(dataset.values, [6.1, 7.2])
        assert dataset.name == "wave"
        assert len(dataset) == 2

    def test_single_column_without_header(self, write_csv):
        dataset = ingest_csv(write_csv("plain.csv", "3.5\n1.25\n2\n"))
        np.testing.assert_array_equal(dataset.values, [3.5, 1.25, 2.0])
        assert dataset.name == "plain"

    def test_file_order_is_kept(self, write_csv):
        dataset = ingest_csv(write_csv("order.csv", "x\n3\n1\n2\n"))
        np.testing.assert_array_equal(dataset.values, [3.0, 1.0, 2.0])
        np.testing.assert_array_equal(dataset.sorted_values(), [1.0, 2.0, 3.0])

    def test_column_by_index(self, write_csv):
        path = write_csv("two.csv", "date,wave\n2001-01-01,5.5\n2001-01-02,6.5\n")
        np.testing.assert_array_equal(ingest_csv(path, column="1").values, [5.5, 6.5])
        np.testing.assert_array_equal(ingest_csv(path, column=1).values, [5.5, 6.5])

    def test_explicit_name(self, write_csv):
        assert ingest_csv(write_csv("w.csv", "1\n2\n"), name="heights").name == "heights"

    def test_blank_lines_are_skipped(self, write_csv):
        dataset = ingest_csv(write_csv("blank.csv", "wave\n1.0\n\n2.0\n\n"), column="wave")
        np.testing.assert_array_equal(dataset.values, [1.0, 2.0])

    def test_non_numeric_row_is_reported(self, write_csv):
        path = write_csv("bad.csv", "wave\n1\n2\n3\nabc\n")
        with pytest.raises(DatasetError) as excinfo:
            ingest_csv(path, column="wave")
        assert excinfo.value.row == 5
        assert "row 5" in str(excinfo.value)

    def test_row_numbers_count_blank_lines(self, write_csv):
        with pytest.raises(DatasetError) as excinfo:
            ingest_csv(write_csv("gap.csv", "wave\n1\n\n2\nx\n"), column="wave")
        assert excinfo.value.row == 5

    def test_non_finite_value(self, write_csv):
        with pytest.raises(DatasetError) as excinfo:
            ingest_csv(write_csv("inf.csv", "1\ninf\n"))
        assert excinfo.value.row == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError):
            ingest_csv(tmp_path / "absent.csv")

    def test_empty_file(self, write_csv):
        with pytest.raises(DatasetError):
            ingest_csv(write_csv("empty.csv", ""))

    def test_header_only(self, write_csv):
        with pytest.raises(DatasetError):
            ingest_csv(write_csv("header.csv", "wave\n"), column="wave")

    def test_unknown_column(self, write_csv):
        with pytest.raises(DatasetError):
            ingest_csv(write_csv("w.csv", "wave\n1\n"), column="height")

    def test_column_index_out_of_range(self, write_csv):
        with pytest.raises(DatasetError):
            ingest_csv(write_csv("w.csv", "wave\n1\n"), column=3)

    def test_several_columns_need_a_choice(self, write_csv):
        with pytest.raises(DatasetError):
            ingest_csv(write_csv("two.csv", "a,b\n1,2\n"))

    def test_dataset_error_is_an_input_error(self, tmp_path):
        with pytest.raises(TlpaInputError):
            ingest_csv(tmp_path / "absent.csv")

    def test_reads_back_written_tables(self, tmp_path):
        values = np.random.default_rng(42).pareto(2.0, size=50) + 1.0
        path = tmp_path / "values.csv"
        write_table(pd.DataFrame({"value": values}), path)
        np.testing.assert_allclose(ingest_csv(path, column="value").values, values, rtol=1e-12)
