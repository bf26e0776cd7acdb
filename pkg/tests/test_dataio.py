"""CSV panel ingestion, holdout splitting, matrix extraction."""

from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwts.dataio import (ColumnSchema, StationId, TimeSeriesPanel,
                         extract_matrix, holdout_split, load_panel,
                         panel_summary, parse_date, quarter_str, write_panel)
from gwts.errors import (ConflictError, EmptyInputError, GwtsError,
                         MissingDataError, ParseError)


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def fixture_path(name: str):
    return resources.files("gwts") / "fixtures" / name


class TestParseDate:
    def test_quarter_format(self):
        assert parse_date("2000-Q1") == (2000, 1)
        assert parse_date("2021-Q4") == (2021, 4)

    def test_iso_format_coarsens(self):
        assert parse_date("2000-01-15") == (2000, 1)
        assert parse_date("2000-03-31") == (2000, 1)
        assert parse_date("2000-04-01") == (2000, 2)
        assert parse_date("2000-12-25") == (2000, 4)

    def test_rejects_garbage(self):
        for bad in ("2000/01/01", "Q1-2000", "2000-Q5", "2000-13-01", "yesterday"):
            with pytest.raises(ValueError):
                parse_date(bad)


class TestLoadPanel:
    def test_patiyapura_fixture_shape(self):
        panel = load_panel(fixture_path("patiyapura.csv"))
        assert panel.n_timestamps == 85
        assert panel.index[0] == (2000, 1)
        assert panel.index[-1] == (2021, 1)
        assert [st.name for st in panel.stations] == ["Patiyapura"]
        assert set(panel.variables) == {"precipitation", "temperature", "gwl"}
        assert not panel.mask.any()
        st = panel.stations[0]
        assert st.latitude == pytest.approx(22.275)
        assert st.longitude == pytest.approx(73.44167)

    def test_single_row(self, tmp_path):
        path = write(tmp_path, "station,date,variable,value\nA,2001-Q2,gwl,3.5\n")
        panel = load_panel(path)
        assert panel.n_timestamps == 1
        assert panel.values[0, 0, 0] == 3.5

    def test_duplicate_cell_conflicts(self, tmp_path):
        path = write(tmp_path, "station,date,variable,value\n"
                               "A,2001-Q2,gwl,3.5\nA,2001-Q2,gwl,3.6\n")
        with pytest.raises(ConflictError):
            load_panel(path)

    def test_empty_file(self, tmp_path):
        with pytest.raises(EmptyInputError):
            load_panel(write(tmp_path, ""))
        with pytest.raises(EmptyInputError):
            load_panel(write(tmp_path, "station,date,variable,value\n"))

    def test_malformed_row_names_line(self, tmp_path):
        path = write(tmp_path, "station,date,variable,value\n"
                               "A,2001-Q1,gwl,1.0\nA,botched,gwl,2.0\n")
        with pytest.raises(ParseError, match="line 3"):
            load_panel(path)

    def test_non_numeric_value(self, tmp_path):
        path = write(tmp_path, "station,date,variable,value\nA,2001-Q1,gwl,abc\n")
        with pytest.raises(ParseError, match="line 2"):
            load_panel(path)

    def test_missing_column(self, tmp_path):
        path = write(tmp_path, "station,when,variable,value\nA,2001-Q1,gwl,1\n")
        with pytest.raises(ParseError, match="date"):
            load_panel(path)

    def test_monthly_rows_average_within_quarter(self, tmp_path):
        path = write(tmp_path, "station,date,variable,value\n"
                               "A,2001-01-15,temp,10\n"
                               "A,2001-02-15,temp,20\n"
                               "A,2001-03-15,temp,36\n")
        panel = load_panel(path)
        assert panel.values[0, 0, 0] == pytest.approx(22.0)

    def test_sum_aggregation_override(self, tmp_path):
        path = write(tmp_path, "station,date,variable,value\n"
                               "A,2001-01-15,rain,10\n"
                               "A,2001-02-15,rain,20\n")
        schema = ColumnSchema(aggregate_overrides={"rain": "sum"})
        panel = load_panel(path, schema=schema)
        assert panel.values[0, 0, 0] == pytest.approx(30.0)

    def test_gaps_masked_not_interpolated(self, tmp_path):
        path = write(tmp_path, "station,date,variable,value\n"
                               "A,2001-Q1,gwl,1\nA,2001-Q3,gwl,3\n")
        panel = load_panel(path)
        assert panel.n_timestamps == 3            # contiguous quarter range
        assert panel.mask[0, 1, 0]
        assert np.isnan(panel.values[0, 1, 0])

    def test_explicit_fill_interpolates_interior_only(self, tmp_path):
        path = write(tmp_path, "station,date,variable,value\n"
                               "A,2001-Q1,gwl,1\nA,2001-Q3,gwl,3\n"
                               "B,2001-Q2,gwl,5\nB,2001-Q3,gwl,6\n")
        panel = load_panel(path, fill=True)
        assert panel.values[0, 1, 0] == pytest.approx(2.0)
        assert panel.mask[1, 0, 0]                # leading gap stays masked

    def test_ragged_stations_aligned(self, tmp_path):
        path = write(tmp_path, "station,date,variable,value\n"
                               "A,2001-Q1,gwl,1\nB,2001-Q2,gwl,2\n")
        panel = load_panel(path)
        assert panel.n_timestamps == 2
        assert panel.mask[0, 1, 0] and panel.mask[1, 0, 0]

    def test_conflicting_coordinates(self, tmp_path):
        path = write(tmp_path, "station,date,variable,value,latitude,longitude\n"
                               "A,2001-Q1,gwl,1,22.0,73.0\n"
                               "A,2001-Q2,gwl,2,23.0,73.0\n")
        with pytest.raises(ConflictError, match="coordinates"):
            load_panel(path)


class TestRoundTrip:
    def test_write_then_load_identical(self, tmp_path, rng):
        path = write(tmp_path, "station,date,variable,value,latitude,longitude\n"
                               "A,2001-Q1,gwl,1.25,22.1,73.5\n"
                               "A,2001-Q2,gwl,-3.75,22.1,73.5\n"
                               "B,2001-Q1,gwl,0.5,,\n")
        panel = load_panel(path)
        out = tmp_path / "rt.csv"
        write_panel(panel, out)
        clone = load_panel(out)
        assert clone.variables == panel.variables
        assert clone.index == panel.index
        assert [s.name for s in clone.stations] == [s.name for s in panel.stations]
        np.testing.assert_array_equal(clone.mask, panel.mask)
        present = ~panel.mask
        np.testing.assert_array_equal(clone.values[present], panel.values[present])

    @given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 11),
                              st.integers(-1000, 1000)),
                    min_size=1, max_size=40, unique_by=lambda r: (r[0], r[1])))
    @settings(max_examples=30, deadline=None)
    def test_round_trip_property(self, tmp_path_factory, rows):
        tmp = tmp_path_factory.mktemp("rt")
        lines = ["station,date,variable,value"]
        for s, t, val in rows:
            lines.append(f"st{s},{2000 + t // 4}-Q{t % 4 + 1},gwl,{val * 0.125}")
        panel = load_panel(write(tmp, "\n".join(lines) + "\n"))
        out = tmp / "out.csv"
        write_panel(panel, out)
        clone = load_panel(out)
        np.testing.assert_array_equal(clone.mask, panel.mask)
        present = ~panel.mask
        np.testing.assert_array_equal(clone.values[present], panel.values[present])


class TestHoldoutSplit:
    def quarterly_panel(self, T, n_vars=1):
        values = np.arange(T * n_vars, dtype=float).reshape(1, T, n_vars)
        return TimeSeriesPanel(stations=[StationId("A")], variables=[f"v{i}" for i in range(n_vars)],
                               index=[(2000 + t // 4, t % 4 + 1) for t in range(T)],
                               values=values, mask=np.zeros_like(values, dtype=bool))

    def test_85_at_07_gives_59_26(self):
        split = holdout_split(self.quarterly_panel(85), 0.7)
        assert split.train.n_timestamps == 59
        assert split.test.n_timestamps == 26

    def test_10_at_05_gives_5_5(self):
        split = holdout_split(self.quarterly_panel(10), 0.5)
        assert (split.train.n_timestamps, split.test.n_timestamps) == (5, 5)

    def test_2_at_07_gives_1_1(self):
        split = holdout_split(self.quarterly_panel(2), 0.7)
        assert (split.train.n_timestamps, split.test.n_timestamps) == (1, 1)

    def test_partition_property(self):
        panel = self.quarterly_panel(23, 2)
        split = holdout_split(panel, 0.61)
        glued = np.concatenate([split.train.values, split.test.values], axis=1)
        np.testing.assert_array_equal(glued, panel.values)
        assert split.train.index + split.test.index == panel.index
        assert split.train.index[-1] < split.test.index[0]

    @pytest.mark.parametrize("ratio", [0.0, 1.0, -0.3, 1.7])
    def test_ratio_domain(self, ratio):
        with pytest.raises(GwtsError):
            holdout_split(self.quarterly_panel(10), ratio)


class TestExtractMatrix:
    def panel(self):
        values = np.array([[[1.0, 10.0], [2.0, 20.0], [3.0, 30.0]]])
        return TimeSeriesPanel(stations=[StationId("A")], variables=["gwl", "temp"],
                               index=[(2000, 1), (2000, 2), (2000, 3)],
                               values=values, mask=np.zeros_like(values, dtype=bool))

    def test_column_order_matches_request(self):
        mat = extract_matrix(self.panel(), "A", ["temp", "gwl"])
        np.testing.assert_array_equal(mat, [[10.0, 1.0], [20.0, 2.0], [30.0, 3.0]])

    def test_matches_csv_cells(self, tmp_path):
        path = write(tmp_path, "station,date,variable,value\n"
                               "A,2000-Q1,gwl,7.5\nA,2000-Q2,gwl,8.5\n")
        panel = load_panel(path)
        mat = extract_matrix(panel, "A", ["gwl"])
        assert mat[1, 0] == 8.5

    def test_zero_variables_rejected(self):
        with pytest.raises(GwtsError):
            extract_matrix(self.panel(), "A", [])

    def test_masked_gap_named(self):
        panel = self.panel()
        panel.values[0, 1, 0] = np.nan
        panel.mask[0, 1, 0] = True
        with pytest.raises(MissingDataError, match="2000-Q2.*gwl"):
            extract_matrix(panel, "A", ["gwl"])

    def test_unknown_station_or_variable(self):
        with pytest.raises(GwtsError):
            extract_matrix(self.panel(), "Z", ["gwl"])
        with pytest.raises(GwtsError):
            extract_matrix(self.panel(), "A", ["nope"])


class TestValidation:
    def test_station_id_ranges(self):
        with pytest.raises(GwtsError):
            StationId("")
        with pytest.raises(GwtsError):
            StationId("A", latitude=91.0)
        with pytest.raises(GwtsError):
            StationId("A", longitude=-181.0)

    def test_index_strictly_increasing_enforced(self):
        values = np.zeros((1, 2, 1))
        with pytest.raises(GwtsError, match="increasing"):
            TimeSeriesPanel(stations=[StationId("A")], variables=["v"],
                            index=[(2000, 2), (2000, 2)], values=values,
                            mask=np.zeros_like(values, dtype=bool))

    def test_summary_fields(self, tmp_path):
        path = write(tmp_path, "station,date,variable,value\n"
                               "A,2001-Q1,gwl,1\nA,2001-Q3,gwl,3\n")
        summary = panel_summary(load_panel(path))
        assert summary["timestamps"] == 3
        assert summary["missing_cells"] == 1
        assert summary["first_quarter"] == "2001-Q1"
        assert quarter_str((2001, 3)) == "2001-Q3"
