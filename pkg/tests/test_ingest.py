"""Tests for dataset loading, validation and report serialization."""

import json

import numpy as np
import pytest

from lifepool.ingest import (
    DatasetConfig,
    LoadResult,
    PoolingReport,
    RunConfig,
    load_mortality_csv,
    read_report,
    write_report,
)


def write_csv(tmp_path, text, name="rates.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


BASIC = """gender,percentile,age,q
male,50,40,0.0012
male,50,50,0.0029
male,50,60,0.0073
"""


class TestLoad:
    def test_three_row_file(self, tmp_path):
        result = load_mortality_csv(DatasetConfig(write_csv(tmp_path, BASIC)))
        assert isinstance(result, LoadResult)
        [cohort] = result.cohorts
        assert cohort.gender == "male" and cohort.percentile == 50
        assert list(cohort.ages) == [40.0, 50.0, 60.0]
        assert cohort.q[0] == pytest.approx(0.0012)
        assert result.rejected == []

    def test_per_1000_scaling(self, tmp_path):
        path = write_csv(tmp_path, "gender,percentile,age,q\nmale,1,50,12.5\nmale,1,40,5.8\nmale,1,60,22.1\n")
        result = load_mortality_csv(DatasetConfig(path, rate_scale="per-1000"))
        [cohort] = result.cohorts
        assert cohort.q[1] == pytest.approx(0.0125)

    def test_scaling_equivalence(self, tmp_path):
        per_unit = write_csv(tmp_path, BASIC, "unit.csv")
        per_1000 = write_csv(
            tmp_path,
            "gender,percentile,age,q\nmale,50,40,1.2\nmale,50,50,2.9\nmale,50,60,7.3\n",
            "thousand.csv",
        )
        a = load_mortality_csv(DatasetConfig(per_unit)).cohorts[0]
        b = load_mortality_csv(DatasetConfig(per_1000, rate_scale="per-1000")).cohorts[0]
        assert np.allclose(a.q, b.q) and np.array_equal(a.ages, b.ages)

    def test_unsorted_ages_are_sorted(self, tmp_path):
        path = write_csv(tmp_path, "gender,percentile,age,q\nfemale,10,60,0.004\nfemale,10,40,0.001\nfemale,10,50,0.002\n")
        [cohort] = load_mortality_csv(DatasetConfig(path)).cohorts
        assert list(cohort.ages) == [40.0, 50.0, 60.0]

    def test_duplicate_rejected_with_key(self, tmp_path):
        path = write_csv(tmp_path, "gender,percentile,age,q\nmale,50,40,0.001\nmale,50,40,0.002\n")
        with pytest.raises(ValueError, match=r"duplicate.*percentile=50.*age=40"):
            load_mortality_csv(DatasetConfig(path))

    def test_malformed_row_names_line(self, tmp_path):
        path = write_csv(tmp_path, "gender,percentile,age,q\nmale,50,40,0.001\nmale,fifty,41,0.002\n")
        with pytest.raises(ValueError, match=":3"):
            load_mortality_csv(DatasetConfig(path))

    def test_out_of_range_rate_dropped_and_reported(self, tmp_path):
        path = write_csv(tmp_path, "gender,percentile,age,q\nmale,50,40,0.001\nmale,50,41,1.5\nmale,50,42,0.002\n")
        result = load_mortality_csv(DatasetConfig(path))
        assert len(result.cohorts[0].ages) == 2
        assert len(result.rejected) == 1 and "41" in result.rejected[0]

    def test_missing_column(self, tmp_path):
        path = write_csv(tmp_path, "gender,percentile,age\nmale,50,40\n")
        with pytest.raises(ValueError, match="missing columns"):
            load_mortality_csv(DatasetConfig(path))

    def test_column_remapping(self, tmp_path):
        path = write_csv(tmp_path, "sex,pct,x,rate\nfemale,25,45,0.002\n")
        config = DatasetConfig(path, gender_column="sex", percentile_column="pct",
                               age_column="x", q_column="rate")
        [cohort] = load_mortality_csv(config).cohorts
        assert cohort.gender == "female" and cohort.percentile == 25

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            load_mortality_csv(DatasetConfig("/nonexistent/rates.csv"))

    def test_groups_by_gender_and_percentile(self, tmp_path):
        text = "gender,percentile,age,q\n" + "".join(
            f"{g},{p},{a},0.01\n"
            for g in ("male", "female") for p in (1, 50) for a in (40, 50, 60)
        )
        result = load_mortality_csv(DatasetConfig(write_csv(tmp_path, text)))
        keys = [(c.gender, c.percentile) for c in result.cohorts]
        assert keys == [("female", 1), ("female", 50), ("male", 1), ("male", 50)]


def median_male_row():
    return PoolingReport(
        percentile=50, gender="male", h65=0.0106, g=0.0883, m=89.0122, b=11.3250,
        e_t65=21.1630, sd_t65=9.93685, covol=0.469538, annuity_factor=14.8635,
        delta_individual=0.504427, delta_group=0.504427,
        wtp_individual=0.335295, wtp_group=0.335295,
    )


class TestReport:
    def test_csv_round_trip(self):
        row = median_male_row()
        doc = write_report([row], "csv")
        [back] = read_report(doc, "csv")
        assert back == row

    def test_json_round_trip(self):
        row = median_male_row()
        doc = write_report([row], "json")
        [back] = read_report(doc, "json")
        assert back == row

    def test_format_parity(self):
        row = median_male_row()
        from_csv = read_report(write_report([row], "csv"), "csv")
        from_json = read_report(write_report([row], "json"), "json")
        assert from_csv == from_json

    def test_median_row_deltas_equal(self):
        row = median_male_row()
        doc = write_report([row], "csv")
        [back] = read_report(doc, "csv")
        assert back.delta_individual == back.delta_group
        assert back.delta_individual == pytest.approx(0.5053, rel=1e-2)

    def test_column_order_stable(self):
        doc = write_report([median_male_row()], "csv")
        header = doc.splitlines()[0]
        assert header == ("percentile,gender,h65,g,m,b,e_t65,sd_t65,covol,"
                          "annuity_factor,delta_individual,delta_group,"
                          "wtp_individual,wtp_group")

    def test_six_significant_digits(self):
        doc = write_report([median_male_row()], "csv")
        assert "0.504427" in doc

    def test_empty_rows_error(self):
        with pytest.raises(ValueError):
            write_report([], "csv")

    def test_write_to_file(self, tmp_path):
        target = tmp_path / "report.csv"
        write_report([median_male_row()], "csv", path=target)
        assert read_report(target.read_text(), "csv")

    def test_unwritable_path_reports_target(self):
        with pytest.raises(OSError, match="/nonexistent"):
            write_report([median_male_row()], "csv", path="/nonexistent/dir/report.csv")


class TestConfigs:
    def test_dataset_config_validation(self):
        with pytest.raises(ValueError):
            DatasetConfig("x.csv", rate_scale="per-cent")
        with pytest.raises(ValueError):
            DatasetConfig("x.csv", fit_window=(63.0, 40.0))

    def test_run_config_defaults(self):
        config = RunConfig()
        assert config.r == 0.03 and config.gamma == (3.0,)
        assert config.group_percentile == 50

    def test_run_config_validation(self):
        with pytest.raises(ValueError):
            RunConfig(gamma=(0.0,))
        with pytest.raises(ValueError):
            RunConfig(group_percentile=0)
        with pytest.raises(ValueError):
            RunConfig(r=-0.01)
        with pytest.raises(ValueError):
            RunConfig(output_format="yaml")

    def test_run_config_from_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"r": 0.02, "gamma": [2.0, 3.0],
                                    "group_percentile": 40}))
        config = RunConfig.from_json(path)
        assert config.r == 0.02 and config.gamma == (2.0, 3.0)
        assert config.group_percentile == 40

    def test_run_config_rejects_unknown_keys(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"rate": 0.02}))
        with pytest.raises(ValueError, match="unknown config keys"):
            RunConfig.from_json(path)
