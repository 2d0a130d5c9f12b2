# File: tests/test_analysis_service.py

import json
import math

import numpy as np
import pandas as pd
import pytest

from services.analysis_service import AnalysisSettings, run_analysis, write_report
from services.datagen import DGPSpec, NO_BREAK, ROTATION, generate, to_daily_frame
from services.selfnorm import simulate_pivot
from utils.errors import ConfigError, IngestError


@pytest.fixture(scope="module")
def pivot():
    return simulate_pivot(K=20, R=50_000, seed=20190101)


def daily_csv(path, seed: int, break_kind: str = NO_BREAK, magnitude: float = 0.0, years: int = 123,
              mean_offset: float = 0.0):
    spec = DGPSpec(N=years, theta0=92 / 123, break_kind=break_kind, magnitude=magnitude, seed=seed)
    mean_curve = np.full(365, mean_offset) if mean_offset else None
    to_daily_frame(generate(spec), 1896, mean_curve).to_csv(path, index=False, float_format="%.12g")
    return path


@pytest.fixture(scope="module")
def rotation_report(tmp_path_factory, pivot):
    path = daily_csv(tmp_path_factory.mktemp("rotation") / "daily.csv", seed=1, break_kind=ROTATION,
                     magnitude=math.pi / 3)
    return run_analysis(path, AnalysisSettings(), pivot=pivot)


class TestReport:
    def test_matrix_shapes(self, rotation_report):
        functions = rotation_report.eigenfunction_matrix()
        values = rotation_report.eigenvalue_matrix()

        assert functions.shape == (4, 5)
        assert values.shape == (3, 12)
        assert not functions.isna().any().any()
        assert not values.isna().any().any()
        assert len(rotation_report.eigenfunction_cells) == 20
        assert len(rotation_report.eigenvalue_cells) == 36

    def test_split_near_planted_break(self, rotation_report):
        assert rotation_report.years == tuple(range(1896, 2019))
        assert abs(rotation_report.k_hat - 92) <= 15
        assert rotation_report.split_year == rotation_report.years[rotation_report.k_hat - 1]

    def test_segment_eigenvalues_descend(self, rotation_report):
        assert np.all(np.diff(rotation_report.eigenvalues_pre) <= 1e-12)
        assert np.all(np.diff(rotation_report.eigenvalues_post) <= 1e-12)

    def test_thresholds_follow_angles(self, rotation_report):
        deltas = {c.label: c.delta for c in rotation_report.eigenfunction_cells if c.j == 1}

        assert deltas["phi=pi/4"] == pytest.approx(2 - math.sqrt(2))
        assert deltas["phi=pi/16"] == pytest.approx(2 - 2 * math.cos(math.pi / 16))

    def test_eigenvalue_thresholds_scale_with_first_segment(self, rotation_report):
        cells = [c for c in rotation_report.eigenvalue_cells if c.j == 2]

        for cell, divisor in zip(cells, (50, 100, 200)):
            assert cell.delta == pytest.approx(rotation_report.eigenvalues_pre[1] / divisor)

    def test_variance_explained(self, rotation_report):
        pre, post = rotation_report.variance_explained(3)

        assert 0 < pre <= 1
        assert 0 < post <= 1

    def test_json_round_trip(self, rotation_report):
        payload = json.loads(json.dumps(rotation_report.to_dict(), default=float))

        assert payload["n_years"] == 123
        assert len(payload["eigenfunction_relevance"]) == 20
        assert payload["settings"]["angles"] == ["pi/16", "pi/8", "pi/4", "2pi/5"]

    def test_write_report(self, rotation_report, tmp_path):
        paths = write_report(rotation_report, tmp_path)

        names = {p.name for p in paths}
        assert {"report.json", "eigenfunction_relevance.csv", "eigenvalue_relevance.csv", "eigenvalues.csv",
                "eigenfunctions.csv", "tables.txt"} <= names
        eigenfunctions = pd.read_csv(tmp_path / "eigenfunctions.csv")
        assert len(eigenfunctions) == 365
        assert {"v1_first", "v1_second", "v5_second"} <= set(eigenfunctions.columns)
        norm = np.mean(eigenfunctions["v1_first"] ** 2)
        assert norm == pytest.approx(1.0, abs=1e-6)

    def test_identical_runs_write_identical_files(self, rotation_report, tmp_path):
        write_report(rotation_report, tmp_path / "a")
        write_report(rotation_report, tmp_path / "b")

        for name in ("report.json", "eigenvalue_relevance.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestPipeline:
    def test_split_year_and_exclusions_reported(self, tmp_path, pivot):
        path = daily_csv(tmp_path / "a.csv", seed=5, years=20)
        frame = pd.read_csv(path)
        frame = frame[~frame["date"].str.startswith("1900")].iloc[:-200]
        frame.to_csv(path, index=False)

        report = run_analysis(path, AnalysisSettings(j_fun=(1,), j_val=(1,)), pivot=pivot)

        assert 1900 not in report.years
        assert report.excluded == {1915: 165}
        assert report.to_dict()["excluded_years"] == {"1915": 165}

    def test_too_few_years(self, tmp_path, pivot):
        path = daily_csv(tmp_path / "short.csv", seed=2, years=6)

        with pytest.raises(IngestError):
            run_analysis(path, AnalysisSettings(), pivot=pivot)

    def test_pivot_must_match_k(self, tmp_path, pivot):
        path = daily_csv(tmp_path / "k.csv", seed=2, years=20)

        with pytest.raises(ConfigError):
            run_analysis(path, AnalysisSettings(K=30), pivot=pivot)

    def test_index_beyond_basis_order(self, tmp_path, pivot):
        path = daily_csv(tmp_path / "t.csv", seed=2, years=20)

        with pytest.raises(ConfigError):
            run_analysis(path, AnalysisSettings(T=5, j_val=(1, 6)), pivot=pivot)

    def test_invalid_settings(self):
        with pytest.raises(ConfigError):
            AnalysisSettings(divisors=())
        with pytest.raises(ConfigError):
            AnalysisSettings(alphas=(0.1, 1.5))


@pytest.mark.slow
class TestSyntheticAcceptance:
    def test_planted_rotation_is_detected(self, tmp_path, pivot):
        verdicts = []
        for seed in range(20):
            path = daily_csv(tmp_path / f"r{seed}.csv", seed=100 + seed, break_kind=ROTATION, magnitude=math.pi / 3)
            report = run_analysis(path, AnalysisSettings(j_fun=(1,), j_val=(1,)), pivot=pivot)
            verdicts.append(all(c.rejected for c in report.eigenfunction_cells if c.delta < 1.0))

        assert sum(verdicts) > 10

    def test_no_break_retains_all_cells(self, tmp_path, pivot):
        retained = 0
        for seed in range(20):
            path = daily_csv(tmp_path / f"n{seed}.csv", seed=200 + seed)
            report = run_analysis(path, AnalysisSettings(), pivot=pivot)
            retained += all(not c.rejected for c in report.eigenfunction_cells + report.eigenvalue_cells)

        assert retained >= 18
