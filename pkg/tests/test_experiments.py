"""Tests for the experiment families and the catalog."""

import math
from pathlib import Path

import pytest

from random_series_lab.analyzer import ConfigAnalyzer, build_config
from random_series_lab.errors import ConfigError
from random_series_lab.experiments import (
    CATALOG,
    ExperimentResult,
    Table,
    list_experiments,
    run_experiment,
)
from random_series_lab.inequality_lab import BoundReport, Verdict


def _config(tmp_path, kind: str, **tables):
    tables.setdefault("experiment", {})
    tables["experiment"] = {"kind": kind, "output_dir": str(tmp_path), **tables["experiment"]}
    return build_config(tables)


class TestCatalog:
    """Tests for the experiment catalog."""

    def test_kinds(self):
        """Test the six experiment families."""
        assert set(CATALOG) == {
            "snb-profile",
            "log-snb-profile",
            "inequality-suite",
            "roots-annulus",
            "potential-convergence",
            "law-calibration",
        }

    def test_list_documents_columns(self):
        """Test that the listing names every CSV file and its columns."""
        lines = list_experiments()
        text = "\n".join(lines)

        assert lines[0].startswith("snb-profile → ")
        assert "snb-profile_summary.csv: k, log_radius" in text
        assert "law-calibration_calibration.csv: law, lambda, exact, empirical" in text

    @pytest.mark.parametrize(
        "entry",
        ["snb-profile → Theorem 3.3 / Claim 3.4", "potential-convergence → Appendix B"],
    )
    def test_list_cross_references(self, entry: str):
        """Test that each kind is listed with the statement it exercises."""
        assert entry in list_experiments()

    def test_every_kind_has_reference(self):
        """Test one reference line per experiment kind."""
        headers = [line for line in list_experiments() if " → " in line]

        assert len(headers) == len(CATALOG) == 6
        assert all(spec.reference for spec in CATALOG.values())

    def test_violated(self):
        """Test that only violated reports are listed as such."""
        result = ExperimentResult(
            "x",
            reports=[
                BoundReport("a", 1.0, 2.0, Verdict.HOLDS),
                BoundReport("b", 3.0, 2.0, Verdict.VIOLATED),
            ],
        )

        assert [r.name for r in result.violated] == ["b"]

    def test_table_defaults(self):
        """Test that tables start empty."""
        assert Table("t", ("a",)).rows == []


class TestInequalitySuite:
    """Tests for the inequality-suite experiment."""

    def test_selected_checks(self, tmp_path):
        """Test a fast subset of verifiers with no violations."""
        checks = ["paley-zygmund", "weak-symmetrization", "levy-weakL2", "subgaussian"]
        config = _config(tmp_path, "inequality-suite", params={"checks": checks})
        result = run_experiment(config)

        (table,) = result.tables
        assert len(table.rows) == 2 + 3 + 3 + 2
        assert [row[0] for row in table.rows] == list(range(10))
        assert result.summaries["verdict.violated"] == 0
        assert not result.violated

    def test_unknown_check(self, tmp_path):
        """Test that unknown check names are rejected."""
        config = _config(tmp_path, "inequality-suite", params={"checks": ["nonsense"]})

        with pytest.raises(ConfigError, match="unknown checks"):
            run_experiment(config)

    def test_threads_keep_order(self, tmp_path):
        """Test that reports come back in check order under several threads."""
        checks = ["subgaussian", "paley-zygmund"]
        config = _config(
            tmp_path, "inequality-suite", experiment={"threads": 2}, params={"checks": checks}
        )
        result = run_experiment(config)

        assert [r.name for r in result.reports] == [
            "subgaussian", "subgaussian", "paley-zygmund", "paley-zygmund"
        ]

    @pytest.mark.slow
    def test_full_suite(self, tmp_path):
        """Test every verifier with default parameters."""
        config = _config(tmp_path, "inequality-suite")
        result = run_experiment(config)

        assert not result.violated
        assert result.summaries["verdict.holds"] > 1000


class TestLawCalibration:
    """Tests for the law-calibration experiment."""

    def test_single_law(self, tmp_path):
        """Test exact versus empirical Q for the configured law."""
        config = _config(
            tmp_path,
            "law-calibration",
            law={"type": "rademacher"},
            params={"samples": 20_000},
        )
        result = run_experiment(config)

        assert len(result.tables[0].rows) == 30
        (report,) = result.reports
        assert report.verdict is Verdict.HOLDS
        assert result.summaries["max_deviation"] == report.lhs

    @pytest.mark.slow
    def test_default_laws(self, tmp_path):
        """Test the default catalog of laws at 10⁵ samples."""
        result = run_experiment(_config(tmp_path, "law-calibration"))

        assert len(result.reports) == 8
        assert not result.violated


class TestSnbProfile:
    """Tests for the snb-profile experiment."""

    def test_small_profile(self, tmp_path):
        """Test tables and summaries of a short Rademacher profile."""
        config = _config(
            tmp_path,
            "snb-profile",
            experiment={"K": 2, "replicates": 10, "seed": 1},
            law={"type": "rademacher"},
            weights={"t": 1},
            arc={"a": 1.0, "b": 2.0, "m": 64},
            psi={"type": "power", "p": 1},
        )
        result = run_experiment(config)

        values, summary = result.tables
        assert len(values.rows) == 20
        assert [row[0] for row in summary.rows] == [1, 2]
        assert summary.rows[1][5] > summary.rows[0][5]
        assert result.plot is not None
        assert len(result.plot.rows) == 2
        assert result.summaries["clamped_radii"] == 0
        assert result.reports[0].name == "small-ball-constant"

    def test_explicit_radii(self, tmp_path):
        """Test a profile on explicit radii."""
        config = _config(
            tmp_path,
            "snb-profile",
            experiment={"K": 2, "replicates": 4},
            law={"type": "gaussian"},
            params={"radii": [0.5, 0.8]},
        )
        result = run_experiment(config)

        assert len(result.tables[1].rows) == 2
        assert math.isnan(result.summaries["fitted_constant"])


class TestLogSnbProfile:
    """Tests for the log-snb-profile experiment."""

    def test_small_gaussian(self, tmp_path):
        """Test the log-integral band and fluctuation tail at desk scale."""
        config = _config(
            tmp_path,
            "log-snb-profile",
            experiment={"replicates": 5},
            params={"degree": 30, "radius": 0.9, "tail_replicates": 500, "t_grid": [1, 2, 4]},
        )
        result = run_experiment(config)

        values, tail = result.tables
        assert len(values.rows) == 5
        assert [row[0] for row in tail.rows] == [1.0, 2.0, 4.0]
        assert result.summaries["radius"] == 0.9
        assert result.summaries["expected_w"] == pytest.approx(
            sum(0.81**k for k in range(31))
        )
        assert result.reports[0].name == "log-integral-band"

    def test_radius_from_rho(self, tmp_path):
        """Test that the radius solves ρ_N(r) = target when not given."""
        config = _config(
            tmp_path,
            "log-snb-profile",
            experiment={"replicates": 2},
            params={"degree": 40, "rho": 10.0, "tail_replicates": 50},
        )
        result = run_experiment(config)

        assert result.summaries["rho"] == pytest.approx(10.0, rel=1e-9)

    def test_verdicts_follow_band_and_tail(self, tmp_path):
        """Test that a tight band fails and a loose tail level holds."""
        config = _config(
            tmp_path,
            "log-snb-profile",
            experiment={"replicates": 3},
            params={
                "degree": 30,
                "radius": 0.9,
                "tail_replicates": 200,
                "t_grid": [1, 2],
                "band": 1e-12,
                "tail_level": 1.0,
            },
        )
        result = run_experiment(config)

        band, tail = result.reports
        assert band.name == "log-integral-band"
        assert band.verdict is Verdict.VIOLATED
        assert tail.name == "fluctuation-tail"
        assert tail.verdict is Verdict.HOLDS
        assert tail.details["t"] == 2.0
        assert [r.name for r in result.violated] == ["log-integral-band"]

    @pytest.mark.slow
    def test_example_config(self, tmp_path):
        """Test the shipped config: ρ_N(r) = e⁴, I = (1, 2), N = 200, 200 replicates."""
        path = Path(__file__).parent.parent / "configs" / "log-snb-profile.toml"
        config = ConfigAnalyzer(path).analyze().with_overrides(output_dir=tmp_path)
        result = run_experiment(config)

        assert result.summaries["rho"] == pytest.approx(math.exp(4.0), rel=1e-9)
        assert abs(result.summaries["median_deviation"]) <= 8.0
        assert result.summaries["tail_at_max_t"] <= 0.05
        assert result.summaries["decay_rate"] > 0
        assert not result.violated


class TestRootsAnnulus:
    """Tests for the roots-annulus experiment."""

    def test_small_run(self, tmp_path):
        """Test annulus tables, the Jensen report and Blaschke medians."""
        config = _config(
            tmp_path,
            "roots-annulus",
            experiment={"replicates": 3},
            params={"degree": 64, "s_grid": [4, 8], "blaschke_degrees": [16, 32]},
        )
        result = run_experiment(config)

        names = [t.name for t in result.tables]
        assert names == ["radii", "summary", "blaschke"]
        assert len(result.tables[0].rows) == 6
        assert result.reports[0].name == "jensen"
        assert result.reports[0].verdict is Verdict.HOLDS
        assert result.summaries["max_root_residual"] < 1e-6


class TestPotentialConvergence:
    """Tests for the potential-convergence experiment."""

    def test_radial_rule(self, tmp_path):
        """Test the radial trace with the factored and rotation checks."""
        config = _config(
            tmp_path,
            "potential-convergence",
            params={"r": 0.9, "ns": [8, 64], "rules": ["radial"], "rotation_cases": 3},
        )
        result = run_experiment(config)

        assert len(result.tables[0].rows) == 2
        assert [r.name for r in result.reports] == ["factored-case[radial]", "rotation-translation"]
        assert not result.violated
        assert "final_deviation.radial" in result.summaries
