import pytest

from densemem.experiments import CapacityPoint, CapacityResult, ExperimentGrid, ExperimentKind, run_experiment
from densemem.output import COLUMNS, fmt, read_csv, render, render_records, write_records
from densemem.stats import fit_power_law


@pytest.fixture(scope="module")
def adversarial_records():
    g = ExperimentGrid("adversarial", Ns=(60,), ps=(40,), rhos=(0.05, 0.3), trials=6, resamples=100)
    return run_experiment(g)


def test_fmt_rules():
    assert fmt(None) == "" and fmt(True) == "1" and fmt(7) == "7"
    assert fmt(0.123456789) == "0.123457"
    assert fmt(1 / 3) == "0.333333"
    assert fmt(12499.0) == "12499"


def test_adversarial_columns_fixed():
    assert COLUMNS[ExperimentKind.ADVERSARIAL] == (
        "N", "p", "beta", "gamma", "adversary", "rho", "trials", "success_rate", "ci_low", "ci_high",
    )


def test_empty_records_header_only(tmp_path):
    path = tmp_path / "e.csv"
    n = write_records([], "adversarial", "csv", path)
    assert path.read_text() == ",".join(COLUMNS[ExperimentKind.ADVERSARIAL]) + "\n"
    assert n == len(path.read_bytes())


def test_csv_round_trip(adversarial_records, tmp_path):
    path = tmp_path / "a.csv"
    write_records(adversarial_records, "adversarial", "csv", path)
    rows = read_csv(path)
    assert len(rows) == len(adversarial_records)
    for row, rec in zip(rows, adversarial_records):
        assert int(row["N"]) == rec.point.N and row["adversary"] == rec.point.adversary.value
        assert float(row["success_rate"]) == pytest.approx(rec.success_rate, rel=1e-6)
        assert float(row["beta"]) == pytest.approx(rec.beta_measured, rel=1e-6)
        assert float(row["ci_low"]) == pytest.approx(rec.ci[0], rel=1e-6)
        assert float(row["gamma"]) == 0.6
    assert read_csv(path.read_text()) == rows


def test_markdown_rendering(adversarial_records):
    text = render_records(adversarial_records, "adversarial", "markdown")
    lines = text.splitlines()
    assert lines[0].startswith("| N | p | beta")
    assert len(lines) == 2 + len(adversarial_records)
    assert render([{"N": 1}], ("N", "p"), "markdown").splitlines()[-1] == "| 1 | -- |"
    with pytest.raises(ValueError):
        render([], ("N",), "json")


def test_mixed_kinds_rejected(adversarial_records):
    with pytest.raises(ValueError):
        render_records(adversarial_records, "basin")


def test_capacity_rows():
    pts = [CapacityPoint(100, 450, 0.045), CapacityPoint(200, 2163, 2163 / 40000)]
    res = CapacityResult(3, pts, fit_power_law([(100, 450), (200, 2163)]))
    rows = read_csv(render_records(res, "capacity"))
    assert [r["N_pow"] for r in rows] == ["10000", "40000"]
    assert rows[0]["alpha_eff"] == "0.045"
    assert float(rows[0]["fit_r2"]) == pytest.approx(1.0)
