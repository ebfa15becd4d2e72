import pytest

from app.core.errors import InvalidParamsError, UnknownPresetError
from app.services.experiments import PRESETS, run_experiment
from app.services.formats import report_lines

SMALL_PARAMS = {
    "tfl-ingredients": {"random_maps": 20},
    "rs-pipeline": {"n": 20, "runs": 5},
    "deletion-schedule": {},
    "arith-roundtrip": {"n": 3, "instances": 5, "runs": 4},
    "arith-expansion": {"random_maps": 10},
    "cp-table": {"primes": [2, 3]},
}


def test_every_preset_has_small_params():
    assert set(SMALL_PARAMS) == set(PRESETS)


@pytest.mark.parametrize("preset", sorted(SMALL_PARAMS))
def test_presets_pass(preset):
    report = run_experiment(preset, SMALL_PARAMS[preset], seed=1)
    failed = [c.name for c in report.checks if not c.passed]
    assert failed == []
    assert report.passed
    assert report.checks
    assert report.experiment == preset
    assert report.inputs["params"]


def test_tfl_ingredients_measurements():
    report = run_experiment("tfl-ingredients", {"random_maps": 5})
    m = report.measurements
    assert (m["blowup_vertices"], m["blowup_edges"], m["copies"]) == (20, 24, 2)
    assert m["dagger_hypotheses"] > 0
    assert m["averaging_eta"] == pytest.approx(1 / 48)
    assert m["averaging_failing_indices"] + m["averaging_hypothesis_indices"] == 5 * m["copies"]
    assert m["averaging_ceiling"] == pytest.approx(m["copies"] / 2)
    averaging = next(c for c in report.checks if c.name == "averaging failures")
    assert averaging.passed


def test_cp_table_rows():
    report = run_experiment("cp-table", {"primes": [2, 3, 11, 13]})
    rows = report.measurements["rows"]
    assert [r["p"] for r in rows] == [2, 3, 11, 13]
    assert rows[0]["c_p"] == pytest.approx(0.0817042, abs=1e-6)
    assert report.passed


def test_deletion_schedule_deletes_and_replays():
    report = run_experiment("deletion-schedule")
    assert report.inputs["params"]["graph"] == "K6"
    assert report.measurements["deletions"] > 0
    assert len(report.measurements["trace"]) == report.measurements["deletions"]
    replay = next(c for c in report.checks if c.name == "trace replays")
    assert replay.passed


def test_arith_roundtrip_defaults_to_five_dimensions():
    report = run_experiment("arith-roundtrip", {"instances": 3, "runs": 2})
    assert (report.inputs["params"]["p"], report.inputs["params"]["n"]) == (3, 5)
    assert report.passed


def test_rs_pipeline_counts():
    m = run_experiment("rs-pipeline", {"n": 20, "runs": 2}).measurements
    assert m["set"] == [1, 2, 4, 5, 10, 11, 13, 14]
    assert m["edges"] == 3 * 20 * 8
    assert m["triangles"] == 20 * 8


def test_unknown_preset():
    with pytest.raises(UnknownPresetError):
        run_experiment("no-such-preset")


@pytest.mark.parametrize(
    "preset, params",
    [
        ("rs-pipeline", {"n": 0}),
        ("rs-pipeline", {"colour": "red"}),
        ("arith-roundtrip", {"eps": 2.0}),
        ("cp-table", {"primes": "two"}),
    ],
)
def test_invalid_params(preset, params):
    with pytest.raises(InvalidParamsError):
        run_experiment(preset, params)


def test_reports_are_deterministic():
    a = run_experiment("arith-expansion", {"random_maps": 5}, seed=4)
    b = run_experiment("arith-expansion", {"random_maps": 5}, seed=4)
    assert report_lines(a, with_timing=False) == report_lines(b, with_timing=False)
    assert a.seed == 4
