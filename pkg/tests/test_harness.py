import dataclasses
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from subtrace import export, harness
from subtrace.harness import ExperimentSpec, run_arm, run_comparison, run_trial
from subtrace.metrics import AggregateSeries, to_db
from subtrace.model import ConfigError, ScenarioConfig
from subtrace.tracker import AlgoClass, ClampPolicy, Mode, TrackerConfig

SMALL = ScenarioConfig(n_steps=400, break_step=200, seed=17)
SPEC = ExperimentSpec(scenario=SMALL, n_runs=6, burn_in=50, spark_window=50)


def reports_identical(a, b) -> bool:
    for sa, sb in ((a.series_original, b.series_original), (a.series_amended, b.series_amended)):
        for f in ("steps", "ep_avg", "ep_max", "eta_avg", "eta_max"):
            if not np.array_equal(getattr(sa, f), getattr(sb, f)):
                return False
    return (
        a.sparks_original == b.sparks_original
        and a.sparks_amended == b.sparks_amended
        and a.steady_state_db == b.steady_state_db
    )


def test_spec_validation():
    with pytest.raises(ConfigError):
        ExperimentSpec(n_runs=0)


def test_run_trial_deterministic():
    a = run_trial(SPEC, 3)
    b = run_trial(SPEC, 3)
    assert a == b
    assert len(a) == SMALL.n_steps
    assert a[0].step == 1


def test_run_trial_matches_batched_arm():
    runs = run_arm(SPEC)
    assert runs[4] == run_trial(SPEC, 4)


def test_arm_independent_of_worker_count(monkeypatch):
    monkeypatch.setattr(harness, "CHUNK", 2)
    monkeypatch.setenv("SUBTRACE_THREADS", "1")
    one = run_arm(SPEC)
    monkeypatch.setenv("SUBTRACE_THREADS", "3")
    three = run_arm(SPEC)
    assert one == three


def test_snapshot_stream_ignores_tracker():
    x1 = harness.snapshot_stream(SMALL, 2)
    _, x2, _, _ = harness._run_inputs(SMALL, 2, SMALL.subspace_rank)
    np.testing.assert_array_equal(x1, x2)
    other_seed = harness.snapshot_stream(SMALL.with_seed(18), 2)
    assert not np.array_equal(x1, other_seed)


def test_break_shows_in_eta_and_ep():
    run = run_trial(SPEC, 0)
    k = SMALL.break_step - 1
    assert run.eta[k] > 1e-3
    assert run.ep[k] > 2 * run.ep[k - 1]
    mask = np.ones(len(run), dtype=bool)
    mask[k] = False
    assert np.all(run.eta[mask] <= 1e-20)


def test_no_break_without_variance():
    spec = dataclasses.replace(SPEC, scenario=dataclasses.replace(SMALL, break_variance=0.0))
    run = run_trial(spec, 0)
    k = SMALL.break_step - 1
    assert run.eta[k] <= 1e-20
    assert run.ep[k] < 3 * run.ep[k - 1]


def test_coord_and_resid_powers_sum_to_snapshot_power():
    run = run_trial(SPEC, 1)
    x = harness.snapshot_stream(SMALL, 1)
    total = np.sum(np.abs(x) ** 2, axis=1)
    ok = np.arange(1, len(run) + 1) != SMALL.break_step
    np.testing.assert_allclose((run.coord_power + run.resid_power)[ok], total[ok], rtol=1e-8)


def test_generic_clamp_bound_in_runs():
    run = run_trial(SPEC, 2)
    x = harness.snapshot_stream(SMALL, 2)
    assert np.all(run.beta_eff * np.sum(np.abs(x) ** 2, axis=1) <= 1 + 1e-12)


def test_identical_policies_give_identical_reports():
    a = run_comparison(SPEC, ClampPolicy.OFF, ClampPolicy.OFF)
    assert reports_identical(a, run_comparison(SPEC, ClampPolicy.OFF, ClampPolicy.OFF))
    for ra, rb in zip(a.runs_original, a.runs_amended):
        assert ra == rb


def test_comparison_shapes():
    rep = run_comparison(SPEC)
    assert rep.series_original.n_runs == rep.series_amended.n_runs == 6
    assert len(rep.series_original) == len(rep.series_amended) == 400
    assert set(rep.steady_state_db) == {"original", "amended"}


def test_steady_window_skips_break():
    np.testing.assert_array_equal(harness.steady_window(6000, 3000, 500) + 1, np.arange(5001, 6001))
    np.testing.assert_array_equal(harness.steady_window(6000, 5500, 500) + 1, np.arange(4500, 5500))


def _series(n=3):
    return AggregateSeries(
        steps=np.arange(1, n + 1),
        ep_avg=np.array([1.0, 0.004, 1e-305])[:n],
        ep_max=np.array([2.0, 0.01, 0.5])[:n],
        eta_avg=np.array([1e-31, 0.0, 2.5])[:n],
        eta_max=np.array([2e-31, 0.0, 3.0])[:n],
        n_runs=2,
    )


def test_export_csv_format(tmp_path):
    path = export.export_csv(_series(), tmp_path / "s.csv")[0]
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode("utf-8").splitlines()
    assert len(lines) == 4
    assert lines[0] == "step,ep_avg_db,ep_max_db,eta_avg,eta_max"
    row1 = lines[1].split(",")
    assert row1[0] == "1" and float(row1[1]) == 0.0
    assert float(lines[2].split(",")[1]) == pytest.approx(-23.9794, abs=1e-4)
    assert float(lines[3].split(",")[1]) == -3000.0


def test_export_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    s = AggregateSeries(
        steps=np.arange(1, 51), ep_avg=rng.uniform(1e-4, 1, 50), ep_max=rng.uniform(1, 2, 50),
        eta_avg=rng.uniform(0, 1e-30, 50), eta_max=rng.uniform(0, 1e-29, 50), n_runs=3,
    )
    path = export.export_csv(s, tmp_path / "r.csv")[0]
    back = export.read_csv(path)
    np.testing.assert_array_equal(back.steps, s.steps)
    np.testing.assert_array_equal(back.eta_avg, s.eta_avg)
    np.testing.assert_array_equal(back.eta_max, s.eta_max)
    np.testing.assert_allclose(back.ep_avg, s.ep_avg, rtol=1e-14)
    np.testing.assert_allclose(back.ep_max, s.ep_max, rtol=1e-14)
    # the dB columns themselves survive exactly
    again = export.export_csv(back, tmp_path / "r2.csv")[0]
    dbs = lambda p: [line.split(",")[1:3] for line in p.read_text().splitlines()[1:]]
    for a, b in zip(dbs(path), dbs(again)):
        assert [float(v) for v in a] == pytest.approx([float(v) for v in b], abs=1e-12)


def test_export_csv_io_error(tmp_path):
    with pytest.raises(OSError, match="cannot write"):
        export.export_csv(_series(), tmp_path / "missing" / "s.csv")


@pytest.fixture(scope="module")
def small_report():
    return run_comparison(SPEC)


def test_export_report_csv(tmp_path, small_report):
    paths = export.export_csv(small_report, tmp_path / "cmp.csv")
    assert [p.name for p in paths] == ["cmp_original.csv", "cmp_amended.csv"]
    assert all(len(p.read_text().splitlines()) == 401 for p in paths)


def test_export_plot_structure(tmp_path, small_report):
    path = export.export_plot(small_report, tmp_path / "cmp.svg")
    root = ET.parse(path).getroot()
    assert root.tag == "{http://www.w3.org/2000/svg}svg"
    ns = {"s": "http://www.w3.org/2000/svg"}
    curves = root.findall(".//s:polyline", ns) + root.findall(".//s:path", ns)
    assert len(curves) == 4
    assert {c.get("data-label") for c in curves} == {"original avg", "original max", "amended avg", "amended max"}
    assert len(root.findall(".//s:line[@class='break-marker']", ns)) == 1
    db = np.concatenate([to_db(v) for v in export.report_curves(small_report).values()])
    assert float(root.get("data-ymin")) == pytest.approx(db.min() - 3)
    assert float(root.get("data-ymax")) == pytest.approx(db.max() + 3)


def test_plot_decimation_keeps_extremes():
    steps = np.arange(1, 6001)
    y = np.sin(steps / 50.0)
    y[1234] = 9.0
    y[4321] = -9.0
    xs, ys = export._thin(steps, y, max_points=400)
    assert len(xs) <= 400
    assert ys.max() == 9.0 and ys.min() == -9.0
    assert np.all(np.diff(xs) > 0)


@pytest.mark.parametrize("algo", list(AlgoClass))
@pytest.mark.parametrize("mode", list(Mode))
def test_all_class_mode_pairs_converge(algo, mode):
    scenario = dataclasses.replace(SMALL, n_steps=1500, break_step=None)
    tracker = TrackerConfig(algo, mode, 0.08, ClampPolicy.GENERIC)
    runs = run_arm(dataclasses.replace(SPEC, scenario=scenario, tracker=tracker, n_runs=2))
    for r in runs:
        assert r.ep[:10].mean() > 1.0
        assert r.ep[-100:].mean() < 0.01
