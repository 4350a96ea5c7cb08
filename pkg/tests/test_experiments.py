import json
import math

import numpy as np
import pytest

import brwlab as B
from brwlab import experiments as X
from brwlab.offspring import dump_spec
import helpers


@pytest.fixture(scope="module")
def calib15():
    return B.solve_theta(helpers.spec_mean15_pm1())


def test_replica_streams_are_deterministic_and_distinct():
    a = X.replica_rng(5, 0).integers(0, 1000, 4)
    b = X.replica_rng(5, 0).integers(0, 1000, 4)
    c = X.replica_rng(5, 1).integers(0, 1000, 4)
    assert a.tolist() == b.tolist()
    assert a.tolist() != c.tolist()


def test_engine_config_defaults_and_window(calib15):
    spec = helpers.spec_mean15_pm1()
    cfg = X.engine_config(spec, mode="exact")
    assert cfg.mode == "exact"
    cfg = X.engine_config(spec, mode="frontier", calib=calib15)
    assert cfg.window_width == math.ceil(20 / calib15.theta_o) + 10
    pair = B.construct_noncoexistence_pair(3.0)
    both = X.engine_config(pair.red, mode="frontier", companion=pair.blue)
    assert both.window_width >= X.engine_config(pair.red, mode="frontier").window_width


def test_trajectory_shapes_and_determinism(calib15):
    spec = helpers.spec_mean15_pm1()
    cfg = X.engine_config(spec, mode="exact")
    rec1 = X.simulate_trajectory(spec, 25, cfg, X.replica_rng(3, 0))
    rec2 = X.simulate_trajectory(spec, 25, cfg, X.replica_rng(3, 0))
    assert rec1.max_pos.shape == (26,)
    assert np.array_equal(rec1.max_pos, rec2.max_pos)
    assert rec1.totals == rec2.totals
    assert X.trajectory_csv([rec1]) == X.trajectory_csv([rec2])
    header = X.trajectory_csv([rec1]).splitlines()[0]
    assert header == "n,M_n,L_n,total,saturated_flag"
    multi = X.trajectory_csv([rec1, rec2]).splitlines()[0]
    assert multi == "replica,n,M_n,L_n,total,saturated_flag"


def test_max_at_matches_trajectory(calib15):
    spec = helpers.spec_mean15_pm1()
    cfg = X.engine_config(spec, mode="exact")
    rec = X.simulate_trajectory(spec, 30, cfg, X.replica_rng(9, 4))
    maxima = X.max_at(spec, 30, cfg, X.replica_rng(9, 4), [10, 30, 20])
    assert maxima == [int(rec.max_pos[10]), int(rec.max_pos[30]), int(rec.max_pos[20])]


# ---------------------------------------------------------------------------
# overshoot
# ---------------------------------------------------------------------------

def test_overshoot_time_definition(calib15):
    spec = helpers.spec_mean15_pm1()
    cfg = X.engine_config(spec, mode="exact")
    z = 1.5
    sample = X.estimate_overshoot_time(spec, calib15, z, 500, X.replica_rng(1, 2), cfg)
    assert not sample.censored
    t = sample.time
    rec = X.simulate_trajectory(
        spec, t, cfg, X.replica_rng(1, 2), with_totals=False
    )
    gaps = [rec.max_pos[n] - B.centering(calib15, n) for n in range(1, t + 1)]
    assert gaps[-1] > z
    assert all(g <= z for g in gaps[:-1])


def test_overshoot_rejects_bad_levels(calib15):
    spec = helpers.spec_mean15_pm1()
    cfg = X.engine_config(spec, mode="exact")
    with pytest.raises(ValueError):
        X.estimate_overshoot_time(spec, calib15, 0.0, 10, X.replica_rng(0, 0), cfg)


def test_overshoot_censoring_is_reported(calib15):
    spec = helpers.spec_mean15_pm1()
    cfg = X.engine_config(spec, mode="exact")
    sample = X.estimate_overshoot_time(spec, calib15, 8.0, 3, X.replica_rng(0, 1), cfg)
    assert sample.censored and sample.time is None and sample.cap == 3


def test_overshoot_scaling_report(calib15):
    spec = helpers.spec_mean15_pm1()
    cfg = X.engine_config(spec, mode="frontier", calib=calib15)
    rep = X.overshoot_scaling(
        spec, calib15, [0.5, 1.0, 1.5], 60, 71, cfg, generation_cap=800
    )
    for hits, cens in zip(rep.times, rep.censored):
        assert len(hits) + cens == 60
    assert rep.slope > 0
    assert rep.ci_low <= rep.slope <= rep.ci_high
    csv = X.overshoot_csv(rep)
    assert csv.splitlines()[0] == "z,time,censored,cap"
    assert len(csv.splitlines()) == 1 + 3 * 60


def test_overshoot_scaling_insufficient_data(calib15):
    spec = helpers.spec_mean15_pm1()
    cfg = X.engine_config(spec, mode="exact")
    with pytest.raises(X.InsufficientData):
        X.overshoot_scaling(spec, calib15, [1.0, 2.0], 40, 0, cfg)
    with pytest.raises(X.InsufficientData):
        X.overshoot_scaling(spec, calib15, [4.0, 5.0, 6.0], 35, 0, cfg, generation_cap=2)


# ---------------------------------------------------------------------------
# tail and fluctuation statistics
# ---------------------------------------------------------------------------

def test_tail_fit_quick_run(calib15):
    spec = helpers.spec_mean15_pm1()
    cfg = X.engine_config(spec, mode="exact")
    rep = X.tail_fit(spec, calib15, 30, 10_000, 5, cfg, min_exceedances=15)
    assert rep.rate > 0.5
    assert rep.bound_majorizes
    assert rep.fit_lo >= 0.0
    # survival starts near 1 far left and the curve is nonincreasing
    assert rep.survival[0] > 0.9
    assert all(b <= a for a, b in zip(rep.survival, rep.survival[1:]))
    csv = X.tail_csv(rep)
    assert csv.splitlines()[0] == "x,survival,exceedances"


def test_tail_fit_insufficient(calib15):
    spec = helpers.spec_mean15_pm1()
    cfg = X.engine_config(spec, mode="exact")
    with pytest.raises(X.InsufficientTail):
        X.tail_fit(spec, calib15, 30, 60, 5, cfg)
    crawler = B.CalibrationResult(0.1, 1e-3, 1e-2, 1.0, 0.0)
    with pytest.raises(ValueError):
        X.tail_fit(spec, crawler, 2, 100, 5, cfg)  # centering still negative


def test_fluctuation_windows_quick(calib15):
    spec = helpers.spec_mean15_pm1()
    cfg = X.engine_config(spec, mode="exact")
    rep = X.fluctuation_windows(spec, calib15, [40, 80], 300, 9, cfg, epsilon=0.5)
    assert rep.n_grid == [40, 80]
    assert all(0.0 <= f <= 1.0 for f in rep.fraction_in_window)
    assert len(rep.samples[0]) == 300
    assert rep.window_low == pytest.approx(-1.5 / calib15.theta_o)
    q = rep.quantiles
    assert q["q05"][0] <= q["q50"][0] <= q["q95"][0]
    with pytest.raises(ValueError):
        X.fluctuation_windows(spec, calib15, [1], 10, 9, cfg)
    csv = X.fluct_csv(rep)
    assert csv.splitlines()[0] == "n,replica,statistic"
    assert len(csv.splitlines()) == 1 + 2 * 300


# ---------------------------------------------------------------------------
# arenas
# ---------------------------------------------------------------------------

def test_run_coexistence_quick(calib15):
    spec = helpers.spec_mean15_pm1()
    cfg = X.engine_config(spec, mode="exact")
    collect = []
    rep = X.run_coexistence(
        spec, spec, 120, 40, 3, cfg, count_threshold=10,
        z_grid=[2.0], c1=0.1, c2=0.8, collect=collect,
    )
    assert rep.replicas == 40 and len(collect) == 40
    assert 0.0 <= rep.fraction_both_exceed <= 1.0
    assert 0.0 <= rep.fraction_with_swap <= 1.0
    assert len(rep.final_red_sites) == 40
    assert rep.smoke_windows and rep.smoke_windows[0]["skipped"] is False
    assert all(0.0 <= f <= 1.0 for f in rep.dyadic_both_fraction)
    csv = X.arena_csv(collect[:2])
    head = csv.splitlines()[0]
    assert head.startswith("replica,n,M_r,L_r,M_b,L_b,right_gap,left_gap")


def test_run_coexistence_rejects_mismatched_laws(calib15):
    with pytest.raises(X.HypothesisViolation):
        X.run_coexistence(
            helpers.spec_mean15_pm1(), helpers.spec_n3_u4(), 50, 5, 0,
            X.engine_config(helpers.spec_mean15_pm1(), mode="exact"),
        )


def test_run_noncoexistence_quick():
    pair = B.construct_noncoexistence_pair(3.0)
    cfg = X.engine_config(pair.red, mode="frontier", companion=pair.blue)
    rep = X.run_noncoexistence(pair.red, pair.blue, 250, 25, 13, cfg)
    assert rep.replicas == 25
    assert len(rep.gap_slopes) == 25
    assert 0.0 <= rep.fraction_positive_slope <= 1.0
    assert all(0.0 <= p <= 1.0 for p in rep.plateau_stats)
    assert rep.n0 == 25
    with pytest.raises(ValueError):
        X.run_noncoexistence(pair.red, pair.blue, 100, 5, 13, cfg, n0=100)


def test_arena_single_replica_csv_columns():
    spec = helpers.spec_mean15_pm1()
    cfg = X.engine_config(spec, mode="exact")
    rec, state = X.run_arena_replica(spec, spec, 20, cfg, B.arena_rngs(1, 0))
    csv = X.arena_csv([rec])
    lines = csv.splitlines()
    assert lines[0] == (
        "n,M_r,L_r,M_b,L_b,right_gap,left_gap,red_sites,blue_sites,"
        "holes_ahead_even,holes_ahead_odd"
    )
    assert len(lines) == 22
    assert state.generation == 20


# ---------------------------------------------------------------------------
# democracy
# ---------------------------------------------------------------------------

def test_run_democracy_quick():
    spec = helpers.spec_mean15_pm1()
    rep = X.run_democracy(spec, 2, [4, 6, 8], 80, 3)
    assert rep.trees == 80
    assert all(0.0 <= v <= 1.0 for v in rep.mean_fraction)
    assert all(b >= a - 1e-12 for a, b in zip(rep.mean_fraction, rep.mean_fraction[1:]))
    csv = X.democracy_csv(rep)
    assert csv.splitlines()[0] == "horizon,mean_fraction,std_fraction,trees"


# ---------------------------------------------------------------------------
# config files, CSV stability, manifests
# ---------------------------------------------------------------------------

def test_experiment_config_roundtrip(tmp_path):
    spec = helpers.spec_mean15_pm1()
    dump_spec(spec, tmp_path / "red.json")
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "red_spec": "red.json",
        "horizon": 44,
        "replicas": 3,
        "master_seed": 9,
    }))
    cfg = X.ExperimentConfig.from_file(cfg_path)
    assert cfg.horizon == 44
    assert cfg.spec("red_spec") == spec
    with pytest.raises(ValueError):
        cfg.spec("blue_spec")


def test_experiment_config_validation(tmp_path):
    with pytest.raises(ValueError):
        X.ExperimentConfig(replicas=0)
    with pytest.raises(ValueError):
        X.ExperimentConfig(z_grid=[3.0, 2.0])
    with pytest.raises(ValueError):
        X.ExperimentConfig(c1=2.0, c2=1.0)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"horizons_typo": [1]}))
    with pytest.raises(ValueError):
        X.ExperimentConfig.from_file(bad)


def test_csv_cells_and_manifest():
    assert X.format_cell(True) == "1" and X.format_cell(False) == "0"
    assert X.format_cell(np.int64(7)) == "7"
    assert X.format_cell(0.1) == "0.1"
    text = X.csv_text(["a", "b"], [[1, 2.5], [3, 4.0]])
    assert text == "a,b\n1,2.5\n3,4.0\n"

    m1 = X.run_manifest({"x": 1}, 5)
    m2 = X.run_manifest({"x": 1}, 5)
    assert m1 == m2
    assert m1["config_sha256"] != X.run_manifest({"x": 2}, 5)["config_sha256"]
    assert set(m1) == {"config_sha256", "master_seed", "package_version", "numpy_version"}


def test_identical_configs_produce_identical_csv(calib15):
    spec = helpers.spec_mean15_pm1()
    cfg = X.engine_config(spec, mode="exact")

    def run():
        recs = [
            X.simulate_trajectory(spec, 15, cfg, X.replica_rng(77, r))
            for r in range(3)
        ]
        return X.trajectory_csv(recs)

    assert run() == run()
