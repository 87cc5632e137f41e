from __future__ import annotations

import numpy as np
import pytest

from coveig import (
    CltHistogram,
    ExperimentConfig,
    ExperimentReport,
    InputError,
    PopulationModel,
    run_clt_histogram,
    run_mse_sweep,
)

MODEL = PopulationModel(rho=(1.0, 3.0), weights=(0.5, 0.5), aspect=0.5)


def _config(**kw):
    base = dict(model=MODEL, sizes=((20, 40),), trials=6, master_seed=42)
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(InputError):
        _config(sizes=())
    with pytest.raises(InputError):
        _config(trials=0)
    with pytest.raises(InputError):
        _config(methods=("moment_full", "bogus"))
    with pytest.raises(InputError):
        _config(infeasible="drop")
    with pytest.raises(InputError):
        _config(moment_route="simpson")


def test_sweep_runs_all_methods_and_is_deterministic():
    report = run_mse_sweep(_config())
    again = run_mse_sweep(_config())
    assert isinstance(report, ExperimentReport)
    assert {r.method for r in report.rows} == {
        "moment_full", "moment_known_mult", "mestre"
    }
    for r, r2 in zip(report.rows, again.rows):
        assert r.method == r2.method and r.N == r2.N
        if np.isfinite(r.mse_db):
            assert r.mse_db == r2.mse_db
        np.testing.assert_array_equal(
            report.estimates[(r.method, r.N)], again.estimates[(r.method, r.N)]
        )
        assert r.failure_count + np.isnan(
            report.estimates[(r.method, r.N)][:, 0]
        ).sum() == r.failure_count * 2  # NaN rows are exactly the failures
        assert r.wall_time >= 0


def test_row_lookup():
    report = run_mse_sweep(_config())
    row = report.row("mestre", 20)
    assert row.M == 40
    with pytest.raises(KeyError):
        report.row("mestre", 999)


def test_trial_offset_splits_the_run():
    # one 8-trial run must equal the union of two 4-trial halves driven by
    # trial_offset, which is what makes multi-process sweeps trustworthy
    full = run_mse_sweep(_config(trials=8, methods=("mestre",)))
    a = run_mse_sweep(_config(trials=4, methods=("mestre",)))
    b = run_mse_sweep(_config(trials=4, trial_offset=4, methods=("mestre",)))
    merged = np.vstack([a.estimates[("mestre", 20)], b.estimates[("mestre", 20)]])
    np.testing.assert_array_equal(full.estimates[("mestre", 20)], merged)


def test_methods_subset_respected():
    report = run_mse_sweep(_config(methods=("mestre",)))
    assert {r.method for r in report.rows} == {"mestre"}


def test_residue_route_agrees_with_quadrature():
    q = run_mse_sweep(_config(moment_route="quadrature",
                              methods=("moment_full",)))
    r = run_mse_sweep(_config(moment_route="residues",
                              methods=("moment_full",)))
    qa = q.estimates[("moment_full", 20)]
    ra = r.estimates[("moment_full", 20)]
    both = ~np.isnan(qa[:, 0]) & ~np.isnan(ra[:, 0])
    np.testing.assert_allclose(qa[both], ra[both], rtol=1e-6)


def test_failure_accounting_and_projection():
    # at a hopelessly small size some trials leave the feasible cone;
    # exclusion counts them, projection keeps them flagged
    tiny = ExperimentConfig(
        model=PopulationModel(rho=(1.0, 1.5, 2.0),
                              weights=(1 / 3, 1 / 3, 1 / 3), aspect=0.5),
        sizes=((12, 24),),
        trials=30,
        master_seed=7,
        methods=("moment_full",),
    )
    excluded = run_mse_sweep(tiny)
    row = excluded.row("moment_full", 12)
    assert row.failure_count > 0
    arr = excluded.estimates[("moment_full", 12)]
    assert int(np.isnan(arr[:, 0]).sum()) == row.failure_count

    projected = run_mse_sweep(
        ExperimentConfig(
            model=tiny.model, sizes=tiny.sizes, trials=30, master_seed=7,
            methods=("moment_full",), infeasible="project",
        )
    )
    prow = projected.row("moment_full", 12)
    assert prow.failure_count < row.failure_count
    assert prow.projected_count > 0


def test_log_callback_invoked():
    lines = []
    run_mse_sweep(_config(methods=("mestre",)), log=lines.append)
    assert len(lines) == 1
    assert "mestre" in lines[0] and "N=  20" in lines[0]


def test_bias_and_variance_definitions():
    report = run_mse_sweep(_config(trials=10, methods=("mestre",)))
    row = report.row("mestre", 20)
    arr = report.estimates[("mestre", 20)]
    ok = arr[~np.isnan(arr[:, 0])]
    err = ok - np.array([1.0, 3.0])
    np.testing.assert_allclose(row.bias, err.mean(axis=0))
    np.testing.assert_allclose(row.variance, (40 * err).var(axis=0, ddof=1))
    expected_db = 10 * np.log10(np.mean(np.sum(err**2, axis=1)))
    assert abs(row.mse_db - expected_db) < 1e-12


def test_clt_histogram_output_shape_and_overlay():
    # the baseline path needs one support cluster per population eigenvalue,
    # which the well split three-atom model at aspect 0.1 provides
    split = PopulationModel(rho=(1.0, 3.0, 10.0),
                            weights=(1 / 3, 1 / 3, 1 / 3), aspect=0.1)
    hist = run_clt_histogram(split, 30, 300, trials=60, master_seed=3,
                             method="mestre", bins=12)
    assert isinstance(hist, CltHistogram)
    assert hist.deviations.shape == (60, 3)
    assert hist.counts.shape == (3, 12)
    assert hist.bin_edges.shape == (3, 13)
    assert hist.predicted_var.shape == (3,)
    assert np.all(hist.predicted_var > 0)
    assert np.all(hist.ks_statistic >= 0) and np.all(hist.ks_statistic <= 1)
    # histogram integrates to one (density normalized)
    widths = np.diff(hist.bin_edges, axis=1)
    np.testing.assert_allclose((hist.counts * widths).sum(axis=1), 1.0,
                               atol=1e-9)
    # the overlay is the centered normal pdf with the predicted variance
    k = 0
    sigma = np.sqrt(hist.predicted_var[k])
    pdf = np.exp(-0.5 * (hist.overlay_x[k] / sigma) ** 2)
    pdf /= sigma * np.sqrt(2 * np.pi)
    np.testing.assert_allclose(hist.overlay_pdf[k], pdf, rtol=1e-12)


def test_clt_histogram_variance_roughly_matches_prediction():
    hist = run_clt_histogram(MODEL, 60, 120, trials=200, master_seed=5,
                             method="moment_full")
    ratio = hist.empirical_var / hist.predicted_var
    assert np.all(ratio > 0.6) and np.all(ratio < 1.6)


def test_clt_histogram_rejects_unknown_method():
    with pytest.raises(InputError):
        run_clt_histogram(MODEL, 40, 80, trials=10, master_seed=0,
                          method="moment_known_mult")
