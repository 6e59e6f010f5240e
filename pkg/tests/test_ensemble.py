import numpy as np
import pytest

import monitored_ising as mi
from monitored_ising.ensemble import ObservableConfig, run_ensemble, run_one_trajectory


def test_run_one_trajectory_records_observables():
    params = mi.ModelParams(L=8, h=0.2, gamma=2.0)
    obs = ObservableConfig(entropy=True, qfi=True, anneal_restarts=2)
    rec = run_one_trajectory(params, 0.005, 1.0, 0.25, master_seed=1, index=0,
                             obs=obs)
    assert set(rec.observables) == {"entropy", "fq_density"}
    assert len(rec.sample_times) == 5
    assert rec.metadata["entropy_ell"] == 2
    assert rec.metadata["trajectory_index"] == 0
    assert all(f >= 0 for f in rec.observables["fq_density"])
    # t = 0 product state: zero entropy, unit QFI density
    assert rec.observables["entropy"][0] == pytest.approx(0.0, abs=1e-10)
    assert rec.observables["fq_density"][0] == pytest.approx(1.0, abs=1e-6)


def test_trajectories_are_independent_and_reproducible():
    params = mi.ModelParams(L=6, h=0.2, gamma=2.0)
    obs = ObservableConfig(entropy=True, qfi=False)
    r0a = run_one_trajectory(params, 0.005, 0.5, 0.25, 7, 0, obs)
    r0b = run_one_trajectory(params, 0.005, 0.5, 0.25, 7, 0, obs)
    r1 = run_one_trajectory(params, 0.005, 0.5, 0.25, 7, 1, obs)
    assert r0a.observables == r0b.observables
    assert r0a.jumps == r0b.jumps
    assert r0a.jumps != r1.jumps or r0a.observables != r1.observables


def test_run_ensemble_serial_matches_parallel():
    params = mi.ModelParams(L=6, h=0.2, gamma=2.0)
    obs = ObservableConfig(entropy=True, qfi=False)
    serial = run_ensemble(params, 0.005, 0.5, 0.25, 4, seed=11, obs=obs,
                          threads=1)
    parallel = run_ensemble(params, 0.005, 0.5, 0.25, 4, seed=11, obs=obs,
                            threads=2)
    for a, b in zip(serial, parallel):
        assert a.observables == b.observables
        assert a.jumps == b.jumps


def test_ensemble_summary_pipeline():
    params = mi.ModelParams(L=6, h=0.2, gamma=2.0)
    obs = ObservableConfig(entropy=True, qfi=False)
    records = run_ensemble(params, 0.005, 1.0, 0.25, 6, seed=2, obs=obs)
    summary = mi.ensemble_summary(records)
    assert summary.n_trajectories == 6
    assert "entropy" in summary.stationary_mean
    assert summary.params["gamma"] == 2.0
