import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenariolab.dataset import (HEADER, Dataset, DatasetFormatError, Experiment, compute_stats,
                                 denormalize, dumps_dataset, load_dataset, loads_dataset, make_folds,
                                 normalize, save_dataset, stack_observations)
from scenariolab.sensors import SENSOR_NAMES
from scenariolab.sim import simulate_campaign


@pytest.fixture(scope="module")
def small():
    return simulate_campaign(3, repeats=2)


def test_round_trip(tmp_path, small):
    path = tmp_path / "d.csv"
    save_dataset(small, path)
    back = load_dataset(path)
    assert back.experiments == small.experiments
    assert back.seed == small.seed and back.config_digest == small.config_digest
    assert dumps_dataset(back) == path.read_text()


def test_fourteen_sensor_columns_rejected(small):
    lines = dumps_dataset(small).splitlines()
    i = next(k for k, l in enumerate(lines) if not l.startswith("#"))
    lines[i] = ",".join(HEADER[:-1])
    with pytest.raises(DatasetFormatError, match="header mismatch"):
        loads_dataset("\n".join(lines))


def test_non_numeric_photo_reports_line(small):
    lines = dumps_dataset(small).splitlines()
    header_at = next(k for k, l in enumerate(lines) if not l.startswith("#"))
    target = header_at + 3
    fields = lines[target].split(",")
    fields[HEADER.index("photo")] = "bright"
    lines[target] = ",".join(fields)
    with pytest.raises(DatasetFormatError, match=f"line {target + 1}"):
        loads_dataset("\n".join(lines))


def test_stats_two_point():
    X = np.zeros((2, 15))
    X[:, 2] = [1, 3]
    stats = compute_stats(X)
    j = stats.names.index("photo")
    assert stats.mean[j] == 2 and stats.std[j] == pytest.approx(math.sqrt(2))
    assert "photo" not in stats.constant and "wall" in stats.constant


def test_stats_accept_observations(small):
    obs = small.experiments[0].observations
    a = compute_stats(obs)
    b = compute_stats(np.vstack([o.values() for o in obs]))
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.std, b.std)


def test_stats_training_scope(small):
    plan = make_folds(small, 2, np.random.default_rng(0))
    fold = plan.folds[0]
    X_tr, _, _ = stack_observations(small.by_id(fold.training))
    before = compute_stats(X_tr)
    X_va, _, _ = stack_observations(small.by_id(fold.validation))
    X_va[:] = 0  # validation edits are irrelevant
    after = compute_stats(X_tr)
    assert np.array_equal(before.mean, after.mean)


def test_normalize_examples():
    X = np.zeros((2, 15))
    X[:, 2] = [8, 12]            # photo: mean 10, std 2.828
    X[:, 0] = [10 - math.sqrt(2), 10 + math.sqrt(2)]  # mean 10, std 2
    stats = compute_stats(X)
    x = np.zeros(15)
    x[0], x[2], x[9], x[10] = 14, 10, 123, 1
    z = normalize(x, stats)
    assert z[0] == pytest.approx(2.0)
    assert z[2] == 0
    assert z[9] == 0          # constant wall column
    assert z[10] == 1         # booleans pass through


def test_normalize_invertible(small):
    X, _, _ = stack_observations(small.experiments)
    stats = compute_stats(X)
    back = denormalize(normalize(X, stats), stats)
    live = ~np.isin(np.array(SENSOR_NAMES), stats.constant)
    assert np.allclose(back[:, live], X[:, live], rtol=1e-9, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_stats_order_invariant(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(20, 15)) * 100
    P = X[rng.permutation(20)]
    a, b = compute_stats(X), compute_stats(P)
    assert np.allclose(a.mean, b.mean, rtol=1e-12) and np.allclose(a.std, b.std, rtol=1e-12)


def test_folds_partition(campaign, foldplan):
    assert foldplan.k == 10
    ids = {e.id for e in campaign}
    seen = set()
    for fold in foldplan.folds:
        assert len(fold.validation) == 15 and len(fold.training) == 135
        assert not fold.validation & fold.training
        assert not fold.validation & seen
        seen |= fold.validation
        conds = [e.condition for e in campaign.by_id(fold.validation)]
        assert len(set(conds)) == 15
    assert seen == ids


def test_folds_csv_and_restrict(campaign, foldplan):
    lines = foldplan.to_csv().splitlines()
    assert lines[0] == "fold,experiment_id" and len(lines) == 151
    two = foldplan.restrict(e.id for e in campaign if e.scenario != 0)
    assert all(len(f.validation) == 10 for f in two.folds)


def test_uneven_conditions_rejected(small):
    with pytest.raises(ValueError):
        make_folds(small, 3)


def test_duplicate_ids_rejected(small):
    e = small.experiments[0]
    with pytest.raises(ValueError):
        Dataset((e, e))


def test_experiment_invariants():
    with pytest.raises(ValueError):
        Experiment(0, 0, 0, 0, 1, np.array([0.0, 0.1]), np.zeros((3, 15)))
