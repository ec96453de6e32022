"""Acceptance criteria, one test per criterion, each reporting a PASS/FAIL line."""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, CAMPAIGN_SEED
from oracles import (brute_force_split, central_difference, gradcheck_instance, random_split_instances,
                     relative_error, samme_weighted_loss)
from scenariolab.cli import main
from scenariolab.dataset import compute_stats, make_folds, normalize, stack_observations
from scenariolab.evaluation import ClassifierSpec, cross_validate
from scenariolab.logreg import smooth_loss_grad
from scenariolab.sensors import SENSOR_NAMES
from scenariolab.sim import simulate_campaign
from scenariolab.trees import TreeParams, fit_samme, fit_tree, samme_alpha

OBS_MEANS = (134.92, 38.54, 70.46)
WHEELS = [SENSOR_NAMES.index(n) for n in ("wheel_left", "wheel_right", "wheel_caster")]
BUMPS = [SENSOR_NAMES.index(n) for n in ("bump_left", "bump_right")]


def verdict(number: int, ok: bool, detail: str):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def forest_run():
    """Fresh campaign plus 10-fold cross-validation of a 100-tree forest, timed end to end."""
    start = time.perf_counter()
    dataset = simulate_campaign(CAMPAIGN_SEED)
    plan = make_folds(dataset, 10, np.random.default_rng(CAMPAIGN_SEED))
    cv = cross_validate(dataset, ClassifierSpec("forest"), plan, seed=CAMPAIGN_SEED, keep_models=False)
    return cv, time.perf_counter() - start


@pytest.fixture(scope="module")
def reports(campaign, foldplan):
    out = {}
    for kind in ("trivial", "random", "samme", "logreg"):
        out[kind] = cross_validate(campaign, ClassifierSpec(kind), foldplan, seed=CAMPAIGN_SEED)
    return out


def test_criterion_1_trivial_null_exact(campaign, foldplan):
    start = time.perf_counter()
    three = cross_validate(campaign, ClassifierSpec("trivial"), foldplan, "3class", seed=0).report
    two = cross_validate(campaign, ClassifierSpec("trivial"), foldplan, "2class", seed=0).report
    elapsed = time.perf_counter() - start
    acc = two.binary["experiment"]["accuracy"]
    ok = (abs(three.exp_error.mean - 2 / 3) < 1e-12 and three.exp_error.half_width < 1e-12
          and str(three.exp_error) == "0.667 ± 0.000"
          and abs(acc.mean - 0.5) < 1e-12 and acc.half_width < 1e-12 and elapsed < 5)
    verdict(1, ok, f"3-class experiment error {three.exp_error}, 2-class experiment accuracy {acc}, "
                   f"{elapsed:.2f}s")


def test_criterion_2_random_null_analytic(campaign, foldplan):
    start = time.perf_counter()
    cv = cross_validate(campaign, ClassifierSpec("random"), foldplan, seed=CAMPAIGN_SEED)
    elapsed = time.perf_counter() - start
    analytic = []
    for fold in foldplan.folds:
        _, y_tr, _ = stack_observations(campaign.by_id(fold.training))
        p = np.bincount(y_tr, minlength=3) / len(y_tr)
        analytic.append(1 - np.sum(p ** 2))
    expected = float(np.mean(analytic))
    observed = cv.report.obs_error.mean
    p_paper = np.array(OBS_MEANS) / sum(OBS_MEANS)
    paper_value = 1 - np.sum(p_paper ** 2)
    ok = abs(observed - expected) <= 0.02 and elapsed < 10 and abs(paper_value - 0.586) < 5e-4
    verdict(2, ok, f"observation error {observed:.4f} vs analytic {expected:.4f}; "
                   f"analytic at reported proportions {paper_value:.4f}; {elapsed:.2f}s")


def test_criterion_3_split_oracle():
    rng = np.random.default_rng(20240)
    checked = mismatches = 0
    for X, y in random_split_instances(rng, 1500, max_n=12, p=2, K=3):
        stump = fit_tree(X, y, params=TreeParams(max_depth=1), n_classes=3)
        got = None if stump.feature[0] < 0 else (int(stump.feature[0]), float(stump.threshold[0]))
        if got != brute_force_split(X.tolist(), y.tolist(), None, 3):
            mismatches += 1
        checked += 1
    verdict(3, checked >= 1000 and mismatches == 0, f"{checked} instances, {mismatches} mismatches")


def test_criterion_4_gradient_check():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(100):
        theta, X, y01, l2 = gradcheck_instance(rng)
        _, grad = smooth_loss_grad(theta, X, y01, l2)
        fd = central_difference(lambda t: smooth_loss_grad(np.array(t), X, y01, l2)[0], theta.tolist(), 1e-5)
        worst = max(worst, relative_error(grad.tolist(), fd))
    verdict(4, worst < 1e-4, f"max relative error {worst:.2e} over 100 instances")


def test_criterion_5_samme_arithmetic():
    alpha_ok = abs(samme_alpha(0.5, 3) - math.log(2)) <= 1e-12
    boundary_ok = abs(samme_alpha(2 / 3, 3)) <= 1e-12
    # a depth-0 learner on balanced 3-class data has error exactly 2/3: the round is discarded
    X = np.arange(90.0).reshape(-1, 1)
    y = np.repeat([0, 1, 2], 30)
    try:
        fit_samme(X, y, rounds=5, params=TreeParams(max_depth=0))
        halt_ok = False
    except ValueError:
        halt_ok = True
    rng = np.random.default_rng(5)
    x = rng.uniform(0, 3, 150)
    toy_X, toy_y = np.column_stack([x, rng.normal(size=150)]), np.floor(x).astype(int)
    model = fit_samme(toy_X, toy_y, rounds=40, params=TreeParams(max_depth=1), rng=0)
    losses = samme_weighted_loss(model, toy_X, toy_y)
    monotone = all(b <= a * (1 + 1e-12) for a, b in zip(losses, losses[1:]))
    ok = alpha_ok and boundary_ok and halt_ok and monotone
    verdict(5, ok, f"alpha(0.5,3)={samme_alpha(0.5, 3):.12f}, halt at 2/3: {halt_ok}, "
                   f"weighted loss {losses[0]:.2f} -> {losses[-1]:.2e} over {model.n_rounds} rounds, "
                   f"monotone: {monotone}")


def test_criterion_6_end_to_end_ordering(campaign, foldplan, reports, forest_run):
    forest = forest_run[0].report
    errors = {"forest": forest.obs_error.mean}
    errors.update({k: reports[k].report.obs_error.mean for k in ("samme", "logreg")})
    nulls = min(reports["trivial"].report.obs_error.mean, reports["random"].report.obs_error.mean)
    two = cross_validate(campaign, ClassifierSpec("forest"), foldplan, "2class", seed=CAMPAIGN_SEED,
                         keep_models=False).report
    acc = two.binary["experiment"]["accuracy"].mean
    ok = all(e <= nulls - 0.15 for e in errors.values()) and errors["forest"] <= 0.30 and acc >= 0.80
    summary = ", ".join(f"{k} {v:.3f}" for k, v in errors.items())
    verdict(6, ok, f"observation errors {summary}; best null {nulls:.3f}; "
                   f"2-class forest experiment accuracy {acc:.3f}")


def test_criterion_7_importance_sanity(campaign, foldplan, reports, forest_run):
    forest_imp = forest_run[0].report.importance.values
    samme_imp = reports["samme"].report.importance.values
    sums_ok = all(abs(v.sum() - 1) <= 1e-9 for v in (forest_imp, samme_imp))
    wheels_ok = max(forest_imp[WHEELS].max(), samme_imp[WHEELS].max()) < 0.01

    folds = reports["logreg"].folds
    coef = np.mean([f.model.coef for f in folds], axis=0)
    bump_coef = coef[:, BUMPS]
    nonzero_ok = np.all(np.abs(bump_coef[1:]).max(axis=0) >= 0.1) and np.all(bump_coef[0] <= 0)
    # switching a bump on must lower the probability of scenario 0 for empty-room observations
    fold = foldplan.folds[0]
    X_tr, _, _ = stack_observations(campaign.by_id(fold.training))
    X_va, y_va, _ = stack_observations(campaign.by_id(fold.validation))
    stats = compute_stats(X_tr)
    quiet = normalize(X_va[y_va == 0], stats)
    bumped = quiet.copy()
    bumped[:, BUMPS[0]] = 1
    model = folds[0].model
    drop_ok = bool(np.all(model.predict_proba(bumped)[:, 0] < model.predict_proba(quiet)[:, 0]))
    ok = sums_ok and wheels_ok and nonzero_ok and drop_ok
    verdict(7, ok, f"sums {forest_imp.sum():.12f}/{samme_imp.sum():.12f}, max wheel importance "
                   f"{max(forest_imp[WHEELS].max(), samme_imp[WHEELS].max()):.4f}, bump coefficients by "
                   f"scenario {np.round(bump_coef, 3).tolist()}, bump lowers P(scenario 0): {drop_ok}")


def test_criterion_8_cli_determinism(tmp_path):
    outputs = []
    for run in ("a", "b"):
        d = tmp_path / run
        data, report = d / "campaign.csv", d / "report.csv"
        assert main(["simulate", "--seed", "7", "--out", str(data)]) == 0
        assert main(["crossval", "--data", str(data), "--classifier", "forest", "--seed", "7",
                     "--out", str(report)]) == 0
        outputs.append({p.name: p.read_bytes() for p in (data, report, d / "report_folds.csv")})
    same = outputs[0] == outputs[1]
    verdict(8, same, f"{len(outputs[0])} artifacts byte-identical across two runs: {same}")


def test_criterion_9_performance(forest_run):
    cv, elapsed = forest_run
    verdict(9, elapsed < 60, f"campaign + 10-fold 100-tree forest in {elapsed:.1f}s "
                             f"(observation error {cv.report.obs_error})")
