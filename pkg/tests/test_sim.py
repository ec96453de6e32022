import math
from dataclasses import replace

import numpy as np
import pytest

from scenariolab.dataset import N_DOORS
from scenariolab.sensors import ProximityBand, ScenarioLabel, validate_observation
from scenariolab.sim import (ConfigError, SimConfig, build_walker_path, campaign_conditions,
                             default_config_text, ir_response, load_sim_config, parse_sim_config,
                             sample_observation_count, scan_heading, sense, simulate_campaign,
                             simulate_experiment)

DOOR_PAIRS = [(a, b) for a in range(N_DOORS) for b in range(N_DOORS) if a != b]


def dense_track(path, n=4000):
    ts = np.linspace(path.waypoints[0, 2], path.waypoints[-1, 2], n)
    return np.array([path.position_at(t) for t in ts])


@pytest.mark.parametrize("t,heading", [(0, 0), (25, 30), (65, 90), (19.99, 0), (240, 0)])
def test_scan_heading(t, heading):
    assert scan_heading(t) == pytest.approx(heading)


@pytest.mark.parametrize("scenario,mean,tol", [(0, 134.9, 2.0), (1, 38.5, 1.0)])
def test_observation_count_means(scenario, mean, tol):
    rng = np.random.default_rng(123)
    draws = np.array([sample_observation_count(scenario, rng) for _ in range(10_000)])
    assert draws.min() >= 10
    assert abs(draws.mean() - mean) <= tol


@pytest.mark.parametrize("doors", DOOR_PAIRS)
def test_walk_across_far_band(doors):
    cfg = SimConfig()
    rng = np.random.default_rng(1)
    for _ in range(10):
        path = build_walker_path(ScenarioLabel.WALK_ACROSS, ProximityBand.CM_61_80, *doors, cfg, rng)
        assert 61 <= path.closest_approach <= 80
        clearance = np.hypot(*(dense_track(path) - cfg.center).T) - cfg.robot_radius
        assert clearance.min() >= 61 - 1e-6
        assert clearance.min() <= 80 + 0.5


@pytest.mark.parametrize("doors", DOOR_PAIRS)
def test_walk_around_winds_once_in_band(doors):
    cfg = SimConfig()
    rng = np.random.default_rng(2)
    for _ in range(5):
        path = build_walker_path(ScenarioLabel.WALK_AROUND, ProximityBand.CM_21_40, *doors, cfg, rng)
        rel = path.waypoints[:, :2] - cfg.center
        clearance = np.hypot(*rel.T) - cfg.robot_radius
        near = clearance <= 40 + 2.0
        angles = np.unwrap(np.arctan2(rel[near, 1], rel[near, 0]))
        assert abs(angles[-1] - angles[0]) >= 2 * math.pi
        assert 21 <= path.closest_approach <= 40
        assert clearance.min() >= 21 - 1e-6


def test_contact_walk_across_bumps():
    for seed in range(12):
        exp = simulate_experiment(ScenarioLabel.WALK_ACROSS, ProximityBand.CONTACT, seed)
        assert exp.values[:, 10:12].max() == 1


def test_ir_behind_robot_above_background():
    cfg = SimConfig(noise_ir=0.0)
    rng = np.random.default_rng(0)
    heading = 0.0
    empty = sense(0.0, heading, None, cfg, rng)
    for dist in (25.0, cfg.robot_radius + 25.0):
        behind = cfg.center + dist * np.array([-1.0, 0.0])
        obs = sense(0.0, heading, behind, cfg, rng)
        assert obs.ir_rear_medium > empty.ir_rear_medium
    assert ir_response(25.0, cfg.ir_medium_gain, 4, 30, cfg.ir_medium_background) > cfg.ir_medium_background
    assert ir_response(31.0, cfg.ir_medium_gain, 4, 30, cfg.ir_medium_background) == cfg.ir_medium_background


def test_thermometer_rotation_asymmetry_about_one_fahrenheit():
    cfg = SimConfig(noise_therm=0.0)
    rng = np.random.default_rng(0)
    diffs = [abs(o.therm_a - o.therm_b) for o in (sense(0.0, h, None, cfg, rng) for h in range(0, 360, 30))]
    assert max(diffs) * 9 / 5 == pytest.approx(1.0, abs=0.15)


def test_empty_room_baseline():
    cfg = SimConfig()
    rng = np.random.default_rng(5)
    bound = cfg.therm_heading_amp / 2 + 3 * cfg.noise_therm + 0.01
    for h in range(0, 360, 30):
        obs = sense(3.0, h, None, cfg, rng)
        assert abs(obs.therm_a - cfg.ambient_temp) <= bound
        assert abs(obs.therm_b - cfg.ambient_temp) <= bound
        assert not obs.bump_left and not obs.bump_right


def test_experiment_determinism():
    a = simulate_experiment(2, 3, 99)
    b = simulate_experiment(2, 3, 99)
    assert a == b
    assert a.values.tobytes() == b.values.tobytes()
    assert simulate_experiment(2, 3, 100) != a


def test_campaign_shape(campaign):
    assert len(campaign) == 150
    assert sorted(e.id for e in campaign) == list(range(150))
    counts = {}
    for e in campaign:
        counts[e.condition] = counts.get(e.condition, 0) + 1
    assert len(counts) == 15 and set(counts.values()) == {10}
    assert len(campaign_conditions()) == 15


def test_campaign_reproducible(campaign):
    again = simulate_campaign(campaign.seed)
    assert again.experiments == campaign.experiments


def test_campaign_order_is_shuffled():
    # position vs condition index correlation should average near zero over seeds
    corrs = []
    sequences = set()
    for seed in range(8):
        d = simulate_campaign(seed, repeats=2)
        cond = np.array([e.scenario * 5 + e.proximity for e in d])
        sequences.add(tuple(cond))
        assert not np.all(np.diff(cond) >= 0)
        corrs.append(np.corrcoef(np.arange(len(cond)), cond)[0, 1])
    assert len(sequences) == 8
    assert abs(np.mean(corrs)) < 0.2


def test_campaign_observations_valid_and_scenario0_quiet(campaign):
    for e in campaign:
        if e.id % 10 == 0:
            for obs in e.observations:
                validate_observation(obs)
        if e.scenario == 0:
            assert not e.values[:, 10:].any()
        assert not e.values[:, 12:].any()


def test_walk_around_longer_than_walk_across(campaign):
    n1 = np.mean([e.n_observations for e in campaign if e.scenario == 1])
    n2 = np.mean([e.n_observations for e in campaign if e.scenario == 2])
    assert n2 > n1


def test_separability_floor(campaign):
    cfg = SimConfig()
    X = np.concatenate([e.values for e in campaign])
    y = np.concatenate([[e.scenario] * e.n_observations for e in campaign])
    for col, sd in [(2, cfg.noise_photo), (3, cfg.noise_therm), (4, cfg.noise_therm)]:
        means = [X[y == s, col].mean() for s in range(3)]
        for i in range(3):
            for j in range(i + 1, 3):
                assert abs(means[i] - means[j]) >= sd


def test_default_cfg_file_matches_defaults():
    assert load_sim_config() == SimConfig()
    assert parse_sim_config(SimConfig().to_text()) == SimConfig()
    assert "convention" in default_config_text()


def test_digest_tracks_config():
    assert SimConfig().digest() == SimConfig().digest()
    assert replace(SimConfig(), noise_photo=3.0).digest() != SimConfig().digest()


@pytest.mark.parametrize("text,key", [
    ("bogus = 1\n", "bogus"),
    ("noise_ir = 1\nnoise_ir = 2\n", "noise_ir"),
    ("noise_ir = loud\n", "noise_ir"),
    ("room_width\n", "room_width"),
])
def test_config_errors_name_key(text, key):
    with pytest.raises(ConfigError) as info:
        parse_sim_config(text)
    assert info.value.key == key
