"""Seeded synthetic experiments: a scanning robot at the room center, a walker, and sensor responses.

All randomness flows from the seed handed to :func:`simulate_experiment` or
:func:`simulate_campaign`; campaign experiments get child streams split off one
:class:`numpy.random.SeedSequence`, so any experiment can be regenerated alone.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .dataset import N_DOORS, Dataset, Experiment
from .sensors import N_SENSORS, Observation, ProximityBand, ScenarioLabel, clamp_to_spec

SCAN_PIVOT_DEG = 30.0
SCAN_PERIOD_S = 20.0
SCAN_CYCLE_S = SCAN_PERIOD_S * 360.0 / SCAN_PIVOT_DEG  # 240 s for a full turn

# mean and standard deviation of observations per experiment, by scenario
OBSERVATION_COUNT_STATS = {
    ScenarioLabel.EMPTY_ROOM: (134.92, 57.18),
    ScenarioLabel.WALK_ACROSS: (38.54, 15.59),
    ScenarioLabel.WALK_AROUND: (70.46, 21.19),
}
MIN_OBSERVATIONS = 10
REPEATS_PER_CONDITION = 10

_ARC_STEP = math.radians(5.0)


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class SimConfig:
    dt_lo: float = 0.1
    dt_hi: float = 0.2
    room_width: float = 600.0
    room_height: float = 500.0
    robot_radius: float = 17.0
    door_0: tuple[float, float] = (300.0, 500.0)
    door_1: tuple[float, float] = (0.0, 77.0)
    door_2: tuple[float, float] = (600.0, 77.0)
    walker_speed: float = 90.0
    circling_speed: float = 25.0
    walker_radius: float = 20.0
    touch_dwell: float = 0.8
    contact_margin: float = 0.5
    bump_center_half_angle: float = 15.0
    ambient_temp: float = 21.0
    ambient_temp_jitter: float = 0.08
    body_temp: float = 34.0
    therm_heading_amp: float = 0.5
    therm_fov_half_angle: float = 70.0
    therm_view_fraction: float = 0.3
    therm_decay: float = 60.0
    noise_therm: float = 0.06
    ambient_light: float = 520.0
    ambient_light_jitter: float = 4.0
    light_bearing: float = 45.0
    light_heading_gain: float = 10.0
    shadow_half_angle: float = 90.0
    shadow_depth: float = 90.0
    shadow_decay: float = 150.0
    noise_photo: float = 2.0
    ir_cone_half_angle: float = 15.0
    ir_medium_gain: float = 2500.0
    ir_long_gain: float = 9000.0
    ir_medium_background: float = 60.0
    ir_long_background: float = 45.0
    noise_ir: float = 6.0
    cliff_floor: tuple[float, float, float, float] = (1800.0, 1760.0, 1830.0, 1790.0)
    cliff_step_gain: float = 50.0
    cliff_step_decay: float = 300.0
    noise_cliff: float = 3.0
    wall_background: float = 5.0
    noise_wall: float = 1.0

    def __post_init__(self):
        if not 0 < self.dt_lo <= self.dt_hi:
            raise ConfigError("need 0 < dt_lo <= dt_hi", "dt_lo")
        if self.body_temp <= self.ambient_temp:
            raise ConfigError("body_temp must exceed ambient_temp", "body_temp")
        if self.walker_speed <= 0 or self.circling_speed <= 0:
            raise ConfigError("walker speeds must be positive", "walker_speed")
        if self.room_width <= 0 or self.room_height <= 0:
            raise ConfigError("room dimensions must be positive", "room_width")
        for name in ("door_0", "door_1", "door_2"):
            x, y = getattr(self, name)
            inside = 0 <= x <= self.room_width and 0 <= y <= self.room_height
            on_edge = x in (0, self.room_width) or y in (0, self.room_height)
            if not (inside and on_edge):
                raise ConfigError(f"{name} must lie on the room boundary", name)
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name.startswith("noise_") or f.name.endswith("_jitter"):
                if value < 0:
                    raise ConfigError(f"{f.name} must be non-negative", f.name)

    @property
    def center(self) -> np.ndarray:
        return np.array([self.room_width / 2.0, self.room_height / 2.0])

    @property
    def doors(self) -> np.ndarray:
        return np.array([self.door_0, self.door_1, self.door_2], dtype=float)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ", ".join(repr(float(v)) for v in value)
            else:
                value = repr(float(value))
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


def parse_sim_config(text: str) -> SimConfig:
    """Parse flat ``key = value`` text; missing keys keep their defaults, unknown keys are errors."""
    known = {f.name: f for f in fields(SimConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'", key or None)
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}", key)
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate config key {key!r}", key)
        default = getattr(SimConfig, key)
        try:
            if isinstance(default, tuple):
                parsed = tuple(float(v) for v in value.split(","))
                if len(parsed) != len(default):
                    raise ValueError(f"expected {len(default)} comma-separated numbers")
            else:
                parsed = float(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}", key) from None
        values[key] = parsed
    return SimConfig(**values)


def load_sim_config(path=None) -> SimConfig:
    if path is None:
        return parse_sim_config(default_config_text())
    return parse_sim_config(Path(path).read_text())


def default_config_text() -> str:
    return resources.files(__package__).joinpath("default_sim.cfg").read_text()


# --- robot behavior ---------------------------------------------------------------

def scan_heading(t: float) -> float:
    """Robot heading in degrees: a 30 degree pivot every 20 seconds."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return (SCAN_PIVOT_DEG * math.floor(t / SCAN_PERIOD_S)) % 360.0


def sample_observation_count(scenario, rng) -> int:
    mean, sd = OBSERVATION_COUNT_STATS[ScenarioLabel(scenario)]
    return max(MIN_OBSERVATIONS, int(round(rng.normal(mean, sd))))


# --- walker paths -----------------------------------------------------------------

@dataclass(frozen=True)
class WalkerPath:
    scenario: ScenarioLabel
    waypoints: np.ndarray  # (k, 3): x, y in room cm, arrival time in s
    closest_approach: float  # clearance from the robot perimeter, cm
    touch_interval: tuple[float, float] | None = None
    touch_bearing: float | None = None  # room-frame degrees of the touch point

    def position_at(self, t: float) -> np.ndarray:
        wp = self.waypoints
        return np.array([np.interp(t, wp[:, 2], wp[:, 0]), np.interp(t, wp[:, 2], wp[:, 1])])


def _wrap(angle: float) -> float:
    """Wrap radians into [-pi, pi)."""
    return (angle + math.pi) % (2 * math.pi) - math.pi


def _point(radius: float, angle: float) -> np.ndarray:
    return radius * np.array([math.cos(angle), math.sin(angle)])


def _segment_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Distance from the origin to segment pq."""
    d = q - p
    denom = float(d @ d)
    s = 0.0 if denom == 0 else min(1.0, max(0.0, -float(p @ d) / denom))
    return float(np.hypot(*(p + s * d)))


def _arc_route(A, B, r, direction, extra_turns):
    """A -> tangent -> arc of radius r (plus extra full turns) -> tangent -> B, origin-centered.

    Arc vertices sit at r / cos(step / 2) so every chord touches the circle at its midpoint.
    """
    thA, thB = math.atan2(A[1], A[0]), math.atan2(B[1], B[0])
    dA = math.acos(r / np.hypot(*A))
    dB = math.acos(r / np.hypot(*B))
    if direction > 0:
        a_in, a_out = thA + dA, thB - dB
        sweep = (a_out - a_in) % (2 * math.pi)
    else:
        a_in, a_out = thA - dA, thB + dB
        sweep = (a_in - a_out) % (2 * math.pi)
    sweep += 2 * math.pi * extra_turns
    n = max(1, math.ceil(sweep / _ARC_STEP))
    step = sweep / n
    angles = a_in + direction * step * np.arange(n + 1)
    outer = r / math.cos(step / 2)
    arc = [_point(r, angles[0])]
    arc += [_point(outer, a + direction * step / 2) for a in angles[:-1]]
    arc += [_point(r, angles[-1])]
    return [A] + arc + [B]


def build_walker_path(scenario, proximity, door_start, door_end, config: SimConfig, rng,
                      duration: float | None = None) -> WalkerPath:
    """Walker trajectory for one experiment.

    Walk-across passes the robot once at the band clearance, bending toward it
    from the straight door-to-door line; walk-around approaches, circles the
    robot once at the band clearance and leaves.  Contact walk-across paths
    pause at the touch point for ``touch_dwell`` seconds.  Legs are walked at
    ``walker_speed`` and arcs around the robot at ``circling_speed``; when
    ``duration`` is given all times are stretched by one factor to span it.
    """
    scenario = ScenarioLabel(scenario)
    proximity = ProximityBand(proximity)
    if scenario == ScenarioLabel.EMPTY_ROOM:
        raise ValueError("the empty-room scenario has no walker")
    if door_start == door_end:
        raise ValueError("start and end doors must differ")

    C = config.center
    A = config.doors[door_start] - C
    B = config.doors[door_end] - C
    lo, hi = proximity.bounds
    clearance = lo if lo == hi else float(rng.uniform(lo, hi))
    r = config.robot_radius + clearance
    if r >= min(np.hypot(*A), np.hypot(*B)):
        raise ValueError("doors lie inside the proximity band")

    touch_at = None
    on_arc = False
    if scenario == ScenarioLabel.WALK_ACROSS:
        thA = math.atan2(A[1], A[0])
        diff = _wrap(math.atan2(B[1], B[0]) - thA)
        dA = math.acos(r / np.hypot(*A))
        dB = math.acos(r / np.hypot(*B))
        arc_lo, arc_hi = max(-dA, diff - dB), min(dA, diff + dB)
        if arc_lo <= arc_hi:
            margin = 0.1 * (arc_hi - arc_lo)
            phi = thA + float(rng.uniform(arc_lo + margin, arc_hi - margin))
            pts = [A, _point(r, phi), B]
            touch_at = 1
        else:
            # no pass point visible from both doors: skirt the robot the short way
            ccw = _arc_route(A, B, r, +1, 0)
            cw = _arc_route(A, B, r, -1, 0)
            pts = min(ccw, cw, key=lambda p: sum(np.hypot(*(b - a)) for a, b in zip(p, p[1:])))
            on_arc = True
    else:
        direction = 1 if rng.random() < 0.5 else -1
        pts = _arc_route(A, B, r, direction, 1)
        on_arc = True

    seg = np.array([np.hypot(*(b - a)) for a, b in zip(pts, pts[1:])])
    speed = np.full(len(seg), config.walker_speed)
    if on_arc:
        speed[1:-1] = config.circling_speed
    steps = seg / speed
    dwell = 0.0
    if proximity == ProximityBand.CONTACT and touch_at is not None:
        dwell = config.touch_dwell if duration is None else min(config.touch_dwell, 0.4 * duration)
        pts = pts[: touch_at + 1] + [pts[touch_at]] + pts[touch_at + 1:]
        steps = np.insert(steps, touch_at, 0.0)
    if duration is not None:
        steps *= max(duration - dwell, 1e-9) / steps.sum()
    if dwell:
        steps[touch_at] = dwell
    times = np.concatenate([[0.0], np.cumsum(steps)])
    if duration is not None:
        times[-1] = duration

    xy = np.array(pts) + C
    waypoints = np.column_stack([xy, times])
    closest = min(_segment_distance(a, b) for a, b in zip(pts, pts[1:])) - config.robot_radius
    touch_interval = touch_bearing = None
    if dwell:
        touch_interval = (float(times[touch_at]), float(times[touch_at + 1]))
        P = pts[touch_at]
        touch_bearing = math.degrees(math.atan2(P[1], P[0])) % 360.0
    if abs(closest) < 1e-9:
        closest = 0.0
    return WalkerPath(scenario, waypoints, closest, touch_interval, touch_bearing)


# --- sensor response --------------------------------------------------------------

def _rel_deg(a: float, b: float) -> float:
    """Signed difference a - b in degrees, wrapped into [-180, 180)."""
    return (a - b + 180.0) % 360.0 - 180.0


def ir_response(clearance: float, gain: float, near: float, far: float, background: float) -> float:
    """Monotone decreasing range-sensor counts inside [near, far] cm, saturating below ``near``."""
    if clearance > far:
        return background
    return gain / max(clearance, near)


def sense(t: float, heading: float, walker_position, config: SimConfig, rng,
          ambient: tuple[float, float] | None = None) -> Observation:
    """One observation of all 15 sensors.

    ``walker_position`` is in room coordinates, or None when the room is empty.
    ``ambient`` overrides (temperature, light) for the experiment.
    """
    amb_temp, amb_light = ambient if ambient is not None else (config.ambient_temp, config.ambient_light)
    h = math.radians(heading)
    therm = [amb_temp + 0.5 * config.therm_heading_amp * math.sin(h),
             amb_temp - 0.5 * config.therm_heading_amp * math.sin(h)]
    photo = amb_light + config.light_heading_gain * math.cos(math.radians(heading - config.light_bearing))
    ir_medium, ir_long = config.ir_medium_background, config.ir_long_background
    cliff = np.array(config.cliff_floor, dtype=float)
    bump_left = bump_right = False

    if walker_position is not None:
        v = np.asarray(walker_position, dtype=float) - config.center
        dist = float(np.hypot(*v))
        clearance = max(dist - config.robot_radius, 0.0)
        bearing = math.degrees(math.atan2(v[1], v[0]))
        extent = math.degrees(math.atan2(config.walker_radius, max(dist, 1e-9)))

        heat = (config.body_temp - amb_temp) * config.therm_view_fraction * math.exp(-clearance / config.therm_decay)
        for i, facing in enumerate((heading + 90.0, heading - 90.0)):
            if abs(_rel_deg(bearing, facing)) <= config.therm_fov_half_angle + extent:
                therm[i] += heat

        if abs(_rel_deg(bearing, config.light_bearing)) <= config.shadow_half_angle + extent:
            photo -= config.shadow_depth * math.exp(-clearance / config.shadow_decay)

        if abs(_rel_deg(bearing, heading + 180.0)) <= config.ir_cone_half_angle + extent:
            ir_medium = ir_response(clearance, config.ir_medium_gain, 4.0, 30.0, ir_medium)
            ir_long = ir_response(clearance, config.ir_long_gain, 15.0, 150.0, ir_long)

        cliff -= config.cliff_step_gain * math.exp(-clearance / config.cliff_step_decay)

        front = _rel_deg(bearing, heading)
        if clearance <= config.contact_margin and abs(front) <= 90.0:
            if abs(front) <= config.bump_center_half_angle:
                bump_left = bump_right = True
            elif front > 0:
                bump_left = True
            else:
                bump_right = True

    noise = rng.normal(size=10)
    raw = np.empty(N_SENSORS)
    raw[0] = ir_medium + config.noise_ir * noise[0]
    raw[1] = ir_long + config.noise_ir * noise[1]
    raw[2] = photo + config.noise_photo * noise[2]
    raw[3] = therm[0] + config.noise_therm * noise[3]
    raw[4] = therm[1] + config.noise_therm * noise[4]
    raw[5:9] = cliff + config.noise_cliff * noise[5:9]
    raw[9] = config.wall_background + config.noise_wall * noise[9]
    raw[10:] = (bump_left, bump_right, False, False, False)
    return Observation.from_values(t, clamp_to_spec(raw))


# --- experiments and campaigns ----------------------------------------------------

def _touch_scan_offset(path: WalkerPath, rng) -> float:
    """Scan clock offset that has the robot facing the touch point during the touch."""
    t0, t1 = path.touch_interval
    facing = [k for k in range(12) if abs(_rel_deg(path.touch_bearing, SCAN_PIVOT_DEG * k)) <= 60.0]
    k = facing[int(rng.integers(len(facing)))]
    start = SCAN_PERIOD_S * k + float(rng.uniform(0.0, SCAN_PERIOD_S - (t1 - t0)))
    return (start - t0) % SCAN_CYCLE_S


def simulate_experiment(scenario, proximity, seed, config: SimConfig | None = None,
                        experiment_id: int = 0) -> Experiment:
    config = config or SimConfig()
    scenario = ScenarioLabel(scenario)
    proximity = ProximityBand(proximity)
    rng = np.random.default_rng(seed)

    n = sample_observation_count(scenario, rng)
    times = np.concatenate([[0.0], np.cumsum(rng.uniform(config.dt_lo, config.dt_hi, n - 1))])
    door_start, door_end = (int(d) for d in rng.choice(N_DOORS, size=2, replace=False))
    ambient = (config.ambient_temp + config.ambient_temp_jitter * rng.normal(),
               config.ambient_light + config.ambient_light_jitter * rng.normal())

    path = None
    if scenario != ScenarioLabel.EMPTY_ROOM:
        path = build_walker_path(scenario, proximity, door_start, door_end, config, rng,
                                 duration=float(times[-1]))
    if path is not None and path.touch_interval is not None:
        offset = _touch_scan_offset(path, rng)
    else:
        offset = float(rng.uniform(0.0, SCAN_CYCLE_S))

    values = np.empty((n, N_SENSORS))
    for i, t in enumerate(times):
        position = None if path is None else path.position_at(t)
        obs = sense(t, scan_heading(offset + t), position, config, rng, ambient)
        values[i] = obs.values()
    return Experiment(experiment_id, scenario, proximity, door_start, door_end, times, values)


def campaign_conditions() -> list[tuple[ScenarioLabel, ProximityBand]]:
    return [(s, p) for s in ScenarioLabel for p in ProximityBand]


def simulate_campaign(seed: int, config: SimConfig | None = None,
                      repeats: int = REPEATS_PER_CONDITION) -> Dataset:
    """All 15 conditions ``repeats`` times each, in random execution order.

    Experiment ids follow execution order.  Child seed 0 drives the ordering,
    child ``i + 1`` drives experiment ``i``.
    """
    config = config or SimConfig()
    conditions = [c for c in campaign_conditions() for _ in range(repeats)]
    children = np.random.SeedSequence(seed).spawn(len(conditions) + 1)
    order = np.random.default_rng(children[0]).permutation(len(conditions))
    experiments = tuple(
        simulate_experiment(*conditions[j], children[i + 1], config, experiment_id=i)
        for i, j in enumerate(order)
    )
    return Dataset(experiments, seed=seed, config_digest=config.digest())


__all__ = [
    "SimConfig", "ConfigError", "parse_sim_config", "load_sim_config", "default_config_text",
    "scan_heading", "sample_observation_count", "WalkerPath", "build_walker_path",
    "ir_response", "sense", "simulate_experiment", "simulate_campaign", "campaign_conditions",
]
