"""Sensor vocabulary shared by the simulator, the dataset layer and the classifiers.

The robot reports 15 variables per observation: two rear-facing IR range
sensors, a photocell, two IR thermometers, four cliff sensors, a wall sensor,
two bumper switches and three wheel-drop switches.
"""
from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields
from enum import IntEnum

import numpy as np

ADC10_MAX = 1023   # Arduino analog inputs
ADC12_MAX = 4095   # Create internal IR counts


@dataclass(frozen=True)
class SensorSpec:
    name: str
    kind: str  # "integer-adc" | "temperature" | "boolean"
    lo: float
    hi: float
    units: str

    def __post_init__(self):
        if self.kind not in ("integer-adc", "temperature", "boolean"):
            raise ValueError(f"unknown sensor kind {self.kind!r}")
        if self.kind == "boolean" and (self.lo, self.hi) != (0, 1):
            raise ValueError(f"{self.name}: boolean sensors span [0, 1]")
        if not self.lo < self.hi:
            raise ValueError(f"{self.name}: lo must be below hi")

    @property
    def is_boolean(self) -> bool:
        return self.kind == "boolean"


SENSOR_SPECS: tuple[SensorSpec, ...] = (
    SensorSpec("ir_rear_medium", "integer-adc", 0, ADC10_MAX, "counts (4-30 cm)"),
    SensorSpec("ir_rear_long", "integer-adc", 0, ADC10_MAX, "counts (15-150 cm)"),
    SensorSpec("photo", "integer-adc", 0, ADC10_MAX, "counts"),
    # MLX90614 object-temperature range
    SensorSpec("therm_a", "temperature", -70.0, 380.0, "degC"),
    SensorSpec("therm_b", "temperature", -70.0, 380.0, "degC"),
    SensorSpec("cliff_left", "integer-adc", 0, ADC12_MAX, "counts"),
    SensorSpec("cliff_front_left", "integer-adc", 0, ADC12_MAX, "counts"),
    SensorSpec("cliff_front_right", "integer-adc", 0, ADC12_MAX, "counts"),
    SensorSpec("cliff_right", "integer-adc", 0, ADC12_MAX, "counts"),
    SensorSpec("wall", "integer-adc", 0, ADC12_MAX, "counts"),
    SensorSpec("bump_left", "boolean", 0, 1, ""),
    SensorSpec("bump_right", "boolean", 0, 1, ""),
    SensorSpec("wheel_left", "boolean", 0, 1, ""),
    SensorSpec("wheel_right", "boolean", 0, 1, ""),
    SensorSpec("wheel_caster", "boolean", 0, 1, ""),
)

SENSOR_NAMES: tuple[str, ...] = tuple(s.name for s in SENSOR_SPECS)
N_SENSORS = len(SENSOR_SPECS)
CSV_COLUMNS: tuple[str, ...] = ("t",) + SENSOR_NAMES

BOOLEAN_MASK = np.array([s.is_boolean for s in SENSOR_SPECS])
NUMERIC_NAMES: tuple[str, ...] = tuple(s.name for s in SENSOR_SPECS if not s.is_boolean)


class ScenarioLabel(IntEnum):
    EMPTY_ROOM = 0
    WALK_ACROSS = 1
    WALK_AROUND = 2


class ProximityBand(IntEnum):
    """Closest-approach band, measured from the robot's perimeter."""

    CONTACT = 0
    CM_1_20 = 1
    CM_21_40 = 2
    CM_41_60 = 3
    CM_61_80 = 4

    @property
    def bounds(self) -> tuple[float, float]:
        return _BAND_BOUNDS[self]

    @property
    def label(self) -> str:
        return _BAND_LABELS[self]

    @classmethod
    def from_label(cls, text: str) -> "ProximityBand":
        for band, label in _BAND_LABELS.items():
            if label == text:
                return band
        raise ValueError(f"unknown proximity band {text!r}")


_BAND_BOUNDS = {
    ProximityBand.CONTACT: (0.0, 0.0),
    ProximityBand.CM_1_20: (1.0, 20.0),
    ProximityBand.CM_21_40: (21.0, 40.0),
    ProximityBand.CM_41_60: (41.0, 60.0),
    ProximityBand.CM_61_80: (61.0, 80.0),
}
_BAND_LABELS = {
    ProximityBand.CONTACT: "contact",
    ProximityBand.CM_1_20: "1-20",
    ProximityBand.CM_21_40: "21-40",
    ProximityBand.CM_41_60: "41-60",
    ProximityBand.CM_61_80: "61-80",
}


@dataclass(frozen=True)
class Observation:
    t: float
    ir_rear_medium: int
    ir_rear_long: int
    photo: int
    therm_a: float
    therm_b: float
    cliff_left: int
    cliff_front_left: int
    cliff_front_right: int
    cliff_right: int
    wall: int
    bump_left: bool
    bump_right: bool
    wheel_left: bool
    wheel_right: bool
    wheel_caster: bool

    def values(self) -> np.ndarray:
        """The 15 sensor readings as floats, booleans as 0/1."""
        return np.array(astuple(self)[1:], dtype=float)

    @classmethod
    def from_values(cls, t: float, values) -> "Observation":
        if len(values) != N_SENSORS:
            raise ValueError(f"expected {N_SENSORS} sensor values, got {len(values)}")
        converted = []
        for spec, v in zip(SENSOR_SPECS, values):
            if spec.is_boolean:
                converted.append(bool(v))
            elif spec.kind == "integer-adc":
                converted.append(int(v))
            else:
                converted.append(float(v))
        return cls(float(t), *converted)

    @property
    def bump(self) -> int:
        return bump_state(self.bump_left, self.bump_right)


assert tuple(f.name for f in fields(Observation)) == CSV_COLUMNS


def bump_state(bump_left: bool, bump_right: bool) -> int:
    """Combined bumper state: 0 none, 1 left, 2 right, 3 center (both switches)."""
    return int(bool(bump_left)) + 2 * int(bool(bump_right))


class SensorRangeError(ValueError):
    def __init__(self, field: str, value):
        super().__init__(f"{field}={value!r} outside its sensor range")
        self.field = field
        self.value = value


def validate_observation(obs: Observation, specs=SENSOR_SPECS) -> Observation:
    """Return ``obs`` unchanged if every reading is within range, else raise SensorRangeError."""
    names = [s.name for s in specs]
    if sorted(names) != sorted(SENSOR_NAMES):
        raise ValueError("sensor specs must cover all 15 variables")
    if not (math.isfinite(obs.t) and obs.t >= 0):
        raise SensorRangeError("t", obs.t)
    for spec in specs:
        value = getattr(obs, spec.name)
        if spec.is_boolean:
            if value not in (0, 1, True, False):
                raise SensorRangeError(spec.name, value)
            continue
        if not math.isfinite(value) or not spec.lo <= value <= spec.hi:
            raise SensorRangeError(spec.name, value)
        if spec.kind == "integer-adc" and value != int(value):
            raise SensorRangeError(spec.name, value)
    return obs


def clamp_to_spec(values: np.ndarray) -> np.ndarray:
    """Clamp a 15-vector into sensor ranges, rounding ADC channels and temperatures."""
    out = np.empty(N_SENSORS)
    for i, spec in enumerate(SENSOR_SPECS):
        v = min(max(values[i], spec.lo), spec.hi)
        if spec.kind == "integer-adc" or spec.is_boolean:
            v = float(round(v))
        else:
            v = round(v, 2)
        out[i] = v
    return out
