"""Problem instances: geometry, channel constants, limits and discretization.

A Scenario is immutable after construction and safe to share between
concurrent solver runs. Config documents use dB/dBm; everything stored
here is linear SI (watts, meters, power ratios).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import yaml


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario document."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def watts_to_dbm(w: float) -> float:
    return 10.0 * math.log10(w * 1e3)


@dataclass(frozen=True)
class NoFlyZone:
    center: tuple[float, float]
    radius: float
    height: float


@dataclass(frozen=True)
class UavSpec:
    start: tuple[float, float]
    end: tuple[float, float]
    peak_power: float  # W


@dataclass(frozen=True, eq=False)
class Scenario:
    num_slots: int
    slot_duration: float  # s
    uavs: tuple[UavSpec, ...]
    users: np.ndarray  # (K_U, 2) m
    eves: np.ndarray  # (K_E, 2) m
    nfzs: tuple[NoFlyZone, ...]
    altitude: float  # m
    max_speed: float  # m/s
    safety_distance: float  # m
    num_subcarriers: int
    ref_gain: float  # linear power ratio at 1 m
    noise_power: float  # W per subcarrier
    bandwidth: float | None = None  # Hz, informational only (rates are bps/Hz)

    def __post_init__(self):
        object.__setattr__(self, "users", np.asarray(self.users, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "eves", np.asarray(self.eves, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "uavs", tuple(self.uavs))
        object.__setattr__(self, "nfzs", tuple(self.nfzs))

    # Shorthand dimension accessors used throughout the solvers.
    @property
    def n_slots(self) -> int:
        return self.num_slots

    @property
    def n_uavs(self) -> int:
        return len(self.uavs)

    @property
    def n_users(self) -> int:
        return self.users.shape[0]

    @property
    def n_eves(self) -> int:
        return self.eves.shape[0]

    @property
    def mission_time(self) -> float:
        return self.num_slots * self.slot_duration

    @property
    def slot_cap(self) -> float:
        """Maximum per-slot displacement."""
        return self.max_speed * self.slot_duration

    @property
    def peak_powers(self) -> np.ndarray:
        return np.array([u.peak_power for u in self.uavs])

    def starts(self) -> np.ndarray:
        return np.array([u.start for u in self.uavs], dtype=float)

    def ends(self) -> np.ndarray:
        return np.array([u.end for u in self.uavs], dtype=float)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.num_slots == other.num_slots
            and self.slot_duration == other.slot_duration
            and self.uavs == other.uavs
            and np.array_equal(self.users, other.users)
            and np.array_equal(self.eves, other.eves)
            and self.nfzs == other.nfzs
            and self.altitude == other.altitude
            and self.max_speed == other.max_speed
            and self.safety_distance == other.safety_distance
            and self.num_subcarriers == other.num_subcarriers
            and self.ref_gain == other.ref_gain
            and self.noise_power == other.noise_power
            and self.bandwidth == other.bandwidth
        )


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = field(default_factory=tuple)

    @property
    def feasible(self) -> bool:
        return not self.violations


_TOP_KEYS = {"time", "channel", "geometry", "uavs", "users", "eves", "nfzs", "subcarriers"}
_TIME_KEYS = {"T_s", "dt_s"}
_CHANNEL_KEYS = {"beta0_dB", "noise_dBm", "bandwidth_MHz"}
_GEOMETRY_KEYS = {"altitude_m", "vmax_mps", "safety_m"}
_UAV_KEYS = {"start", "end", "peak_dBm"}
_NFZ_KEYS = {"center", "radius_m", "height_m"}


def _require(cond: bool, msg: str):
    if not cond:
        raise ScenarioError(msg)


def _check_keys(mapping, allowed, required, where):
    _require(isinstance(mapping, dict), f"{where}: expected a mapping")
    unknown = set(mapping) - allowed
    _require(not unknown, f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(mapping)
    _require(not missing, f"{where}: missing keys {sorted(missing)}")


def _number(value, where):
    _require(isinstance(value, (int, float)) and not isinstance(value, bool), f"{where}: expected a number")
    _require(math.isfinite(value), f"{where}: non-finite value")
    return float(value)


def _point(value, where) -> tuple[float, float]:
    _require(isinstance(value, (list, tuple)) and len(value) == 2, f"{where}: expected [x, y]")
    return (_number(value[0], where), _number(value[1], where))


def load_scenario(text: str) -> Scenario:
    """Parse a YAML scenario document into a Scenario (linear SI units)."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"unparseable document: {exc}") from exc
    _require(isinstance(doc, dict) and doc, "empty or non-mapping document")
    _check_keys(doc, _TOP_KEYS, _TOP_KEYS - {"eves", "nfzs"}, "top level")

    time = doc["time"]
    _check_keys(time, _TIME_KEYS, _TIME_KEYS, "time")
    total = _number(time["T_s"], "time.T_s")
    dt = _number(time["dt_s"], "time.dt_s")
    _require(dt > 0, "time.dt_s: must be positive")
    n_slots = int(round(total / dt))
    _require(n_slots >= 1 and abs(n_slots * dt - total) <= 1e-9 * max(1.0, total),
             "time: T_s must be a positive integer multiple of dt_s")

    chan = doc["channel"]
    _check_keys(chan, _CHANNEL_KEYS, {"beta0_dB", "noise_dBm"}, "channel")
    ref_gain = db_to_linear(_number(chan["beta0_dB"], "channel.beta0_dB"))
    noise = dbm_to_watts(_number(chan["noise_dBm"], "channel.noise_dBm"))
    bandwidth = None
    if "bandwidth_MHz" in chan:
        bandwidth = _number(chan["bandwidth_MHz"], "channel.bandwidth_MHz") * 1e6

    geom = doc["geometry"]
    _check_keys(geom, _GEOMETRY_KEYS, _GEOMETRY_KEYS, "geometry")
    altitude = _number(geom["altitude_m"], "geometry.altitude_m")
    vmax = _number(geom["vmax_mps"], "geometry.vmax_mps")
    safety = _number(geom["safety_m"], "geometry.safety_m")

    uavs_doc = doc["uavs"]
    _require(isinstance(uavs_doc, list) and uavs_doc, "uavs: expected a non-empty list")
    uavs = []
    for j, u in enumerate(uavs_doc):
        _check_keys(u, _UAV_KEYS, _UAV_KEYS, f"uavs[{j}]")
        uavs.append(UavSpec(
            start=_point(u["start"], f"uavs[{j}].start"),
            end=_point(u["end"], f"uavs[{j}].end"),
            peak_power=dbm_to_watts(_number(u["peak_dBm"], f"uavs[{j}].peak_dBm")),
        ))

    users_doc = doc["users"]
    _require(isinstance(users_doc, list) and users_doc, "users: expected a non-empty list")
    users = np.array([_point(w, f"users[{j}]") for j, w in enumerate(users_doc)])
    eves_doc = doc.get("eves", [])
    _require(isinstance(eves_doc, list), "eves: expected a list")
    eves = np.array([_point(w, f"eves[{j}]") for j, w in enumerate(eves_doc)]).reshape(-1, 2)

    nfzs_doc = doc.get("nfzs", [])
    _require(isinstance(nfzs_doc, list), "nfzs: expected a list")
    nfzs = []
    for j, z in enumerate(nfzs_doc):
        _check_keys(z, _NFZ_KEYS, _NFZ_KEYS, f"nfzs[{j}]")
        nfzs.append(NoFlyZone(
            center=_point(z["center"], f"nfzs[{j}].center"),
            radius=_number(z["radius_m"], f"nfzs[{j}].radius_m"),
            height=_number(z["height_m"], f"nfzs[{j}].height_m"),
        ))

    n_sub = doc["subcarriers"]
    _require(isinstance(n_sub, int) and not isinstance(n_sub, bool) and n_sub >= 1,
             "subcarriers: expected a positive integer")

    _require(altitude > 0, "geometry.altitude_m: must be positive")
    _require(vmax > 0, "geometry.vmax_mps: must be positive")
    _require(safety > 0, "geometry.safety_m: must be positive")
    _require(ref_gain > 0 and noise > 0, "channel: gains and noise must be positive")
    for j, u in enumerate(uavs):
        _require(u.peak_power > 0, f"uavs[{j}]: peak power must be positive")
    for j, z in enumerate(nfzs):
        _require(z.radius > 0, f"nfzs[{j}]: radius must be positive")

    return Scenario(
        num_slots=n_slots, slot_duration=dt, uavs=tuple(uavs), users=users, eves=eves,
        nfzs=tuple(nfzs), altitude=altitude, max_speed=vmax, safety_distance=safety,
        num_subcarriers=n_sub, ref_gain=ref_gain, noise_power=noise, bandwidth=bandwidth,
    )


def dump_scenario(sc: Scenario) -> str:
    """Serialize back to the config schema (inverse of load_scenario)."""
    doc = {
        "time": {"T_s": sc.mission_time, "dt_s": sc.slot_duration},
        "channel": {
            "beta0_dB": linear_to_db(sc.ref_gain),
            "noise_dBm": watts_to_dbm(sc.noise_power),
        },
        "geometry": {
            "altitude_m": sc.altitude,
            "vmax_mps": sc.max_speed,
            "safety_m": sc.safety_distance,
        },
        "uavs": [
            {"start": list(u.start), "end": list(u.end), "peak_dBm": watts_to_dbm(u.peak_power)}
            for u in sc.uavs
        ],
        "users": [list(w) for w in sc.users.tolist()],
        "eves": [list(w) for w in sc.eves.tolist()],
        "nfzs": [
            {"center": list(z.center), "radius_m": z.radius, "height_m": z.height}
            for z in sc.nfzs
        ],
        "subcarriers": sc.num_subcarriers,
    }
    if sc.bandwidth is not None:
        doc["channel"]["bandwidth_MHz"] = sc.bandwidth / 1e6
    return yaml.safe_dump(doc, sort_keys=False)


def validate(sc: Scenario) -> ValidationReport:
    """Check structural invariants and reachability; findings are reported, not raised."""
    out: list[str] = []
    if sc.num_slots < 1:
        out.append("num_slots must be >= 1")
    if sc.slot_duration <= 0:
        out.append("slot_duration must be positive")
    if sc.num_subcarriers < 1:
        out.append("num_subcarriers must be >= 1")
    for name, val in (("altitude", sc.altitude), ("max_speed", sc.max_speed),
                      ("safety_distance", sc.safety_distance), ("ref_gain", sc.ref_gain),
                      ("noise_power", sc.noise_power)):
        if not (val > 0 and math.isfinite(val)):
            out.append(f"{name} must be positive and finite")

    for j, z in enumerate(sc.nfzs):
        if z.radius <= 0:
            out.append(f"nfz {j}: radius must be positive")
        if z.height <= sc.altitude:
            out.append(f"nfz {j}: height {z.height} m does not exceed flight altitude {sc.altitude} m")

    for m, u in enumerate(sc.uavs):
        if u.peak_power <= 0:
            out.append(f"uav {m}: peak power must be positive")
        for j, z in enumerate(sc.nfzs):
            for tag, q in (("initial", u.start), ("final", u.end)):
                d = math.hypot(q[0] - z.center[0], q[1] - z.center[1])
                if d <= z.radius:
                    out.append(f"uav {m}: {tag} position inside no-fly zone {j}")

    for m in range(sc.n_uavs):
        for mm in range(m + 1, sc.n_uavs):
            for tag, qa, qb in (("initial", sc.uavs[m].start, sc.uavs[mm].start),
                                ("final", sc.uavs[m].end, sc.uavs[mm].end)):
                d = math.hypot(qa[0] - qb[0], qa[1] - qb[1])
                if d < sc.safety_distance:
                    out.append(f"uavs {m},{mm}: {tag} separation {d:.3f} m below safety distance")

    # Reachability: the end point must be attainable within the slot budget.
    reach = sc.num_slots * sc.slot_cap
    for m, u in enumerate(sc.uavs):
        d = math.hypot(u.end[0] - u.start[0], u.end[1] - u.start[1])
        if d > reach + 1e-9:
            out.append(
                f"uav {m}: endpoint distance {d:.3f} m exceeds reachable "
                f"{sc.num_slots} slots x {sc.slot_cap:.3f} m = {reach:.3f} m"
            )

    return ValidationReport(tuple(out))


def default_scenario() -> Scenario:
    """The stock two-UAV, two-user, three-eavesdropper instance used by the CLI and tests."""
    ref_gain = 1e-5  # -50 dB
    return Scenario(
        num_slots=60,
        slot_duration=1.0,
        uavs=(
            UavSpec(start=(0.0, 0.0), end=(500.0, 0.0), peak_power=1.0),
            UavSpec(start=(0.0, 500.0), end=(500.0, 500.0), peak_power=1.0),
        ),
        users=np.array([[50.0, 50.0], [400.0, 450.0]]),
        eves=np.array([[70.0, 70.0], [150.0, 250.0], [250.0, 150.0]]),
        nfzs=(
            NoFlyZone(center=(150.0, 325.0), radius=60.0, height=150.0),
            NoFlyZone(center=(350.0, 325.0), radius=60.0, height=150.0),
        ),
        altitude=100.0,
        max_speed=20.0,
        safety_distance=50.0,
        num_subcarriers=16,
        ref_gain=ref_gain,
        # constructed as a ratio so ref_gain / noise_power == 1e8 exactly
        noise_power=ref_gain / 1e8,
        bandwidth=2e6,
    )
