"""Ground-truth rate, leakage and secrecy evaluation plus constraint checking.

This module is the single source of truth for the reported objective:
solvers may reason with surrogates and duals internally, but every
accepted iterate is scored here.

Conventions: trajectories are arrays Q of shape (M, N+1, 2); waypoint
index n carries transmission slot n (index 0 is the launch point).
Allocation arrays are indexed [slot, uav, user, subcarrier].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .channel import gains_along
from .scenario import Scenario


@dataclass
class AllocationState:
    """Communication/jamming schedules and powers for every (slot, uav, subcarrier)."""

    comm_sched: np.ndarray  # (N, M, KU, NF) {0,1}
    comm_power: np.ndarray  # (N, M, KU, NF) W
    jam_sched: np.ndarray  # (N, M, NF) {0,1}
    jam_power: np.ndarray  # (N, M, NF) W

    @staticmethod
    def zeros(sc: Scenario) -> "AllocationState":
        n, m, ku, nf = sc.n_slots, sc.n_uavs, sc.n_users, sc.num_subcarriers
        return AllocationState(
            comm_sched=np.zeros((n, m, ku, nf)),
            comm_power=np.zeros((n, m, ku, nf)),
            jam_sched=np.zeros((n, m, nf)),
            jam_power=np.zeros((n, m, nf)),
        )

    def copy(self) -> "AllocationState":
        return AllocationState(self.comm_sched.copy(), self.comm_power.copy(),
                               self.jam_sched.copy(), self.jam_power.copy())


def user_gains(Q: np.ndarray, sc: Scenario) -> np.ndarray:
    return gains_along(Q, sc.users, sc.altitude, sc.ref_gain)


def eve_gains(Q: np.ndarray, sc: Scenario) -> np.ndarray:
    return gains_along(Q, sc.eves, sc.altitude, sc.ref_gain)


def _jam_interference(state: AllocationState, gains: np.ndarray, n: int, m: int, k: int, i: int) -> float:
    acc = 0.0
    for mm in range(gains.shape[1]):
        if mm != m:
            acc += state.jam_sched[n, mm, i] * state.jam_power[n, mm, i] * gains[n, mm, k]
    return acc


def sinr_user(n, m, k, i, state: AllocationState, Q, sc: Scenario) -> float:
    """Received signal-to-interference-plus-noise ratio at user k."""
    hu = user_gains(Q, sc)
    inter = _jam_interference(state, hu, n, m, k, i)
    return state.comm_power[n, m, k, i] * hu[n, m, k] / (inter + sc.noise_power)


def sinr_eve(n, m, k, e, i, state: AllocationState, Q, sc: Scenario) -> float:
    """SINR at eavesdropper e attempting to decode user k's signal from uav m."""
    he = eve_gains(Q, sc)
    inter = _jam_interference(state, he, n, m, e, i)
    return state.comm_power[n, m, k, i] * he[n, m, e] / (inter + sc.noise_power)


def rate_user(n, m, k, i, state: AllocationState, Q, sc: Scenario) -> float:
    """Scheduled rate in bps/Hz; zero whenever the cell is unscheduled."""
    s = state.comm_sched[n, m, k, i]
    if s == 0:
        return 0.0
    return s * math.log2(1.0 + sinr_user(n, m, k, i, state, Q, sc))


def leakage_rate(n, m, k, e, i, state: AllocationState, Q, sc: Scenario) -> float:
    s = state.comm_sched[n, m, k, i]
    if s == 0:
        return 0.0
    return s * math.log2(1.0 + sinr_eve(n, m, k, e, i, state, Q, sc))


def per_user_secrecy(state: AllocationState, Q, sc: Scenario) -> np.ndarray:
    """Average per-user secrecy rates (worst-case eavesdropper, clipped per cell)."""
    user_avg, _ = kernels.secrecy_accumulate(
        state.comm_sched, state.comm_power, state.jam_sched, state.jam_power,
        user_gains(Q, sc), eve_gains(Q, sc), sc.noise_power)
    return user_avg


def pair_secrecy(state: AllocationState, Q, sc: Scenario) -> np.ndarray:
    """Unclipped per-(user, eavesdropper) average rate gaps (KU, KE)."""
    _, pair_avg = kernels.secrecy_accumulate(
        state.comm_sched, state.comm_power, state.jam_sched, state.jam_power,
        user_gains(Q, sc), eve_gains(Q, sc), sc.noise_power)
    return pair_avg


def avg_secrecy_rate(k: int, state: AllocationState, Q, sc: Scenario) -> float:
    return float(per_user_secrecy(state, Q, sc)[k])


def objective(state: AllocationState, Q, sc: Scenario) -> float:
    """Minimum over users of the average secrecy rate: the reported metric."""
    return float(per_user_secrecy(state, Q, sc).min())


def drop_negative_cells(state: AllocationState, Q, sc: Scenario) -> AllocationState:
    """Unschedule every cell whose unclipped worst-case secrecy term is negative.

    Never decreases the objective and never breaks the scheduling or power
    constraints (it only removes transmissions).
    """
    out = state.copy()
    hu = user_gains(Q, sc)
    he = eve_gains(Q, sc)
    n_slots, n_uav, n_users, n_sub = state.comm_sched.shape
    for n in range(n_slots):
        for m in range(n_uav):
            for k in range(n_users):
                for i in range(n_sub):
                    if out.comm_sched[n, m, k, i] == 0:
                        continue
                    r = rate_user(n, m, k, i, out, Q, sc)
                    worst = 0.0
                    for e in range(sc.n_eves):
                        worst = max(worst, leakage_rate(n, m, k, e, i, out, Q, sc))
                    if r - worst < 0.0:
                        out.comm_sched[n, m, k, i] = 0
                        out.comm_power[n, m, k, i] = 0.0
    return out


@dataclass
class ConstraintEntry:
    ok: bool
    violation: float
    where: str = ""


@dataclass
class ConstraintReport:
    entries: dict[str, ConstraintEntry] = field(default_factory=dict)

    @property
    def all_ok(self) -> bool:
        return all(e.ok for e in self.entries.values())

    def worst(self) -> float:
        return max((e.violation for e in self.entries.values()), default=0.0)

    def failures(self) -> list[str]:
        return [name for name, e in self.entries.items() if not e.ok]


def check_constraints(state: AllocationState, Q, sc: Scenario, tol: float = 1e-6) -> ConstraintReport:
    """Per-constraint pass/fail with worst violation magnitudes.

    Geometric checks use tol in meters (squared forms compared on the
    distance scale), power checks tol in watts.
    """
    rep = ConstraintReport()

    def add(name, violation, where=""):
        rep.entries[name] = ConstraintEntry(ok=violation <= tol, violation=float(violation), where=where)

    su, pu = state.comm_sched, state.comm_power
    sjj, pj = state.jam_sched, state.jam_power

    bin_dev = 0.0
    for arr in (su, sjj):
        if arr.size:
            bin_dev = max(bin_dev, float(np.abs(arr - np.round(arr)).max()),
                          float((arr < -tol).sum() and np.abs(arr[arr < 0]).max() or 0.0))
    add("binary_schedules", bin_dev)

    c4 = su.sum(axis=(1, 2)) - 1.0  # per (n, i)
    add("subcarrier_exclusivity", float(np.max(c4, initial=0.0)),
        _argmax_where(c4, ("slot", "subcarrier")))

    c5 = su.sum(axis=2) + sjj - 1.0  # per (n, m, i)
    add("role_exclusivity", float(np.max(c5, initial=0.0)),
        _argmax_where(c5, ("slot", "uav", "subcarrier")))

    used = (su * pu).sum(axis=(2, 3)) + (sjj * pj).sum(axis=2)  # per (n, m)
    c6 = used - sc.peak_powers[None, :]
    add("power_budget", float(np.max(c6, initial=0.0)), _argmax_where(c6, ("slot", "uav")))
    add("power_nonnegative", float(max(np.max(-pu, initial=0.0), np.max(-pj, initial=0.0))))

    steps = np.linalg.norm(np.diff(Q, axis=1), axis=2)  # (M, N)
    c7 = steps - sc.slot_cap
    add("speed_cap", float(np.max(c7, initial=0.0)), _argmax_where(c7, ("uav", "slot")))

    worst_nfz = 0.0
    where_nfz = ""
    for j, z in enumerate(sc.nfzs):
        d = np.linalg.norm(Q - np.asarray(z.center)[None, None, :], axis=2)
        v = float(np.max(z.radius - d, initial=0.0))
        if v > worst_nfz:
            worst_nfz, where_nfz = v, f"nfz {j}"
    add("nfz_clearance", worst_nfz, where_nfz)

    worst_sep = 0.0
    where_sep = ""
    for m in range(sc.n_uavs):
        for mm in range(m + 1, sc.n_uavs):
            d = np.linalg.norm(Q[m] - Q[mm], axis=1)
            v = float(np.max(sc.safety_distance - d, initial=0.0))
            if v > worst_sep:
                worst_sep, where_sep = v, f"uavs {m},{mm}"
    add("pairwise_separation", worst_sep, where_sep)

    ep = 0.0
    for m in range(sc.n_uavs):
        ep = max(ep,
                 float(np.linalg.norm(Q[m, 0] - np.asarray(sc.uavs[m].start))),
                 float(np.linalg.norm(Q[m, -1] - np.asarray(sc.uavs[m].end))))
    add("endpoints", ep)

    return rep


def _argmax_where(arr: np.ndarray, names) -> str:
    if arr.size == 0 or np.max(arr) <= 0:
        return ""
    idx = np.unravel_index(int(np.argmax(arr)), arr.shape)
    return ", ".join(f"{n} {i}" for n, i in zip(names, idx))
