"""Master/slave placement and loiter mobility.

A fixed master relay hovers above the ground station; N slaves sit on the
vertices of a hexagon around it and each loiters on a small horizontal
circle about its formation point.  All positions are deterministic in t;
randomness lives in the jitter/turbulence models, not here.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Formation:
    n_slaves: int = 6
    master_pos: tuple[float, float, float] = (0.0, 0.0, 500.0)
    hex_radius_m: float = 250.0
    loiter_radius_m: float = 150.0
    loiter_rate_rad_s: float = 0.1
    phase_offsets: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.n_slaves < 1:
            raise ValueError("n_slaves must be >= 1")
        if not self.phase_offsets:
            self.phase_offsets = [2.0 * math.pi * i / self.n_slaves
                                  for i in range(self.n_slaves)]

    def formation_point(self, i: int) -> np.ndarray:
        # N <= 6 uses the first N vertices of the hexagon; larger N spreads evenly
        psi = 2.0 * math.pi * i / max(self.n_slaves, 6)
        mx, my, mz = self.master_pos
        return np.array([mx + self.hex_radius_m * math.cos(psi),
                         my + self.hex_radius_m * math.sin(psi),
                         mz])


def slave_position(formation: Formation, i: int, t: float) -> np.ndarray:
    """Slave i position at time t (s): formation point + loiter offset."""
    if not 0 <= i < formation.n_slaves:
        raise IndexError(f"slave index {i} out of range")
    phase = formation.phase_offsets[i] + formation.loiter_rate_rad_s * t
    offset = np.array([formation.loiter_radius_m * math.cos(phase),
                       formation.loiter_radius_m * math.sin(phase),
                       0.0])
    return formation.formation_point(i) + offset


def range_to_master(formation: Formation, i: int, t: float) -> float:
    d = slave_position(formation, i, t) - np.asarray(formation.master_pos)
    return float(np.linalg.norm(d))


def angular_separation(formation: Formation, i: int, j: int, t: float) -> float:
    """Angle (rad) at the master between lines of sight to slaves i and j."""
    if i == j:
        raise ValueError("angular separation undefined for i == j (no self-slew)")
    m = np.asarray(formation.master_pos)
    u = slave_position(formation, i, t) - m
    v = slave_position(formation, j, t) - m
    c = float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))
    return math.acos(min(1.0, max(-1.0, c)))


def positions_over_slots(formation: Formation, slot_times: np.ndarray) -> np.ndarray:
    """(T, N, 3) slave positions for an array of times (vectorized pregen)."""
    T = len(slot_times)
    out = np.empty((T, formation.n_slaves, 3))
    for i in range(formation.n_slaves):
        fp = formation.formation_point(i)
        phase = formation.phase_offsets[i] + formation.loiter_rate_rad_s * slot_times
        out[:, i, 0] = fp[0] + formation.loiter_radius_m * np.cos(phase)
        out[:, i, 1] = fp[1] + formation.loiter_radius_m * np.sin(phase)
        out[:, i, 2] = fp[2]
    return out


def ranges_and_units(formation: Formation,
                     slot_times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-slot ranges (T, N) and unit LOS vectors (T, N, 3) from the master."""
    pos = positions_over_slots(formation, slot_times)
    rel = pos - np.asarray(formation.master_pos)
    rng = np.linalg.norm(rel, axis=2)
    units = rel / rng[:, :, None]
    return rng, units


def max_slave_speed(formation: Formation) -> float:
    return formation.loiter_radius_m * formation.loiter_rate_rad_s


def write_mobility_csv(path, slots, slot_len_s, formation: Formation,
                       current_by_slot, stride: int = 10) -> None:
    """Mobility trace: (slot, slave, range_m, theta_to_current_deg)."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["slot", "slave", "range_m", "theta_to_current_deg"])
        for t in range(0, slots, stride):
            cur = current_by_slot[t]
            tt = t * slot_len_s
            for i in range(formation.n_slaves):
                if cur is None or cur < 0 or cur == i:
                    theta = 0.0
                else:
                    theta = math.degrees(angular_separation(formation, i, cur, tt))
                w.writerow([t, i, f"{range_to_master(formation, i, tt):.3f}",
                            f"{theta:.3f}"])
