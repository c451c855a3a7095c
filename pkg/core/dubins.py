"""
Shortest Dubins paths over all six words, closed-form, plus sampling.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .geometry import PathPolyline, PathRole, STATION_MERGE

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


class DubinsWord(Enum):
    LSL = "LSL"
    RSR = "RSR"
    LSR = "LSR"
    RSL = "RSL"
    RLR = "RLR"
    LRL = "LRL"

    @property
    def turns(self) -> Tuple[int, int, int]:
        """Curvature sign per segment: +1 left, -1 right, 0 straight"""
        sign = {"L": 1, "R": -1, "S": 0}
        return tuple(sign[c] for c in self.value)


# fixed order decides ties
WORD_ORDER = (DubinsWord.LSL, DubinsWord.RSR, DubinsWord.LSR, DubinsWord.RSL, DubinsWord.RLR, DubinsWord.LRL)


@dataclass(frozen=True)
class Pose:
    """Oriented configuration: position and heading"""
    x: float
    y: float
    psi: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.psi)):
            raise ValueError(f"Non-finite pose ({self.x}, {self.y}, {self.psi})")

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


def _mod2pi(angle: float) -> float:
    value = angle % TWO_PI
    return 0.0 if TWO_PI - value < 1e-9 else value


def _normalise_heading(angle: float) -> float:
    """Wrap to (-pi, pi]"""
    value = math.remainder(angle, TWO_PI)
    return math.pi if value == -math.pi else value


def _lsl(alpha, beta, d):
    sa, sb, ca, cb = math.sin(alpha), math.sin(beta), math.cos(alpha), math.cos(beta)
    tmp0 = d + sa - sb
    p_squared = 2.0 + d * d - 2.0 * math.cos(alpha - beta) + 2.0 * d * (sa - sb)
    if p_squared < -1e-12:
        return None
    tmp1 = math.atan2(cb - ca, tmp0)
    return _mod2pi(tmp1 - alpha), math.sqrt(max(p_squared, 0.0)), _mod2pi(beta - tmp1)


def _rsr(alpha, beta, d):
    sa, sb, ca, cb = math.sin(alpha), math.sin(beta), math.cos(alpha), math.cos(beta)
    tmp0 = d - sa + sb
    p_squared = 2.0 + d * d - 2.0 * math.cos(alpha - beta) + 2.0 * d * (sb - sa)
    if p_squared < -1e-12:
        return None
    tmp1 = math.atan2(ca - cb, tmp0)
    return _mod2pi(alpha - tmp1), math.sqrt(max(p_squared, 0.0)), _mod2pi(tmp1 - beta)


def _lsr(alpha, beta, d):
    sa, sb, ca, cb = math.sin(alpha), math.sin(beta), math.cos(alpha), math.cos(beta)
    p_squared = -2.0 + d * d + 2.0 * math.cos(alpha - beta) + 2.0 * d * (sa + sb)
    if p_squared < -1e-12:
        return None
    p = math.sqrt(max(p_squared, 0.0))
    tmp0 = math.atan2(-ca - cb, d + sa + sb) - math.atan2(-2.0, p)
    return _mod2pi(tmp0 - alpha), p, _mod2pi(tmp0 - _mod2pi(beta))


def _rsl(alpha, beta, d):
    sa, sb, ca, cb = math.sin(alpha), math.sin(beta), math.cos(alpha), math.cos(beta)
    p_squared = -2.0 + d * d + 2.0 * math.cos(alpha - beta) - 2.0 * d * (sa + sb)
    if p_squared < -1e-12:
        return None
    p = math.sqrt(max(p_squared, 0.0))
    tmp0 = math.atan2(ca + cb, d - sa - sb) - math.atan2(2.0, p)
    return _mod2pi(alpha - tmp0), p, _mod2pi(beta - tmp0)


def _rlr(alpha, beta, d):
    sa, sb, ca, cb = math.sin(alpha), math.sin(beta), math.cos(alpha), math.cos(beta)
    tmp0 = (6.0 - d * d + 2.0 * math.cos(alpha - beta) + 2.0 * d * (sa - sb)) / 8.0
    if abs(tmp0) > 1.0:
        return None
    phi = math.atan2(ca - cb, d - sa + sb)
    p = _mod2pi(TWO_PI - math.acos(tmp0))
    t = _mod2pi(alpha - phi + _mod2pi(p / 2.0))
    return t, p, _mod2pi(alpha - beta - t + _mod2pi(p))


def _lrl(alpha, beta, d):
    sa, sb, ca, cb = math.sin(alpha), math.sin(beta), math.cos(alpha), math.cos(beta)
    tmp0 = (6.0 - d * d + 2.0 * math.cos(alpha - beta) + 2.0 * d * (sb - sa)) / 8.0
    if abs(tmp0) > 1.0:
        return None
    phi = math.atan2(ca - cb, d + sa - sb)
    p = _mod2pi(TWO_PI - math.acos(tmp0))
    t = _mod2pi(-alpha - phi + p / 2.0)
    return t, p, _mod2pi(_mod2pi(beta) - alpha - t + _mod2pi(p))


_WORD_SOLVERS = {
    DubinsWord.LSL: _lsl,
    DubinsWord.RSR: _rsr,
    DubinsWord.LSR: _lsr,
    DubinsWord.RSL: _rsl,
    DubinsWord.RLR: _rlr,
    DubinsWord.LRL: _lrl,
}


def _arc_step(x: float, y: float, psi: float, turn: int, length: float, radius: float):
    if turn == 0:
        return x + length * math.cos(psi), y + length * math.sin(psi), psi
    phi = length / radius
    if turn > 0:
        return (x + radius * (math.sin(psi + phi) - math.sin(psi)),
                y + radius * (math.cos(psi) - math.cos(psi + phi)),
                psi + phi)
    return (x + radius * (math.sin(psi) - math.sin(psi - phi)),
            y + radius * (math.cos(psi - phi) - math.cos(psi)),
            psi - phi)


@dataclass(frozen=True)
class DubinsPath:
    """Three segments (lengths in metres) of a Dubins word from a start pose"""

    word: DubinsWord
    segment_lengths: Tuple[float, float, float]
    radius: float
    start: Pose

    @property
    def length(self) -> float:
        return float(sum(self.segment_lengths))

    @property
    def total_turn(self) -> float:
        """Absolute heading change summed over the arcs (rad)"""
        return float(sum(abs(t) * seg for t, seg in zip(self.word.turns, self.segment_lengths)) / self.radius)

    def junction_stations(self) -> np.ndarray:
        return np.cumsum(self.segment_lengths)[:-1]

    def pose_at(self, s: float) -> Pose:
        """Pose after arclength s; heading unwrapped from the start heading"""
        if s < -1e-9 or s > self.length + 1e-9:
            raise ValueError(f"Arclength {s} outside [0, {self.length}]")
        x, y, psi = self.start.x, self.start.y, self.start.psi
        remaining = max(s, 0.0)
        for turn, seg in zip(self.word.turns, self.segment_lengths):
            if remaining <= 0.0:
                break
            take = min(remaining, seg)
            x, y, psi = _arc_step(x, y, psi, turn, take, self.radius)
            remaining -= take
        return Pose(x, y, psi)

    def end_pose(self) -> Pose:
        end = self.pose_at(self.length)
        return Pose(end.x, end.y, _normalise_heading(end.psi))

    def curvature_at(self, s: float) -> float:
        """Signed curvature of the segment containing s (junctions take the next one)"""
        ends = np.cumsum(self.segment_lengths)
        for turn, end in zip(self.word.turns, ends):
            if s < end:
                return turn / self.radius
        return self.word.turns[-1] / self.radius


def dubins_word_lengths(q0: Pose, q1: Pose, radius: float) -> Dict[DubinsWord, Tuple[float, float, float]]:
    """Segment lengths (metres) for every feasible word"""
    if not radius > 0:
        raise ValueError(f"Dubins radius must be positive, got {radius}")
    dx, dy = q1.x - q0.x, q1.y - q0.y
    d = math.hypot(dx, dy) / radius
    theta = _mod2pi(math.atan2(dy, dx))
    alpha = _mod2pi(q0.psi - theta)
    beta = _mod2pi(q1.psi - theta)

    words = {}
    for word in WORD_ORDER:
        params = _WORD_SOLVERS[word](alpha, beta, d)
        if params is not None:
            words[word] = tuple(v * radius for v in params)
    return words


def shortest_dubins(q0: Pose, q1: Pose, radius: float) -> DubinsPath:
    """Shortest path over the six words; ties resolved by word order"""
    best: Optional[DubinsPath] = None
    for word, lengths in dubins_word_lengths(q0, q1, radius).items():
        total = sum(lengths)
        if best is None or total < best.length - 1e-12 * (1.0 + best.length):
            best = DubinsPath(word, lengths, radius, q0)
    if best is None:
        raise RuntimeError("No feasible Dubins word")
    logger.debug(f"Dubins {best.word.value} length {best.length:.3f} m (R={radius:.2f})")
    return best


def sample_dubins_stations(path: DubinsPath, stations: Sequence[float]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Positions (k, 2), unwrapped headings and curvatures at arclength stations"""
    xy = np.empty((len(stations), 2))
    psi = np.empty(len(stations))
    kappa = np.empty(len(stations))
    for k, s in enumerate(stations):
        pose = path.pose_at(min(max(float(s), 0.0), path.length))
        xy[k] = pose.x, pose.y
        psi[k] = pose.psi
        kappa[k] = path.curvature_at(float(s))
    return xy, psi, kappa


def dubins_stations(path: DubinsPath, spacing: float) -> np.ndarray:
    """Multiples of spacing, segment junctions and the end, each exactly once"""
    if not spacing > 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    total = path.length
    merge = STATION_MERGE * spacing
    grid = np.arange(0, int(math.floor(total / spacing)) + 1) * spacing
    junctions = []
    for s in path.junction_stations():
        if merge < s < total - merge and all(abs(s - j) > merge for j in junctions):
            junctions.append(float(s))
    keep = [s for s in grid if s < total - merge and all(abs(s - j) > merge for j in junctions)]
    return np.array(sorted(keep + junctions) + [total])


def sample_dubins(path: DubinsPath, spacing: float, role: PathRole = PathRole.TRANSITION) -> PathPolyline:
    """Polyline through the path at multiples of spacing, junctions and the end"""
    xy, _, _ = sample_dubins_stations(path, dubins_stations(path, spacing))
    return PathPolyline.from_points(xy, role=role)
