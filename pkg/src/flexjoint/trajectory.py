"""C4 joint reference built from rest-to-rest degree-9 polynomial moves."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# s(x) = 126x^5 - 420x^6 + 540x^7 - 315x^8 + 70x^9: s(0)=0, s(1)=1, and
# derivatives 1..4 vanish at both ends.
_S = np.polynomial.Polynomial([0, 0, 0, 0, 0, 126, -420, 540, -315, 70])
_SD = [_S.deriv(k) for k in range(5)]


@dataclass(frozen=True)
class Segment:
    """Move to ``target`` (rad) over ``duration`` s; ``target=None`` holds."""

    duration: float
    target: tuple[float, ...] | None = None


class PolynomialTrajectory:
    """Piecewise reference q_r(t) with analytic derivatives up to order 4.

    Before the first segment and after the last one the reference rests at
    its start / final pose.
    """

    def __init__(self, start, segments):
        self.start = np.asarray(start, dtype=float)
        self.segments = list(segments)
        if not self.segments:
            raise ValueError("trajectory needs at least one segment")
        t0, pose = 0.0, self.start
        self._pieces = []
        for seg in self.segments:
            if not seg.duration > 0:
                raise ValueError("segment durations must be positive")
            end = pose if seg.target is None else np.asarray(seg.target, dtype=float)
            if end.shape != self.start.shape:
                raise ValueError("segment target has the wrong number of joints")
            self._pieces.append((t0, seg.duration, pose, end))
            t0, pose = t0 + seg.duration, end
        self.duration = t0
        self.final = pose
        self._starts = np.array([p[0] for p in self._pieces])

    @property
    def n_joints(self) -> int:
        return len(self.start)

    def derivatives(self, t) -> np.ndarray:
        """Array of shape (5, len(t), n): q_r and its derivatives 1..4."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros((5, len(t), self.n_joints))
        out[0] = self.start
        idx = np.searchsorted(self._starts, t, side="right") - 1
        for i, (t0, T, a, b) in enumerate(self._pieces):
            sel = idx == i
            if not sel.any():
                continue
            x = np.clip((t[sel] - t0) / T, 0.0, 1.0)
            span = b - a
            for k in range(5):
                val = _SD[k](x)[:, None] * span / T**k
                out[k, sel] = val + (a if k == 0 else 0.0)
        out[0, t >= self.duration] = self.final
        out[1:, t >= self.duration] = 0.0
        return out

    def __call__(self, t) -> np.ndarray:
        return self.derivatives(t)[0]


def default_tracking_trajectory() -> PolynomialTrajectory:
    """[-90, 0] -> [0, 90] deg (1.1 s), hold 0.5 s, back to [-90, 0] (1.1 s),
    hold 0.5 s: 3.2 s in total."""
    d = np.deg2rad
    return PolynomialTrajectory(
        d([-90.0, 0.0]),
        [Segment(1.1, tuple(d([0.0, 90.0]))), Segment(0.5), Segment(1.1, tuple(d([-90.0, 0.0]))), Segment(0.5)],
    )
