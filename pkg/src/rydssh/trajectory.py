"""Site-population time series and their comparison."""
import io
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = ["PopulationTrajectory", "compare_trajectories", "first_maximum_times"]


@dataclass
class PopulationTrajectory:
    """Populations sampled on a time grid.

    Attributes
    ----------
    times : ndarray, shape (T,)
        Times in us.
    populations : ndarray, shape (T, S)
        Per-site populations.
    labels : tuple of str
        Site labels, length S.
    ground : ndarray, shape (T,), optional
        Population of the all-ground (vacuum) state when dissipation feeds it.
    """

    times: np.ndarray
    populations: np.ndarray
    labels: tuple
    ground: np.ndarray = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.populations = np.asarray(self.populations, dtype=float)
        if self.ground is not None:
            self.ground = np.asarray(self.ground, dtype=float)
            if self.ground.shape != self.times.shape:
                raise DomainError("ground populations must match the time grid")
        if self.populations.shape != (self.times.size, len(self.labels)):
            raise DomainError(f"populations shape {self.populations.shape} does not match "
                              f"{self.times.size} times x {len(self.labels)} sites")

    def site(self, label):
        return self.populations[:, self.labels.index(label)]

    def subset(self, labels):
        idx = [self.labels.index(x) for x in labels]
        return PopulationTrajectory(self.times, self.populations[:, idx], tuple(labels), self.ground)

    def total(self):
        tot = self.populations.sum(axis=1)
        return tot + self.ground if self.ground is not None else tot

    def to_csv(self, path_or_buf=None, header=None):
        """Write ``time_us,<labels>[,ground]``; returns the text if no path is given."""
        cols = [self.times[:, None], self.populations]
        names = ["time_us", *self.labels]
        if self.ground is not None:
            cols.append(self.ground[:, None])
            names.append("ground")
        buf = io.StringIO()
        if header:
            for line in header:
                buf.write(f"# {line}\n")
        np.savetxt(buf, np.hstack(cols), delimiter=",", header=",".join(names), comments="",
                   fmt="%.12e")
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def compare_trajectories(traj_a, traj_b):
    """Supremum over sites and times of |p_A - p_B|.

    Sites are matched by label; only labels present in both are compared.

    Returns
    -------
    dict
        ``max_abs_deviation``, ``per_site`` (T x S array), ``labels``,
        and the site/time of the maximum.
    """
    if traj_a.times.shape != traj_b.times.shape or not np.allclose(traj_a.times, traj_b.times,
                                                                    rtol=0, atol=1e-12):
        raise DomainError("trajectories are sampled on different time grids")
    labels = tuple(x for x in traj_a.labels if x in traj_b.labels)
    if not labels:
        raise DomainError("trajectories share no site labels")
    dev = np.abs(traj_a.subset(labels).populations - traj_b.subset(labels).populations)
    t_idx, s_idx = np.unravel_index(np.argmax(dev), dev.shape)
    return {
        "max_abs_deviation": float(dev.max()),
        "per_site": dev,
        "labels": labels,
        "argmax_site": labels[s_idx],
        "argmax_time": float(traj_a.times[t_idx]),
    }


def first_maximum_times(traj, labels, threshold=1e-3):
    """Time of the first local maximum of each site population above ``threshold``."""
    out = {}
    for label in labels:
        p = traj.site(label)
        peak = np.flatnonzero((p[1:-1] >= p[:-2]) & (p[1:-1] > p[2:]) & (p[1:-1] > threshold))
        out[label] = float(traj.times[peak[0] + 1]) if peak.size else np.inf
    return out
