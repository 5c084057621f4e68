"""Subsampling, observation noise and diffusivity estimators.

The core object is the quadratic-variation tensor of a uniformly sampled
path: with N increments at spacing delta,

    K = (1/(2 N delta)) sum_n (x_{n+1} - x_n) (x_{n+1} - x_n)^T.

``box_estimate`` and ``shift_estimate`` are the two averaging refinements.
Both consume the full-resolution trajectory and a subsampling interval
delta = J dt_stored: box averaging replaces each bin of J consecutive
points by its mean before taking the quadratic variation; shift averaging
averages the J quadratic variations obtained on the delta-grids offset by
0, 1, ..., J-1 fine steps. All three normalize by the number of increments
actually summed, which makes J = 1 collapse onto the plain estimator
bitwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CommensurabilityError, InsufficientDataError, ParameterError
from .fields import FlowSpec
from .dynamics import Trajectory

PROVENANCES = ("qv", "box", "shift", "analytic", "spectral", "oracle")


@dataclass(frozen=True)
class ObservationSeries:
    """Positions retained at a uniform observation interval delta."""

    positions: np.ndarray  # (n_obs, 2)
    delta: float
    theta: float = 0.0

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ParameterError("positions must be an (n, 2) array")
        if pos.shape[0] < 2:
            raise InsufficientDataError("an observation series needs at least 2 points")
        object.__setattr__(self, "positions", pos)
        if not (math.isfinite(self.delta) and self.delta > 0.0):
            raise ParameterError(f"delta must be positive, got {self.delta!r}")
        if not (math.isfinite(self.theta) and self.theta >= 0.0):
            raise ParameterError(f"theta must be nonnegative, got {self.theta!r}")

    @property
    def n_obs(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class DiffusivityTensor:
    """Symmetric 2x2 diffusivity tensor plus provenance metadata.

    ``provenance`` records how the entries were produced; the remaining
    fields carry whatever run metadata makes sense for that provenance and
    stay None otherwise.
    """

    entries: np.ndarray
    provenance: str
    flow: FlowSpec | None = None
    kappa: float | None = None
    delta: float | None = None
    theta: float | None = None
    n_increments: int | None = None

    def __post_init__(self) -> None:
        ent = np.asarray(self.entries, dtype=float)
        if ent.shape != (2, 2):
            raise ParameterError("entries must be a 2x2 matrix")
        if ent[0, 1] != ent[1, 0]:
            raise ParameterError("entries must be symmetric")
        object.__setattr__(self, "entries", ent)
        if self.provenance not in PROVENANCES:
            raise ParameterError(
                f"provenance must be one of {PROVENANCES}, got {self.provenance!r}"
            )

    def project(self, xi) -> float:
        """Directional value xi . K xi (not normalized by |xi|^2)."""
        v = np.asarray(xi, dtype=float)
        if v.shape != (2,):
            raise ParameterError("xi must be a 2-vector")
        return float(v @ self.entries @ v)


def directional_component(tensor: DiffusivityTensor, direction: str) -> float:
    """Resolve a CLI/config direction spec against a tensor.

    "x" and "y" give the diagonal entries; "xi:a,b" gives the projection
    onto (a, b), unnormalized.
    """
    if direction == "x":
        return float(tensor.entries[0, 0])
    if direction == "y":
        return float(tensor.entries[1, 1])
    if direction.startswith("xi:"):
        parts = direction[3:].split(",")
        if len(parts) != 2:
            raise ParameterError(f"bad direction spec {direction!r}, expected xi:<a>,<b>")
        try:
            a, b = float(parts[0]), float(parts[1])
        except ValueError:
            raise ParameterError(f"bad direction spec {direction!r}, expected xi:<a>,<b>") from None
        return tensor.project((a, b))
    raise ParameterError(f"direction must be x, y or xi:<a>,<b>, got {direction!r}")


def _resolve_multiple(delta: float, dt_stored: float) -> tuple[int, float]:
    """(m, canonical delta = m * dt_stored) or CommensurabilityError."""
    if not (math.isfinite(delta) and delta > 0.0):
        raise ParameterError(f"delta must be positive, got {delta!r}")
    m = int(round(delta / dt_stored))
    if m < 1 or not math.isclose(m * dt_stored, delta, rel_tol=1e-9, abs_tol=0.0):
        raise CommensurabilityError(
            f"delta={delta!r} is not an integer multiple of dt_stored={dt_stored!r}"
        )
    return m, m * dt_stored


def subsample(traj: Trajectory, delta: float) -> ObservationSeries:
    """Retain every m-th stored point, m = delta / dt_stored.

    The trailing remainder shorter than delta is discarded. The series
    carries the canonical interval m * dt_stored, which removes float
    drift from repeated delta arithmetic downstream.
    """
    m, delta_c = _resolve_multiple(delta, traj.dt_stored)
    if traj.n_points < m + 1:
        raise InsufficientDataError(
            f"need at least {m + 1} stored points to subsample at delta={delta!r}, "
            f"got {traj.n_points}"
        )
    return ObservationSeries(traj.positions[::m], delta_c)


def add_observation_noise(series: ObservationSeries, theta: float, rng) -> ObservationSeries:
    """Perturb every coordinate by independent N(0, theta^2) noise.

    theta = 0 returns the input series object unchanged. ``rng`` is a
    numpy Generator (or a seed acceptable to numpy.random.default_rng);
    callers who need reproducibility across batch layouts should pass a
    stream keyed per realization, as the harness does.
    """
    if not (math.isfinite(theta) and theta >= 0.0):
        raise ParameterError(f"theta must be nonnegative, got {theta!r}")
    if theta == 0.0:
        return series
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    noisy = series.positions + theta * gen.standard_normal(series.positions.shape)
    return ObservationSeries(noisy, series.delta, math.hypot(series.theta, theta))


def _qv_tensor(points: np.ndarray, delta: float) -> tuple[np.ndarray, int]:
    """Quadratic-variation matrix of one point sequence and its increment count."""
    d = np.diff(points, axis=0)
    n_inc = d.shape[0]
    k00 = float(d[:, 0] @ d[:, 0])
    k01 = float(d[:, 0] @ d[:, 1])
    k11 = float(d[:, 1] @ d[:, 1])
    scale = 1.0 / (2.0 * n_inc * delta)
    return np.array([[k00 * scale, k01 * scale], [k01 * scale, k11 * scale]]), n_inc


def qv_estimate(series: ObservationSeries) -> DiffusivityTensor:
    """Quadratic-variation estimator (1/(2 N delta)) sum dx dx^T."""
    entries, n_inc = _qv_tensor(series.positions, series.delta)
    return DiffusivityTensor(entries, "qv", delta=series.delta,
                             theta=series.theta, n_increments=n_inc)


def box_estimate(traj: Trajectory, delta: float) -> DiffusivityTensor:
    """Box-averaged estimator at subsampling interval delta = J dt_stored.

    The stored points are grouped into consecutive bins of J points (the
    trailing partial bin is discarded), each bin is replaced by its mean,
    and the quadratic-variation formula is applied to the bin means with
    the increment-count normalization.
    """
    j, delta_c = _resolve_multiple(delta, traj.dt_stored)
    n_bins = traj.n_points // j
    if n_bins < 2:
        raise InsufficientDataError(
            f"need at least 2 full bins of {j} points, got {traj.n_points} points"
        )
    means = traj.positions[: n_bins * j].reshape(n_bins, j, 2).mean(axis=1)
    entries, n_inc = _qv_tensor(means, delta_c)
    return DiffusivityTensor(entries, "box", flow=traj.flow, delta=delta_c,
                             theta=0.0, n_increments=n_inc)


def shift_estimate(traj: Trajectory, delta: float) -> DiffusivityTensor:
    """Shift-averaged estimator at subsampling interval delta = J dt_stored.

    Averages the J quadratic-variation estimators computed on the
    delta-grids starting at offsets 0, 1, ..., J-1 fine steps, each with
    its own increment-count normalization.
    """
    j, delta_c = _resolve_multiple(delta, traj.dt_stored)
    if traj.n_points < 2 * j:
        raise InsufficientDataError(
            f"need at least {2 * j} stored points for {j} shifted grids of 2 points, "
            f"got {traj.n_points}"
        )
    total = np.zeros((2, 2))
    n_inc_min = None
    for s in range(j):
        entries, n_inc = _qv_tensor(traj.positions[s::j], delta_c)
        total += entries
        n_inc_min = n_inc if n_inc_min is None else min(n_inc_min, n_inc)
    return DiffusivityTensor(total / j, "shift", flow=traj.flow, delta=delta_c,
                             theta=0.0, n_increments=n_inc_min)
