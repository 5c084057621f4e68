"""Time integration of the Lagrangian tracer dynamics.

The unrescaled dynamics is

    dx = v(x, t) dt + sqrt(2 kappa) dW,

and for a scale separation parameter eps < 1 the rescaled process obeys

    dx = (1/eps) v(x/eps, t/eps^2) dt + sqrt(2 kappa) dW,

which is the equation satisfied by eps * x(t / eps^2). eps = 1 reduces to
the unrescaled form bitwise (all rescaling factors become exact identities
in floating point).

Two integrators are provided. ``simulate_em`` is an Euler-Maruyama scheme
valid for every catalog flow. ``simulate_shear_exact`` exploits the
triangular structure of the shear family: the first coordinate is exactly
Brownian, so it is sampled exactly on the time grid, and the second
coordinate only needs a quadrature of eta(s) sin(x(s)) along that exact
path plus an independent exact Brownian part. Both integrators advance the
Ornstein-Uhlenbeck modulation by its exact one step transition.

Randomness is organized so ensembles are reproducible independently of
batching: realization r of a run with master seed s draws from generators
keyed by (s, r, source), one source tag per noise channel. Simulating
realization r alone or inside any block yields bitwise identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import IntegrationBlowupError, ParameterError, UnsupportedFlowError
from .fields import (
    CHILDRESS_SOWARD,
    OU_SHEAR,
    PERIODIC_SHEAR,
    TAYLOR_GREEN,
    FlowSpec,
    _childress_soward_uv,
    _taylor_green_uv,
)

# substream tags; (master seed, realization index, tag) identifies a stream
SOURCE_BM = 0      # 2-D Brownian driver of the position equation
SOURCE_OU = 1      # Brownian driver of the OU modulation
SOURCE_ETA0 = 2    # stationary initial draw for eta
SOURCE_NOISE = 3   # observation noise, consumed by the harness

_CHUNK = 4096

INTEGRATORS = ("em", "shear_exact")


def stream_generator(seed: int, realization: int, source: int) -> np.random.Generator:
    """Independent generator for one (seed, realization, source) triple."""
    ss = np.random.SeedSequence((int(seed), int(realization), int(source)))
    return np.random.Generator(np.random.PCG64(ss))


def noise_generator(seed: int, realization: int, index: int = 0) -> np.random.Generator:
    """Observation-noise stream, independent of all dynamics streams.

    ``index`` separates repeated noise applications to the same realization
    (one per subsampling interval in a sweep, for instance).
    """
    ss = np.random.SeedSequence((int(seed), int(realization), SOURCE_NOISE, int(index)))
    return np.random.Generator(np.random.PCG64(ss))


# ---------------------------------------------------------------------------
# configuration and trajectory containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    """All knobs of one trajectory integration.

    Attributes
    ----------
    kappa : float
        Molecular diffusivity, positive.
    dt : float
        Integration step. For rescaled runs (epsilon < 1) the step must
        resolve the fast scale: dt <= epsilon^2 / 50.
    t_final : float
        Time horizon T >= dt.
    epsilon : float
        Scale separation parameter; 1 means unrescaled.
    x0 : tuple of float
        Initial position.
    eta0 : float or "stationary"
        Initial OU modulation state; "stationary" draws from N(0, sigma/alpha).
    seed : int
        Master seed of the run.
    store_stride : int
        Positions are retained every store_stride steps.
    burn_in : float
        Time integrated and discarded before the stored segment starts.
    """

    kappa: float
    dt: float = 1e-3
    t_final: float = 1.0
    epsilon: float = 1.0
    x0: tuple[float, float] = (0.0, 0.0)
    eta0: float | str = "stationary"
    seed: int = 0
    store_stride: int = 1
    burn_in: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.kappa) and self.kappa > 0.0):
            raise ParameterError(f"kappa must be positive, got {self.kappa!r}")
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ParameterError(f"dt must be positive, got {self.dt!r}")
        if not (math.isfinite(self.t_final) and self.t_final >= self.dt):
            raise ParameterError("t_final must be at least dt")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0.0):
            raise ParameterError(f"epsilon must be positive, got {self.epsilon!r}")
        if int(self.store_stride) != self.store_stride or self.store_stride < 1:
            raise ParameterError(f"store_stride must be a positive integer, got {self.store_stride!r}")
        if not (math.isfinite(self.burn_in) and self.burn_in >= 0.0):
            raise ParameterError(f"burn_in must be nonnegative, got {self.burn_in!r}")
        if self.epsilon < 1.0 and self.dt > self.epsilon ** 2 / 50.0 * (1.0 + 1e-12):
            raise ParameterError(
                f"rescaled run with epsilon={self.epsilon} requires dt <= epsilon^2/50 "
                f"= {self.epsilon ** 2 / 50.0:g}, got dt={self.dt}"
            )
        if isinstance(self.eta0, str):
            if self.eta0 != "stationary":
                raise ParameterError(f"eta0 must be a number or 'stationary', got {self.eta0!r}")
        elif not math.isfinite(float(self.eta0)):
            raise ParameterError(f"eta0 must be finite, got {self.eta0!r}")
        if len(self.x0) != 2:
            raise ParameterError("x0 must have two components")

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.t_final / self.dt + 1e-9))

    @property
    def n_stored(self) -> int:
        return self.n_steps // self.store_stride + 1

    @property
    def dt_stored(self) -> float:
        return self.store_stride * self.dt

    @property
    def burn_steps(self) -> int:
        return int(math.floor(self.burn_in / self.dt + 1e-9))


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled 2-D path plus the metadata that produced it."""

    positions: np.ndarray  # (n, 2), row i is the position at time i * dt_stored
    dt_stored: float
    flow: FlowSpec | None = None
    config: SimConfig | None = None

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2 or pos.shape[0] < 1:
            raise ParameterError("positions must be an (n, 2) array with n >= 1")
        object.__setattr__(self, "positions", pos)
        if not (math.isfinite(self.dt_stored) and self.dt_stored > 0.0):
            raise ParameterError(f"dt_stored must be positive, got {self.dt_stored!r}")
        if self.config is not None and pos.shape[0] != self.config.n_stored:
            raise ParameterError(
                f"expected {self.config.n_stored} stored positions, got {pos.shape[0]}"
            )

    @property
    def n_points(self) -> int:
        return self.positions.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_points) * self.dt_stored


# ---------------------------------------------------------------------------
# OU modulation
# ---------------------------------------------------------------------------


def ou_step(eta, alpha: float, sigma: float, dt: float, gaussian):
    """Exact one-step transition of d eta = -alpha eta dt + sqrt(2 sigma) d beta.

    Returns exp(-alpha dt) eta + sqrt((sigma/alpha)(1 - exp(-2 alpha dt))) g
    for a standard normal draw g. Preserves the stationary law N(0, sigma/alpha).
    """
    if not (math.isfinite(alpha) and alpha > 0.0):
        raise ParameterError(f"alpha must be positive, got {alpha!r}")
    if not (math.isfinite(sigma) and sigma >= 0.0):
        raise ParameterError(f"sigma must be nonnegative, got {sigma!r}")
    if not (math.isfinite(dt) and dt > 0.0):
        raise ParameterError(f"dt must be positive, got {dt!r}")
    decay = math.exp(-alpha * dt)
    scale = math.sqrt(sigma / alpha * -math.expm1(-2.0 * alpha * dt))
    return decay * eta + scale * gaussian


def stationary_eta_draw(alpha: float, sigma: float, rng) -> float:
    """One draw from the stationary law N(0, sigma/alpha) of the OU modulation."""
    if not (math.isfinite(alpha) and alpha > 0.0):
        raise ParameterError(f"alpha must be positive, got {alpha!r}")
    if not (math.isfinite(sigma) and sigma >= 0.0):
        raise ParameterError(f"sigma must be nonnegative, got {sigma!r}")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return math.sqrt(sigma / alpha) * float(gen.standard_normal())


# ---------------------------------------------------------------------------
# integration engines
# ---------------------------------------------------------------------------


def _raise_if_not_finite(x: np.ndarray, y: np.ndarray, step: int, first: int) -> None:
    bad = ~(np.isfinite(x) & np.isfinite(y))
    if bad.any():
        i = int(np.argmax(bad))
        raise IntegrationBlowupError(
            step, f"non-finite state in realization {first + i} at step {step}"
        )


def _ou_setup(flow: FlowSpec, config: SimConfig, first: int, count: int, dt_mod: float):
    """Initial eta vector, per-realization driver generators and AR(1) constants."""
    decay = math.exp(-flow.alpha * dt_mod)
    scale = math.sqrt(flow.sigma / flow.alpha * -math.expm1(-2.0 * flow.alpha * dt_mod))
    if config.eta0 == "stationary":
        eta = np.array([
            stationary_eta_draw(flow.alpha, flow.sigma,
                                stream_generator(config.seed, first + i, SOURCE_ETA0))
            for i in range(count)
        ])
    else:
        eta = np.full(count, float(config.eta0))
    gens = [stream_generator(config.seed, first + i, SOURCE_OU) for i in range(count)]
    return eta, gens, decay, scale


def _em_block(flow: FlowSpec, config: SimConfig, first: int, count: int) -> np.ndarray:
    stride = config.store_stride
    n_stored = config.n_stored
    span = stride * (n_stored - 1)
    burn = config.burn_steps
    dt = config.dt
    eps = config.epsilon
    inv_eps = 1.0 / eps
    eps_sq = eps * eps
    drift_dt = dt * inv_eps
    noise_scale = math.sqrt(2.0 * config.kappa * dt)
    kind = flow.kind

    gens = [stream_generator(config.seed, first + i, SOURCE_BM) for i in range(count)]
    x = np.full(count, float(config.x0[0]))
    y = np.full(count, float(config.x0[1]))

    eta = gens_ou = None
    ou_decay = ou_scale = 0.0
    if kind == OU_SHEAR:
        eta, gens_ou, ou_decay, ou_scale = _ou_setup(flow, config, first, count, dt / eps_sq)

    out = np.empty((count, n_stored, 2))
    if burn == 0:
        _raise_if_not_finite(x, y, 0, first)
        out[:, 0, 0] = x
        out[:, 0, 1] = y

    g_bm = np.empty((count, _CHUNK, 2))
    g_ou = np.empty((count, _CHUNK)) if kind == OU_SHEAR else None

    total = burn + span
    step = 0
    while step < total:
        c = min(_CHUNK, total - step)
        for i, g in enumerate(gens):
            g_bm[i, :c] = g.standard_normal((c, 2))
        if gens_ou is not None:
            for i, g in enumerate(gens_ou):
                g_ou[i, :c] = g.standard_normal(c)
        for local in range(c):
            if flow.is_shear:
                if kind == PERIODIC_SHEAR:
                    eta_now = math.sin(flow.omega * ((step + local) * dt / eps_sq))
                elif kind == OU_SHEAR:
                    eta_now = eta
                else:
                    eta_now = 1.0
                y = y + drift_dt * (eta_now * np.sin(x * inv_eps)) + noise_scale * g_bm[:, local, 1]
                x = x + noise_scale * g_bm[:, local, 0]
            else:
                if kind == TAYLOR_GREEN:
                    v1, v2 = _taylor_green_uv(x * inv_eps, y * inv_eps)
                else:
                    v1, v2 = _childress_soward_uv(x * inv_eps, y * inv_eps, flow.lam)
                x = x + drift_dt * v1 + noise_scale * g_bm[:, local, 0]
                y = y + drift_dt * v2 + noise_scale * g_bm[:, local, 1]
            if kind == OU_SHEAR:
                eta = ou_decay * eta + ou_scale * g_ou[:, local]
            done = step + local + 1
            if done >= burn and (done - burn) % stride == 0:
                j = (done - burn) // stride
                out[:, j, 0] = x
                out[:, j, 1] = y
                _raise_if_not_finite(x, y, done, first)
        step += c
    return out


def _shear_exact_block(flow: FlowSpec, config: SimConfig, first: int, count: int) -> np.ndarray:
    if not flow.is_shear:
        raise UnsupportedFlowError(
            f"exact sampler applies to the shear family only, not {flow.kind}"
        )
    if config.epsilon != 1.0:
        raise ParameterError("the exact shear sampler requires epsilon = 1")

    stride = config.store_stride
    n_stored = config.n_stored
    span = stride * (n_stored - 1)
    burn = config.burn_steps
    dt = config.dt
    noise_scale = math.sqrt(2.0 * config.kappa * dt)
    kind = flow.kind

    gens = [stream_generator(config.seed, first + i, SOURCE_BM) for i in range(count)]
    x = np.full(count, float(config.x0[0]))
    y = np.full(count, float(config.x0[1]))

    eta = gens_ou = None
    ou_decay = ou_scale = 0.0
    if kind == OU_SHEAR:
        eta, gens_ou, ou_decay, ou_scale = _ou_setup(flow, config, first, count, dt)

    def advance(n_sub: int, step0: int):
        """Advance every realization n_sub exact steps from absolute step step0."""
        nonlocal x, y, eta
        g = np.empty((count, n_sub, 2))
        for i, gen in enumerate(gens):
            g[i] = gen.standard_normal((n_sub, 2))
        x_path = x[:, None] + noise_scale * np.cumsum(g[:, :, 0], axis=1)
        x_left = np.concatenate([x[:, None], x_path[:, :-1]], axis=1)
        if kind == OU_SHEAR:
            g_mod = np.empty((count, n_sub))
            for i, gen in enumerate(gens_ou):
                g_mod[i] = gen.standard_normal(n_sub)
            eta_path, _ = lfilter([ou_scale], [1.0, -ou_decay], g_mod,
                                  axis=1, zi=(ou_decay * eta)[:, None])
            eta_left = np.concatenate([eta[:, None], eta_path[:, :-1]], axis=1)
            eta = eta_path[:, -1]
        elif kind == PERIODIC_SHEAR:
            eta_left = np.sin(flow.omega * ((step0 + np.arange(n_sub)) * dt))
        else:
            eta_left = 1.0
        increments = eta_left * np.sin(x_left) * dt + noise_scale * g[:, :, 1]
        y_path = y[:, None] + np.cumsum(increments, axis=1)
        x = x_path[:, -1]
        y = y_path[:, -1]
        return x_path, y_path

    # burn phase, nothing stored
    step = 0
    while step < burn:
        c = min(_CHUNK, burn - step)
        advance(c, step)
        step += c

    out = np.empty((count, n_stored, 2))
    _raise_if_not_finite(x, y, burn, first)
    out[:, 0, 0] = x
    out[:, 0, 1] = y

    chunk = stride * max(1, _CHUNK // stride)
    done = 0
    j = 0
    while done < span:
        c = min(chunk, span - done)
        x_path, y_path = advance(c, burn + done)
        sel = slice(stride - 1, c, stride)
        nj = c // stride
        out[:, j + 1: j + 1 + nj, 0] = x_path[:, sel]
        out[:, j + 1: j + 1 + nj, 1] = y_path[:, sel]
        _raise_if_not_finite(x, y, burn + done + c, first)
        done += c
        j += nj
    return out


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------


def simulate_ensemble(flow: FlowSpec, config: SimConfig, n_realizations: int,
                      integrator: str = "em", first_realization: int = 0) -> np.ndarray:
    """Simulate a block of realizations.

    Returns an (n_realizations, n_stored, 2) array. Realization r draws
    from substreams keyed by (config.seed, first_realization + r, source),
    so blocks compose: simulating [0, 200) in one call or in any partition
    yields bitwise identical rows.
    """
    if n_realizations < 1:
        raise ParameterError("n_realizations must be at least 1")
    if integrator == "em":
        return _em_block(flow, config, first_realization, n_realizations)
    if integrator == "shear_exact":
        return _shear_exact_block(flow, config, first_realization, n_realizations)
    raise ParameterError(f"integrator must be one of {INTEGRATORS}, got {integrator!r}")


def simulate_em(flow: FlowSpec, config: SimConfig) -> Trajectory:
    """Euler-Maruyama integration of one trajectory.

    The position advances with the start-of-step velocity; the OU
    modulation advances by its exact transition after the position step
    consumed the start-of-step value. Identical (flow, config) inputs
    reproduce bitwise identical trajectories.
    """
    positions = _em_block(flow, config, 0, 1)[0]
    return Trajectory(positions, config.dt_stored, flow, config)


def simulate_shear_exact(flow: FlowSpec, config: SimConfig) -> Trajectory:
    """Exact-statistics sampler for the shear family.

    The first coordinate is sampled exactly as x0 + sqrt(2 kappa) W1(t) on
    the dt grid. The second coordinate accumulates the left endpoint
    quadrature of eta(s) sin(x(s)) ds plus an exact independent Brownian
    part sqrt(2 kappa) W2(t). Only the quadrature of the smooth integrand
    carries a discretization error; both Brownian parts and the OU
    modulation are exact in law on the grid.
    """
    positions = _shear_exact_block(flow, config, 0, 1)[0]
    return Trajectory(positions, config.dt_stored, flow, config)
