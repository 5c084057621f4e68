"""Catalog of periodic incompressible velocity fields.

Every flow in the catalog is 2*pi-periodic in both spatial coordinates,
divergence free and has zero spatial mean over the cell [0, 2*pi]^2.
Velocities derive from a stream function psi through the perpendicular
gradient, v = (-dpsi/dy, dpsi/dx), so incompressibility holds by
construction. The three shear flows share the spatial factor sin(x) and
differ only in the time modulation eta(t):

    shear               v = (0, sin x)
    periodic_shear      v = (0, sin(omega t) sin x)
    ou_shear            v = (0, eta(t) sin x),  d eta = -alpha eta dt + sqrt(2 sigma) d beta

The two cellular flows are time independent:

    taylor_green        psi = sin x sin y
    childress_soward    psi = sin x sin y + lam cos x cos y,  lam in [0, 1]

All expressions (velocities and their derivatives) are hard coded; there is
no runtime expression parser.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

# canonical kind tags, also used in config files and on the command line
STEADY_SHEAR = "shear"
PERIODIC_SHEAR = "periodic_shear"
OU_SHEAR = "ou_shear"
TAYLOR_GREEN = "taylor_green"
CHILDRESS_SOWARD = "childress_soward"

FLOW_KINDS = (STEADY_SHEAR, PERIODIC_SHEAR, OU_SHEAR, TAYLOR_GREEN, CHILDRESS_SOWARD)
SHEAR_FAMILY = (STEADY_SHEAR, PERIODIC_SHEAR, OU_SHEAR)
TIME_INDEPENDENT = (STEADY_SHEAR, TAYLOR_GREEN, CHILDRESS_SOWARD)


@dataclass(frozen=True)
class FlowSpec:
    """Tagged description of one velocity field.

    Parameters
    ----------
    kind : str
        One of ``FLOW_KINDS``.
    omega : float, optional
        Angular frequency of the periodic modulation (periodic_shear only).
    alpha : float, optional
        Mean reversion rate of the OU modulation (ou_shear only).
    sigma : float, optional
        Noise intensity of the OU modulation (ou_shear only).
    lam : float, optional
        Interpolation parameter in [0, 1] (childress_soward only).
    """

    kind: str
    omega: float | None = None
    alpha: float | None = None
    sigma: float | None = None
    lam: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in FLOW_KINDS:
            raise ParameterError(f"unknown flow kind {self.kind!r}; expected one of {FLOW_KINDS}")
        if self.kind == PERIODIC_SHEAR:
            if self.omega is None or not np.isfinite(self.omega) or self.omega <= 0:
                raise ParameterError("periodic_shear requires omega > 0")
        elif self.omega is not None:
            raise ParameterError(f"omega is not a parameter of {self.kind}")
        if self.kind == OU_SHEAR:
            if self.alpha is None or not np.isfinite(self.alpha) or self.alpha <= 0:
                raise ParameterError("ou_shear requires alpha > 0")
            if self.sigma is None or not np.isfinite(self.sigma) or self.sigma < 0:
                raise ParameterError("ou_shear requires sigma >= 0")
        else:
            if self.alpha is not None or self.sigma is not None:
                raise ParameterError(f"alpha/sigma are not parameters of {self.kind}")
        if self.kind == CHILDRESS_SOWARD:
            if self.lam is None or not np.isfinite(self.lam) or not 0.0 <= self.lam <= 1.0:
                raise ParameterError("childress_soward requires lam in [0, 1]")
        elif self.lam is not None:
            raise ParameterError(f"lam is not a parameter of {self.kind}")

    @property
    def is_shear(self) -> bool:
        return self.kind in SHEAR_FAMILY

    @property
    def is_time_independent(self) -> bool:
        return self.kind in TIME_INDEPENDENT


@dataclass
class ModulationState:
    """Modulation amplitude eta(t); equals 1 for time-independent flows."""

    eta: float = 1.0


def steady_shear() -> FlowSpec:
    return FlowSpec(STEADY_SHEAR)


def periodic_shear(omega: float) -> FlowSpec:
    return FlowSpec(PERIODIC_SHEAR, omega=omega)


def ou_shear(alpha: float, sigma: float) -> FlowSpec:
    return FlowSpec(OU_SHEAR, alpha=alpha, sigma=sigma)


def taylor_green() -> FlowSpec:
    return FlowSpec(TAYLOR_GREEN)


def childress_soward(lam: float) -> FlowSpec:
    return FlowSpec(CHILDRESS_SOWARD, lam=lam)


def flow_label(flow: FlowSpec) -> str:
    """Short human readable label including parameter values."""
    if flow.kind == PERIODIC_SHEAR:
        return f"{flow.kind}(omega={flow.omega:g})"
    if flow.kind == OU_SHEAR:
        return f"{flow.kind}(alpha={flow.alpha:g}, sigma={flow.sigma:g})"
    if flow.kind == CHILDRESS_SOWARD:
        return f"{flow.kind}(lam={flow.lam:g})"
    return flow.kind


# ---------------------------------------------------------------------------
# velocity kernels
#
# The *_uv helpers evaluate on plain ndarrays so the integrators can reuse
# them on whole ensembles at once. eta enters multiplicatively for the shear
# family and is ignored by the cellular flows.
# ---------------------------------------------------------------------------


def _shear_uv(x, y, eta):
    v1 = np.zeros_like(np.asarray(x, dtype=float))
    v2 = eta * np.sin(x)
    return v1, v2


def _taylor_green_uv(x, y):
    # psi = sin x sin y
    return -np.sin(x) * np.cos(y), np.cos(x) * np.sin(y)


def _childress_soward_uv(x, y, lam):
    # psi = sin x sin y + lam cos x cos y
    sx, cx = np.sin(x), np.cos(x)
    sy, cy = np.sin(y), np.cos(y)
    v1 = -sx * cy + lam * cx * sy
    v2 = cx * sy - lam * sx * cy
    return v1, v2


def modulation(flow: FlowSpec, time: float, state: ModulationState | None = None) -> float:
    """Modulation amplitude eta at the given time.

    For ou_shear the amplitude is carried by ``state``; for periodic_shear
    it is sin(omega * time), computed here; steady flows return 1.
    """
    if flow.kind == PERIODIC_SHEAR:
        return np.sin(flow.omega * time)
    if flow.kind == OU_SHEAR:
        if state is None:
            raise ParameterError("ou_shear requires a ModulationState carrying eta(t)")
        return state.eta
    return 1.0


def eval_velocity(flow: FlowSpec, position, time: float = 0.0,
                  state: ModulationState | None = None) -> np.ndarray:
    """Velocity of ``flow`` at ``position`` and ``time``.

    Parameters
    ----------
    flow : FlowSpec
    position : array_like
        Length-2 position (x, y). Arrays broadcast elementwise, with the
        leading axis of size 2.
    time : float
        Evaluation time; enters only through the modulation of the
        time-dependent shears.
    state : ModulationState, optional
        Supplies eta(t) for ou_shear.

    Returns
    -------
    ndarray
        The velocity vector, same trailing shape as the input.
    """
    position = np.asarray(position, dtype=float)
    x, y = position[0], position[1]
    if flow.is_shear:
        eta = modulation(flow, time, state)
        v1, v2 = _shear_uv(x, y, eta)
    elif flow.kind == TAYLOR_GREEN:
        v1, v2 = _taylor_green_uv(x, y)
    else:
        v1, v2 = _childress_soward_uv(x, y, flow.lam)
    return np.array([v1, v2])


def divergence(flow: FlowSpec, position, time: float = 0.0,
               state: ModulationState | None = None) -> float:
    """Analytic divergence dv1/dx + dv2/dy; identically zero for the catalog.

    The partial derivatives are written out by hand. For each flow the two
    terms are equal and opposite factor by factor, so the sum is exactly
    zero in floating point as well.
    """
    position = np.asarray(position, dtype=float)
    x, y = position[0], position[1]
    if flow.is_shear:
        # v1 = 0 and v2 = eta sin(x) has no y dependence
        dv1_dx = 0.0
        dv2_dy = 0.0
    elif flow.kind == TAYLOR_GREEN:
        dv1_dx = -np.cos(x) * np.cos(y)
        dv2_dy = np.cos(x) * np.cos(y)
    else:
        lam = flow.lam
        dv1_dx = -np.cos(x) * np.cos(y) - lam * np.sin(x) * np.sin(y)
        dv2_dy = np.cos(x) * np.cos(y) + lam * np.sin(x) * np.sin(y)
    return float(dv1_dx + dv2_dy)


# ---------------------------------------------------------------------------
# Fourier data
# ---------------------------------------------------------------------------


def stream_modes(flow: FlowSpec) -> dict[tuple[int, int], complex]:
    """Fourier coefficients of the spatial stream function.

    Coefficients are with respect to exp(i k . z) on [0, 2*pi]^2, so
    psi(z) = sum_k psi_k exp(i k . z). Only the spatial factor is
    represented; the modulation of the time-dependent shears is excluded.
    """
    if flow.is_shear:
        # psi = -cos x gives v = (0, sin x)
        return {(1, 0): -0.5, (-1, 0): -0.5}
    # sin x sin y = -(1/4) [e^{i(x+y)} - e^{i(x-y)} - e^{-i(x-y)} + e^{-i(x+y)}]
    tg = {(1, 1): -0.25, (1, -1): 0.25, (-1, 1): 0.25, (-1, -1): -0.25}
    if flow.kind == TAYLOR_GREEN:
        return tg
    # cos x cos y = (1/4) sum over the four (+-1, +-1) modes
    lam = flow.lam
    return {k: c + lam * 0.25 for k, c in tg.items()}


def velocity_modes(flow: FlowSpec) -> dict[tuple[int, int], np.ndarray]:
    """Fourier coefficients of the spatial velocity, v_k = (-i k2, i k1) psi_k."""
    return {
        k: np.array([-1j * k[1] * c, 1j * k[0] * c])
        for k, c in stream_modes(flow).items()
    }


def spatial_mean(flow: FlowSpec) -> np.ndarray:
    """Cell average of the spatial velocity factor over [0, 2*pi]^2.

    Equals the k = 0 Fourier coefficient, which no catalog flow carries,
    so the result is exactly (0, 0).
    """
    vk = velocity_modes(flow).get((0, 0))
    if vk is None:
        return np.zeros(2)
    return vk.real.copy()
