"""Monte Carlo experiment driver: ensembles, delta sweeps, rescaled studies.

Every ensemble statistic is reproducible from (flow, config, master seed)
alone: realization r draws from substreams keyed by (seed, r), values are
stored in realization order and reduced with a fixed summation order, so
the batch size never changes a digit. Within a sweep the trajectories are
simulated once and re-subsampled at every delta, mirroring how a single
observed dataset is analyzed at several sampling rates (this also gives
the delta-to-delta comparison a common noise background).
"""

from __future__ import annotations

import configparser
import io
import math
import os
from dataclasses import dataclass

import numpy as np

from .dynamics import SimConfig, Trajectory, noise_generator, simulate_ensemble
from .errors import ConfigError, InsufficientDataError, ParameterError
from .estimators import (
    DiffusivityTensor,
    ObservationSeries,
    _resolve_multiple,
    add_observation_noise,
    box_estimate,
    directional_component,
    qv_estimate,
    shift_estimate,
    subsample,
)
from .fields import (
    CHILDRESS_SOWARD,
    OU_SHEAR,
    PERIODIC_SHEAR,
    STEADY_SHEAR,
    TAYLOR_GREEN,
    FlowSpec,
    childress_soward,
    flow_label,
    ou_shear,
    periodic_shear,
    steady_shear,
    taylor_green,
)
from .theory import k_periodic_shear

ESTIMATORS = ("qv", "box", "shift")

_CSV_COLUMNS = ("flow", "kappa", "epsilon", "theta", "delta", "estimator",
                "direction", "mean", "std", "stderr", "M", "T", "dt", "seed")

# direction validation probes a zero tensor so bad specs fail before any run
_PROBE = DiffusivityTensor(np.zeros((2, 2)), "oracle")


def _check_direction(direction: str) -> None:
    directional_component(_PROBE, direction)


@dataclass(frozen=True)
class EnsembleRecord:
    """One aggregated row: estimator statistics for a single (flow, delta)."""

    flow: str
    kappa: float
    epsilon: float
    theta: float
    delta: float
    estimator: str
    direction: str
    mean: float
    std: float
    stderr: float
    n_realizations: int
    t_final: float
    dt: float
    seed: int


def _format_cell(value) -> str:
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


@dataclass(frozen=True)
class SweepReport:
    """Ordered collection of ensemble records plus the CSV writer."""

    rows: tuple[EnsembleRecord, ...]

    def __post_init__(self) -> None:
        rows = tuple(self.rows)
        object.__setattr__(self, "rows", rows)
        for rec in rows:
            expected = rec.std / math.sqrt(rec.n_realizations)
            if abs(rec.stderr - expected) > 1e-12 * max(1.0, abs(expected)):
                raise ParameterError(
                    f"stderr {rec.stderr} inconsistent with std/sqrt(M) = {expected}"
                )

    def to_csv(self, target) -> None:
        """Write the exact column schema; floats carry 17 significant digits."""
        values_for = {
            "M": lambda r: r.n_realizations,
            "T": lambda r: r.t_final,
        }
        own = io.StringIO()
        own.write(",".join(_CSV_COLUMNS) + "\n")
        for rec in self.rows:
            cells = []
            for col in _CSV_COLUMNS:
                getter = values_for.get(col)
                value = getter(rec) if getter else getattr(rec, col)
                cells.append(_format_cell(value))
            own.write(",".join(cells) + "\n")
        text = own.getvalue()
        if hasattr(target, "write"):
            target.write(text)
        else:
            with open(target, "w") as fh:
                fh.write(text)


def _resolve_integrator(flow: FlowSpec, config: SimConfig, integrator: str) -> str:
    if integrator == "auto":
        return "shear_exact" if (flow.is_shear and config.epsilon == 1.0) else "em"
    if integrator not in ("em", "shear_exact"):
        raise ParameterError(f"integrator must be auto, em or shear_exact, got {integrator!r}")
    return integrator


def _estimate_value(traj: Trajectory, estimator: str, delta: float, theta: float,
                    direction: str, seed: int, realization: int, noise_index: int) -> float:
    if estimator == "qv":
        series = subsample(traj, delta)
        if theta > 0.0:
            series = add_observation_noise(
                series, theta, noise_generator(seed, realization, noise_index))
        tensor = qv_estimate(series)
    else:
        if theta > 0.0:
            base = ObservationSeries(traj.positions, traj.dt_stored)
            noisy = add_observation_noise(
                base, theta, noise_generator(seed, realization, noise_index))
            traj = Trajectory(noisy.positions, traj.dt_stored, traj.flow)
        tensor = box_estimate(traj, delta) if estimator == "box" else shift_estimate(traj, delta)
    return directional_component(tensor, direction)


def delta_sweep(flow: FlowSpec, config: SimConfig, estimator: str, deltas,
                theta: float = 0.0, n_realizations: int = 1000,
                direction: str = "y", integrator: str = "auto",
                batch_size: int = 64) -> SweepReport:
    """One record per delta, all deltas sharing the same M trajectories.

    Observation noise is redrawn independently per (realization, delta)
    from streams disjoint from the dynamics streams. Estimator statistics
    use the sample standard deviation (ddof=1); stderr = std / sqrt(M).
    """
    if estimator not in ESTIMATORS:
        raise ParameterError(f"estimator must be one of {ESTIMATORS}, got {estimator!r}")
    deltas = [float(d) for d in deltas]
    if not deltas:
        raise ParameterError("deltas must be non-empty")
    if n_realizations < 2:
        raise ParameterError("n_realizations must be at least 2")
    if not (math.isfinite(theta) and theta >= 0.0):
        raise ParameterError(f"theta must be nonnegative, got {theta!r}")
    if batch_size < 1:
        raise ParameterError("batch_size must be positive")
    _check_direction(direction)

    resolved = []
    for d in deltas:
        m, d_c = _resolve_multiple(d, config.dt_stored)
        needed = m + 1 if estimator == "qv" else 2 * m
        if config.n_stored < needed:
            raise InsufficientDataError(
                f"delta={d} needs {needed} stored points, run stores {config.n_stored}"
            )
        resolved.append(d_c)

    intg = _resolve_integrator(flow, config, integrator)
    values = np.empty((len(resolved), n_realizations))
    first = 0
    while first < n_realizations:
        count = min(batch_size, n_realizations - first)
        block = simulate_ensemble(flow, config, count, intg, first)
        for i in range(count):
            r = first + i
            traj = Trajectory(block[i], config.dt_stored, flow, config)
            for j, d_c in enumerate(resolved):
                try:
                    values[j, r] = _estimate_value(
                        traj, estimator, d_c, theta, direction, config.seed, r, j)
                except (InsufficientDataError, ParameterError) as exc:
                    raise type(exc)(f"realization {r}: {exc}") from exc
        first += count

    rows = []
    label = flow_label(flow)
    for j, d_c in enumerate(resolved):
        mean = float(np.mean(values[j]))
        std = float(np.std(values[j], ddof=1))
        rows.append(EnsembleRecord(
            flow=label, kappa=config.kappa, epsilon=config.epsilon, theta=theta,
            delta=d_c, estimator=estimator, direction=direction, mean=mean,
            std=std, stderr=std / math.sqrt(n_realizations),
            n_realizations=n_realizations, t_final=config.t_final,
            dt=config.dt, seed=config.seed,
        ))
    return SweepReport(tuple(rows))


def run_ensemble(flow: FlowSpec, config: SimConfig, estimator: str, delta: float,
                 theta: float = 0.0, n_realizations: int = 1000,
                 direction: str = "y", integrator: str = "auto",
                 batch_size: int = 64) -> EnsembleRecord:
    """Single-delta ensemble; identical to a one-entry delta_sweep row."""
    report = delta_sweep(flow, config, estimator, [delta], theta, n_realizations,
                         direction, integrator, batch_size)
    return report.rows[0]


def rescaled_config(kappa: float, epsilon: float, alpha_exponent: float,
                    t_final: float = 1.0, seed: int = 0) -> tuple[SimConfig, float]:
    """SimConfig for one rescaled run plus its subsampling interval delta.

    delta = epsilon^alpha; the step divides delta exactly and satisfies
    dt <= epsilon^2 / 50, and the store stride is chosen so the stored
    grid spacing is delta itself.
    """
    if not (0.0 < epsilon <= 1.0):
        raise ParameterError(f"epsilon must lie in (0, 1], got {epsilon!r}")
    if not (0.0 < alpha_exponent < 2.0):
        raise ParameterError(f"alpha_exponent must lie in (0, 2), got {alpha_exponent!r}")
    delta = epsilon ** alpha_exponent
    fast = epsilon ** 2 / 50.0
    m = max(1, int(math.ceil(delta / fast - 1e-9)))
    dt = delta / m
    config = SimConfig(kappa=kappa, dt=dt, t_final=t_final, epsilon=epsilon,
                       seed=seed, store_stride=m)
    return config, delta


def rescaled_study(flow: FlowSpec, kappa: float, epsilons, alpha_exponent: float,
                   n_realizations: int = 1000, t_final: float = 1.0,
                   estimator: str = "qv", direction: str = "y", theta: float = 0.0,
                   seed: int = 0, integrator: str = "auto",
                   batch_size: int = 64) -> SweepReport:
    """Estimator statistics for the rescaled dynamics at each epsilon.

    Every epsilon is observed at delta = epsilon^alpha over the same fixed
    horizon. All configurations are constructed (and therefore validated,
    including the dt <= epsilon^2/50 constraint) before the first
    simulation starts. The same master seed drives every epsilon, so the
    comparison across epsilons is paired. epsilon = 1 reduces to the
    unrescaled pipeline bitwise.
    """
    epsilons = [float(e) for e in epsilons]
    if not epsilons:
        raise ParameterError("epsilons must be non-empty")
    planned = [rescaled_config(kappa, eps, alpha_exponent, t_final, seed)
               for eps in epsilons]
    rows = []
    for config, delta in planned:
        report = delta_sweep(flow, config, estimator, [delta], theta,
                             n_realizations, direction, integrator, batch_size)
        rows.append(report.rows[0])
    return SweepReport(tuple(rows))


# ---------------------------------------------------------------------------
# periodic-shear adjudication
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PeriodicShearVerdict:
    """Outcome of the empirical test deciding between the two closed forms."""

    sweep: SweepReport
    plateau: float
    candidates: dict[str, float]
    verdict: str
    report: str


def adjudicate_periodic_shear(kappa: float = 0.1, omega: float = 1.0,
                              n_realizations: int = 200, t_final: float = 1000.0,
                              dt: float = 1e-3, deltas=(1.0, 2.0, 5.0, 10.0, 20.0, 50.0),
                              seed: int = 0, batch_size: int = 64) -> PeriodicShearVerdict:
    """Monte Carlo adjudication between the two candidate closed forms.

    The eddy diffusivity of the sinusoidally modulated shear has two
    inequivalent published expressions (see k_periodic_shear). A long
    quadratic-variation sweep estimates the true plateau as the average of
    the means at the two largest deltas and checks which candidate lies
    within 25% of it. The returned report spells out the comparison.
    """
    deltas = sorted(float(d) for d in deltas)
    if len(deltas) < 2:
        raise ParameterError("need at least 2 deltas to form a plateau estimate")
    multiples = [int(round(d / dt)) for d in deltas]
    stride = math.gcd(*multiples)
    flow = periodic_shear(omega)
    config = SimConfig(kappa=kappa, dt=dt, t_final=t_final, seed=seed,
                       store_stride=stride)
    sweep = delta_sweep(flow, config, "qv", deltas, 0.0, n_realizations,
                        "y", "auto", batch_size)
    plateau = float(np.mean([rec.mean for rec in sweep.rows[-2:]]))
    candidates = {
        "printed": k_periodic_shear(kappa, omega, "printed"),
        "figure": k_periodic_shear(kappa, omega, "figure"),
    }
    hits = {name: abs(plateau - val) <= 0.25 * val for name, val in candidates.items()}
    if hits["printed"] and not hits["figure"]:
        verdict = "printed"
    elif hits["figure"] and not hits["printed"]:
        verdict = "figure"
    elif hits["printed"] and hits["figure"]:
        verdict = "both"
    else:
        verdict = "neither"

    lines = [
        "Periodic-shear eddy diffusivity: empirical adjudication",
        f"flow: sinusoidally modulated shear, kappa={kappa:g}, omega={omega:g}",
        f"ensemble: M={n_realizations}, T={t_final:g}, dt={dt:g}, seed={seed}",
        "",
        "quadratic-variation means by delta:",
    ]
    for rec in sweep.rows:
        lines.append(f"  delta={rec.delta:<8g} mean={rec.mean:.6f}  stderr={rec.stderr:.2e}")
    lines += [
        "",
        f"plateau estimate (mean of the two largest deltas): {plateau:.6f}",
        "",
        "candidate closed forms:",
    ]
    for name, val in candidates.items():
        frm = ("kappa + 1/(4(omega + kappa^2))" if name == "printed"
               else "kappa + kappa/(4(omega^2 + kappa^2))")
        dev = abs(plateau - val) / val
        flag = "within 25%" if hits[name] else "outside 25%"
        lines.append(f"  {name:8s} {frm} = {val:.6f}   relative deviation {dev:.1%} ({flag})")
    lines += [
        "",
        f"verdict: the plateau is consistent with the '{verdict}' candidate"
        if verdict in ("printed", "figure") else
        f"verdict: {verdict} candidates lie within 25% of the plateau",
    ]
    return PeriodicShearVerdict(sweep, plateau, candidates, verdict, "\n".join(lines))


# ---------------------------------------------------------------------------
# configuration files
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunPlan:
    """Everything a CLI run needs, parsed from one INI file."""

    flow: FlowSpec
    sim: SimConfig
    estimator: str = "qv"
    deltas: tuple[float, ...] = ()
    theta: float = 0.0
    direction: str = "y"
    realizations: int = 1000
    batch_size: int = 64
    integrator: str = "auto"
    epsilons: tuple[float, ...] = ()
    alpha_exponent: float = 1.0


_FLOW_KEYS = {"kind", "omega", "alpha", "sigma", "lam"}
_SIM_KEYS = {"kappa", "dt", "t_final", "epsilon", "x0", "eta0", "seed",
             "store_stride", "burn_in"}
_EST_KEYS = {"estimator", "delta", "theta", "direction"}
_SWEEP_KEYS = {"realizations", "batch_size", "integrator", "epsilons",
               "alpha_exponent"}


_FLOW_PARAMS = {
    STEADY_SHEAR: (),
    PERIODIC_SHEAR: ("omega",),
    OU_SHEAR: ("alpha", "sigma"),
    TAYLOR_GREEN: (),
    CHILDRESS_SOWARD: ("lam",),
}
_FLOW_BUILDERS = {
    STEADY_SHEAR: steady_shear,
    PERIODIC_SHEAR: periodic_shear,
    OU_SHEAR: ou_shear,
    TAYLOR_GREEN: taylor_green,
    CHILDRESS_SOWARD: childress_soward,
}


def _build_flow(options: dict) -> FlowSpec:
    kind = options.pop("kind", None)
    if kind is None:
        raise ConfigError("[flow] must set kind")
    if kind not in _FLOW_PARAMS:
        raise ConfigError(f"unknown flow kind {kind!r}")
    params = _FLOW_PARAMS[kind]
    missing = [k for k in params if k not in options]
    if missing:
        raise ConfigError(f"flow kind {kind!r} requires keys {missing}")
    extra = sorted(set(options) - set(params))
    if extra:
        raise ConfigError(f"[flow] keys {extra} do not apply to kind {kind!r}")
    try:
        args = [float(options[k]) for k in params]
    except ValueError as exc:
        raise ConfigError(f"bad [flow] value: {exc}") from None
    try:
        return _FLOW_BUILDERS[kind](*args)
    except ParameterError as exc:
        raise ConfigError(f"bad [flow] parameters: {exc}") from exc


def _floats(text: str) -> tuple[float, ...]:
    parts = [p for chunk in text.split(",") for p in chunk.split()]
    return tuple(float(p) for p in parts)


def parse_config(source) -> RunPlan:
    """Parse an INI run description (path, file object, or literal text).

    Sections [flow] and [simulation] are required for simulation-backed
    commands; [estimation] and [sweep] provide estimator and ensemble
    settings with the documented defaults. Unknown sections or keys raise
    ConfigError so typos never silently fall back to defaults.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        if hasattr(source, "read"):
            parser.read_file(source)
        elif isinstance(source, str) and "\n" in source:
            parser.read_string(source)
        elif os.path.exists(source):
            with open(source) as fh:
                parser.read_file(fh)
        else:
            raise ConfigError(f"config file not found: {source!r}")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    known = {"flow": _FLOW_KEYS, "simulation": _SIM_KEYS,
             "estimation": _EST_KEYS, "sweep": _SWEEP_KEYS}
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"unknown section [{section}]")
        extra = set(parser[section]) - known[section]
        if extra:
            raise ConfigError(f"unknown keys in [{section}]: {sorted(extra)}")
    if not parser.has_section("flow"):
        raise ConfigError("missing [flow] section")
    if not parser.has_section("simulation"):
        raise ConfigError("missing [simulation] section")

    flow = _build_flow(dict(parser["flow"]))

    sim_raw = dict(parser["simulation"])
    if "kappa" not in sim_raw:
        raise ConfigError("[simulation] must set kappa")
    try:
        kwargs = {"kappa": float(sim_raw.pop("kappa"))}
        for key, cast in (("dt", float), ("t_final", float), ("epsilon", float),
                          ("seed", int), ("store_stride", int), ("burn_in", float)):
            if key in sim_raw:
                kwargs[key] = cast(sim_raw.pop(key))
        if "x0" in sim_raw:
            x0 = _floats(sim_raw.pop("x0"))
            if len(x0) != 2:
                raise ConfigError("x0 must have two components")
            kwargs["x0"] = x0
        if "eta0" in sim_raw:
            raw = sim_raw.pop("eta0")
            kwargs["eta0"] = raw if raw == "stationary" else float(raw)
        sim = SimConfig(**kwargs)
    except (ValueError, ParameterError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad [simulation] value: {exc}") from exc

    est_raw = dict(parser["estimation"]) if parser.has_section("estimation") else {}
    sweep_raw = dict(parser["sweep"]) if parser.has_section("sweep") else {}
    try:
        plan = RunPlan(
            flow=flow,
            sim=sim,
            estimator=est_raw.get("estimator", "qv"),
            deltas=_floats(est_raw["delta"]) if "delta" in est_raw else (),
            theta=float(est_raw.get("theta", 0.0)),
            direction=est_raw.get("direction", "y"),
            realizations=int(sweep_raw.get("realizations", 1000)),
            batch_size=int(sweep_raw.get("batch_size", 64)),
            integrator=sweep_raw.get("integrator", "auto"),
            epsilons=_floats(sweep_raw["epsilons"]) if "epsilons" in sweep_raw else (),
            alpha_exponent=float(sweep_raw.get("alpha_exponent", 1.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"bad estimation/sweep value: {exc}") from exc
    if plan.estimator not in ESTIMATORS:
        raise ConfigError(f"estimator must be one of {ESTIMATORS}, got {plan.estimator!r}")
    return plan
