"""Damped least-squares identification of model parameters from data.

Two fitting modes share one parameter layout convention:

``egpi`` (11 parameters)
    asc_slope, asc_intercept      shared ascending envelope of both banks
    desc1_slope, desc1_intercept  descending envelope of bank 1
    desc2_slope, desc2_intercept  descending envelope of bank 2
    lam, sigma, r1, rn            density shared by both banks
    kappa                         descending regulator of bank 2

``gpi`` (8 parameters)
    asc_slope, asc_intercept, desc_slope, desc_intercept, lam, sigma, r1, rn

The flag point is held fixed during optimization: it enters the model
discontinuously, so it is estimated once from the data (or supplied) and
not part of the search space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envelopes import LinearEnvelope
from .errors import (
    ConfigError,
    InitializationError,
    InputError,
    NumericalError,
    ParameterError,
)
from .metrics import Metrics, compute_metrics
from .operators import DensitySpec, EgpiModel, GpiModel, SwitchMode, predict
from .signals import Trajectory

EGPI_PARAM_NAMES = (
    "asc_slope",
    "asc_intercept",
    "desc1_slope",
    "desc1_intercept",
    "desc2_slope",
    "desc2_intercept",
    "lam",
    "sigma",
    "r1",
    "rn",
    "kappa",
)
GPI_PARAM_NAMES = (
    "asc_slope",
    "asc_intercept",
    "desc_slope",
    "desc_intercept",
    "lam",
    "sigma",
    "r1",
    "rn",
)

FIT_MODES = ("egpi", "gpi")

# open (> 0) constraints are projected onto this floor
_FLOOR = 1e-6


def param_names(mode: str) -> tuple[str, ...]:
    if mode == "egpi":
        return EGPI_PARAM_NAMES
    if mode == "gpi":
        return GPI_PARAM_NAMES
    raise ConfigError(f"unknown fit mode {mode!r}; expected one of {FIT_MODES}")


def param_bounds(mode: str):
    """Elementwise lower/upper bounds; the r1 <= rn coupling is separate."""
    names = param_names(mode)
    lo = np.full(len(names), -np.inf)
    hi = np.full(len(names), np.inf)
    for i, name in enumerate(names):
        if name.endswith("slope") or name in ("lam", "r1", "rn", "kappa"):
            lo[i] = _FLOOR
        elif name == "sigma":
            lo[i] = 0.0
    return lo, hi


def _within_bounds(params, mode) -> bool:
    lo, hi = param_bounds(mode)
    names = param_names(mode)
    if np.any(params < lo) or np.any(params > hi):
        return False
    idx = {n: i for i, n in enumerate(names)}
    return params[idx["r1"]] <= params[idx["rn"]]


def validate_params(params, mode: str) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    names = param_names(mode)
    if params.shape != (len(names),):
        raise ParameterError(
            f"mode {mode!r} takes {len(names)} parameters, got shape {params.shape}"
        )
    if not np.all(np.isfinite(params)):
        raise ParameterError("parameters must be finite")
    if not _within_bounds(params, mode):
        raise ParameterError(
            f"parameters violate bounds: {dict(zip(names, params.tolist()))}"
        )
    return params


def project_params(params, mode: str) -> np.ndarray:
    """Nearest in-bounds parameter vector (clip, then mend r1 <= rn)."""
    lo, hi = param_bounds(mode)
    p = np.clip(np.asarray(params, dtype=float), lo, hi)
    names = param_names(mode)
    i1, i2 = names.index("r1"), names.index("rn")
    if p[i1] > p[i2]:
        mid = max(0.5 * (p[i1] + p[i2]), _FLOOR)
        p[i1] = p[i2] = mid
    return p


def build_model(params, mode: str, v_f: float | None = None, n: int = 30):
    """Materialize the model a parameter vector describes."""
    params = validate_params(params, mode)
    if mode == "gpi":
        a1, a2, a3, a4, lam, sigma, r1, rn = params
        density = DensitySpec(lam=lam, sigma=sigma, r1=r1, rn=rn, n=n)
        return GpiModel(
            density=density,
            asc_env=LinearEnvelope(a=a1, b=a2),
            desc_env=LinearEnvelope(a=a3, b=a4),
        )
    if v_f is None:
        raise ConfigError("egpi mode requires a flag point v_f")
    a1, a2, a3, a4, a5, a6, lam, sigma, r1, rn, kappa = params
    density = DensitySpec(lam=lam, sigma=sigma, r1=r1, rn=rn, n=n)
    asc = LinearEnvelope(a=a1, b=a2)
    sub1 = GpiModel(density=density, asc_env=asc, desc_env=LinearEnvelope(a=a3, b=a4))
    sub2 = GpiModel(
        density=density,
        asc_env=asc,
        desc_env=LinearEnvelope(a=a5, b=a6),
        kappa_desc=kappa,
    )
    return EgpiModel(
        submodels=[sub1, sub2], mode=SwitchMode.DESCEND_FLAG, flag_desc=float(v_f)
    )


def residuals(params, traj: Trajectory, v_f=None, mode: str = "egpi", n: int = 30):
    """Model output minus measured angles, per sample."""
    if traj.theta is None:
        raise InputError("trajectory has no measured angles to fit against")
    model = build_model(params, mode, v_f, n)
    return predict(model, traj.t, traj.v) - traj.theta


def jacobian_fd(
    params,
    traj: Trajectory,
    v_f=None,
    mode: str = "egpi",
    n: int = 30,
    rel_step: float = 1e-6,
    scheme: str = "central",
):
    """Finite-difference residual Jacobian, one column per parameter.

    Central differences with per-parameter step max(rel_step*|p|, rel_step);
    a step that would cross a bound falls back to the one-sided difference
    on the feasible side. ``scheme="forward"`` forces one-sided steps (used
    for step-size diagnostics).
    """
    params = validate_params(np.asarray(params, dtype=float), mode)
    base = residuals(params, traj, v_f, mode, n)
    J = np.empty((base.size, params.size))
    for k in range(params.size):
        h = max(rel_step * abs(params[k]), rel_step)
        plus = params.copy()
        plus[k] += h
        minus = params.copy()
        minus[k] -= h
        plus_ok = _within_bounds(plus, mode)
        minus_ok = _within_bounds(minus, mode)
        if scheme == "central" and plus_ok and minus_ok:
            col = (residuals(plus, traj, v_f, mode, n) - residuals(minus, traj, v_f, mode, n)) / (
                2 * h
            )
        elif plus_ok:
            col = (residuals(plus, traj, v_f, mode, n) - base) / h
        elif minus_ok:
            col = (base - residuals(minus, traj, v_f, mode, n)) / h
        else:
            # pinned by active bounds from both sides (e.g. r1 == rn at the
            # positivity floor); treat as a dead column
            col = 0.0
        J[:, k] = col
    return J


@dataclass
class FitConfig:
    """Optimizer settings; every default is an artifact choice."""

    max_iterations: int = 200
    mu0: float = 1e-3
    mu_up: float = 10.0
    mu_down: float = 10.0
    mu_max: float = 1e12
    loss_tol: float = 1e-9
    grad_tol: float = 1e-8
    rel_step: float = 1e-6
    n_operators: int = 30
    v_f: float | None = None
    initial: np.ndarray | None = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        for name in ("mu0", "mu_up", "mu_down", "mu_max", "loss_tol", "grad_tol", "rel_step"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        if self.n_operators < 1:
            raise ConfigError("n_operators must be >= 1")


@dataclass
class FitResult:
    """Identified parameters plus the optimization record."""

    params: np.ndarray
    mode: str
    v_f: float | None
    loss_trace: list[float]
    iterations: int
    converged: bool
    reason: str
    metrics: Metrics
    n_operators: int = 30

    def param_dict(self) -> dict:
        return dict(zip(param_names(self.mode), (float(x) for x in self.params)))

    def model(self):
        return build_model(self.params, self.mode, self.v_f, self.n_operators)


def default_initial_guess(traj: Trajectory, v_f=None, mode: str = "egpi") -> np.ndarray:
    """Data-driven starting point for the optimizer.

    Envelope slopes and intercepts come from least squares on coarse data
    segments: the upper half of the ascending sweep for the shared
    ascending envelope, and the descending sweep (split at the flag point
    in egpi mode) for the descending envelopes. Density defaults are
    lam=0.07, sigma=0.1 with thresholds spanning 1%..25% of the input
    range, and the regulator starts at 1.
    """
    if traj.theta is None:
        raise InputError("initial guess needs measured angles")
    names = param_names(mode)
    dv = np.diff(traj.v)
    asc_idx = np.nonzero(np.concatenate(([False], dv > 0)))[0]
    desc_idx = np.nonzero(np.concatenate(([False], dv < 0)))[0]
    if asc_idx.size < 3:
        raise InitializationError("too few ascending samples for a regression")
    if desc_idx.size < 3:
        raise InitializationError("too few descending samples for a regression")

    def ols(idx, label):
        if idx.size < 3:
            raise InitializationError(f"too few samples for the {label} regression")
        slope, intercept = np.polyfit(traj.v[idx], traj.theta[idx], 1)
        return max(float(slope), _FLOOR), float(intercept)

    va = traj.v[asc_idx]
    upper = asc_idx[va >= 0.5 * (va.min() + va.max())]
    a1, a2 = ols(upper, "ascending")

    vrange = float(np.ptp(traj.v))
    tail = [0.07, 0.1, 0.01 * vrange, 0.25 * vrange]
    if mode == "gpi":
        a3, a4 = ols(desc_idx, "descending")
        guess = [a1, a2, a3, a4, *tail]
    else:
        if v_f is None:
            raise ConfigError("egpi mode requires a flag point v_f")
        a3, a4 = ols(desc_idx[traj.v[desc_idx] > v_f], "upper descending")
        a5, a6 = ols(desc_idx[traj.v[desc_idx] <= v_f], "lower descending")
        guess = [a1, a2, a3, a4, a5, a6, *tail, 1.0]
    assert len(guess) == len(names)
    return project_params(np.array(guess), mode)


def lm_fit(traj: Trajectory, config: FitConfig | None = None, mode: str = "egpi") -> FitResult:
    """Damped normal-equation least squares over the parameter vector.

    Steps solve (J'J + mu*diag(J'J)) delta = -J'e and are accepted only
    when the objective strictly decreases (mu shrinks) and retried with
    larger mu otherwise; every step is projected onto the bounds. Stops on
    relative loss change, gradient norm, max_iterations, or when no
    improving step exists within the damping budget. Returns the best
    parameters seen.
    """
    config = config or FitConfig()
    if traj.theta is None:
        raise InputError("fit needs a trajectory with measured angles")
    if float(np.ptp(traj.v)) == 0.0:
        raise InputError("input signal is constant; nothing to identify")
    names = param_names(mode)
    if len(traj) < 2 * len(names):
        raise InputError(
            f"need at least {2 * len(names)} samples to fit {len(names)} parameters"
        )
    v_f = config.v_f
    n = config.n_operators
    if config.initial is not None:
        p = validate_params(np.asarray(config.initial, dtype=float), mode)
    else:
        p = default_initial_guess(traj, v_f, mode)

    e = residuals(p, traj, v_f, mode, n)
    loss = float(e @ e)
    trace = [loss]
    best_p, best_loss = p.copy(), loss
    mu = config.mu0
    converged = False
    reason = "max_iterations"
    iterations = 0

    for iterations in range(1, config.max_iterations + 1):
        J = jacobian_fd(p, traj, v_f, mode, n, config.rel_step)
        grad = 2.0 * (J.T @ e)
        if float(np.max(np.abs(grad))) < config.grad_tol:
            converged = True
            reason = "grad_tol"
            break
        JtJ = J.T @ J
        Jte = J.T @ e
        diag = np.diag(JtJ).copy()
        diag[diag <= 0] = 1e-12  # keep damping effective for dead columns
        stop = None
        while True:
            try:
                delta = np.linalg.solve(JtJ + mu * np.diag(diag), -Jte)
            except np.linalg.LinAlgError:
                delta = None
            if delta is None or not np.all(np.isfinite(delta)):
                mu *= config.mu_up
                if mu > config.mu_max:
                    err = NumericalError(
                        "damped normal equations remained singular past mu_max"
                    )
                    err.loss_trace = trace
                    raise err
                continue
            cand = project_params(p + delta, mode)
            e_new = residuals(cand, traj, v_f, mode, n)
            loss_new = float(e_new @ e_new)
            if loss_new < loss:
                drop = (loss - loss_new) / loss
                p, e, loss = cand, e_new, loss_new
                trace.append(loss)
                if loss < best_loss:
                    best_p, best_loss = p.copy(), loss
                mu = max(mu / config.mu_down, 1e-15)
                if drop < config.loss_tol:
                    stop = ("loss_tol", True)
                break
            mu *= config.mu_up
            if mu > config.mu_max:
                stop = ("stalled", False)
                break
        if stop is not None:
            reason, converged = stop
            break

    pred = residuals(best_p, traj, v_f, mode, n) + traj.theta
    return FitResult(
        params=best_p,
        mode=mode,
        v_f=v_f,
        loss_trace=trace,
        iterations=iterations,
        converged=converged,
        reason=reason,
        metrics=compute_metrics(traj.theta, pred),
        n_operators=n,
    )
