"""Plugin solver: state recursion, covariance recursion, confidence bands.

Given a driver path A with jump times tau_1 < ... < tau_m and a parameter
system (F, gradients, X0), the solved state is the jump recursion

    X_{tau_k} = X_{tau_{k-1}} + F(X_{tau_{k-1}}) dA_{tau_k}

with F always evaluated at the left limit.  The covariance path follows the
companion recursion

    V_{tau_k} = V_{tau_{k-1}}
              + sum_j (V_{tau_{k-1}} G_j' + G_j V_{tau_{k-1}}) dA^j_{tau_k}
              + n * F dA dA' F'

with G_j the Jacobian of the j-th integrand column at the left limit and n
the driver's sample-size scale.  Pointwise confidence intervals divide the
diagonal by n and apply a normal quantile.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import norm

from .errors import GuardViolation, NegativeVarianceError
from .paths import DriverMeta, StepPath
from .systems import ParameterSystem

__all__ = [
    "solve_plugin",
    "solve_variance",
    "PluginFit",
    "fit_plugin",
    "ConfidenceBand",
    "confidence_band",
    "write_fit",
    "read_fit",
]


def solve_plugin(
    system: ParameterSystem, driver: StepPath, x0_override=None
) -> StepPath:
    """Run the state recursion along the driver's jump times.

    Returns a :class:`StepPath` with the same jump times as the driver whose
    value at ``t`` is the plugin estimate.  Guard bounds are checked at the
    initial state and after every step; a violation raises
    :class:`GuardViolation` with the step time and component name.
    """
    if driver.dimension != system.driver_dim:
        raise ValueError(
            f"driver has {driver.dimension} components, "
            f"system {system.name!r} expects {system.driver_dim}"
        )
    x = np.array(
        system.initial_value if x0_override is None else x0_override, dtype=float
    )
    if x.shape != (system.state_dim,):
        raise ValueError(f"initial state must have shape ({system.state_dim},)")
    system.check_guards(x, time=0.0)

    m = driver.n_jumps
    increments = np.empty((m, system.state_dim))
    d_incr = driver.increments
    times = driver.times
    integrand = system.integrand
    for k in range(m):
        dx = integrand(x) @ d_incr[k]
        increments[k] = dx
        x = x + dx
        system.check_guards(x, time=float(times[k]))
    return StepPath(
        times=times.copy(),
        increments=increments,
        origin_value=np.array(
            system.initial_value if x0_override is None else x0_override, dtype=float
        ),
        horizon=driver.horizon,
    )


def solve_variance(
    system: ParameterSystem,
    driver: StepPath,
    meta: DriverMeta,
    state: StepPath,
    v0=None,
) -> np.ndarray:
    """Run the covariance recursion along a solved state path.

    ``state`` must be the output of :func:`solve_plugin` for the same driver
    (same jump times).  Returns an array of shape ``(m, n, n)`` holding the
    symmetric covariance-scale matrix at each jump time; the value at ``t=0``
    is ``v0`` (zero by default, for deterministic initial states).

    Driver components flagged deterministic in ``meta`` (time grids) carry no
    sampling noise: they enter the transport term like every component but
    are excluded from the quadratic term.  Including them there would add the
    squared grid increments -- pure discretization residue of order
    ``scale_n * mesh`` that can dwarf the true variance of time-integrating
    components unless the grid is much finer than ``1 / scale_n``.
    """
    n = system.state_dim
    if driver.dimension != system.driver_dim:
        raise ValueError("driver dimension does not match the system")
    if len(meta.deterministic_mask) != driver.dimension:
        raise ValueError("driver metadata does not match the driver dimension")
    if state.dimension != n or state.n_jumps != driver.n_jumps:
        raise ValueError("state path does not align with the driver")
    if not np.array_equal(state.times, driver.times):
        raise ValueError("state path and driver must share jump times")
    if v0 is None:
        v = np.zeros((n, n))
    else:
        v = np.array(v0, dtype=float)
        if v.shape != (n, n) or not np.allclose(v, v.T, atol=0.0):
            raise ValueError("v0 must be a symmetric n x n matrix")

    scale = float(meta.scale_n)
    stochastic = np.where(np.asarray(meta.deterministic_mask, dtype=bool), 0.0, 1.0)
    gradients = system.gradients
    integrand = system.integrand
    x_prev = state.origin_value
    state_values = state.values_at_jumps()
    d_incr = driver.increments
    out = np.empty((driver.n_jumps, n, n))
    for k in range(driver.n_jumps):
        da = d_incr[k]
        f = integrand(x_prev)
        for j in np.flatnonzero(da):
            gv = gradients[j](x_prev) @ v
            v = v + (gv + gv.T) * da[j]
        fda = f @ (da * stochastic)
        v = v + scale * np.outer(fda, fda)
        out[k] = v
        x_prev = state_values[k]
    return out


@dataclass(frozen=True)
class PluginFit:
    """Solved state path plus covariance path on shared jump times."""

    state_path: StepPath
    cov_path: np.ndarray  # (m, n, n), value at each jump time
    v0: np.ndarray        # (n, n), value at t = 0
    scale_n: int
    state_labels: tuple[str, ...]

    @property
    def times(self) -> np.ndarray:
        return self.state_path.times

    def cov_diag(self) -> np.ndarray:
        """Variance-scale diagonal including the origin row, shape (m+1, n)."""
        diag = np.einsum("kii->ki", self.cov_path)
        return np.vstack([np.diag(self.v0), diag])


def fit_plugin(
    system: ParameterSystem,
    driver: StepPath,
    meta: DriverMeta,
    x0_override=None,
    v0=None,
) -> PluginFit:
    """Solve state and covariance recursions together."""
    state = solve_plugin(system, driver, x0_override=x0_override)
    cov = solve_variance(system, driver, meta, state, v0=v0)
    n = system.state_dim
    return PluginFit(
        state_path=state,
        cov_path=cov,
        v0=np.zeros((n, n)) if v0 is None else np.array(v0, dtype=float),
        scale_n=meta.scale_n,
        state_labels=system.state_labels,
    )


@dataclass(frozen=True)
class ConfidenceBand:
    """Pointwise normal band; step-constant between jump times."""

    times: np.ndarray   # (m + 1,), starting at 0
    point: np.ndarray   # (m + 1, n)
    lower: np.ndarray
    upper: np.ndarray
    level: float

    def value_at(self, t):
        """(point, lower, upper) at scalar or array t, right-continuous."""
        idx = np.searchsorted(self.times[1:], np.asarray(t, dtype=float), side="right")
        return self.point[idx], self.lower[idx], self.upper[idx]


def confidence_band(fit: PluginFit, level: float) -> ConfidenceBand:
    """Pointwise interval ``X_i +/- z * sqrt(V_ii / n)`` per state component.

    Raises :class:`NegativeVarianceError` listing the offending times if any
    variance diagonal entry is negative (small-sample collapse is surfaced,
    never clamped).
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must be strictly between 0 and 1")
    diag = fit.cov_diag()
    times = np.concatenate([[0.0], fit.times])
    for i, label in enumerate(fit.state_labels):
        bad = diag[:, i] < 0
        if bad.any():
            raise NegativeVarianceError(times[bad], label)
    z = norm.ppf(0.5 * (1.0 + level))
    half = z * np.sqrt(diag / fit.scale_n)
    point = np.vstack([fit.state_path.origin_value, fit.state_path.values_at_jumps()])
    return ConfidenceBand(
        times=times, point=point, lower=point - half, upper=point + half, level=level
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def _triu_pairs(n: int):
    return [(i, j) for i in range(n) for j in range(i, n)]


def write_fit(fit: PluginFit, band: ConfidenceBand, base) -> None:
    """Write a fit as ``<base>.csv`` + ``<base>.json`` metadata.

    CSV columns: ``time``, the state components, the upper triangle of the
    covariance matrix, then ``lo_i, hi_i`` per component at the band's level.
    The ``t = 0`` row carries the initial state and covariance.
    """
    base = Path(base)
    n = len(fit.state_labels)
    pairs = _triu_pairs(n)
    header = (
        ["time"]
        + [f"X_{i + 1}" for i in range(n)]
        + [f"V_{i + 1}{j + 1}" for i, j in pairs]
        + [c for i in range(n) for c in (f"lo_{i + 1}", f"hi_{i + 1}")]
    )
    cov_all = np.concatenate([fit.v0[None, :, :], fit.cov_path], axis=0)
    with open(base.with_suffix(".csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in range(band.times.size):
            row = [_fmt(band.times[r])]
            row += [_fmt(v) for v in band.point[r]]
            row += [_fmt(cov_all[r, i, j]) for i, j in pairs]
            for i in range(n):
                row += [_fmt(band.lower[r, i]), _fmt(band.upper[r, i])]
            writer.writerow(row)
    metadata = {
        "scale_n": fit.scale_n,
        "state_labels": list(fit.state_labels),
        "level": band.level,
        "horizon": fit.state_path.horizon,
        "state_min": [float(v) for v in band.point.min(axis=0)],
        "state_max": [float(v) for v in band.point.max(axis=0)],
    }
    with open(base.with_suffix(".json"), "w") as fh:
        json.dump(metadata, fh, indent=2)
        fh.write("\n")


def read_fit(base) -> tuple[PluginFit, ConfidenceBand]:
    """Inverse of :func:`write_fit`."""
    base = Path(base)
    with open(base.with_suffix(".json")) as fh:
        metadata = json.load(fh)
    labels = tuple(metadata["state_labels"])
    n = len(labels)
    pairs = _triu_pairs(n)
    rows = []
    with open(base.with_suffix(".csv"), newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            rows.append([float(v) for v in row])
    data = np.array(rows)
    times = data[:, 0]
    point = data[:, 1 : 1 + n]
    tri = data[:, 1 + n : 1 + n + len(pairs)]
    lohi = data[:, 1 + n + len(pairs) :]
    cov = np.empty((data.shape[0], n, n))
    for c, (i, j) in enumerate(pairs):
        cov[:, i, j] = tri[:, c]
        cov[:, j, i] = tri[:, c]
    state = StepPath(
        times=times[1:],
        increments=np.diff(point, axis=0),
        origin_value=point[0],
        horizon=float(metadata["horizon"]),
    )
    # The CSV stores values, not increments; seed the cumulative cache with the
    # parsed values so evaluation round-trips exactly.
    object.__setattr__(state, "_cumulative", np.ascontiguousarray(point))
    fit = PluginFit(
        state_path=state,
        cov_path=cov[1:],
        v0=cov[0],
        scale_n=int(metadata["scale_n"]),
        state_labels=labels,
    )
    band = ConfidenceBand(
        times=times,
        point=point,
        lower=lohi[:, 0::2],
        upper=lohi[:, 1::2],
        level=float(metadata["level"]),
    )
    return fit, band
