"""Catalog of parameter systems: state transforms of cumulative hazards.

Each system describes an initial value problem

    X_t = X_0 + integral_0^t F(X_{s-}) dA_s

driven by a k-dimensional nondecreasing path A (cumulative hazards, possibly
with a leading time component).  ``F`` maps the n-dimensional state to an
``n x k`` integrand matrix; its per-column Jacobians feed the covariance
recursion.  The catalog covers survival, relative survival, restricted mean
survival time, life expectancy difference and ratio, cumulative incidence,
mean frequency of recurrent events, and screening-test accuracy.

States that appear in denominators carry guard bounds; evaluating or solving
below a guard raises :class:`~hazard_transform.errors.GuardViolation` rather
than clamping.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, GuardViolation

__all__ = [
    "SystemKind",
    "ParameterSystem",
    "DriverSlot",
    "make_system",
    "driver_slots",
    "eval_integrand",
    "eval_gradient",
    "GUARD_EPS",
]

#: Lower bound for guarded state components (denominators).
GUARD_EPS = 1e-8

_KIND_NAMES = (
    "survival",
    "relative_survival",
    "rmst",
    "led",
    "ler",
    "cumulative_incidence",
    "mean_frequency",
    "screening",
)


@dataclass(frozen=True)
class SystemKind:
    """Declarative, picklable selection of a parameter system.

    ``name`` picks the transform; ``n_causes`` parametrizes
    ``cumulative_incidence``; ``prevalence`` and ``initial_value`` configure
    ``screening`` (the screening baseline is user-supplied — a zero baseline
    would sit on the guard).
    """

    name: str
    n_causes: int = 1
    prevalence: float | None = None
    initial_value: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.name not in _KIND_NAMES:
            raise ConfigError(f"unknown system name: {self.name!r}")
        if self.initial_value is not None:
            object.__setattr__(
                self, "initial_value", tuple(float(v) for v in self.initial_value)
            )

    @property
    def headline_index(self) -> int:
        """Index of the state component the system is named after."""
        return {"relative_survival": 2, "cumulative_incidence": 1, "screening": 2}.get(
            self.name, 0
        )

    @classmethod
    def from_config(cls, cfg: dict) -> "SystemKind":
        if not isinstance(cfg, dict) or "name" not in cfg:
            raise ConfigError("system config must be a mapping with a 'name' key")
        known = {"name", "n_causes", "prevalence", "initial_value"}
        extra = set(cfg) - known
        if extra:
            raise ConfigError(f"unknown system config key(s): {sorted(extra)}")
        kwargs = dict(cfg)
        if "initial_value" in kwargs and kwargs["initial_value"] is not None:
            kwargs["initial_value"] = tuple(kwargs["initial_value"])
        return cls(**kwargs)


@dataclass(frozen=True)
class ParameterSystem:
    """Concrete system: integrand, per-driver Jacobians, guards, labels."""

    name: str
    state_labels: tuple[str, ...]
    driver_labels: tuple[str, ...]
    initial_value: np.ndarray
    integrand: Callable[[np.ndarray], np.ndarray]
    gradients: tuple[Callable[[np.ndarray], np.ndarray], ...]
    guards: tuple[tuple[int, float], ...] = ()

    @property
    def state_dim(self) -> int:
        return len(self.state_labels)

    @property
    def driver_dim(self) -> int:
        return len(self.driver_labels)

    def check_guards(self, x: np.ndarray, time: float | None = None) -> None:
        for idx, lower in self.guards:
            if x[idx] <= lower:
                raise GuardViolation(self.state_labels[idx], float(x[idx]), time)


@dataclass(frozen=True)
class DriverSlot:
    """One driver component an estimator must supply.

    ``role`` names the component for hazard specs and configs; ``cause`` and
    ``group`` are the default event code / group label consumed when building
    the driver from data (both overridable).  ``deterministic`` marks the
    Lebesgue time component.
    """

    role: str
    deterministic: bool = False
    cause: int | None = None
    group: int | None = None


def _e(n: int, i: int, j: int, value: float = 1.0) -> np.ndarray:
    m = np.zeros((n, n))
    m[i, j] = value
    return m


def _survival() -> ParameterSystem:
    g1 = -np.eye(1)
    return ParameterSystem(
        name="survival",
        state_labels=("survival",),
        driver_labels=("hazard",),
        initial_value=np.ones(1),
        integrand=lambda x: np.array([[-x[0]]]),
        gradients=(lambda x: g1,),
    )


def _relative_survival() -> ParameterSystem:
    # state (S1, S0, RS); drivers (A1, A0)
    g1 = -(_e(3, 0, 0) + _e(3, 2, 2))
    g2 = _e(3, 2, 2) - _e(3, 1, 1)

    def integrand(x):
        return np.array([[-x[0], 0.0], [0.0, -x[1]], [-x[2], x[2]]])

    return ParameterSystem(
        name="relative_survival",
        state_labels=("survival_exposed", "survival_reference", "relative_survival"),
        driver_labels=("hazard_exposed", "hazard_reference"),
        initial_value=np.ones(3),
        integrand=integrand,
        gradients=(lambda x: g1, lambda x: g2),
    )


def _rmst() -> ParameterSystem:
    # state (R, S); drivers (time, A)
    g1 = _e(2, 0, 1)
    g2 = -_e(2, 1, 1)

    def integrand(x):
        return np.array([[x[1], 0.0], [0.0, -x[1]]])

    return ParameterSystem(
        name="rmst",
        state_labels=("rmst", "survival"),
        driver_labels=("time", "hazard"),
        initial_value=np.array([0.0, 1.0]),
        integrand=integrand,
        gradients=(lambda x: g1, lambda x: g2),
    )


def _led() -> ParameterSystem:
    # state (LED, S1, S2); drivers (time, A1, A2)
    g1 = _e(3, 0, 1) - _e(3, 0, 2)
    g2 = -_e(3, 1, 1)
    g3 = -_e(3, 2, 2)

    def integrand(x):
        return np.array(
            [
                [x[1] - x[2], 0.0, 0.0],
                [0.0, -x[1], 0.0],
                [0.0, 0.0, -x[2]],
            ]
        )

    return ParameterSystem(
        name="led",
        state_labels=("led", "survival_1", "survival_2"),
        driver_labels=("time", "hazard_1", "hazard_2"),
        initial_value=np.array([0.0, 1.0, 1.0]),
        integrand=integrand,
        gradients=(lambda x: g1, lambda x: g2, lambda x: g3),
    )


def _ler() -> ParameterSystem:
    # state (LER, S1, S2, R1, R2); drivers (time, A1, A2).  The ratio row
    # divides by R2, hence the guard; the natural baseline R1 = R2 = 0 sits on
    # it, so solving needs a start strictly inside the domain (x0 override).
    g2 = -_e(5, 1, 1)
    g3 = -_e(5, 2, 2)

    def integrand(x):
        _, s1, s2, r1, r2 = x
        return np.array(
            [
                [(s1 * r2 - s2 * r1) / r2**2, 0.0, 0.0],
                [0.0, -s1, 0.0],
                [0.0, 0.0, -s2],
                [s1, 0.0, 0.0],
                [s2, 0.0, 0.0],
            ]
        )

    def grad_time(x):
        _, s1, s2, r1, r2 = x
        g = np.zeros((5, 5))
        g[0, 1] = 1.0 / r2
        g[0, 2] = -r1 / r2**2
        g[0, 3] = -s2 / r2**2
        g[0, 4] = (2.0 * s2 * r1 - s1 * r2) / r2**3
        g[3, 1] = 1.0
        g[4, 2] = 1.0
        return g

    return ParameterSystem(
        name="ler",
        state_labels=("ler", "survival_1", "survival_2", "rmst_1", "rmst_2"),
        driver_labels=("time", "hazard_1", "hazard_2"),
        initial_value=np.array([1.0, 1.0, 1.0, 0.0, 0.0]),
        integrand=integrand,
        gradients=(grad_time, lambda x: g2, lambda x: g3),
        guards=((4, GUARD_EPS),),
    )


def _cumulative_incidence(m: int) -> ParameterSystem:
    # state (S, C1..Cm); drivers (A1..Am)
    if m < 1:
        raise ConfigError("cumulative_incidence needs n_causes >= 1")
    n = m + 1
    grads = tuple(_e(n, j + 1, 0) - _e(n, 0, 0) for j in range(m))

    def integrand(x):
        s = x[0]
        out = np.zeros((n, m))
        out[0, :] = -s
        out[np.arange(1, n), np.arange(m)] = s
        return out

    return ParameterSystem(
        name="cumulative_incidence",
        state_labels=("survival",) + tuple(f"incidence_{j + 1}" for j in range(m)),
        driver_labels=tuple(f"hazard_{j + 1}" for j in range(m)),
        initial_value=np.array([1.0] + [0.0] * m),
        integrand=integrand,
        gradients=tuple((lambda g: (lambda x: g))(g) for g in grads),
    )


def _mean_frequency() -> ParameterSystem:
    # state (K, S); drivers (A_recurrent, A_terminal)
    g1 = _e(2, 0, 1)
    g2 = -_e(2, 1, 1)

    def integrand(x):
        return np.array([[x[1], 0.0], [0.0, -x[1]]])

    return ParameterSystem(
        name="mean_frequency",
        state_labels=("mean_frequency", "survival"),
        driver_labels=("hazard_recurrent", "hazard_terminal"),
        initial_value=np.array([0.0, 1.0]),
        integrand=integrand,
        gradients=(lambda x: g1, lambda x: g2),
    )


def _screening(prevalence: float, initial_value) -> ParameterSystem:
    # state (U, V, W, X) = cumulative (PPV, NPV, sensitivity, specificity);
    # drivers (A1, A0) = hazards among test-positives / test-negatives.
    if prevalence is None or not 0.0 < prevalence < 1.0:
        raise ConfigError("screening needs a prevalence strictly between 0 and 1")
    if initial_value is None:
        raise ConfigError(
            "screening needs a user-supplied initial_value (U0, V0, W0, X0)"
        )
    x0 = np.asarray(initial_value, dtype=float)
    if x0.shape != (4,):
        raise ConfigError("screening initial_value must have four components")
    gamma = prevalence / (1.0 - prevalence)

    def integrand(x):
        u, v, w, xx = x
        return np.array(
            [
                [1.0 - u, 0.0],
                [0.0, -v],
                [w**2 * (1.0 - v) * (1.0 - u) / (gamma * u**2),
                 -(w**2) * v * u / (gamma * u**2)],
                [gamma * xx**2 * (1.0 - u) / v,
                 -gamma * xx**2 * (1.0 - u) / v],
            ]
        )

    def grad_1(x):
        u, v, w, xx = x
        g = np.zeros((4, 4))
        g[0, 0] = -1.0
        g[2, 0] = w**2 * (1.0 - v) * (u - 2.0) / (gamma * u**3)
        g[2, 1] = w**2 * (u - 1.0) / (gamma * u**2)
        g[2, 2] = 2.0 * w * (1.0 - u) * (1.0 - v) / (gamma * u**2)
        g[3, 0] = -gamma * xx**2 / v
        g[3, 1] = -gamma * xx**2 * (1.0 - u) / v**2
        g[3, 3] = 2.0 * gamma * xx * (1.0 - u) / v
        return g

    def grad_0(x):
        u, v, w, xx = x
        g = np.zeros((4, 4))
        g[1, 1] = -1.0
        g[2, 0] = w**2 * v / (gamma * u**2)
        g[2, 1] = -(w**2) / (gamma * u)
        g[2, 2] = -2.0 * w * v / (gamma * u)
        g[3, 0] = gamma * xx**2 / v
        g[3, 1] = gamma * xx**2 * (1.0 - u) / v**2
        g[3, 3] = -2.0 * gamma * xx * (1.0 - u) / v
        return g

    system = ParameterSystem(
        name="screening",
        state_labels=("cum_ppv", "cum_npv", "cum_sensitivity", "cum_specificity"),
        driver_labels=("hazard_positive", "hazard_negative"),
        initial_value=x0,
        integrand=integrand,
        gradients=(grad_1, grad_0),
        guards=((0, GUARD_EPS), (1, GUARD_EPS)),
    )
    system.check_guards(x0)
    return system


def make_system(kind: SystemKind | str) -> ParameterSystem:
    """Instantiate the :class:`ParameterSystem` described by ``kind``."""
    if isinstance(kind, str):
        kind = SystemKind(name=kind)
    if kind.name == "survival":
        return _survival()
    if kind.name == "relative_survival":
        return _relative_survival()
    if kind.name == "rmst":
        return _rmst()
    if kind.name == "led":
        return _led()
    if kind.name == "ler":
        return _ler()
    if kind.name == "cumulative_incidence":
        return _cumulative_incidence(kind.n_causes)
    if kind.name == "mean_frequency":
        return _mean_frequency()
    return _screening(kind.prevalence, kind.initial_value)


def driver_slots(kind: SystemKind | str) -> tuple[DriverSlot, ...]:
    """Driver components the system consumes, in column order.

    Default group labels: relative_survival and screening pair 1 (exposed /
    test-positive) with 0 (reference / test-negative); led and ler use 1 and
    2.  mean_frequency reads event code 1 as recurrent, 2 as terminal.
    """
    if isinstance(kind, str):
        kind = SystemKind(name=kind)
    name = kind.name
    if name == "survival":
        return (DriverSlot("event", cause=1),)
    if name == "relative_survival":
        return (
            DriverSlot("group1", cause=1, group=1),
            DriverSlot("group0", cause=1, group=0),
        )
    if name == "rmst":
        return (DriverSlot("time", deterministic=True), DriverSlot("event", cause=1))
    if name in ("led", "ler"):
        return (
            DriverSlot("time", deterministic=True),
            DriverSlot("group1", cause=1, group=1),
            DriverSlot("group2", cause=1, group=2),
        )
    if name == "cumulative_incidence":
        return tuple(
            DriverSlot(f"cause{j + 1}", cause=j + 1) for j in range(kind.n_causes)
        )
    if name == "mean_frequency":
        return (DriverSlot("recurrent", cause=1), DriverSlot("terminal", cause=2))
    return (
        DriverSlot("positive", cause=1, group=1),
        DriverSlot("negative", cause=1, group=0),
    )


def eval_integrand(system: ParameterSystem, x) -> np.ndarray:
    """Evaluate ``F(x)`` after checking shape and guard bounds."""
    x = np.asarray(x, dtype=float)
    if x.shape != (system.state_dim,):
        raise ValueError(
            f"state must have shape ({system.state_dim},), got {x.shape}"
        )
    system.check_guards(x)
    return system.integrand(x)


def eval_gradient(system: ParameterSystem, x, j: int) -> np.ndarray:
    """Jacobian of the j-th integrand column (driver components numbered from 1)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (system.state_dim,):
        raise ValueError(
            f"state must have shape ({system.state_dim},), got {x.shape}"
        )
    if not 1 <= j <= system.driver_dim:
        raise ValueError(f"driver index must be in 1..{system.driver_dim}, got {j}")
    system.check_guards(x)
    return system.gradients[j - 1](x).copy()
