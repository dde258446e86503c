"""Vaccination game data: groups, risks, perceived infection probability.

Every unit ``i`` chooses a vaccination probability ``P_i`` in ``[0, 1]`` and
receives the payoff

    u_i(t, P) = -r_i(t) P_i - pi_i(t, P) (1 - P_i),

where ``r_i = r_v / r_inf`` is the relative risk of vaccine versus infection
and ``pi_i`` is the perceived probability of becoming infected.  Two ``pi``
families are supported: ``constant`` (``pi_i = c_i(t)``) and
``linear_coverage`` (``pi_i = a_i(t) + b_i(t) (1 - p(t))`` with coverage
``p(t) = sum_j eps_j(t) P_j``).  In both families the own-partial gradient is
affine in ``P``, which the solver exploits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "DomainError",
    "ValidationError",
    "FunctionSpec",
    "GroupSpec",
    "PiModel",
    "GameModel",
    "GameSlice",
    "ValidationReport",
    "coverage",
    "eval_pi",
    "eval_payoff",
    "eval_grad",
    "validate_model",
    "fd_gradient_check",
]

PI_KINDS = ("constant", "linear_coverage")
SUM_TOL = 1e-9


class DomainError(ValueError):
    """Argument outside the domain of an operation."""


class ValidationError(ValueError):
    """A model or scenario violates a structural or range condition."""

    def __init__(self, message: str, problems: Sequence[str] = ()):
        super().__init__(message)
        self.problems = list(problems)


@dataclass(frozen=True)
class FunctionSpec:
    """Scalar function of time: a constant or a piecewise-linear table.

    Parameters
    ----------
    kind : {"constant", "piecewise_linear"}
    value : float
        Used when ``kind == "constant"``.
    breakpoints : tuple of (t, v) pairs
        Used when ``kind == "piecewise_linear"``; ``t`` strictly increasing.
    """

    kind: str = "constant"
    value: float = 0.0
    breakpoints: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind == "constant":
            object.__setattr__(self, "value", float(self.value))
        elif self.kind == "piecewise_linear":
            bps = tuple((float(t), float(v)) for t, v in self.breakpoints)
            if len(bps) < 2:
                raise ValidationError("piecewise_linear needs at least two breakpoints")
            ts = np.array([t for t, _ in bps])
            if np.any(np.diff(ts) <= 0):
                raise ValidationError("breakpoints must be strictly increasing in t")
            object.__setattr__(self, "breakpoints", bps)
        else:
            raise ValidationError(f"unknown function kind {self.kind!r}")

    @classmethod
    def constant(cls, value: float) -> "FunctionSpec":
        return cls("constant", value=value)

    @classmethod
    def piecewise(cls, points: Iterable[tuple[float, float]]) -> "FunctionSpec":
        return cls("piecewise_linear", breakpoints=tuple(points))

    def __call__(self, t):
        if self.kind == "constant":
            return np.full(np.shape(t), self.value) if np.ndim(t) else self.value
        ts, vs = zip(*self.breakpoints)
        out = np.interp(t, ts, vs)
        return out if np.ndim(t) else float(out)

    def span_problems(self, T: float) -> list[str]:
        """Breakpoint table must start at 0 and end at ``T``."""
        if self.kind != "piecewise_linear":
            return []
        problems = []
        if abs(self.breakpoints[0][0]) > 1e-12:
            problems.append(f"first breakpoint at t={self.breakpoints[0][0]:g}, expected 0")
        if abs(self.breakpoints[-1][0] - T) > 1e-12 * max(1.0, T):
            problems.append(f"last breakpoint at t={self.breakpoints[-1][0]:g}, expected T={T:g}")
        return problems


def _as_fs(x) -> FunctionSpec:
    return x if isinstance(x, FunctionSpec) else FunctionSpec.constant(x)


@dataclass(frozen=True)
class GroupSpec:
    """One population unit: proportion ``epsilon`` and morbidity risks."""

    name: str
    epsilon: FunctionSpec
    r_v: FunctionSpec
    r_inf: FunctionSpec

    def __post_init__(self):
        for attr in ("epsilon", "r_v", "r_inf"):
            object.__setattr__(self, attr, _as_fs(getattr(self, attr)))


@dataclass(frozen=True)
class PiModel:
    """Perceived infection probability, one parameter set per group.

    ``constant`` uses ``c``; ``linear_coverage`` uses ``a`` and ``b``.
    """

    kind: str
    c: tuple[FunctionSpec, ...] = ()
    a: tuple[FunctionSpec, ...] = ()
    b: tuple[FunctionSpec, ...] = ()

    def __post_init__(self):
        if self.kind not in PI_KINDS:
            raise ValidationError(f"unknown pi_model kind {self.kind!r}")
        for attr in ("c", "a", "b"):
            object.__setattr__(self, attr, tuple(_as_fs(f) for f in getattr(self, attr)))

    @classmethod
    def constant(cls, c: Sequence) -> "PiModel":
        return cls("constant", c=tuple(c))

    @classmethod
    def linear_coverage(cls, a: Sequence, b: Sequence) -> "PiModel":
        return cls("linear_coverage", a=tuple(a), b=tuple(b))

    def n_groups(self) -> int:
        return len(self.c) if self.kind == "constant" else len(self.a)


@dataclass(frozen=True)
class GameModel:
    """The k-group time-dependent vaccination game on ``[0, T]``."""

    T: float
    groups: tuple[GroupSpec, ...]
    pi: PiModel

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        object.__setattr__(self, "T", float(self.T))
        if not self.groups:
            raise ValidationError("a game needs at least one group")
        if not self.T > 0:
            raise ValidationError(f"horizon must be positive, got {self.T}")
        if self.pi.kind == "linear_coverage" and len(self.pi.b) != len(self.pi.a):
            raise ValidationError("linear_coverage needs one (a, b) pair per group")
        if self.pi.n_groups() != len(self.groups):
            raise ValidationError(
                f"pi_model has {self.pi.n_groups()} parameter sets for {len(self.groups)} groups"
            )

    @property
    def k(self) -> int:
        return len(self.groups)

    @property
    def names(self) -> list[str]:
        return [g.name for g in self.groups]

    def at(self, t: float) -> "GameSlice":
        """Freeze every time-dependent coefficient at ``t``."""
        t = float(t)
        if not (-1e-12 <= t <= self.T * (1 + 1e-12)):
            raise DomainError(f"t={t} outside [0, {self.T}]")
        eps = np.array([g.epsilon(t) for g in self.groups])
        r_v = np.array([g.r_v(t) for g in self.groups])
        r_inf = np.array([g.r_inf(t) for g in self.groups])
        if self.pi.kind == "constant":
            a = np.array([f(t) for f in self.pi.c])
            b = np.zeros(self.k)
        else:
            a = np.array([f(t) for f in self.pi.a])
            b = np.array([f(t) for f in self.pi.b])
        with np.errstate(divide="ignore", invalid="ignore"):
            r = r_v / r_inf  # unvalidated r_inf = 0 gives inf; validate_model reports it
        return GameSlice(t=t, eps=eps, r=r, a=a, b=b)

    def breakpoint_times(self) -> np.ndarray:
        specs = [f for g in self.groups for f in (g.epsilon, g.r_v, g.r_inf)]
        specs += list(self.pi.c) + list(self.pi.a) + list(self.pi.b)
        ts = [t for f in specs if f.kind == "piecewise_linear" for t, _ in f.breakpoints]
        return np.unique(np.clip(ts, 0.0, self.T)) if ts else np.empty(0)


@dataclass(frozen=True)
class GameSlice:
    """The game at a fixed time: all arrays have length ``k``.

    ``pi = a + b (1 - p)``; the constant family is the special case ``b = 0``.
    Methods accept ``P`` of shape ``(..., k)``.
    """

    t: float
    eps: np.ndarray
    r: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @property
    def k(self) -> int:
        return self.eps.size

    def coverage(self, P):
        return np.asarray(P, dtype=float) @ self.eps

    def pi(self, P):
        p = self.coverage(P)
        return self.a + self.b * (1.0 - np.asarray(p)[..., None])

    def payoff(self, P):
        P = np.asarray(P, dtype=float)
        return -self.r * P - self.pi(P) * (1.0 - P)

    def grad(self, P):
        """Own partials ``du_i/dP_i``."""
        P = np.asarray(P, dtype=float)
        return -self.r + self.pi(P) + self.b * self.eps * (1.0 - P)

    def F(self, P):
        """The variational-inequality map ``-grad u``."""
        return -self.grad(P)

    def jacobian(self) -> np.ndarray:
        """Constant Jacobian of ``F``: ``b_i eps_j + b_i eps_i delta_ij``."""
        return np.outer(self.b, self.eps) + np.diag(self.b * self.eps)

    def growth_constant(self) -> float:
        """Row-sum bound ``max_i |F_i(0)| + sum_j |J_ij|``."""
        return float(np.max(np.abs(self.F(np.zeros(self.k))) + np.abs(self.jacobian()).sum(axis=1)))


def _check_P(model: GameModel, P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.shape[-1:] != (model.k,):
        raise DomainError(f"strategy vector must have length {model.k}, got shape {P.shape}")
    return P


def coverage(model: GameModel, t: float, P) -> float:
    """Vaccine coverage ``p(t) = sum_j eps_j(t) P_j``."""
    return model.at(t).coverage(_check_P(model, P))


def eval_pi(model: GameModel, t: float, P) -> np.ndarray:
    return model.at(t).pi(_check_P(model, P))


def eval_payoff(model: GameModel, t: float, P) -> np.ndarray:
    return model.at(t).payoff(_check_P(model, P))


def eval_grad(model: GameModel, t: float, P) -> np.ndarray:
    """Vector of own partials ``(du_1/dP_1, ..., du_k/dP_k)``."""
    return model.at(t).grad(_check_P(model, P))


@dataclass
class ValidationReport:
    """Outcome of :func:`validate_model`.

    ``growth_constant`` bounds ``|grad u(t, P)|`` (sup norm) over every grid
    node and every ``P`` in the box; it also bounds the Lipschitz constant of
    ``grad u`` because the gradient is affine in ``P``.
    """

    problems: list[str] = field(default_factory=list)
    growth_constant: float = 0.0
    pseudoconcave: str = (
        "u_i is concave in P_i for both pi families (quadratic coefficient -b_i eps_i <= 0), "
        "hence pseudoconcave"
    )

    @property
    def ok(self) -> bool:
        return not self.problems

    def raise_if_invalid(self) -> None:
        if self.problems:
            raise ValidationError("invalid model:\n  " + "\n  ".join(self.problems), self.problems)


def _grid_times(model: GameModel, grid) -> np.ndarray:
    nodes = getattr(grid, "nodes", grid)
    if nodes is None:
        nodes = np.linspace(0.0, model.T, 2)
    return np.asarray(nodes, dtype=float)


def validate_model(model: GameModel, grid=None) -> ValidationReport:
    """Check proportions, risks and the ``pi`` range at every grid node.

    ``grid`` is a :class:`~vaccine_evi.evi_solver.TimeGrid` or an array of
    times; ``None`` checks the endpoints only.
    """
    rep = ValidationReport()
    names = model.names
    for g in model.groups:
        for attr in ("epsilon", "r_v", "r_inf"):
            for msg in getattr(g, attr).span_problems(model.T):
                rep.problems.append(f"group {g.name}: {attr}: {msg}")
    for attr in ("c", "a", "b"):
        for name, f in zip(names, getattr(model.pi, attr)):
            for msg in f.span_problems(model.T):
                rep.problems.append(f"group {name}: pi_model.{attr}: {msg}")

    h = 0.0
    for t in _grid_times(model, grid):
        if t < -1e-12 or t > model.T * (1 + 1e-12):
            rep.problems.append(f"grid node t={t:g} outside [0, {model.T:g}]")
            continue
        s = model.at(t)
        total = s.eps.sum()
        if abs(total - 1.0) > SUM_TOL:
            rep.problems.append(f"t={t:g}: proportions sum {total:.12g} ≠ 1")
        for i, name in enumerate(names):
            grp = model.groups[i]
            e = s.eps[i]
            if not 0.0 < e < 1.0 and not (model.k == 1 and e == 1.0):
                rep.problems.append(f"t={t:g}: group {name}: epsilon {e:g} not in (0, 1)")
            r_inf = grp.r_inf(t)
            if not 0.0 < r_inf <= 1.0:
                rep.problems.append(f"t={t:g}: group {name}: r_inf {r_inf:g} not in (0, 1]")
            r_v = grp.r_v(t)
            if not 0.0 <= r_v <= 1.0:
                rep.problems.append(f"t={t:g}: group {name}: r_v {r_v:g} not in [0, 1]")
            if model.pi.kind == "constant":
                if not 0.0 <= s.a[i] <= 1.0:
                    rep.problems.append(f"t={t:g}: group {name}: π constant {s.a[i]:g} not in [0, 1]")
            else:
                if s.b[i] < 0:
                    rep.problems.append(f"t={t:g}: group {name}: b {s.b[i]:g} < 0")
                if s.a[i] < 0:
                    rep.problems.append(f"t={t:g}: group {name}: π below 0 at full coverage (a={s.a[i]:g})")
                if s.a[i] + s.b[i] > 1.0 + 1e-12:
                    rep.problems.append(
                        f"t={t:g}: group {name}: π exceeds 1 at zero coverage (a+b={s.a[i] + s.b[i]:g})"
                    )
        if np.all(np.isfinite(s.r)):
            h = max(h, s.growth_constant())
    rep.growth_constant = h
    return rep


def fd_gradient_check(model: GameModel, t: float, P, step: float = 1e-6) -> float:
    """Worst error of ``eval_grad`` against central differences of the payoff.

    The stencil is clamped to ``[0, 1]``. The error for component ``i`` is
    ``|fd_i - grad_i| / max(1, |grad_i|)``, i.e. relative for large
    gradients and absolute near stationary points.
    """
    if not step > 0:
        raise DomainError(f"finite-difference step must be positive, got {step}")
    s = model.at(t)
    P = _check_P(model, P)
    an = s.grad(P)
    worst = 0.0
    for i in range(model.k):
        lo, hi = P.copy(), P.copy()
        lo[i] = max(P[i] - step, 0.0)
        hi[i] = min(P[i] + step, 1.0)
        fd = (s.payoff(hi)[i] - s.payoff(lo)[i]) / (hi[i] - lo[i])
        worst = max(worst, abs(fd - an[i]) / max(1.0, abs(an[i])))
    return worst
