"""Brute-force Nash verification by exhaustive best-response scans.

Nothing here touches the analytic gradient: payoffs are evaluated on a
uniform grid of ``[0, 1]`` and compared directly, so the oracle can catch
modelling mistakes in the gradient or the solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DomainError, GameModel, GameSlice

__all__ = [
    "OracleParams",
    "OracleError",
    "BestResponse",
    "NashResult",
    "best_response",
    "nash_check",
    "iterated_best_response",
    "equilibrium_oracle",
]

MAX_ORACLE_GROUPS = 3


class OracleError(RuntimeError):
    """Iterated best response did not settle."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True)
class OracleParams:
    resolution: float = 1e-3
    improvement_tol: float = 1e-9
    max_sweeps: int = 200

    def __post_init__(self):
        if not 0 < self.resolution <= 0.5:
            raise DomainError(f"oracle resolution must be in (0, 0.5], got {self.resolution}")
        if not self.improvement_tol > 0:
            raise DomainError("improvement_tol must be positive")
        if self.max_sweeps < 1:
            raise DomainError("max_sweeps must be at least 1")

    @property
    def grid(self) -> np.ndarray:
        n = int(round(1.0 / self.resolution))
        return np.linspace(0.0, 1.0, n + 1)


@dataclass
class BestResponse:
    argmax: np.ndarray
    value: float

    @property
    def best(self) -> float:
        """Grid maximizer with the largest payoff (first one on ties)."""
        return float(self.argmax[0])


@dataclass
class NashResult:
    passed: bool
    unit: int
    gain: float
    deviation: float

    def __bool__(self):
        return self.passed


def _slice(model, t) -> GameSlice:
    return model if isinstance(model, GameSlice) else model.at(t)


def _scan(s: GameSlice, i: int, P, grid: np.ndarray) -> np.ndarray:
    trial = np.repeat(np.asarray(P, dtype=float)[None, :], grid.size, axis=0)
    trial[:, i] = grid
    return s.payoff(trial)[:, i]


def best_response(model: GameModel, t: float, i: int, P_others, params: OracleParams) -> BestResponse:
    """Scan ``P_i`` over the grid holding the other coordinates fixed.

    ``P_others`` is either the full strategy vector (entry ``i`` ignored) or
    the ``k - 1`` other coordinates.
    """
    s = _slice(model, t)
    P = np.asarray(P_others, dtype=float)
    if P.size == s.k - 1:
        P = np.insert(P, i, 0.0)
    grid = params.grid
    vals = _scan(s, i, P, grid)
    best = vals.max()
    near = vals >= best - params.improvement_tol
    order = np.argsort(-vals[near], kind="stable")
    return BestResponse(argmax=grid[near][order], value=float(best))


def nash_check(model: GameModel, t: float, Q_slice, params: OracleParams) -> NashResult:
    """Pass iff no unit gains more than ``improvement_tol`` by deviating."""
    s = _slice(model, t)
    Q = np.asarray(Q_slice, dtype=float)
    u = s.payoff(Q)
    worst = NashResult(True, -1, 0.0, float("nan"))
    for i in range(s.k):
        br = best_response(s, t, i, Q, params)
        gain = br.value - u[i]
        if gain > worst.gain or worst.unit < 0:
            worst = NashResult(True, i, float(gain), br.best)
    worst.passed = worst.gain <= params.improvement_tol
    return worst


def iterated_best_response(model, t: float, params: OracleParams, start=None) -> np.ndarray:
    """Gauss-Seidel best-response sweeps on the grid until a sweep is idle.

    A unit only moves when its grid best response beats its current payoff
    by more than ``improvement_tol``; the returned point passes
    :func:`nash_check` on the same grid.
    """
    s = _slice(model, t)
    grid = params.grid
    P = np.full(s.k, 0.5) if start is None else np.clip(np.asarray(start, dtype=float), 0, 1)
    for _ in range(params.max_sweeps):
        moved = False
        for i in range(s.k):
            vals = _scan(s, i, P, grid)
            j = int(np.argmax(vals))
            if vals[j] > s.payoff(P)[i] + params.improvement_tol:
                P[i] = grid[j]
                moved = True
        if not moved:
            return P
    raise OracleError(f"best-response iteration did not settle in {params.max_sweeps} sweeps", last=P)


def equilibrium_oracle(model: GameModel, t: float, params: OracleParams) -> np.ndarray:
    """Grid equilibrium of the slice at ``t`` for games with at most 3 groups."""
    k = model.k
    if k > MAX_ORACLE_GROUPS:
        raise DomainError(f"equilibrium oracle is limited to k <= {MAX_ORACLE_GROUPS}, got k={k}")
    return iterated_best_response(model, t, params)
