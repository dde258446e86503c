"""Time-discretized evolutionary variational inequality over the box.

The inequality

    integral_0^T < -grad u(t, Q(t)), P(t) - Q(t) > dt >= 0   for all P in K

has box constraints imposed pointwise in time and a map that is local in
``t``, so on a grid it splits into one finite-dimensional box VI per node.
Each slice is solved by a projection method (extragradient by default),
optionally accelerated by an exact active-set step, and certified by the
natural residual ``||Q - clip(Q - F(Q))||_inf`` with ``F = -grad u``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import DomainError, GameModel, GameSlice, validate_model
from .oracle import OracleError, OracleParams, iterated_best_response

__all__ = [
    "TimeGrid",
    "StrategyProfile",
    "SolverParams",
    "SliceDiagnostics",
    "NoCertifiedSolution",
    "natural_residual",
    "solve_slice",
    "solve_profile",
    "evi_value",
    "evi_values",
    "check_k_pseudomonotone",
]

log = logging.getLogger(__name__)

CERTIFY_GAMMA = 1.0


class NoCertifiedSolution(RuntimeError):
    """The residual stayed above tolerance even after the fallback."""

    def __init__(self, message, best=None, residual=float("nan"), node=None):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.node = node


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on ``[0, T]`` with trapezoidal weights."""

    T: float
    n_nodes: int
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_nodes < 2:
            raise DomainError(f"a time grid needs at least 2 nodes, got {self.n_nodes}")
        if not self.T > 0:
            raise DomainError(f"horizon must be positive, got {self.T}")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "n_nodes", int(self.n_nodes))
        nodes = np.linspace(0.0, self.T, self.n_nodes)
        w = np.full(self.n_nodes, self.T / (self.n_nodes - 1))
        w[[0, -1]] *= 0.5
        nodes.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", w)

    def pairing(self, phi, y) -> float:
        """Discrete ``<<phi, y>> = sum_n w_n <phi_n, y_n>``."""
        return float(self.weights @ np.sum(np.asarray(phi) * np.asarray(y), axis=1))


@dataclass
class StrategyProfile:
    """Vaccination probabilities, shape ``(n_nodes, k)``, all in ``[0, 1]``."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != self.grid.n_nodes:
            raise DomainError(
                f"profile shape {self.values.shape} does not match {self.grid.n_nodes} grid nodes"
            )
        if np.any(self.values < 0) or np.any(self.values > 1) or not np.all(np.isfinite(self.values)):
            raise DomainError("strategy profile leaves the box [0, 1]")

    @property
    def k(self) -> int:
        return self.values.shape[1]

    @classmethod
    def constant(cls, grid: TimeGrid, Q) -> "StrategyProfile":
        return cls(grid, np.tile(np.asarray(Q, dtype=float), (grid.n_nodes, 1)))


@dataclass(frozen=True)
class SolverParams:
    """Slice solver settings.

    ``gamma=None`` picks ``0.5 / h`` with ``h`` the validated growth constant.
    ``polish`` enables the exact active-set step (the gradient is affine in
    ``P`` for every supported ``pi`` family).
    """

    method: str = "extragradient"
    gamma: float | None = None
    max_iters: int = 5000
    tol: float = 1e-10
    oracle_fallback_resolution: int = 1000
    polish: bool = True

    def __post_init__(self):
        if self.method not in ("extragradient", "fixed_point"):
            raise DomainError(f"unknown solver method {self.method!r}")
        if self.gamma is not None and not self.gamma > 0:
            raise DomainError("gamma must be positive")
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.max_iters < 0 or self.oracle_fallback_resolution < 2:
            raise DomainError("max_iters must be >= 0 and oracle_fallback_resolution >= 2")


@dataclass
class SliceDiagnostics:
    iterations: int
    residual: float
    fallback_used: bool = False
    node: int | None = None


def _slice(model, t) -> GameSlice:
    return model if isinstance(model, GameSlice) else model.at(t)


def _residual(s: GameSlice, Q, gamma: float = CERTIFY_GAMMA) -> float:
    return float(np.max(np.abs(Q - np.clip(Q - gamma * s.F(Q), 0.0, 1.0))))


def natural_residual(model: GameModel, t: float, Q_slice, gamma: float = CERTIFY_GAMMA) -> float:
    """``||Q - clip(Q - gamma F(Q), 0, 1)||_inf``; zero iff ``Q`` solves the slice VI."""
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    return _residual(_slice(model, t), np.asarray(Q_slice, dtype=float), gamma)


def _active_set_step(s: GameSlice, Q: np.ndarray, max_rounds: int | None = None) -> np.ndarray:
    """Primal-dual active-set iteration for the affine box VI.

    Each round guesses which bounds bind from a one-dimensional Newton
    prediction ``Q_i - F_i / J_ii`` (or the sign of ``F_i`` when ``J_ii = 0``),
    pins those components, and solves ``F_free = 0`` exactly for the rest.
    """
    J = s.jacobian()
    d = np.diag(J)
    P = Q.copy()
    rounds = max_rounds or 2 * s.k + 4
    prev = None
    for _ in range(rounds):
        Fp = s.F(P)
        scale = np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0), 1e12)
        z = P - scale * Fp
        lower = (z <= 0) & (Fp > 0)
        upper = (z >= 1) & (Fp < 0)
        key = (lower.tobytes(), upper.tobytes())
        if key == prev:
            break
        prev = key
        P_new = P.copy()
        P_new[lower] = 0.0
        P_new[upper] = 1.0
        free = ~(lower | upper)
        if free.any():
            rhs = -s.F(P_new)[free]
            delta, *_ = np.linalg.lstsq(J[np.ix_(free, free)], rhs, rcond=None)
            P_new[free] += delta
        P = np.clip(P_new, 0.0, 1.0)
    return P


def _projection_loop(s: GameSlice, Q, params: SolverParams, gamma0: float, window: int = 50):
    tol = params.tol
    gamma = gamma0
    res = _residual(s, Q)
    window_start = res
    it = 0
    for it in range(1, params.max_iters + 1):
        if params.polish:
            Qp = _active_set_step(s, Q)
            rp = _residual(s, Qp)
            if rp < res:
                Q, res = Qp, rp
            if res <= tol:
                return Q, res, it
        if params.method == "extragradient":
            Qbar = np.clip(Q - gamma * s.F(Q), 0.0, 1.0)
            Q = np.clip(Q - gamma * s.F(Qbar), 0.0, 1.0)
        else:
            Q = np.clip(Q - gamma * s.F(Q), 0.0, 1.0)
        res = _residual(s, Q)
        if res <= tol:
            return Q, res, it
        # the natural residual is not monotone step to step; judge progress per window
        if it % window == 0:
            if res >= window_start:
                gamma *= 0.5
            window_start = res
    return Q, res, it


def solve_slice(model: GameModel, t: float, init, params: SolverParams = SolverParams(), h: float | None = None):
    """Solve the box VI at one time node.

    Returns ``(Q, SliceDiagnostics)``. A point whose residual is already
    within ``tol`` is returned untouched, so degenerate slices keep the
    warm start. If the projection method runs out of iterations, iterated
    best response on a grid of ``oracle_fallback_resolution`` cells seeds an
    active-set step and the result is re-certified.

    Raises
    ------
    NoCertifiedSolution
        Residual above ``tol`` after the fallback; ``.best`` holds the best
        iterate.
    """
    s = _slice(model, t)
    Q = np.clip(np.asarray(init, dtype=float).copy(), 0.0, 1.0)
    if Q.shape != (s.k,):
        raise DomainError(f"initial point must have length {s.k}")
    res = _residual(s, Q)
    if res <= params.tol:
        return Q, SliceDiagnostics(0, res)
    if params.gamma is not None:
        gamma0 = params.gamma
    else:
        h = h if h is not None else s.growth_constant()
        gamma0 = 0.5 / h if h > 0 else 1.0
    Q, res, iters = _projection_loop(s, Q, params, gamma0)
    if res <= params.tol:
        return Q, SliceDiagnostics(iters, res)

    log.info("t=%g: projection method stalled at residual %.3g, using best-response fallback", s.t, res)
    best, best_res = Q, res
    oparams = OracleParams(resolution=1.0 / params.oracle_fallback_resolution, max_sweeps=500)
    try:
        Qf = iterated_best_response(s, s.t, oparams, start=Q)
    except OracleError as exc:
        Qf = exc.last
    Qf = _active_set_step(s, Qf, max_rounds=4 * s.k + 8)
    rf = _residual(s, Qf)
    if rf < best_res:
        best, best_res = Qf, rf
    if best_res <= params.tol:
        return best, SliceDiagnostics(iters, best_res, fallback_used=True)
    raise NoCertifiedSolution(
        f"t={s.t:g}: no certified solution (residual {best_res:.3g} > tol {params.tol:g})",
        best=best,
        residual=best_res,
    )


def _solve_nodes(model, nodes, idx, params, h):
    out = []
    for n in idx:
        try:
            Q, diag = solve_slice(model, nodes[n], np.full(model.k, 0.5), params, h)
        except NoCertifiedSolution as exc:
            exc.node = n
            raise
        diag.node = n
        out.append((n, Q, diag))
    return out


def solve_profile(
    model: GameModel,
    grid: TimeGrid,
    params: SolverParams = SolverParams(),
    init=None,
    parallel: bool = False,
    max_workers: int | None = None,
):
    """Solve every slice and return ``(StrategyProfile, [SliceDiagnostics])``.

    Sequential mode warm-starts each node from the previous solution;
    parallel mode starts every node at 0.5.
    """
    report = validate_model(model, grid)
    report.raise_if_invalid()
    h = report.growth_constant
    values = np.empty((grid.n_nodes, model.k))
    diags: list[SliceDiagnostics] = [None] * grid.n_nodes  # type: ignore[list-item]
    if parallel:
        chunks = [list(c) for c in np.array_split(np.arange(grid.n_nodes), max_workers or 4) if len(c)]
        with ProcessPoolExecutor(max_workers=max_workers) as ex:
            futures = [ex.submit(_solve_nodes, model, grid.nodes, c, params, h) for c in chunks]
            for fut in futures:
                for n, Q, d in fut.result():
                    values[n], diags[n] = Q, d
    else:
        Q = np.full(model.k, 0.5) if init is None else np.asarray(init, dtype=float)
        for n, t in enumerate(grid.nodes):
            try:
                Q, d = solve_slice(model, t, Q, params, h)
            except NoCertifiedSolution as exc:
                exc.node = n
                raise NoCertifiedSolution(f"node {n}: {exc}", exc.best, exc.residual, n) from exc
            d.node = n
            values[n], diags[n] = Q, d
    return StrategyProfile(grid, values), diags


def _F_profile(model: GameModel, Q: StrategyProfile) -> np.ndarray:
    return np.array([model.at(t).F(q) for t, q in zip(Q.grid.nodes, Q.values)])


def evi_value(model: GameModel, Q: StrategyProfile, P: StrategyProfile) -> float:
    """``psi(P) = <<-grad u(Q), P - Q>>`` with trapezoidal weights."""
    if Q.grid != P.grid or Q.values.shape != P.values.shape:
        raise DomainError("profiles live on different grids")
    return Q.grid.pairing(_F_profile(model, Q), P.values - Q.values)


def evi_values(model: GameModel, Q: StrategyProfile, P: np.ndarray) -> np.ndarray:
    """``psi`` for a batch of candidate profiles ``P`` of shape ``(m, n_nodes, k)``.

    ``F(Q)`` is evaluated once, so this is the cheap way to sample the EVI.
    """
    P = np.asarray(P, dtype=float)
    if P.shape[1:] != Q.values.shape:
        raise DomainError(f"expected candidates of shape (m, {Q.values.shape[0]}, {Q.values.shape[1]})")
    if np.any((P < 0) | (P > 1)):
        raise DomainError("candidate profiles leave the box [0, 1]")
    F = _F_profile(model, Q)
    return np.einsum("n,mnk,nk->m", Q.grid.weights, P - Q.values, F)


def check_k_pseudomonotone(model, t: float, n_pairs: int = 1000, seed: int = 0, F=None, k: int | None = None):
    """Sample pairs in the box and list Karamardian violations.

    A violation is a pair with ``<F(Q), P - Q> >= 0`` but
    ``<F(P), P - Q> < -1e-12``. An empty list means none was found, not a
    proof. ``F`` overrides the model map (then ``model`` may be ``None`` and
    ``k`` gives the dimension).
    """
    if F is None:
        F = _slice(model, t).F
        k = model.k
    rng = np.random.default_rng(seed)
    P = rng.random((n_pairs, k))
    Q = rng.random((n_pairs, k))
    d = P - Q
    fq = np.sum(np.asarray(F(Q)) * d, axis=-1)
    fp = np.sum(np.asarray(F(P)) * d, axis=-1)
    bad = np.flatnonzero((fq >= 0) & (fp < -1e-12))
    return [(P[j], Q[j], float(fq[j]), float(fp[j])) for j in bad]
