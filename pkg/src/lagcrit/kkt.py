"""Lagrange stationarity system and its multistart Newton solver."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .densela import SingularMatrixError, solve_linear
from .exprcalc import DomainError, Expression, jet, parse, value_and_gradient

log = logging.getLogger(__name__)

DEFAULT_BOX = (-5.0, 5.0)
BOX_INFLATION = 10.0


class ConstraintDomainError(DomainError):
    """Domain error raised while evaluating constraint ``index``."""

    def __init__(self, err: DomainError, index: int):
        ArithmeticError.__init__(self, f"constraint {index}: {err}")
        self.node = err.node
        self.index = index


@dataclass(frozen=True)
class Problem:
    """Minimize ``objective`` subject to ``constraints == 0``."""

    variables: tuple[str, ...]
    objective: Expression
    constraints: tuple[Expression, ...]
    box: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        n, m = len(self.variables), len(self.constraints)
        if not 1 <= m < n:
            raise ValueError(f"need 1 <= constraints < variables, got m={m}, n={n}")
        for e in (self.objective, *self.constraints):
            if e.variables != tuple(self.variables):
                raise ValueError("all expressions must use the problem's variable list")
        if not self.box:
            object.__setattr__(self, "box", (DEFAULT_BOX,) * n)
        if len(self.box) != n:
            raise ValueError(f"box has {len(self.box)} intervals, expected {n}")
        for lo, hi in self.box:
            if not lo < hi:
                raise ValueError(f"degenerate box interval [{lo}, {hi}]")

    @classmethod
    def from_text(
        cls,
        variables: Sequence[str],
        objective: str,
        constraints: Sequence[str],
        box: Sequence[tuple[float, float]] | None = None,
    ) -> "Problem":
        variables = tuple(variables)
        return cls(
            variables,
            parse(objective, variables),
            tuple(parse(c, variables) for c in constraints),
            tuple((float(lo), float(hi)) for lo, hi in box) if box else (),
        )

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def m(self) -> int:
        return len(self.constraints)

    def box_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        b = np.array(self.box, dtype=float)
        return b[:, 0], b[:, 1]


@dataclass(frozen=True)
class CriticalPoint:
    x: np.ndarray
    lam: np.ndarray
    residual_norm: float
    iterations: int = 0


@dataclass(frozen=True)
class SolverConfig:
    starts: int = 64
    max_newton_iters: int = 100
    stationarity_tol: float = 1e-9
    dedup_radius: float = 1e-6
    min_step: float = 2.0**-30
    rng_seed: int = 0

    def __post_init__(self):
        if self.starts < 1 or self.max_newton_iters < 1:
            raise ValueError("starts and max_newton_iters must be positive")
        if not 0 < self.stationarity_tol < self.dedup_radius:
            raise ValueError("need 0 < stationarity_tol < dedup_radius")
        if self.min_step <= 0:
            raise ValueError("min_step must be positive")


@dataclass
class SearchResult:
    points: list[CriticalPoint]
    converged: int = 0
    diverged: int = 0
    skipped: int = 0
    reasons: dict[str, int] = field(default_factory=dict)


def _split(p: Problem, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return z[: p.n], z[p.n :]


def _constraint_jets(p: Problem, x, order: int = 2):
    out = []
    for i, g in enumerate(p.constraints):
        try:
            out.append(jet(g, x) if order == 2 else value_and_gradient(g, x))
        except DomainError as err:
            raise ConstraintDomainError(err, i) from None
    return out


def kkt_residual(p: Problem, x, lam) -> np.ndarray:
    """Stack ``grad f + sum lam_i grad g_i`` over ``g(x)``."""
    x = np.asarray(x, dtype=float)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if lam.shape != (p.m,):
        raise ValueError(f"expected {p.m} multipliers, got {lam.shape}")
    _, grad = value_and_gradient(p.objective, x)
    gvs = _constraint_jets(p, x, order=1)
    for li, (_, gg) in zip(lam, gvs):
        grad = grad + li * gg
    return np.concatenate([grad, [gv for gv, _ in gvs]])


def constraint_jacobian(p: Problem, x) -> np.ndarray:
    return np.array([gg for _, gg in _constraint_jets(p, x, order=1)])


def lagrangian_hessian(p: Problem, x, lam) -> np.ndarray:
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    H = jet(p.objective, x).h.copy()
    for li, gj in zip(lam, _constraint_jets(p, x)):
        H += li * gj.h
    return H


def kkt_jacobian(p: Problem, x, lam) -> np.ndarray:
    """Block matrix ``[[L_xx, Jg^T], [Jg, 0]]``."""
    x = np.asarray(x, dtype=float)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if x.shape != (p.n,) or lam.shape != (p.m,):
        raise ValueError("dimension mismatch")
    for i, g in enumerate(p.constraints):
        try:
            g._jet(x)
        except DomainError as err:
            raise ConstraintDomainError(err, i) from None
    return _kkt_matrix(p, np.concatenate([x, lam]))


def _kkt_matrix(p: Problem, z: np.ndarray) -> np.ndarray:
    n, m = p.n, p.m
    x = z[:n]
    fj = p.objective._jet(x)
    K = np.zeros((n + m, n + m))
    H = K[:n, :n]
    H += fj.h
    for i, g in enumerate(p.constraints):
        gj = g._jet(x)
        if not gj.const:
            H += z[n + i] * gj.h
        K[:n, n + i] = gj.g
        K[n + i, :n] = gj.g
    return K


def _residual_or_none(p: Problem, z: np.ndarray) -> np.ndarray | None:
    # hot path of the line search: no argument checking
    n = p.n
    x = z[:n]
    r = np.empty(n + p.m)
    try:
        _, grad = p.objective._dual(x)
        grad = np.zeros(n) if grad is None else grad
        for i, g in enumerate(p.constraints):
            v, gg = g._dual(x)
            if gg is not None:
                grad = grad + z[n + i] * gg
            r[n + i] = v
    except DomainError:
        return None
    r[:n] = grad
    return r if math.isfinite(r.sum()) else None


def _newton_direction(K: np.ndarray, r: np.ndarray) -> np.ndarray:
    try:
        return solve_linear(K, -r)
    except SingularMatrixError:
        # damped least squares when the KKT matrix is singular (e.g. lam = 0
        # with a linear objective)
        mu = 1e-8 * max(1.0, float(np.max(np.abs(K)))) ** 2
        return solve_linear(K.T @ K + mu * np.eye(K.shape[0]), -(K.T @ r))


def solve_from(p: Problem, start_x, start_lam, cfg: SolverConfig = SolverConfig()):
    """Damped Newton on the KKT residual from one start.

    Returns ``(CriticalPoint, None)`` on success or ``(None, reason)`` on
    divergence. Once the infinity-norm residual is below tolerance the
    iteration continues while it keeps reducing the residual, which recovers
    full accuracy at roots where the KKT matrix is singular.
    """
    z = np.concatenate([np.asarray(start_x, float), np.atleast_1d(np.asarray(start_lam, float))])
    lo, hi = p.box_bounds()
    center, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    outer_lo, outer_hi = center - BOX_INFLATION * half, center + BOX_INFLATION * half
    r = _residual_or_none(p, z)
    if r is None:
        return None, "start outside domain"
    rnorm = math.sqrt(r @ r)
    converged_at = 0 if np.max(np.abs(r)) <= cfg.stationarity_tol else None

    for it in range(cfg.max_newton_iters):
        if rnorm == 0.0:
            break
        try:
            K = _kkt_matrix(p, z)
            d = _newton_direction(K, r)
        except (DomainError, SingularMatrixError):
            if converged_at is not None:
                break
            return None, "singular Jacobian"
        t = 1.0
        while t >= cfg.min_step:
            trial = z + t * d
            r_trial = _residual_or_none(p, trial)
            if r_trial is not None and math.sqrt(r_trial @ r_trial) < rnorm:
                break
            t *= 0.5
        else:
            if converged_at is not None:
                break
            return None, "step collapse"
        z, r, rnorm = trial, r_trial, math.sqrt(r_trial @ r_trial)
        x = z[: p.n]
        if np.any(x < outer_lo) or np.any(x > outer_hi):
            return None, "left inflated box"
        if converged_at is None and np.max(np.abs(r)) <= cfg.stationarity_tol:
            converged_at = it + 1
        if converged_at is not None and np.linalg.norm(t * d) <= 1e-15 * (1.0 + np.linalg.norm(z)):
            break

    if converged_at is None:
        return None, "iteration limit"
    refined = refine_singular_root(p, z, cfg)
    if refined is not None:
        z, r = refined
    x, lam = _split(p, z)
    return CriticalPoint(x.copy(), lam.copy(), float(np.max(np.abs(r))), converged_at), None


SINGULAR_RTOL = 1e-4


def refine_singular_root(p: Problem, z: np.ndarray, cfg: SolverConfig):
    """Sharpen a converged root at which the KKT matrix is (nearly) singular.

    Newton only reaches such roots to about the square root of the residual
    noise, which leaves a spurious curvature of that size in the projected
    Hessian. Gauss-Newton on the augmented system F(z) = 0, K(z) w = 0,
    w0.w = 1 locates them to full precision. Returns ``(z, residual)`` or
    None when the point is not a singular root or refinement fails.
    """
    K = _kkt_matrix(p, z)
    _, sv, vt = np.linalg.svd(K)
    kscale = max(1.0, sv[0])
    if sv[-1] > SINGULAR_RTOL * kscale:
        return None
    N = z.size
    w0 = vt[-1]
    w = w0.copy()
    y = z.copy()
    for _ in range(30):
        F = _residual_or_none(p, y)
        if F is None:
            return None
        Ky = _kkt_matrix(p, y)
        G = np.concatenate([F, Ky @ w, [w0 @ w - 1.0]])
        D = np.empty((N, N))
        for j in range(N):
            h = 6e-6 * (1.0 + abs(y[j]))
            yp, ym = y.copy(), y.copy()
            yp[j] += h
            ym[j] -= h
            try:
                D[:, j] = (_kkt_matrix(p, yp) - _kkt_matrix(p, ym)) @ w / (2.0 * h)
            except DomainError:
                return None
        JG = np.zeros((2 * N + 1, 2 * N))
        JG[:N, :N] = Ky
        JG[N : 2 * N, :N] = D
        JG[N : 2 * N, N:] = Ky
        JG[2 * N, N:] = w0
        step = np.linalg.lstsq(JG, -G, rcond=None)[0]
        y = y + step[:N]
        w = w + step[N:]
        if np.linalg.norm(step) <= 1e-15 * (1.0 + np.linalg.norm(y)):
            break
    F = _residual_or_none(p, y)
    if F is None or np.max(np.abs(F)) > cfg.stationarity_tol:
        return None
    if np.max(np.abs(_kkt_matrix(p, y) @ w)) > 1e-8 * kscale:
        return None
    if np.linalg.norm(y - z) > SINGULAR_RTOL * (1.0 + np.linalg.norm(z)):
        return None
    return y, F


def seed_points(p: Problem, cfg: SolverConfig) -> np.ndarray:
    """Scrambled Halton points over the sampling box, deterministic in ``rng_seed``."""
    sampler = qmc.Halton(d=p.n, scramble=True, seed=cfg.rng_seed)
    lo, hi = p.box_bounds()
    return qmc.scale(sampler.random(cfg.starts), lo, hi)


def multistart(p: Problem, cfg: SolverConfig = SolverConfig()) -> SearchResult:
    result = SearchResult(points=[])
    found: list[CriticalPoint] = []
    lam0 = np.zeros(p.m)
    for seed in seed_points(p, cfg):
        cp, reason = solve_from(p, seed, lam0, cfg)
        if cp is None:
            if reason == "start outside domain":
                result.skipped += 1
            else:
                result.diverged += 1
            result.reasons[reason] = result.reasons.get(reason, 0) + 1
            continue
        result.converged += 1
        found.append(cp)
    result.points = deduplicate(found, cfg.dedup_radius)
    log.debug(
        "multistart: %d converged, %d diverged, %d skipped, %d distinct",
        result.converged,
        result.diverged,
        result.skipped,
        len(result.points),
    )
    return result


def deduplicate(points: list[CriticalPoint], radius: float) -> list[CriticalPoint]:
    """Keep the smallest-residual representative of each cluster, sorted by x."""
    kept: list[CriticalPoint] = []
    for cp in sorted(points, key=lambda c: (c.residual_norm, tuple(c.x))):
        if all(np.linalg.norm(cp.x - k.x) >= radius for k in kept):
            kept.append(cp)
    return sorted(kept, key=lambda c: tuple(c.x))


def find_critical_points(p: Problem, cfg: SolverConfig = SolverConfig()) -> list[CriticalPoint]:
    return multistart(p, cfg).points
