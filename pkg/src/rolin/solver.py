"""Small deterministic convex minimizers.

``objective`` callables take a parameter vector and return ``(value, gradient)``.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

log = logging.getLogger(__name__)

_ARMIJO = 1e-4
_MIN_STEP = 1e-20
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 2000
    gradient_tolerance: float = 1e-6
    stability_ridge: float = 1e-8
    norm_cap: float = 1e4
    # penalty * |w|^2 on the subspace weights of a RoLin / top-PCs fit; "auto" is 1/(2n),
    # the default strength of common off-the-shelf logistic regression; 0 is plain risk minimization
    weight_penalty: float | str = "auto"

    def __post_init__(self):
        if self.weight_penalty != "auto" and not (isinstance(self.weight_penalty, (int, float)) and self.weight_penalty >= 0):
            raise ValueError(f"weight_penalty must be 'auto' or a non-negative number, got {self.weight_penalty!r}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.gradient_tolerance <= 0 or self.norm_cap <= 0 or self.stability_ridge < 0:
            raise ValueError("tolerances and norm_cap must be positive")

    def penalty_for(self, n: int) -> float:
        if self.weight_penalty == "auto":
            return 1.0 / (2.0 * max(n, 1))
        return float(self.weight_penalty)


def _evaluate(objective, w, where):
    f, g = objective(w)
    f = float(f)
    g = np.asarray(g, dtype=float)
    if not (math.isfinite(f) and np.all(np.isfinite(g))):
        raise SolverError(f"non-finite objective or gradient at {where}: f={f}, w={w!r}")
    return f, g


def _try(objective, w):
    # trial points during a line search; non-finite values just shrink the step
    f, g = objective(w)
    f = float(f)
    if math.isfinite(f) and np.all(np.isfinite(g)):
        return f, np.asarray(g, dtype=float)
    return math.inf, None


def _checked(objective):
    count = [0]

    def wrapped(w):
        count[0] += 1
        f, g = objective(w)
        f = float(f)
        g = np.asarray(g, dtype=float)
        if not (math.isfinite(f) and np.all(np.isfinite(g))):
            raise SolverError(f"non-finite objective or gradient at evaluation {count[0]}: f={f}, w={w!r}")
        return f, g

    return wrapped


def minimize_smooth(objective, start, cfg: SolverConfig = SolverConfig()) -> np.ndarray:
    """Minimize a smooth convex objective with L-BFGS (scipy) until the gradient norm is small.

    Each coordinate is boxed to ``[-norm_cap, norm_cap]``; a solution touching
    the box is logged. The result is never worse than ``start``.
    """
    w0 = np.array(start, dtype=float)
    obj = _checked(objective)
    f0, g0 = obj(w0)
    if math.sqrt(float(g0 @ g0)) <= cfg.gradient_tolerance:
        return w0
    cap = cfg.norm_cap
    res = optimize.minimize(
        obj, w0, jac=True, method="L-BFGS-B", bounds=[(-cap, cap)] * w0.size,
        options={"maxiter": cfg.max_iterations, "gtol": cfg.gradient_tolerance / math.sqrt(w0.size),
                 "ftol": 1e-15, "maxcor": 20},
    )
    w = np.asarray(res.x, dtype=float)
    if np.any(np.abs(w) >= cap):
        log.info("norm cap %.3g reached", cap)
    return w if res.fun <= f0 else w0


def minimize_gradient_descent(objective, start, cfg: SolverConfig = SolverConfig()) -> np.ndarray:
    """Plain gradient descent with Armijo backtracking and Barzilai-Borwein trial steps.

    Slower than ``minimize_smooth`` on flat objectives; kept as an independent
    reference route. Stops on the gradient tolerance, the iteration limit, or
    when the next iterate would leave the ``norm_cap`` ball (logged).
    """
    w = np.array(start, dtype=float)
    f, g = _evaluate(objective, w, "start")
    gnorm2 = float(g @ g)
    step = 1.0 / max(1.0, math.sqrt(gnorm2))
    for it in range(cfg.max_iterations):
        if math.sqrt(gnorm2) <= cfg.gradient_tolerance:
            break
        t = step
        while True:
            w_new = w - t * g
            f_new, g_new = _try(objective, w_new)
            if f_new <= f - _ARMIJO * t * gnorm2:
                break
            t *= 0.5
            if t < _MIN_STEP:
                return w
        if float(w_new @ w_new) > cfg.norm_cap**2:
            log.info("norm cap %.3g reached after %d iterations", cfg.norm_cap, it)
            return w
        s = w_new - w
        sy = float(s @ (g_new - g))
        step = float(s @ s) / sy if sy > 0 else 2.0 * t
        w, f, g = w_new, f_new, g_new
        gnorm2 = float(g @ g)
    return w


def minimize_subgradient(objective, start, cfg: SolverConfig = SolverConfig()) -> np.ndarray:
    """Subgradient descent with steps ~ 1/sqrt(t); returns the best iterate seen.

    For nonsmooth objectives such as the hinge loss.
    """
    w = np.array(start, dtype=float)
    f, g = _evaluate(objective, w, "start")
    best_f, best_w = f, w.copy()
    scale = max(1.0, float(np.linalg.norm(w)))
    for it in range(cfg.max_iterations):
        gnorm = float(np.linalg.norm(g))
        if gnorm == 0.0:
            break
        w = w - (scale / math.sqrt(it + 1.0)) * g / gnorm
        nrm = float(np.linalg.norm(w))
        if nrm > cfg.norm_cap:
            w *= cfg.norm_cap / nrm
        f, g = _evaluate(objective, w, f"iteration {it}")
        if f < best_f:
            best_f, best_w = f, w.copy()
    return best_w


def minimize_1d_bounded(f, c_max: float, tolerance: float = 1e-6) -> float:
    """Golden-section search for the minimizer of a convex ``f`` on ``[0, c_max]``.

    Endpoints are compared explicitly; ties go to the smaller argument, so a
    constant objective returns 0.
    """
    if c_max < 0:
        raise ValueError(f"c_max must be non-negative, got {c_max}")
    if c_max == 0:
        return 0.0
    lo, hi = 0.0, float(c_max)
    a = hi - _GOLDEN * (hi - lo)
    b = lo + _GOLDEN * (hi - lo)
    fa, fb = f(a), f(b)
    while hi - lo > tolerance:
        if fa <= fb:
            hi, b, fb = b, a, fa
            a = hi - _GOLDEN * (hi - lo)
            fa = f(a)
        else:
            lo, a, fa = a, b, fb
            b = lo + _GOLDEN * (hi - lo)
            fb = f(b)
    mid = 0.5 * (lo + hi)
    best_c, best_f = 0.0, f(0.0)
    for c in (mid, float(c_max)):
        fc = f(c)
        if fc < best_f:
            best_c, best_f = c, fc
    return best_c


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def minimize_l1_regularized(
    objective,
    lam,
    dimension: int,
    cfg: SolverConfig = SolverConfig(),
    start=None,
    intercept_index: int | None = None,
) -> np.ndarray:
    """Minimize ``objective(w) + sum_j lam_j * |w_j|``.

    ``lam`` is a scalar or per-coordinate array; ``intercept_index`` is left
    unpenalized. Solved as a bound-constrained smooth problem in ``w = u - v``
    with ``u, v >= 0`` (L-BFGS-B), so inactive coordinates come out exactly 0.
    """
    weights = np.broadcast_to(np.asarray(lam, dtype=float), (dimension,)).copy()
    if np.any(weights < 0):
        raise ValueError("lam must be >= 0")
    if intercept_index is not None:
        weights[intercept_index] = 0.0
    obj = _checked(objective)
    w0 = np.zeros(dimension) if start is None else np.array(start, dtype=float)
    x0 = np.concatenate([np.maximum(w0, 0.0), np.maximum(-w0, 0.0)])
    lin = np.concatenate([weights, weights])

    def split(x):
        f, g = obj(x[:dimension] - x[dimension:])
        return f + float(lin @ x), np.concatenate([g, -g]) + lin

    f0 = split(x0)[0]
    cap = cfg.norm_cap
    res = optimize.minimize(
        split, x0, jac=True, method="L-BFGS-B", bounds=[(0.0, cap)] * (2 * dimension),
        options={"maxiter": cfg.max_iterations, "gtol": cfg.gradient_tolerance / math.sqrt(2 * dimension),
                 "ftol": 1e-15, "maxcor": 20},
    )
    x = res.x if res.fun <= f0 else x0
    return x[:dimension] - x[dimension:]


def minimize_l1_prox(
    objective,
    lam,
    dimension: int,
    cfg: SolverConfig = SolverConfig(),
    start=None,
    intercept_index: int | None = None,
) -> np.ndarray:
    """Minimize ``objective(w) + sum_j lam_j * |w_j|`` by monotone FISTA with backtracking.

    Soft-thresholding proximal steps; the objective never increases between iterates.

    ``lam`` is a scalar or a per-coordinate array; the coordinate
    ``intercept_index`` (if given) is left unpenalized.
    """
    weights = np.broadcast_to(np.asarray(lam, dtype=float), (dimension,)).copy()
    if np.any(weights < 0):
        raise ValueError("lam must be >= 0")
    if intercept_index is not None:
        weights[intercept_index] = 0.0

    def penalty(v):
        return float(weights @ np.abs(v))

    x = np.zeros(dimension) if start is None else np.array(start, dtype=float)
    fx, _ = _evaluate(objective, x, "start")
    Fx = fx + penalty(x)
    y, t, L = x.copy(), 1.0, 1.0
    for it in range(cfg.max_iterations):
        fy, gy = _evaluate(objective, y, f"iteration {it}")
        while True:
            z = soft_threshold(y - gy / L, weights / L)
            d = z - y
            fz, _ = _try(objective, z)
            if fz <= fy + float(gy @ d) + 0.5 * L * float(d @ d) + 1e-15 * abs(fy):
                break
            L *= 2.0
            if L > 1e20:
                return x
        Fz = fz + penalty(z)
        x_prev = x
        if Fz <= Fx:
            x, Fx = z, Fz
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = x + (t / t_next) * (z - x) + ((t - 1.0) / t_next) * (x - x_prev)
        t = t_next
        if L * math.sqrt(float(d @ d)) <= cfg.gradient_tolerance:
            break
    return x
