"""RoLin fit: classifier on the top principal subspace plus a bounded robust component.

The fit for hyperparameters ``(k, sigma_ratio, b_max)``:

1. SVD of the signed matrix ``Z`` (rows ``y_i x_i``); the top ``k`` right
   singular vectors span S0, the rest span the complement.
2. Intercept and weights on S0 by empirical risk minimization.
3. Direction on the complement: ``V (D^2 + sigma_bound I)^-1 V^T Z^T 1`` with
   ``sigma_bound = sigma_ratio * max(D^2)``, normalized to unit length.
4. Magnitude of that component by a 1-D search on ``[0, b_max]``.
"""
from dataclasses import dataclass, field

import numpy as np

from .data import LabeledDataset, Normalization
from .linalg import SubspaceDecomposition, signed_matrix, thin_svd
from .losses import LossKind, as_loss_kind, loss_derivative, loss_value, require_fittable
from .solver import SolverConfig, minimize_1d_bounded, minimize_smooth, minimize_subgradient

_ZERO_DIRECTION = 1e-12


@dataclass(frozen=True, order=True)
class HyperParams:
    """Field order doubles as the canonical candidate order (k, sigma, b, normalize)."""

    k: int
    sigma_ratio: float = 0.0
    b_max: float = 0.0
    normalize: bool = False

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise ValueError(f"k must be a non-negative integer, got {self.k}")
        for name in ("sigma_ratio", "b_max"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "sigma_ratio", float(self.sigma_ratio))
        object.__setattr__(self, "b_max", float(self.b_max))
        object.__setattr__(self, "normalize", bool(self.normalize))

    def as_dict(self) -> dict:
        return {"k": self.k, "sigma_ratio": self.sigma_ratio, "b_max": self.b_max, "normalize": self.normalize}


@dataclass(frozen=True)
class LinearModel:
    intercept: float
    weights: np.ndarray
    loss_kind: LossKind
    normalization: Normalization | None = None
    fitted_hyperparams: HyperParams | None = None
    method: str = "rolin"
    feature_names: tuple = field(default=(), compare=False)
    extra: dict = field(default_factory=dict, compare=False)

    def score(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.weights.shape[0]:
            raise ValueError(f"model has {self.weights.shape[0]} weights, data has {X.shape[-1]} features")
        if self.normalization is not None:
            X = self.normalization.apply(X)
        return self.intercept + X @ self.weights

    def predict(self, X) -> np.ndarray:
        return np.where(self.score(X) > 0, 1.0, -1.0)


@dataclass(frozen=True)
class RobustComponent:
    mu: np.ndarray
    nu: np.ndarray
    eta: np.ndarray
    magnitude: float
    sigma_bound: float

    @property
    def beta(self) -> np.ndarray:
        return self.magnitude * self.eta


def margin_objective(A: np.ndarray, loss, ridge: float, penalty: float = 0.0, penalty_mask=None, column_scale=None):
    """Mean loss of the margins ``A @ theta`` plus ``ridge*|theta|^2 + penalty*|theta[mask]|^2``.

    With ``column_scale`` the objective is expressed in ``theta' = theta * column_scale``
    (columns of ``A`` divided by the scale); the minimizer maps back exactly.
    """
    loss = require_fittable(loss)
    n = A.shape[0]
    quad = np.full(A.shape[1], ridge)
    if penalty:
        quad = quad + penalty * (np.ones(A.shape[1]) if penalty_mask is None else penalty_mask)
    if column_scale is not None:
        A = A / column_scale
        quad = quad / column_scale**2

    def objective(theta):
        m = A @ theta
        f = float(np.mean(loss_value(loss, m))) + float(quad @ (theta * theta))
        g = A.T @ loss_derivative(loss, m) / n + 2.0 * quad * theta
        return f, g

    return objective


# second derivative of each smooth loss at margin 0; hinge has none, 1 is a neutral stand-in
_CURVATURE_AT_ZERO = {
    LossKind.LOGISTIC: 0.25 / np.log(2.0),
    LossKind.SQUARED_HINGE: 2.0,
    LossKind.MODIFIED_HUBER: 2.0,
    LossKind.HINGE: 1.0,
}


def column_scale(A: np.ndarray, loss=LossKind.SQUARED_HINGE, quad=None) -> np.ndarray:
    """Square root of the objective's Hessian diagonal at zero; used as a diagonal preconditioner."""
    h = np.mean(A * A, axis=0) * _CURVATURE_AT_ZERO[as_loss_kind(loss)]
    if quad is not None:
        h = h + 2.0 * quad
    c = np.sqrt(h)
    return np.where(c > 0, c, 1.0)


def fit_margins(A: np.ndarray, loss, cfg: SolverConfig, penalty: float = 0.0, penalty_mask=None) -> np.ndarray:
    """Minimize the mean margin loss over ``theta``; hinge uses the subgradient method."""
    loss = require_fittable(loss)
    quad = penalty * (np.ones(A.shape[1]) if penalty_mask is None else penalty_mask) if penalty else None
    scale = column_scale(A, loss, quad)
    obj = margin_objective(A, loss, cfg.stability_ridge, penalty, penalty_mask, scale)
    start = np.zeros(A.shape[1])
    if loss.smooth:
        return minimize_smooth(obj, start, cfg) / scale
    return minimize_subgradient(obj, start, cfg) / scale


def fit_subspace_classifier(Z, labels, v_s0, loss, cfg: SolverConfig = SolverConfig()):
    """Intercept and S0 weights minimizing the mean loss of ``b0*y_i + gamma^T V_S0^T z_i``.

    ``gamma`` carries ``cfg.penalty_for(n) * |gamma|^2``; the intercept only the
    stability ridge. Returns ``(beta0, beta_s0)`` with ``beta_s0 = V_S0 gamma``.
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(labels, dtype=float)
    v_s0 = np.asarray(v_s0, dtype=float).reshape(Z.shape[1], -1)
    A = np.column_stack([y, Z @ v_s0])
    mask = np.ones(A.shape[1])
    mask[0] = 0.0
    theta = fit_margins(A, loss, cfg, penalty=cfg.penalty_for(Z.shape[0]), penalty_mask=mask)
    return float(theta[0]), v_s0 @ theta[1:]


def robust_direction(Z, decomposition: SubspaceDecomposition, sigma_ratio: float) -> RobustComponent:
    """Unit direction of the robust component (magnitude left at 0)."""
    Z = np.asarray(Z, dtype=float)
    n, p = Z.shape
    V, d = decomposition.v_rest, decomposition.d_rest
    if V.shape[1] == 0:
        z = np.zeros(p)
        return RobustComponent(np.zeros(0), z, z.copy(), 0.0, 0.0)
    if sigma_ratio < 0:
        raise ValueError("sigma_ratio must be >= 0")
    d2 = d * d
    sigma_bound = float(sigma_ratio * d2.max())
    denom = d2 + sigma_bound
    if np.any(denom <= 0):
        raise ValueError("singular smoothed covariance: zero singular value with sigma_ratio=0")
    coords = V.T @ Z.sum(axis=0)
    mu = coords / n
    # |Z^T 1| <= sqrt(n)*|Z|_F, so this is relative to the largest possible mean signal
    if np.linalg.norm(coords) <= _ZERO_DIRECTION * np.sqrt(n) * np.linalg.norm(Z):
        z = np.zeros(p)
        return RobustComponent(mu, z, z.copy(), 0.0, sigma_bound)
    nu = V @ (coords / denom)
    return RobustComponent(mu, nu, nu / np.linalg.norm(nu), 0.0, sigma_bound)


def magnitude_tolerance(b_max: float) -> float:
    return 1e-6 * max(1.0, b_max)


def fit_magnitude(Z, labels, beta0, beta_s0, eta, b_max, loss, tolerance=None) -> float:
    """Best length ``c`` in ``[0, b_max]`` for ``beta_s0 + c*eta`` with ``beta0`` held fixed."""
    if b_max < 0:
        raise ValueError("b_max must be >= 0")
    Z = np.asarray(Z, dtype=float)
    along = Z @ eta
    if b_max == 0 or not np.any(along):
        return 0.0
    loss = as_loss_kind(loss)
    base = beta0 * np.asarray(labels, dtype=float) + Z @ beta_s0

    def f(c):
        return float(np.mean(loss_value(loss, base + c * along)))

    tol = magnitude_tolerance(b_max) if tolerance is None else tolerance
    return minimize_1d_bounded(f, b_max, tol)


def prepare(data: LabeledDataset, normalize: bool):
    """Normalization (or None), signed matrix and its SVD for one training set."""
    norm = Normalization.fit(data.features) if normalize else None
    X = norm.apply(data.features) if norm else data.features
    Z = signed_matrix(X, data.labels)
    return norm, Z, thin_svd(Z)


def assemble(beta0, beta_s0, component: RobustComponent, loss, psi, norm, feature_names=(), method="rolin"):
    return LinearModel(
        intercept=float(beta0),
        weights=beta_s0 + component.beta,
        loss_kind=as_loss_kind(loss),
        normalization=norm,
        fitted_hyperparams=psi,
        method=method,
        feature_names=tuple(feature_names),
    )


def calc_beta_details(data: LabeledDataset, psi: HyperParams, loss, cfg: SolverConfig = SolverConfig()):
    """Like ``calc_beta`` but also returns the robust component and the decomposition."""
    loss = require_fittable(loss)
    if data.n == 0:
        raise ValueError("empty training set")
    norm, Z, dec = prepare(data, psi.normalize)
    if psi.k > dec.rank:
        raise ValueError(f"k={psi.k} exceeds the numerical rank {dec.rank} of the training data")
    dec = dec.with_split(psi.k)
    beta0, beta_s0 = fit_subspace_classifier(Z, data.labels, dec.v_s0, loss, cfg)
    comp = robust_direction(Z, dec, psi.sigma_ratio)
    if np.any(comp.eta):
        c = fit_magnitude(Z, data.labels, beta0, beta_s0, comp.eta, psi.b_max, loss)
        comp = RobustComponent(comp.mu, comp.nu, comp.eta, c, comp.sigma_bound)
    model = assemble(beta0, beta_s0, comp, loss, psi, norm, data.feature_names)
    return model, comp, dec


def calc_beta(data: LabeledDataset, psi: HyperParams, loss, cfg: SolverConfig = SolverConfig()) -> LinearModel:
    return calc_beta_details(data, psi, loss, cfg)[0]
