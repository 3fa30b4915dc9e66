"""Nuisance-parameter learners: outcome regression and propensity score.

Two built-in learners fit the outcome regression ``qbar(a, w) = E[Y | A=a,
W=w]`` and the propensity ``g1(w) = Pr(A=1 | W=w)``:

* ``glm`` -- logistic regression with main terms plus treatment-confounder
  interactions, fit by Newton-Raphson (IRLS) with step halving;
* ``hal`` -- an L1-penalized logistic regression over zero-order spline
  (indicator) bases ``I(w >= knot)`` with treatment interactions, penalty
  chosen by V-fold cross-validated deviance. The L1 norm of the indicator
  coefficients bounds the fit's total variation, which is what lets this
  learner track functional forms no parametric model would.

Both accept fractional responses in [0, 1] (quasi-binomial likelihood); the
targeting step elsewhere relies on that. Custom learners plug in through the
``Learner`` protocol.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol, runtime_checkable

import numpy as np
from numba import njit
from scipy.special import expit, logit

from .errors import ArgumentError, DataError

PROB_CLIP = 1e-6  # fitted probabilities kept inside [PROB_CLIP, 1 - PROB_CLIP]
DEFAULT_G_TRUNCATION = 0.01
MAX_KNOTS = 200


# ---------------------------------------------------------------------------
# data container


@dataclass(frozen=True)
class Dataset:
    """Observed data (W, A, Y) with the outcome scaled into [0, 1].

    ``y_bounds`` records the original outcome range so reports can state the
    scale; binary outcomes carry (0, 1).
    """

    W: np.ndarray
    A: np.ndarray
    Y: np.ndarray
    y_bounds: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W, dtype=float))
        if W.shape[0] == 1 and np.asarray(self.A).size > 1:
            W = W.T
        A = np.asarray(self.A, dtype=float).ravel()
        Y = np.asarray(self.Y, dtype=float).ravel()
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Y", Y)
        n = len(A)
        if W.shape[0] != n or len(Y) != n:
            raise DataError(
                f"shape mismatch: W rows {W.shape[0]}, A {n}, Y {len(Y)}"
            )
        if n < 2:
            raise DataError(f"need at least 2 observations, got {n}")
        for name, arr in (("W", W), ("A", A), ("Y", Y)):
            if not np.all(np.isfinite(arr)):
                rows = np.unique(np.argwhere(~np.isfinite(np.atleast_2d(arr)))[:, -1])
                raise DataError(f"non-finite values in {name} at rows {rows[:10].tolist()}")
        bad = ~np.isin(A, (0.0, 1.0))
        if np.any(bad):
            raise DataError(
                f"A must be binary 0/1; offending rows {np.flatnonzero(bad)[:10].tolist()}"
            )
        if Y.min() < 0.0 or Y.max() > 1.0:
            raise DataError(
                "Y must lie in [0, 1] after scaling; "
                f"observed range ({Y.min():.6g}, {Y.max():.6g})"
            )

    @property
    def n(self) -> int:
        return len(self.A)

    @property
    def p(self) -> int:
        return self.W.shape[1]


def scale_outcome(
    y: np.ndarray, bounds: tuple[float, float] | None = None
) -> tuple[np.ndarray, tuple[float, float]]:
    """Map a continuous outcome onto [0, 1] by (y - lo) / (hi - lo).

    Binary 0/1 outcomes pass through untouched with bounds (0, 1). Raises
    DataError for constant outcomes, which cannot be scaled or modeled.
    """
    y = np.asarray(y, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise DataError("non-finite outcome values")
    if bounds is None:
        if np.all(np.isin(y, (0.0, 1.0))):
            return y, (0.0, 1.0)
        lo, hi = float(y.min()), float(y.max())
    else:
        lo, hi = float(bounds[0]), float(bounds[1])
    if hi <= lo:
        raise DataError(f"cannot scale outcome: bounds ({lo}, {hi}) are degenerate")
    scaled = (y - lo) / (hi - lo)
    if scaled.min() < 0 or scaled.max() > 1:
        raise DataError(
            f"outcome exceeds the supplied bounds ({lo}, {hi}); "
            f"observed range ({y.min():.6g}, {y.max():.6g})"
        )
    return scaled, (lo, hi)


@dataclass(frozen=True)
class NuisanceFit:
    """Fitted nuisances evaluated on a dataset: qbar(0, W), qbar(1, W), g(1|W)."""

    q0: np.ndarray
    q1: np.ndarray
    g1: np.ndarray
    g_truncation: float = DEFAULT_G_TRUNCATION
    g_known: bool = False

    def __post_init__(self):
        for name in ("q0", "q1", "g1"):
            arr = np.asarray(getattr(self, name), dtype=float).ravel()
            object.__setattr__(self, name, arr)
        if not (len(self.q0) == len(self.q1) == len(self.g1)):
            raise DataError("q0, q1, g1 must have equal length")
        if self.q0.min() <= 0 or self.q0.max() >= 1 or self.q1.min() <= 0 or self.q1.max() >= 1:
            raise DataError("q0 and q1 must lie strictly inside (0, 1)")
        t = self.g_truncation
        if self.g1.min() < t - 1e-12 or self.g1.max() > 1 - t + 1e-12:
            raise DataError(f"g1 must lie in [{t}, {1 - t}] after truncation")


# ---------------------------------------------------------------------------
# deterministic CV folds


def fold_assignments(n: int, V: int, seed: int) -> np.ndarray:
    """Fold label in {0..V-1} per observation; a pure function of (seed, n, V)."""
    if V < 2:
        raise ArgumentError(f"need at least 2 folds, got V={V}")
    if V > n:
        raise ArgumentError(f"more folds ({V}) than observations ({n})")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(n), int(V)]))
    folds = np.empty(n, dtype=np.int64)
    folds[rng.permutation(n)] = np.arange(n) % V
    return folds


# ---------------------------------------------------------------------------
# logistic GLM via Newton-Raphson


@dataclass(frozen=True)
class GlmFit:
    beta: np.ndarray
    converged: bool
    iterations: int
    ridged: bool = False


def binomial_nll(y: np.ndarray, mu: np.ndarray) -> float:
    """Mean negative quasi-binomial log-likelihood; fractional y allowed."""
    mu = np.clip(mu, 1e-12, 1 - 1e-12)
    return float(-np.mean(y * np.log(mu) + (1 - y) * np.log(1 - mu)))


def fit_glm_logistic(
    X: np.ndarray,
    y: np.ndarray,
    offset: np.ndarray | None = None,
    tol: float = 1e-10,
    max_iter: int = 100,
) -> GlmFit:
    """Maximize the quasi-binomial log-likelihood of ``expit(offset + X b)``.

    Newton-Raphson with step halving (the likelihood never decreases) and a
    1e-8 ridge retry when the information matrix is singular. Convergence is
    max |coefficient change| <= tol. On separation or non-convergence the
    last iterate is returned with ``converged=False``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 1 and np.asarray(y).size > 1:
        X = X.T
    y = np.asarray(y, dtype=float).ravel()
    n, q = X.shape
    if n <= q:
        raise ArgumentError(f"need n > q for the GLM; got n={n}, q={q}")
    if not np.all(np.isfinite(X)):
        raise ArgumentError("non-finite design matrix")
    off = np.zeros(n) if offset is None else np.asarray(offset, dtype=float).ravel()

    beta = np.zeros(q)
    eta = off.copy()
    nll = binomial_nll(y, expit(eta))
    converged = False
    ridged = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = expit(eta)
        wv = np.clip(mu * (1 - mu), 1e-12, None)
        grad = X.T @ (y - mu)
        hess = (X * wv[:, None]).T @ X
        try:
            step = np.linalg.solve(hess, grad)
            if not np.all(np.isfinite(step)):
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            ridged = True
            hess = hess + 1e-8 * np.eye(q)
            step = np.linalg.solve(hess, grad)
        scale = 1.0
        for _ in range(40):
            cand = beta + scale * step
            cand_eta = off + X @ cand
            cand_nll = binomial_nll(y, expit(cand_eta))
            if np.isfinite(cand_nll) and cand_nll <= nll + 1e-14:
                break
            scale *= 0.5
        else:
            break  # no improving step in this direction
        delta = scale * np.max(np.abs(step))
        beta, eta, nll = cand, cand_eta, cand_nll
        if delta <= tol:
            converged = True
            break
    return GlmFit(beta=beta, converged=converged, iterations=it, ridged=ridged)


# ---------------------------------------------------------------------------
# indicator (zero-order spline) design


def make_hal_design(
    w: np.ndarray, a: np.ndarray | None = None, max_knots: int = MAX_KNOTS
) -> tuple[np.ndarray, np.ndarray]:
    """Indicator basis over observed knots for one-dimensional w.

    Columns are ``I(w >= knot_j)`` for every knot and, when a treatment
    vector is supplied, additionally ``a`` and ``a * I(w >= knot_j)``. Knots
    are the unique observed values, thinned to ``max_knots`` equally spaced
    quantiles when there are more. The intercept column is implicit.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim == 2:
        if w.shape[1] != 1:
            raise ArgumentError(
                f"the indicator-basis learner supports one confounder column, got {w.shape[1]}; "
                "pass a custom object implementing the Learner protocol for multivariate W"
            )
        w = w[:, 0]
    knots = np.unique(w)
    if len(knots) > max_knots:
        knots = np.unique(np.quantile(w, np.linspace(0.0, 1.0, max_knots)))
    X = hal_design_matrix(w, knots, a)
    return X, knots


def hal_design_matrix(
    w: np.ndarray, knots: np.ndarray, a: np.ndarray | None = None
) -> np.ndarray:
    """Evaluate the indicator design at new points, given fitted knots."""
    w = np.asarray(w, dtype=float).ravel()
    base = (w[:, None] >= knots[None, :]).astype(float)
    if a is None:
        return base
    a = np.broadcast_to(np.asarray(a, dtype=float).ravel(), w.shape)
    return np.hstack([base, a[:, None], a[:, None] * base])


# ---------------------------------------------------------------------------
# coordinate-descent L1-penalized logistic regression

_CD_TOL = 1e-7
_MAX_OUTER = 15
_MAX_PASS = 2_000


@njit(cache=True)
def _lasso_cd_numba(  # pragma: no cover
    X, y, lam_grid, beta, b0_init, tol, nulldev, absolute_tol, max_outer, max_pass, dfmax
):
    """Warm-started coordinate descent down a penalty grid.

    The pass criterion is glmnet's: stop when the largest single-update
    decrease of the working quadratic objective, ``denom_j * delta_j^2``,
    drops below ``tol * nulldev``. With ``absolute_tol`` the criterion is
    instead ``max |delta_j| < tol`` (used to polish the selected penalty).
    Once the active set exceeds ``dfmax`` the path is frozen: remaining grid
    entries repeat the last computed fit.
    """
    n, p = X.shape
    L = lam_grid.size
    betas = np.zeros((L, p))
    b0s = np.zeros(L)

    b0 = b0_init
    eta = np.empty(n)
    for i in range(n):
        e = b0
        for j in range(p):
            if beta[j] != 0.0:
                e += X[i, j] * beta[j]
        eta[i] = e
    active = np.zeros(p, np.bool_)
    nactive = 0
    for j in range(p):
        if beta[j] != 0.0:
            active[j] = True
            nactive += 1
    denom = np.zeros(p)
    wv = np.empty(n)
    r = np.empty(n)
    q = np.empty(n)
    thresh = tol if absolute_tol else tol * nulldev

    frozen_at = L
    for l in range(L):
        lam = lam_grid[l]
        for _outer in range(max_outer):
            for i in range(n):
                e = eta[i]
                if e >= 0.0:
                    z = np.exp(-e)
                    m = 1.0 / (1.0 + z)
                else:
                    z = np.exp(e)
                    m = z / (1.0 + z)
                wwi = m * (1.0 - m)
                if wwi < 1e-5:
                    wwi = 1e-5
                wv[i] = wwi
                r[i] = (y[i] - m) / wwi
                eta[i] += r[i]  # eta now holds the working response z
            wsum = 0.0
            for i in range(n):
                wsum += wv[i]
            d0den = wsum / n
            for j in range(p):
                if active[j]:
                    s = 0.0
                    for i in range(n):
                        s += wv[i] * X[i, j] * X[i, j]
                    denom[j] = s / n
            outer_crit = 0.0
            while True:
                # cycle intercept + active coordinates to convergence
                for _pass in range(max_pass):
                    crit = 0.0
                    num = 0.0
                    for i in range(n):
                        num += wv[i] * r[i]
                    d0 = num / wsum
                    if d0 != 0.0:
                        b0 += d0
                        for i in range(n):
                            r[i] -= d0
                        c = abs(d0) if absolute_tol else d0den * d0 * d0
                        if c > crit:
                            crit = c
                    for j in range(p):
                        if not active[j] or denom[j] <= 0.0:
                            continue
                        bj = beta[j]
                        rho = 0.0
                        for i in range(n):
                            rho += X[i, j] * wv[i] * r[i]
                        rho = rho / n + bj * denom[j]
                        if rho > lam:
                            bnew = (rho - lam) / denom[j]
                        elif rho < -lam:
                            bnew = (rho + lam) / denom[j]
                        else:
                            bnew = 0.0
                        d = bnew - bj
                        if d != 0.0:
                            beta[j] = bnew
                            for i in range(n):
                                r[i] -= X[i, j] * d
                            c = abs(d) if absolute_tol else denom[j] * d * d
                            if c > crit:
                                crit = c
                    if crit > outer_crit:
                        outer_crit = crit
                    if crit < thresh:
                        break
                # KKT screen over inactive coordinates
                for i in range(n):
                    q[i] = wv[i] * r[i]
                added = False
                for j in range(p):
                    if active[j]:
                        continue
                    s = 0.0
                    for i in range(n):
                        s += X[i, j] * q[i]
                    if abs(s) / n > lam + 1e-12:
                        active[j] = True
                        nactive += 1
                        dj = 0.0
                        for i in range(n):
                            dj += wv[i] * X[i, j] * X[i, j]
                        denom[j] = dj / n
                        added = True
                if not added:
                    break
            for i in range(n):
                eta[i] -= r[i]  # back from working response to the linear predictor
            if outer_crit < thresh:
                break
        betas[l] = beta
        b0s[l] = b0
        if nactive > dfmax:
            frozen_at = l + 1
            break
    for l in range(frozen_at, L):
        betas[l] = betas[frozen_at - 1]
        b0s[l] = b0s[frozen_at - 1]
    return betas, b0s


@dataclass(frozen=True)
class LassoFit:
    """Selected L1-penalized logistic fit along a penalty path.

    ``beta[0]`` is the (unpenalized) intercept; the remaining entries follow
    the design columns. ``knots`` is populated when the design is the
    indicator basis, so predictions can rebuild it.
    """

    beta: np.ndarray
    lambda_: float
    lambda_grid: np.ndarray
    cv_loss_path: np.ndarray
    knots: np.ndarray | None = None

    @property
    def intercept(self) -> float:
        return float(self.beta[0])

    @property
    def coef(self) -> np.ndarray:
        return self.beta[1:]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return expit(self.beta[0] + X @ self.beta[1:])

    def to_dict(self) -> dict:
        return {
            "beta": self.beta.tolist(),
            "lambda": self.lambda_,
            "lambda_grid": self.lambda_grid.tolist(),
            "cv_loss_path": self.cv_loss_path.tolist(),
            "knots": None if self.knots is None else self.knots.tolist(),
        }


def default_lambda_grid(X: np.ndarray, y: np.ndarray, size: int = 50) -> np.ndarray:
    """Log-spaced grid from the smallest all-zero penalty down 4 decades."""
    ybar = float(np.clip(np.mean(y), 1e-10, 1 - 1e-10))
    lam_max = float(np.max(np.abs(X.T @ (y - ybar))) / len(y))
    if lam_max <= 0:
        lam_max = 1e-3
    return np.geomspace(lam_max, lam_max * 1e-4, size)


def _lasso_path(X: np.ndarray, y: np.ndarray, lam_grid: np.ndarray, dfmax: int | None = None):
    X = np.asfortranarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    ybar = float(np.clip(np.mean(y), 1e-10, 1 - 1e-10))
    nulldev = 2.0 * binomial_nll(y, np.full(len(y), ybar))
    return _lasso_cd_numba(
        X,
        y,
        np.asarray(lam_grid, dtype=float),
        np.zeros(X.shape[1]),
        float(np.log(ybar / (1 - ybar))),
        _CD_TOL,
        nulldev,
        False,
        _MAX_OUTER,
        _MAX_PASS,
        X.shape[1] + 1 if dfmax is None else int(dfmax),
    )


def _lasso_polish(X: np.ndarray, y: np.ndarray, lam: float, beta: np.ndarray, b0: float):
    """Tighten a single-penalty solution to absolute coefficient tolerance."""
    X = np.asfortranarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    betas, b0s = _lasso_cd_numba(
        X,
        y,
        np.array([float(lam)]),
        beta.copy(),
        float(b0),
        _CD_TOL,
        1.0,
        True,
        _MAX_OUTER,
        20_000,
        X.shape[1] + 1,
    )
    return betas[0], float(b0s[0])


def fit_lasso_logistic(
    X: np.ndarray,
    y: np.ndarray,
    lambda_grid: np.ndarray | None = None,
    folds: int = 5,
    seed: int = 0,
    knots: np.ndarray | None = None,
    dfmax: int | None = None,
) -> LassoFit:
    """Coordinate-descent lasso path with V-fold CV choice of the penalty.

    The path is computed with warm starts down a descending grid; each fold
    refits the path on its training part and scores mean validation negative
    log-likelihood per penalty. The returned fit is refit on all data at the
    CV-minimizing penalty (largest such penalty on ties). The intercept is
    never penalized.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if not np.all(np.isfinite(X)):
        raise ArgumentError("non-finite design matrix")
    n = len(y)
    if X.shape[0] != n:
        raise ArgumentError(f"design rows {X.shape[0]} != responses {n}")

    ybar = float(np.mean(y))
    if np.all(y == y[0]):
        b0 = float(logit(np.clip(ybar, PROB_CLIP, 1 - PROB_CLIP)))
        grid = np.array([np.inf]) if lambda_grid is None else np.asarray(lambda_grid, float)
        return LassoFit(
            beta=np.concatenate([[b0], np.zeros(X.shape[1])]),
            lambda_=float(grid[0]),
            lambda_grid=grid,
            cv_loss_path=np.full(len(grid), binomial_nll(y, np.full(n, ybar))),
            knots=knots,
        )

    if lambda_grid is None:
        lam_grid = default_lambda_grid(X, y)
    else:
        lam_grid = np.asarray(lambda_grid, dtype=float)
        if len(lam_grid) == 0:
            raise ArgumentError("empty lambda grid")
        if np.any(np.diff(lam_grid) > 0):
            raise ArgumentError("lambda grid must be descending")

    fold_of = fold_assignments(n, folds, seed)
    cv_loss = np.zeros(len(lam_grid))
    for v in range(folds):
        tr = fold_of != v
        betas, b0s = _lasso_path(X[tr], y[tr], lam_grid, dfmax=dfmax)
        eta_val = b0s[None, :] + X[~tr] @ betas.T
        mu_val = np.clip(expit(eta_val), 1e-12, 1 - 1e-12)
        yv = y[~tr][:, None]
        cv_loss += -np.mean(yv * np.log(mu_val) + (1 - yv) * np.log(1 - mu_val), axis=0)
    cv_loss /= folds

    best = int(np.argmin(cv_loss))
    betas, b0s = _lasso_path(X, y, lam_grid[: best + 1], dfmax=dfmax)
    coef, b0 = _lasso_polish(X, y, lam_grid[best], betas[best], b0s[best])
    return LassoFit(
        beta=np.concatenate([[b0], coef]),
        lambda_=float(lam_grid[best]),
        lambda_grid=lam_grid,
        cv_loss_path=cv_loss,
        knots=knots,
    )


# ---------------------------------------------------------------------------
# learners and nuisance fitting


@runtime_checkable
class Learner(Protocol):
    """Pluggable nuisance learner.

    ``fit_propensity`` and ``fit_outcome`` train on the supplied arrays and
    return prediction callables, so cross-fitting can score held-out folds.
    """

    def fit_propensity(self, W: np.ndarray, A: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        ...

    def fit_outcome(
        self, W: np.ndarray, A: np.ndarray, Y: np.ndarray
    ) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
        ...


def _glm_outcome_design(W: np.ndarray, A: np.ndarray) -> np.ndarray:
    ones = np.ones((W.shape[0], 1))
    a = np.asarray(A, dtype=float).reshape(-1, 1)
    return np.hstack([ones, W, a, a * W])


def _glm_propensity_design(W: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((W.shape[0], 1)), W])


class GlmLearner:
    """Main-terms-plus-interactions logistic regression learner."""

    def fit_propensity(self, W, A):
        fit = fit_glm_logistic(_glm_propensity_design(W), A)
        return lambda Wnew: expit(_glm_propensity_design(np.atleast_2d(Wnew)) @ fit.beta)

    def fit_outcome(self, W, A, Y):
        fit = fit_glm_logistic(_glm_outcome_design(W, A), Y)

        def predict(Wnew, Anew):
            Wnew = np.atleast_2d(Wnew)
            a = np.broadcast_to(np.asarray(Anew, dtype=float).ravel(), (Wnew.shape[0],))
            return expit(_glm_outcome_design(Wnew, a) @ fit.beta)

        return predict


class HalLearner:
    """Indicator-basis lasso learner for one-dimensional W.

    ``dfmax`` freezes the penalty path once that many bases are active;
    the default (n/6, at least 50) leaves several-fold headroom over the
    CV-selected active sets while skipping the saturated deep-overfit tail.
    """

    def __init__(
        self,
        folds: int = 5,
        seed: int = 0,
        lambda_grid=None,
        max_knots: int = MAX_KNOTS,
        dfmax: int | None = None,
    ):
        self.folds = folds
        self.seed = seed
        self.lambda_grid = lambda_grid
        self.max_knots = max_knots
        self.dfmax = dfmax

    def _dfmax(self, n: int) -> int:
        return self.dfmax if self.dfmax is not None else max(50, n // 6)

    def fit_propensity(self, W, A):
        X, knots = make_hal_design(W, max_knots=self.max_knots)
        fit = fit_lasso_logistic(
            X, A, lambda_grid=self.lambda_grid, folds=self.folds, seed=self.seed,
            knots=knots, dfmax=self._dfmax(len(A)),
        )
        return lambda Wnew: fit.predict(hal_design_matrix(np.asarray(Wnew), knots))

    def fit_outcome(self, W, A, Y):
        X, knots = make_hal_design(W, A, max_knots=self.max_knots)
        fit = fit_lasso_logistic(
            X, Y, lambda_grid=self.lambda_grid, folds=self.folds, seed=self.seed,
            knots=knots, dfmax=self._dfmax(len(Y)),
        )

        def predict(Wnew, Anew):
            Wnew = np.asarray(Wnew)
            nrow = Wnew.shape[0] if Wnew.ndim else Wnew.size
            a = np.broadcast_to(np.asarray(Anew, dtype=float).ravel(), (nrow,))
            return fit.predict(hal_design_matrix(Wnew, knots, a))

        return predict


def resolve_learner(learner, folds: int = 5, seed: int = 0) -> Learner:
    if isinstance(learner, str):
        if learner == "glm":
            return GlmLearner()
        if learner == "hal":
            return HalLearner(folds=folds, seed=seed)
        raise ArgumentError(f"unknown learner {learner!r}; expected 'glm' or 'hal'")
    if isinstance(learner, Learner):
        return learner
    raise ArgumentError(f"learner {learner!r} does not implement the Learner protocol")


def fit_nuisance(
    data: Dataset,
    learner="glm",
    folds: int = 5,
    g_truncation: float = DEFAULT_G_TRUNCATION,
    seed: int = 0,
    g1: np.ndarray | None = None,
) -> NuisanceFit:
    """Fit both nuisances on the full sample and evaluate them on it.

    Supplying ``g1`` (known propensity, e.g. a randomized design) skips the
    propensity fit entirely; only the outcome regression is estimated.
    """
    if not (0 < g_truncation < 0.5):
        raise ArgumentError(f"g_truncation must be in (0, 0.5), got {g_truncation}")
    n1 = int(np.sum(data.A))
    if n1 == 0 or n1 == data.n:
        raise DataError(
            f"positivity violated: all observations have A={int(data.A[0])}"
        )
    lrn = resolve_learner(learner, folds=folds, seed=seed)
    if g1 is None:
        g1_hat = np.asarray(lrn.fit_propensity(data.W, data.A)(data.W), dtype=float)
        known = False
    else:
        g1_hat = np.asarray(g1, dtype=float).ravel()
        if len(g1_hat) != data.n:
            raise DataError(f"known g1 has length {len(g1_hat)}, expected {data.n}")
        known = True
    predict = lrn.fit_outcome(data.W, data.A, data.Y)
    q0 = np.clip(predict(data.W, 0.0), PROB_CLIP, 1 - PROB_CLIP)
    q1 = np.clip(predict(data.W, 1.0), PROB_CLIP, 1 - PROB_CLIP)
    return NuisanceFit(
        q0=q0,
        q1=q1,
        g1=np.clip(g1_hat, g_truncation, 1 - g_truncation),
        g_truncation=g_truncation,
        g_known=known,
    )
