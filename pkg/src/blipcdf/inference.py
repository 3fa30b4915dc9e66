"""Influence-curve confidence intervals, pointwise and simultaneous.

Pointwise intervals are ``psi_j +/- z * se_j`` with ``se_j`` the sample
standard deviation of the j-th EIC column over sqrt(n). Simultaneous
intervals replace ``z`` by the level-quantile of ``max_j |Z_j|`` for a
multivariate normal ``Z`` with the EIC correlation matrix, estimated by
Monte Carlo; with positively correlated columns this is strictly tighter
than a Bonferroni correction, which remains as a fallback for degenerate
correlation estimates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import ArgumentError
from .estimator import TmleResult

DEFAULT_MC_DRAWS = 100_000


@dataclass
class CiReport:
    """Interval report for one TmleResult; ``ci``/``sim_ci`` are (d, 2) arrays.

    Intervals are stored unclipped (coverage studies need the raw bounds);
    ``clipped()`` restricts them to [0, 1] for display.
    """

    level: float
    z_pointwise: float
    ci: np.ndarray
    se: np.ndarray
    degenerate: np.ndarray
    z_simultaneous: float | None = None
    sim_ci: np.ndarray | None = None
    corr: np.ndarray | None = None
    bonferroni_fallback: bool = False
    mc_draws: int | None = None
    seed: int | None = None

    def clipped(self, which: str = "ci") -> np.ndarray:
        arr = self.ci if which == "ci" else self.sim_ci
        return np.clip(arr, 0.0, 1.0)

    def to_dict(self) -> dict:
        out = {
            "level": self.level,
            "z_pointwise": self.z_pointwise,
            "ci_lo": self.clipped("ci")[:, 0].tolist(),
            "ci_hi": self.clipped("ci")[:, 1].tolist(),
            "ci_lo_unclipped": self.ci[:, 0].tolist(),
            "ci_hi_unclipped": self.ci[:, 1].tolist(),
            "degenerate": self.degenerate.astype(bool).tolist(),
        }
        if self.sim_ci is not None:
            out.update(
                {
                    "z_simultaneous": self.z_simultaneous,
                    "sim_ci_lo": self.clipped("sim")[:, 0].tolist(),
                    "sim_ci_hi": self.clipped("sim")[:, 1].tolist(),
                    "sim_ci_lo_unclipped": self.sim_ci[:, 0].tolist(),
                    "sim_ci_hi_unclipped": self.sim_ci[:, 1].tolist(),
                    "bonferroni_fallback": self.bonferroni_fallback,
                }
            )
        return out


def _check_level(level: float):
    if not (0.0 < level < 1.0):
        raise ArgumentError(f"confidence level must be in (0, 1), got {level}")


def pointwise_ci(result: TmleResult, level: float = 0.95) -> CiReport:
    """Per-point normal intervals from the EIC standard errors."""
    _check_level(level)
    if result.eic.size == 0:
        raise ArgumentError("empty influence matrix")
    z = float(norm.ppf((1.0 + level) / 2.0))
    se = result.se
    degenerate = se <= 0.0
    ci = np.column_stack([result.psi - z * se, result.psi + z * se])
    return CiReport(level=level, z_pointwise=z, ci=ci, se=se, degenerate=degenerate)


def eic_correlation(result: TmleResult) -> tuple[np.ndarray, np.ndarray]:
    """Symmetrized EIC column correlation; degenerate columns get identity rows."""
    sd = result.eic.std(axis=0, ddof=1)
    degenerate = sd <= 0.0
    d = result.eic.shape[1]
    corr = np.eye(d)
    ok = ~degenerate
    if ok.sum() >= 2:
        sub = np.corrcoef(result.eic[:, ok].T)
        sub = (sub + sub.T) / 2.0
        corr[np.ix_(ok, ok)] = sub
    np.fill_diagonal(corr, 1.0)
    return corr, degenerate


def max_abs_z_quantile(
    corr: np.ndarray, level: float, mc_draws: int = DEFAULT_MC_DRAWS, seed: int = 0
) -> float:
    """Level-quantile of ``max_j |Z_j|``, ``Z ~ N(0, corr)``, by seeded MC.

    The factor comes from a spectral decomposition with negative eigenvalues
    clamped to zero, so mildly non-PSD sample correlations are fine.
    """
    _check_level(level)
    if mc_draws < 10_000:
        raise ArgumentError(f"need at least 1e4 Monte Carlo draws, got {mc_draws}")
    corr = np.asarray(corr, dtype=float)
    if not np.all(np.isfinite(corr)):
        raise ArgumentError("non-finite correlation matrix")
    evals, evecs = np.linalg.eigh((corr + corr.T) / 2.0 + 1e-8 * np.eye(len(corr)))
    factor = evecs * np.sqrt(np.clip(evals, 0.0, None))[None, :]
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 314159]))
    draws = rng.standard_normal((mc_draws, len(corr))) @ factor.T
    return float(np.quantile(np.max(np.abs(draws), axis=1), level))


def simultaneous_ci(
    result: TmleResult,
    level: float = 0.95,
    mc_draws: int = DEFAULT_MC_DRAWS,
    seed: int = 0,
) -> CiReport:
    """Pointwise plus simultaneous intervals covering all points jointly.

    ``z_simultaneous`` is floored at the pointwise quantile (it dominates it
    in truth; the floor removes Monte Carlo dips) so the simultaneous band
    always contains the pointwise one.
    """
    rep = pointwise_ci(result, level)
    corr, _ = eic_correlation(result)
    fallback = False
    try:
        z_sim = max_abs_z_quantile(corr, level, mc_draws=mc_draws, seed=seed)
    except ArgumentError as exc:
        if "draws" in str(exc):
            raise
        fallback = True
        d = result.eic.shape[1]
        z_sim = float(norm.ppf(1.0 - (1.0 - level) / (2.0 * d)))
    z_sim = max(z_sim, rep.z_pointwise)
    rep.z_simultaneous = z_sim
    rep.sim_ci = np.column_stack(
        [result.psi - z_sim * rep.se, result.psi + z_sim * rep.se]
    )
    rep.corr = corr
    rep.bonferroni_fallback = fallback
    rep.mc_draws = mc_draws
    rep.seed = seed
    return rep


#: Conditions under which the targeted estimator is asymptotically efficient
#: but which no finite-sample statistic can certify; reported as text.
UNCOMPUTABLE_CONDITIONS = (
    "estimated influence function stays within a Donsker class "
    "(not needed when nuisances are cross-fitted)",
    "second-order remainder is o_P(n^-1/2): requires the product of the "
    "outcome-regression and propensity L2 errors, and the squared sup-norm "
    "blip error over the bandwidth, to vanish at that rate",
    "estimated influence function converges to its limit in L2",
)


def diagnostics(result: TmleResult, truncation_threshold: float = 0.05) -> dict:
    """Computable proxies for the estimator's asymptotic conditions.

    Reports the solved score equation, per-point standard errors, iteration
    count, and propensity truncation activity; a positivity warning fires
    when more than ``truncation_threshold`` of the fitted propensities sit
    at their truncation bound. Conditions that finite data cannot verify are
    echoed verbatim in ``notes``.
    """
    means = result.eic_means
    out = {
        "eic_mean_abs": np.abs(means).tolist(),
        "stopping_tol": result.stopping_tol.tolist(),
        "score_solved": bool(np.all(np.abs(means) <= result.stopping_tol)),
        "se": result.se.tolist(),
        "iterations": result.iterations,
        "converged": bool(result.converged),
        "aborted": bool(result.aborted),
        "loss_initial": result.nll_initial,
        "loss_final": result.nll_final,
        "g_known": bool(result.g_known),
        "notes": list(UNCOMPUTABLE_CONDITIONS),
    }
    if result.g1 is not None and not result.g_known:
        t = result.g_truncation
        at_bound = np.mean(
            (result.g1 <= t + 1e-12) | (result.g1 >= 1 - t - 1e-12)
        )
        out.update(
            {
                "g_min": float(result.g1.min()),
                "g_max": float(result.g1.max()),
                "g_truncation": t,
                "g_truncation_rate": float(at_bound),
                "positivity_warning": bool(at_bound > truncation_threshold),
            }
        )
    return out
