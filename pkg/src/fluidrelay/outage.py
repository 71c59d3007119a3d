"""Outage probabilities and OP-minimized relaying-scheme selection.

The relay has only statistical CSI for the user->BS and relay->BS links
(mean normalized SNRs), while the user->relay hop runs through the fluid
antenna and is random.  With half-duplex MRC, the outage event for either
relaying scheme reduces to a threshold event on the best-port gain
``|h|^2``:

* feasibility: if ``p_u * gub + p_r * grb < C_th`` (mean SNRs), outage is
  certain with either scheme;
* AF: outage iff ``|h|^2 < xi_af(p_u, p_r)``;
* DF: outage iff ``|h|^2 < xi_df(p_u, p_r)``;

with ``C_th = 2**(2*xi) - 1`` the SNR threshold equivalent to the rate
threshold ``xi`` under half-duplex.  The CDF of the best-port gain is
approximated by a Gaussian copula over the port correlation matrix: each
marginal ``1 - exp(-x)`` is pushed through the standard-normal quantile
and evaluated under the joint normal CDF.

Because both outage probabilities are the *same* nondecreasing CDF at
different arguments, comparing them is equivalent to comparing the
arguments; selection is computed that way, which keeps it exact instead
of inheriting the CDF engine's sampling noise.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .channel import CorrelationMatrix
from .errors import InfeasibleError
from .mvncdf import MvnEstimate, MvnProblem, mvn_cdf, std_normal_quantile
from .seeding import derive_seed

# phi^{-1} diverges at 0/1; clamping the marginal here bounds the copula
# error below the engine tolerance.
_MARGINAL_LO = 1e-12
_MARGINAL_HI = 1.0 - 1e-12


class Selection(str, enum.Enum):
    """Relaying decision: AF, DF, or certain outage either way."""

    AF = "AF"
    DF = "DF"
    INFEASIBLE = "INFEASIBLE"

    def __str__(self) -> str:  # CSV-friendly
        return self.value


@dataclass(frozen=True)
class LinkBudget:
    """Per-user large-scale link budget (linear gains, watt noise powers)."""

    alpha_ur: float
    alpha_ub: float
    alpha_rb: float
    sigma2_relay: float
    sigma2_bs: float

    def __post_init__(self):
        for name in ("alpha_ur", "alpha_ub", "alpha_rb", "sigma2_relay", "sigma2_bs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive, got {getattr(self, name)}")

    @property
    def gamma_bar_ub(self) -> float:
        """Mean user->BS SNR per watt of user power."""
        return self.alpha_ub / self.sigma2_bs

    @property
    def gamma_bar_rb(self) -> float:
        """Mean relay->BS SNR per watt of relay power."""
        return self.alpha_rb / self.sigma2_bs


@dataclass(frozen=True)
class OutageQuery:
    """Transmit powers and the rate threshold (bits/s/Hz) being probed."""

    p_user: float
    p_relay: float
    xi: float

    def __post_init__(self):
        if self.p_user < 0 or self.p_relay < 0:
            raise ValueError("transmit powers must be nonnegative")
        if self.xi <= 0:
            raise ValueError(f"outage threshold xi must be positive, got {self.xi}")

    @property
    def c_th(self) -> float:
        """SNR threshold 2^(2*xi) - 1 (half-duplex rate threshold xi)."""
        return 2.0 ** (2.0 * self.xi) - 1.0


@dataclass(frozen=True)
class OutageResult:
    op_af: float
    op_df: float
    selection: Selection

    def __post_init__(self):
        if not 0.0 <= self.op_af <= 1.0 or not 0.0 <= self.op_df <= 1.0:
            raise ValueError("outage probabilities must lie in [0, 1]")


@dataclass(frozen=True)
class CopulaConfig:
    """Accuracy/seed knobs forwarded to the MVN engine."""

    target_abs_error: float = 1e-4
    max_samples: int = 2_000_000
    seed: int = 0


def mean_snr_sum(q: OutageQuery, lb: LinkBudget) -> float:
    return q.p_user * lb.gamma_bar_ub + q.p_relay * lb.gamma_bar_rb


def xi_af(q: OutageQuery, lb: LinkBudget) -> float:
    """Best-port-gain threshold whose crossing means AF outage.

    Negative when the direct link alone clears the SNR threshold (outage
    then impossible).  Requires a strictly feasible query.
    """
    if q.p_user <= 0:
        raise ValueError("xi_af requires p_user > 0")
    c_th = q.c_th
    margin = mean_snr_sum(q, lb) - c_th
    if margin <= 0:
        raise InfeasibleError(
            "INFEASIBLE_POWER",
            f"mean SNR sum {mean_snr_sum(q, lb):.6g} does not exceed threshold {c_th:.6g}",
        )
    numerator = lb.sigma2_relay * (q.p_relay * lb.gamma_bar_rb + 1.0) * (c_th - q.p_user * lb.gamma_bar_ub)
    return numerator / (lb.alpha_ur * q.p_user * margin)


def xi_df(q: OutageQuery, lb: LinkBudget) -> float:
    """Best-port-gain threshold whose crossing means DF outage (always > 0)."""
    if q.p_user <= 0:
        raise ValueError("xi_df requires p_user > 0")
    return lb.sigma2_relay * q.c_th / (lb.alpha_ur * q.p_user)


def select_scheme(q: OutageQuery, lb: LinkBudget) -> Selection:
    """OP-minimizing scheme via the threshold comparison (tie -> AF).

    Comparing the CDF arguments is equivalent to comparing the outage
    probabilities themselves because both go through the same
    nondecreasing best-gain CDF.
    """
    if mean_snr_sum(q, lb) <= q.c_th:
        return Selection.INFEASIBLE
    if q.p_user == 0:
        # No user signal: outage certain with either scheme (both
        # thresholds diverge); tie convention picks AF.
        return Selection.AF
    return Selection.AF if xi_df(q, lb) >= xi_af(q, lb) else Selection.DF


def best_gain_cdf(
    x: float,
    corr: CorrelationMatrix,
    config: CopulaConfig = CopulaConfig(),
) -> float:
    """Gaussian-copula CDF of the best-port gain at ``x >= 0``."""
    return best_gain_cdf_estimate(x, corr, config).value


def best_gain_cdf_estimate(
    x: float,
    corr: CorrelationMatrix,
    config: CopulaConfig = CopulaConfig(),
) -> MvnEstimate:
    """Like :func:`best_gain_cdf` but exposing the engine's error estimate."""
    if x < 0:
        raise ValueError(f"best-gain CDF argument must be >= 0, got {x}")
    if x == 0:
        # Max of nonnegative variables: P(max <= 0) = 0 exactly.
        return MvnEstimate(value=0.0, est_error=0.0, samples_used=0, converged=True)
    marginal = -np.expm1(-x)
    marginal = min(max(marginal, _MARGINAL_LO), _MARGINAL_HI)
    z = std_normal_quantile(marginal)
    problem = MvnProblem(
        corr=corr,
        upper_limits=np.full(corr.dim, z),
        target_abs_error=config.target_abs_error,
        max_samples=config.max_samples,
        seed=config.seed,
    )
    return mvn_cdf(problem)


def outage_probabilities(
    q: OutageQuery,
    lb: LinkBudget,
    corr: CorrelationMatrix,
    config: CopulaConfig = CopulaConfig(),
) -> OutageResult:
    """AF and DF outage probabilities plus the scheme selection.

    The infeasible region (mean SNR sum <= C_th, boundary included)
    returns exactly (1, 1, INFEASIBLE).  A nonpositive AF threshold
    returns OP_AF exactly 0.
    """
    selection = select_scheme(q, lb)
    if selection is Selection.INFEASIBLE:
        return OutageResult(op_af=1.0, op_df=1.0, selection=selection)
    if q.p_user == 0:
        return OutageResult(op_af=1.0, op_df=1.0, selection=selection)
    threshold_af = max(xi_af(q, lb), 0.0)
    threshold_df = xi_df(q, lb)
    op_af = best_gain_cdf(threshold_af, corr, replace(config, seed=derive_seed(config.seed, 0)))
    op_df = best_gain_cdf(threshold_df, corr, replace(config, seed=derive_seed(config.seed, 1)))
    return OutageResult(op_af=op_af, op_df=op_df, selection=selection)


@dataclass(frozen=True)
class OpSurfacePoint:
    p_user: float
    p_relay: float
    xi: float
    result: OutageResult


def op_surface(
    p_user_values,
    p_relay_values,
    xi: float,
    lb: LinkBudget,
    corr: CorrelationMatrix,
    config: CopulaConfig = CopulaConfig(),
    n_threads: int | None = None,
) -> list[OpSurfacePoint]:
    """Outage probabilities over a power grid, row-major in (p_user, p_relay).

    Each grid point gets an independent engine seed derived from its grid
    coordinates, so the table does not depend on evaluation order or
    thread count.
    """
    p_user_values = [float(p) for p in p_user_values]
    p_relay_values = [float(p) for p in p_relay_values]
    if not p_user_values or not p_relay_values:
        raise ValueError("op_surface requires a nonempty power grid")

    tasks = [
        (i, j, pu, pr)
        for i, pu in enumerate(p_user_values)
        for j, pr in enumerate(p_relay_values)
    ]

    def evaluate(task):
        i, j, pu, pr = task
        point_config = replace(config, seed=derive_seed(config.seed, i, j))
        result = outage_probabilities(OutageQuery(pu, pr, xi), lb, corr, point_config)
        return OpSurfacePoint(p_user=pu, p_relay=pr, xi=xi, result=result)

    if n_threads is not None and n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            return list(pool.map(evaluate, tasks))
    return [evaluate(task) for task in tasks]
