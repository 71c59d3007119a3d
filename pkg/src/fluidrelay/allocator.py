"""Sum-rate maximization: SNR model, bandwidth closed form, power control.

The system problem (maximize the half-duplex FDMA sum rate subject to
per-user minimum rates, a total bandwidth budget, and per-link power
boxes) decomposes:

1. per user, transmit powers maximize that user's scheme-aware SNR over
   its power box -- valid because the residual-bandwidth objective is
   nondecreasing in every user's SNR;
2. the relaying scheme at any power point follows the outage-minimizing
   rule, which reduces to the closed-form region test of
   :func:`scheme_region` (the AF region is the upper-right part of the
   box, the DF region the lower-left, separated by one monotone curve);
3. bandwidth then has a closed form: every user gets exactly the slice
   its minimum rate needs, and the user with the highest SNR absorbs the
   residual.

CSI convention: user->BS and relay->BS links enter through *mean*
normalized SNRs everywhere (the relay has only statistical CSI for
them); the user->relay link uses the instantaneous best-port value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError
from .outage import LinkBudget, Selection

_BISECTION_ITERS = 60
_SWEEP_POINTS = 2049
_GOLDEN_ITERS = 80
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class UserConfig:
    """Per-user link budget, power box, and minimum-rate requirement."""

    budget: LinkBudget
    p_user_max: float
    p_relay_max: float
    p_user_min: float = 0.0
    p_relay_min: float = 0.0
    rate_min: float = 0.0

    def __post_init__(self):
        if self.p_user_max <= 0 or self.p_relay_max <= 0:
            raise ValueError("maximum powers must be strictly positive")
        if not 0 <= self.p_user_min <= self.p_user_max:
            raise ValueError(
                f"need 0 <= p_user_min <= p_user_max, got {self.p_user_min} vs {self.p_user_max}"
            )
        if not 0 <= self.p_relay_min <= self.p_relay_max:
            raise ValueError(
                f"need 0 <= p_relay_min <= p_relay_max, got {self.p_relay_min} vs {self.p_relay_max}"
            )
        if self.rate_min < 0:
            raise ValueError("rate_min must be nonnegative")


@dataclass(frozen=True)
class SnrTriple:
    """Normalized per-watt SNRs for the three links.

    ``provenance`` tags each value as a statistical mean or an
    instantaneous realization; the default matches the CSI convention
    (mean UB, instantaneous UR, mean RB).
    """

    gamma_ub: float
    gamma_ur: float
    gamma_rb: float
    provenance: tuple[str, str, str] = ("mean", "instantaneous", "mean")

    def __post_init__(self):
        if self.gamma_ub < 0 or self.gamma_ur < 0 or self.gamma_rb < 0:
            raise ValueError("normalized SNRs must be nonnegative")
        for tag in self.provenance:
            if tag not in ("mean", "instantaneous"):
                raise ValueError(f"provenance tag must be 'mean' or 'instantaneous', got {tag!r}")

    @classmethod
    def from_budget(cls, budget: LinkBudget, gamma_ur: float) -> "SnrTriple":
        """Mean UB/RB SNRs from the budget plus an instantaneous UR value."""
        return cls(gamma_ub=budget.gamma_bar_ub, gamma_ur=gamma_ur, gamma_rb=budget.gamma_bar_rb)


@dataclass(frozen=True)
class AllocationResult:
    """Solved system: per-user powers, scheme, bandwidth, and rates."""

    p_user: np.ndarray
    p_relay: np.ndarray
    bandwidth: np.ndarray
    scheme: tuple[Selection, ...]
    snr: np.ndarray
    rate: np.ndarray
    best_user_index: int
    sum_rate: float
    feasible: bool


def snr_af(p_user: float, p_relay: float, s: SnrTriple) -> float:
    """End-to-end AF SNR with MRC of the direct and relayed copies."""
    if p_user < 0 or p_relay < 0:
        raise ValueError("powers must be nonnegative")
    relayed_num = p_user * s.gamma_ur * p_relay * s.gamma_rb
    relayed_den = p_relay * s.gamma_rb + p_user * s.gamma_ur + 1.0
    return p_user * s.gamma_ub + relayed_num / relayed_den


def snr_df(p_user: float, p_relay: float, s: SnrTriple) -> float:
    """End-to-end DF SNR: the weaker of decode hop and combined BS hop."""
    if p_user < 0 or p_relay < 0:
        raise ValueError("powers must be nonnegative")
    return min(p_user * s.gamma_ub + p_relay * s.gamma_rb, p_user * s.gamma_ur)


def _rate_scale(snr):
    """log2(1 + snr), accurate for small and huge SNR."""
    return np.log1p(snr) / math.log(2.0)


def scheme_region(
    p_user: float,
    p_relay: float,
    c_th: float,
    gamma_bar_ub: float,
    gamma_bar_rb: float,
) -> Selection:
    """Which scheme the outage rule picks at a feasible power point.

    AF wins iff ``(C^2 + C) / ((C+1)*a + a*b) <= 1`` with ``a``/``b`` the
    mean UB/RB SNRs; that ratio test is algebraically equivalent to
    ``xi_af <= xi_df`` and the boundary equality is AF by the tie
    convention.  The ratio is strictly decreasing in both powers, so the
    AF region is the upper-right portion of any power box.
    """
    if p_user <= 0:
        raise ValueError("scheme_region requires p_user > 0")
    a = p_user * gamma_bar_ub
    b = p_relay * gamma_bar_rb
    if a + b < c_th:
        raise ValueError(
            f"scheme_region requires a feasible point: mean SNR sum {a + b:.6g} < C_th {c_th:.6g}"
        )
    # ratio <= 1 rearranged to avoid dividing by a possibly tiny denominator.
    return Selection.AF if (c_th + 1.0) * a + a * b >= c_th * c_th + c_th else Selection.DF


def derive_min_powers(
    budget: LinkBudget,
    p_user_max: float,
    p_relay_max: float,
    c_th: float,
) -> tuple[float, float]:
    """Smallest (t * max) power pair whose mean SNR sum still meets C_th.

    Bisects the scale t in (0, 1]; the returned pair always satisfies the
    feasibility guard (the upper bracket end is kept).
    """
    full_sum = p_user_max * budget.gamma_bar_ub + p_relay_max * budget.gamma_bar_rb
    if full_sum < c_th:
        raise InfeasibleError(
            "INFEASIBLE_POWER",
            f"even maximum powers give mean SNR sum {full_sum:.6g} < threshold {c_th:.6g}",
        )
    lo, hi = 0.0, 1.0
    for _ in range(_BISECTION_ITERS):
        mid = 0.5 * (lo + hi)
        if mid * full_sum >= c_th:
            hi = mid
        else:
            lo = mid
    return hi * p_user_max, hi * p_relay_max


def _df_region_touches(p_user: float, p_relay: float, c_th: float, s: SnrTriple) -> bool:
    """True when the region ratio at (p_user, p_relay) is >= 1 (weak DF)."""
    a = p_user * s.gamma_ub
    b = p_relay * s.gamma_rb
    return (c_th + 1.0) * a + a * b <= c_th * c_th + c_th


def solve_df_subproblem(
    cfg: UserConfig,
    s: SnrTriple,
    c_th: float,
) -> tuple[float, float, float]:
    """Best DF operating point inside the box and the DF region.

    Maximizes ``min(pu*gub + pr*grb, pu*gur)`` over the power box
    intersected with the DF-region constraint
    ``(C+1)*gub*pu + gub*grb*pu*pr <= C^2 + C``.  For fixed relay power
    the constraint is linear in user power and both min-branches increase
    with it, so the inner optimum is the smaller of the box bound and the
    constraint bound; the outer problem is a 1-D sweep over relay power
    refined by golden section around the incumbent.

    Returns ``(p_user, p_relay, snr_df)``.
    """
    gub, gur, grb = s.gamma_ub, s.gamma_ur, s.gamma_rb
    if gub <= 0:
        raise ValueError("DF subproblem requires a positive mean user->BS SNR")
    bound = c_th * c_th + c_th
    u_lo, u_hi = cfg.p_user_min, cfg.p_user_max
    r_lo, r_hi = cfg.p_relay_min, cfg.p_relay_max
    if not _df_region_touches(u_lo, r_lo, c_th, s):
        raise ValueError("DF subproblem requires the DF region to touch the box (C~ >= 1)")

    def user_cap(p_relay):
        return bound / (gub * ((c_th + 1.0) + grb * p_relay))

    # Largest relay power at which some feasible user power remains.
    if u_lo > 0 and grb > 0:
        r_cap = (bound / (gub * u_lo) - (c_th + 1.0)) / grb
    else:
        r_cap = np.inf
    r_top = min(r_hi, r_cap)
    r_top = max(r_top, r_lo)  # guaranteed nonempty by the ratio guard

    def objective(p_relay):
        p_user = min(u_hi, user_cap(p_relay))
        return min(p_user * gub + p_relay * grb, p_user * gur)

    grid = np.linspace(r_lo, r_top, _SWEEP_POINTS) if r_top > r_lo else np.array([r_lo])
    values = np.array([objective(r) for r in grid])
    best = int(np.argmax(values))

    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid.size - 1)]
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = objective(x1), objective(x2)
    for _ in range(_GOLDEN_ITERS):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_PHI * (hi - lo)
            f2 = objective(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_PHI * (hi - lo)
            f1 = objective(x1)
    candidates = [(values[best], grid[best]), (f1, x1), (f2, x2)]
    best_value, best_relay = max(candidates, key=lambda item: item[0])
    best_user = min(u_hi, user_cap(best_relay))
    return float(best_user), float(best_relay), float(best_value)


def optimize_powers(
    cfg: UserConfig,
    s: SnrTriple,
    c_th: float,
) -> tuple[float, float, Selection]:
    """Scheme-aware optimal transmit powers over the user's power box.

    The scheme-region curve is monotone, so only three cases exist:

    * the max-power corner is in the DF region -> the whole box is, and
      DF at max powers is optimal (DF SNR is nondecreasing in both);
    * the min-power corner is strictly in the AF region -> the whole box
      is, and AF at max powers is optimal;
    * the regions split the box -> the best AF point is the max corner
      and the best DF point solves the DF subproblem; keep the larger
      SNR, AF winning ties.
    """
    if s.gamma_ub <= 0 or s.gamma_rb <= 0:
        raise ValueError("optimize_powers requires positive mean UB/RB SNRs")
    guard = cfg.p_user_min * s.gamma_ub + cfg.p_relay_min * s.gamma_rb
    if guard < c_th:
        raise InfeasibleError(
            "INFEASIBLE_POWER",
            f"minimum powers give mean SNR sum {guard:.6g} < threshold {c_th:.6g}",
        )
    if scheme_region(cfg.p_user_max, cfg.p_relay_max, c_th, s.gamma_ub, s.gamma_rb) is Selection.DF:
        return cfg.p_user_max, cfg.p_relay_max, Selection.DF
    if not _df_region_touches(cfg.p_user_min, cfg.p_relay_min, c_th, s):
        return cfg.p_user_max, cfg.p_relay_max, Selection.AF
    df_user, df_relay, df_snr = solve_df_subproblem(cfg, s, c_th)
    af_snr = snr_af(cfg.p_user_max, cfg.p_relay_max, s)
    if df_snr > af_snr:
        return df_user, df_relay, Selection.DF
    return cfg.p_user_max, cfg.p_relay_max, Selection.AF


def allocate_bandwidth(snrs, rate_mins, total_bw: float) -> np.ndarray:
    """Closed-form optimal bandwidth split.

    Every user other than the SNR leader gets exactly the bandwidth its
    minimum rate requires; the leader (argmax SNR, smallest index on
    ties) absorbs the rest.  Raises INFEASIBLE_BANDWIDTH when the
    residual cannot cover the leader's own minimum.

    The returned slices are nudged by ulps so that ``sum(b) <= total_bw``
    and ``0.5 * b * log2(1 + snr) >= rate_min`` hold as exact
    floating-point inequalities.
    """
    snrs = np.asarray(snrs, dtype=float)
    rate_mins = np.asarray(rate_mins, dtype=float)
    if snrs.ndim != 1 or snrs.shape != rate_mins.shape:
        raise ValueError("snrs and rate_mins must be 1-D vectors of equal length")
    if total_bw <= 0:
        raise ValueError("total bandwidth must be positive")
    if np.any(snrs < 0):
        raise ValueError("SNRs must be nonnegative")
    zero_snr = snrs == 0
    if np.any(zero_snr & (rate_mins > 0)):
        bad = int(np.argmax(zero_snr & (rate_mins > 0)))
        raise InfeasibleError(
            "INFEASIBLE_BANDWIDTH",
            f"user {bad} has zero SNR but a positive minimum rate",
        )

    scale = _rate_scale(snrs)
    needs = np.zeros_like(snrs)
    positive = rate_mins > 0
    needs[positive] = 2.0 * rate_mins[positive] / scale[positive]
    # Nudge each slice up until the realized rate meets the minimum exactly.
    for k in np.flatnonzero(positive):
        while 0.5 * needs[k] * scale[k] < rate_mins[k]:
            needs[k] = np.nextafter(needs[k], np.inf)

    leader = int(np.argmax(snrs))
    residual = total_bw - (needs.sum() - needs[leader])
    bandwidth = needs.copy()
    bandwidth[leader] = residual
    # Keep the summed total within the budget as an exact inequality.
    while bandwidth.sum() > total_bw:
        residual = np.nextafter(residual, -np.inf)
        bandwidth[leader] = residual
    if residual < needs[leader]:
        raise InfeasibleError(
            "INFEASIBLE_BANDWIDTH",
            f"residual bandwidth {residual:.6g} Hz cannot cover the leader's minimum "
            f"{needs[leader]:.6g} Hz",
        )
    return bandwidth


def solve_system(
    users,
    total_bw: float,
    xi: float,
    gamma_ur_values,
) -> AllocationResult:
    """Full per-realization solve: powers, schemes, bandwidth, rates.

    ``gamma_ur_values`` carries each user's instantaneous user->relay
    normalized SNR (best-port gain folded in); UB/RB links use the mean
    SNRs from each budget.
    """
    users = list(users)
    gamma_ur_values = [float(g) for g in gamma_ur_values]
    if not users:
        raise ValueError("solve_system requires at least one user")
    if len(gamma_ur_values) != len(users):
        raise ValueError("one gamma_ur realization is required per user")
    if xi <= 0:
        raise ValueError("xi must be positive")
    c_th = 2.0 ** (2.0 * xi) - 1.0

    p_user = np.empty(len(users))
    p_relay = np.empty(len(users))
    schemes: list[Selection] = []
    snrs = np.empty(len(users))
    for k, (cfg, gamma_ur) in enumerate(zip(users, gamma_ur_values)):
        triple = SnrTriple.from_budget(cfg.budget, gamma_ur)
        pu, pr, scheme = optimize_powers(cfg, triple, c_th)
        p_user[k] = pu
        p_relay[k] = pr
        schemes.append(scheme)
        snrs[k] = snr_af(pu, pr, triple) if scheme is Selection.AF else snr_df(pu, pr, triple)

    rate_mins = np.array([cfg.rate_min for cfg in users])
    bandwidth = allocate_bandwidth(snrs, rate_mins, total_bw)
    rates = 0.5 * bandwidth * _rate_scale(snrs)
    return AllocationResult(
        p_user=p_user,
        p_relay=p_relay,
        bandwidth=bandwidth,
        scheme=tuple(schemes),
        snr=snrs,
        rate=rates,
        best_user_index=int(np.argmax(snrs)),
        sum_rate=float(rates.sum()),
        feasible=True,
    )
