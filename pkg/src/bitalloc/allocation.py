"""Power-constrained ADC bit allocation.

The relaxed problem minimises sum_i sigma_i^2 2^(-2 b_i) subject to
sum_i 2^(b_i) <= N 2^(b_bar) over real b. Its closed-form optimum is mapped to
non-negative integers: round up, then round selected branches back down in
order of the smallest MSQE increase per unit of power saved until the budget
is met.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .beamspace import RfSnrProfile
from .quantization import AQNM_CONSTANT, msqe

__all__ = [
    "PowerModel",
    "RelaxedAllocation",
    "BitAllocation",
    "AllocationError",
    "INTEGER_TOL",
    "adc_power",
    "power_budget",
    "solve_relaxed",
    "solve_relaxed_numerical",
    "kkt_verify",
    "tradeoff_rel",
    "allocate_bits",
    "uniform_allocation",
    "brute_force_allocation",
    "total_msqe",
    "relaxed_msqe",
]

INTEGER_TOL = 1e-9
# float slack when comparing summed powers against a real-valued budget
_BUDGET_RTOL = 1e-12


class AllocationError(RuntimeError):
    pass


@dataclass(frozen=True)
class PowerModel:
    """ADC power P(b) = c * w * 2^b for b >= 1, zero for b <= 0."""

    c: float = 494e-15
    w: float = 1e9

    def __post_init__(self):
        if not (self.c > 0 and self.w > 0):
            raise ValueError("c and w must be positive")

    @property
    def unit(self) -> float:
        return self.c * self.w


@dataclass(frozen=True)
class RelaxedAllocation:
    b_hat: np.ndarray
    mu1: float
    budget_used: float


@dataclass(frozen=True)
class BitAllocation:
    bits: np.ndarray
    total_power: float
    n_inactive: int
    budget: float = field(default=np.inf)

    @classmethod
    def from_bits(cls, bits, model: PowerModel, budget: float = np.inf) -> "BitAllocation":
        bits = np.asarray(bits, dtype=int)
        if np.any(bits < 0):
            raise ValueError("bits must be non-negative")
        bits.setflags(write=False)
        return cls(
            bits=bits,
            total_power=model.unit * float(np.sum(np.where(bits > 0, np.exp2(bits.astype(float)), 0.0))),
            n_inactive=int(np.count_nonzero(bits == 0)),
            budget=float(budget),
        )

    @property
    def n_active(self) -> int:
        return self.bits.size - self.n_inactive


def adc_power(model: PowerModel, b):
    """Power of one ADC at ``b`` bits (vectorised); 0 W when switched off."""
    b = np.asarray(b)
    out = np.where(b >= 1, model.unit * np.exp2(np.maximum(b, 0).astype(float)), 0.0)
    return float(out) if out.ndim == 0 else out


def power_budget(model: PowerModel, n: int, b_bar: int) -> float:
    if int(b_bar) != b_bar or b_bar < 1:
        raise ValueError("b_bar must be an integer >= 1")
    return model.unit * (n * 2.0**b_bar)


def _check_profile(profile: RfSnrProfile) -> np.ndarray:
    v = np.asarray(profile.sigma_sq, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("profile must hold a non-empty 1-D sigma_sq")
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        raise ValueError("profile entries must be finite and sigma_sq > 0")
    return v


def solve_relaxed(profile: RfSnrProfile, b_bar: int, model: PowerModel | None = None) -> RelaxedAllocation:
    """Closed-form optimum of the relaxed real-valued allocation.

    b_hat_i = b_bar - log2( mean_j [(1 + SNR_j) / (1 + SNR_i)]^(1/3) ).
    Only ratios of sigma_i^2 = N0 (1 + SNR_i) enter, so sigma_sq is used directly.
    """
    model = model or PowerModel()
    v = _check_profile(profile)
    n = v.size
    log_r = np.log2(v) / 3.0
    shift = log_r.max()
    log_mean = np.log2(np.mean(np.exp2(log_r - shift))) + shift
    b_hat = b_bar - (log_mean - log_r)
    # mu1 = (sqrt(x_bar)/N * sum_j (2 v_j)^(1/3))^3 with x_bar = 2^(-2 b_bar)
    mu1 = (2.0**-b_bar * np.sum(np.cbrt(2.0 * v)) / n) ** 3
    return RelaxedAllocation(
        b_hat=b_hat,
        mu1=float(mu1),
        budget_used=float(model.unit * np.sum(np.exp2(b_hat))),
    )


def solve_relaxed_numerical(
    profile: RfSnrProfile, b_bar: int, tol: float = 1e-12, model: PowerModel | None = None
) -> RelaxedAllocation:
    """Solve the relaxed problem by bisection on the budget multiplier.

    Stationarity gives x_i = (mu / (2 v_i))^(2/3) for a given multiplier mu;
    the budget sum_i x_i^(-1/2) = N x_bar^(-1/2) is then a monotone equation in
    log mu, bracketed from the extreme v_i.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    model = model or PowerModel()
    v = _check_profile(profile)
    n = v.size
    target = n * 2.0**b_bar

    def excess(log2_mu):
        return np.sum(np.cbrt(2.0 * v / np.exp2(log2_mu))) / target - 1.0

    lo = np.log2(2.0 * v.min()) - 3.0 * b_bar - 1.0
    hi = np.log2(2.0 * v.max()) - 3.0 * b_bar + 1.0
    if not excess(lo) > 0 > excess(hi):
        raise AllocationError("bisection bracket does not straddle the budget")
    log2_mu = optimize.bisect(excess, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    residual = abs(excess(log2_mu))
    if residual >= tol:
        raise AllocationError(f"budget residual {residual:.3e} above tol {tol:.1e}")
    mu = np.exp2(log2_mu)
    x = np.cbrt(mu / (2.0 * v)) ** 2
    b_hat = -0.5 * np.log2(x)
    return RelaxedAllocation(
        b_hat=b_hat,
        mu1=float(mu),
        budget_used=float(model.unit * np.sum(np.exp2(b_hat))),
    )


def kkt_verify(relaxed: RelaxedAllocation, profile: RfSnrProfile, b_bar: int) -> float:
    """Largest relative KKT residual of a relaxed allocation.

    Checks stationarity v_i = x_i^(-3/2) mu1 / 2, primal feasibility and
    complementary slackness of the budget constraint, and dual feasibility
    mu1 >= 0, each normalised to be scale free.
    """
    v = _check_profile(profile)
    n = v.size
    b_hat = np.asarray(relaxed.b_hat, dtype=float)
    mu1 = relaxed.mu1
    x = np.exp2(-2.0 * b_hat)
    cap = n * 2.0**b_bar  # N x_bar^(-1/2)
    h1 = np.sum(x**-0.5) - cap
    stationarity = np.abs(v - 0.5 * x**-1.5 * mu1) / v
    primal = max(h1, 0.0) / cap
    slackness = abs(mu1 * h1) / (abs(mu1) * cap) if mu1 != 0 else 0.0
    dual = max(-mu1, 0.0) / max(abs(mu1), np.finfo(float).tiny)
    return float(max(stationarity.max(), primal, slackness, dual))


def _is_integer(b_hat) -> np.ndarray:
    b_hat = np.asarray(b_hat, dtype=float)
    return np.abs(b_hat - np.round(b_hat)) <= INTEGER_TOL


def tradeoff_rel(b_hat_i: float, sigma_sq_i: float) -> float:
    """MSQE increase per unit power saved when rounding b_hat down instead of up.

    T = sigma^2 (2^(-2 floor b) - 2^(-2 b)) / (2^b - 2^(floor b)).
    """
    if b_hat_i <= 0:
        raise ValueError("trade-off needs b_hat > 0")
    if _is_integer(b_hat_i):
        raise ValueError("trade-off undefined at integer b_hat")
    fl = np.floor(b_hat_i)
    return float(sigma_sq_i * (4.0**-fl - 4.0**-b_hat_i) / (2.0**b_hat_i - 2.0**fl))


def allocate_bits(
    profile: RfSnrProfile,
    model: PowerModel,
    b_bar: int,
    budget: float | None = None,
    relaxed: RelaxedAllocation | None = None,
) -> BitAllocation:
    """Near-optimal integer bit allocation under the ADC power budget.

    Parameters
    ----------
    profile : RfSnrProfile
        Beamspace branch statistics.
    model : PowerModel
        ADC power model.
    b_bar : int
        Uniform resolution whose power ``N P(b_bar)`` is the budget.
    budget : float, optional
        Override the budget in watts (testing hook).
    relaxed : RelaxedAllocation, optional
        Pre-computed relaxed solution; computed with :func:`solve_relaxed`
        when omitted.

    Returns
    -------
    BitAllocation
        Ties in the trade-off ordering go to the lowest branch index.
    """
    v = _check_profile(profile)
    n = v.size
    budget = power_budget(model, n, b_bar) if budget is None else float(budget)
    if relaxed is None:
        relaxed = solve_relaxed(profile, b_bar, model)
    b_hat = np.asarray(relaxed.b_hat, dtype=float)

    integral = _is_integer(b_hat)
    bits = np.where(integral, np.round(b_hat), np.ceil(b_hat))
    bits = np.maximum(bits, 0).astype(int)
    reducible = (bits > 0) & ~integral

    # work in units of c*w so uniform allocations compare exactly
    cap = budget / model.unit * (1.0 + _BUDGET_RTOL)
    unit_power = np.where(bits > 0, np.exp2(bits.astype(float)), 0.0)
    total = float(np.sum(unit_power))
    if total <= cap:
        return BitAllocation.from_bits(bits, model, budget)

    idx = np.flatnonzero(reducible)
    fl = np.floor(b_hat[idx])
    t_rel = v[idx] * (4.0**-fl - 4.0**-b_hat[idx]) / (2.0 ** b_hat[idx] - 2.0**fl)
    # T_rel is fixed once computed, so repeated argmin over the shrinking set
    # is a walk through a stable sort
    order = idx[np.argsort(t_rel, kind="stable")]
    for i in order:
        if total <= cap:
            break
        total -= unit_power[i]
        bits[i] -= 1
        unit_power[i] = 2.0 ** bits[i] if bits[i] > 0 else 0.0
        total += unit_power[i]
    if total > cap:
        raise AllocationError("reducible set exhausted while still over budget")
    return BitAllocation.from_bits(bits, model, budget)


def uniform_allocation(n: int, model: PowerModel, b_bar: int) -> BitAllocation:
    return BitAllocation.from_bits(np.full(n, b_bar), model, power_budget(model, n, b_bar))


def brute_force_allocation(
    profile: RfSnrProfile,
    model: PowerModel,
    b_bar: int,
    b_max: int,
    budget: float | None = None,
    max_points: int = 2_000_000,
) -> BitAllocation:
    """Exhaustive search over {0..b_max}^N for the minimum total MSQE.

    Ties go to the lexicographically smallest bit vector.
    """
    v = _check_profile(profile)
    n = v.size
    n_points = (b_max + 1) ** n
    if n_points > max_points:
        raise AllocationError(f"search space of {n_points} points exceeds cap {max_points}")
    budget = power_budget(model, n, b_bar) if budget is None else float(budget)
    cap = budget / model.unit * (1.0 + _BUDGET_RTOL)

    # rows of `grid` are in lexicographic order
    grid = np.indices((b_max + 1,) * n).reshape(n, -1).T
    unit_power = np.where(grid > 0, np.exp2(grid.astype(float)), 0.0).sum(axis=1)
    cost = msqe(grid, v).sum(axis=1)
    cost[unit_power > cap] = np.inf
    best = int(np.argmin(cost))
    if not np.isfinite(cost[best]):
        raise AllocationError("no feasible allocation in the search space")
    return BitAllocation.from_bits(grid[best], model, budget)


def total_msqe(bits, profile: RfSnrProfile) -> float:
    bits = np.asarray(getattr(bits, "bits", bits))
    sigma_sq = np.asarray(profile.sigma_sq, dtype=float)
    if bits.shape != sigma_sq.shape:
        raise ValueError("bits and profile lengths differ")
    return float(np.sum(msqe(bits, sigma_sq)))


def relaxed_msqe(relaxed: RelaxedAllocation, profile: RfSnrProfile) -> float:
    """Total MSQE of a real-valued allocation, extrapolating D(b) to any real b."""
    sigma_sq = np.asarray(profile.sigma_sq, dtype=float)
    return float(AQNM_CONSTANT * np.sum(sigma_sq * 4.0 ** -np.asarray(relaxed.b_hat)))
