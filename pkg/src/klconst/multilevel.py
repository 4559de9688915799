"""Amplitude-level design: ratio bisection, level construction, bit split.

With directions fixed, the worst-case KL distance of a multi-level
constellation is governed by two quantities: the intra distance of the
weakest (lowest) level,

    g(alpha_0) = alpha_0^4 t / (sigma2 (sigma2 + alpha_0^2)),

where t is the direction set's min squared chordal distance, and the inter
distance of consecutive levels,

    h(r) = 1/r - ln(1/r) - 1,

where r is the common ratio of the noise-shifted level energies
sigma2 + alpha_i^2 = (sigma2 + alpha_0^2) r^i.  The max-min optimum
equalizes all consecutive ratios and balances g against h under the unit
average power constraint

    2^l_alpha (sigma2 + 1) = (sigma2 + alpha_0^2) (r^{2^l_alpha} - 1)/(r - 1).

g falls and h rises along the feasible ratio range, so a plain bisection on
r finds the balance point; the degenerate single-direction design instead
pushes alpha_0 to zero and lets the power constraint fix the ratio.  The
bit split between levels and directions is chosen by evaluating all
l_s + 1 allocations and keeping the largest objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    LevelSet,
    MultiLevelConstellation,
    UnitarySet,
    _check_sigma2,
    inter_level_kl,
    intra_level_kl,
)

__all__ = [
    "BisectionResult",
    "AllocationRow",
    "DesignOutcome",
    "solve_bisection",
    "build_level_set",
    "energy_only_levels",
    "allocate_bits",
]

# Bracket width for locating the feasibility boundary r_u (where the base
# amplitude hits zero) and default bracket width for the main bisection.
BOUNDARY_EPS = 1e-12
DEFAULT_EPS = 1e-12

ALLOCATION_CSV_HEADER = "l_alpha,min_kl,r0,alpha0"


@dataclass(frozen=True)
class BisectionResult:
    """Solution of the ratio equalization for one (sigma2, l_alpha, t)."""

    r0: float
    alpha0: float
    iterations: int
    residual_equality: float
    residual_power: float


@dataclass(frozen=True)
class AllocationRow:
    """One candidate bit split and its achieved objective.

    r0 is None for the all-direction split (l_alpha = 0), which has a
    single level at amplitude 1 and no ratio.
    """

    l_alpha: int
    min_kl: float
    r0: float | None
    alpha0: float | None

    def csv(self):
        r = "" if self.r0 is None else f"{self.r0:.12g}"
        a = "" if self.alpha0 is None else f"{self.alpha0:.12g}"
        return f"{self.l_alpha},{self.min_kl:.12g},{r},{a}"


@dataclass(frozen=True)
class DesignOutcome:
    """Winning allocation with its constellation and the full table."""

    l_alpha: int
    constellation: MultiLevelConstellation
    min_kl: float
    per_allocation_table: list[AllocationRow] = field(default_factory=list)


def _geom_sum(r, n):
    # sum_{i<n} r^i = (r^n - 1)/(r - 1), stable through r -> 1.
    d = r - 1.0
    if abs(d) < 1e-13:
        return float(n)
    return math.expm1(n * math.log1p(d)) / d


def _g_of(alpha_sq, t, sigma2):
    # intra objective as a function of the squared base amplitude
    return alpha_sq * alpha_sq * t / (sigma2 * (sigma2 + alpha_sq))


def _h_of(r):
    # inter objective 1/r - ln(1/r) - 1, written around r = 1
    xm1 = 1.0 / r - 1.0
    return xm1 - math.log1p(xm1)


def _base_amp_sq(r, n_levels, sigma2):
    # alpha_0^2 from the power constraint at ratio r (limit 1 as r -> 1)
    return n_levels * (1.0 + sigma2) / _geom_sum(r, n_levels) - sigma2


def _feasible_ratio_ceiling(n_levels, sigma2):
    """Largest ratio with a nonnegative base amplitude.

    The power constraint pins sum_{i} r^i = n (1 + sigma2)/(sigma2 +
    alpha_0^2), so the ceiling solves sum r^i = n (1 + sigma2)/sigma2;
    located by doubling r - 1 past the boundary and bisecting to 1e-12.
    """
    target = n_levels * (1.0 + sigma2) / sigma2
    d = 1e-6
    while _geom_sum(1.0 + d, n_levels) <= target:
        d *= 2.0
        if not math.isfinite(d):
            raise ArithmeticError("feasibility boundary search diverged")
    lo, hi = d / 2.0, d
    while hi - lo >= BOUNDARY_EPS * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if _geom_sum(1.0 + mid, n_levels) <= target:
            lo = mid
        else:
            hi = mid
    return 1.0 + lo


def _result_from_ratio(r, n_levels, t, sigma2, iterations):
    alpha_sq = max(_base_amp_sq(r, n_levels, sigma2), 0.0)
    res_eq = abs(_g_of(alpha_sq, t, sigma2) - _h_of(r))
    shifted = (sigma2 + alpha_sq) * r ** np.arange(n_levels)
    res_pw = abs(float(np.mean(shifted - sigma2)) - 1.0)
    return BisectionResult(
        r0=r,
        alpha0=math.sqrt(alpha_sq),
        iterations=iterations,
        residual_equality=res_eq,
        residual_power=res_pw,
    )


def solve_bisection(sigma2, l_alpha, t_v, eps=DEFAULT_EPS):
    """Equalize the intra and inter objectives by bisection on the ratio.

    Parameters
    ----------
    sigma2 : float
        Design noise variance.
    l_alpha : int
        Level bits, >= 1 (2^l_alpha levels).
    t_v : float
        Min squared chordal distance of the direction set; finite, > 0.
    eps : float, optional
        Final bracket width on r.

    Returns
    -------
    BisectionResult
        Ratio, base amplitude, iteration count, and the equality / power
        residuals of the returned point.

    The difference g(alpha_0(r)) - h(r) is strictly decreasing in r,
    positive at r -> 1 (h vanishes) and negative at the feasibility ceiling
    (g vanishes with alpha_0), so the sign change is guaranteed; it is still
    guarded to fail loudly on numeric surprises.
    """
    sigma2 = _check_sigma2(sigma2)
    if l_alpha < 1:
        raise ValueError(f"l_alpha must be >= 1, got {l_alpha}")
    if not (math.isfinite(t_v) and t_v > 0.0):
        raise ValueError(f"t_v must be finite and positive, got {t_v!r}")
    eps = float(eps)
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    n = 2**l_alpha

    def balance(r):
        return _g_of(max(_base_amp_sq(r, n, sigma2), 0.0), t_v, sigma2) - _h_of(r)

    lo = 1.0
    hi = _feasible_ratio_ceiling(n, sigma2)
    if balance(hi) > 0.0:
        raise ArithmeticError(
            f"no sign change on the ratio bracket (1, {hi!r}); inputs "
            f"sigma2={sigma2!r}, l_alpha={l_alpha}, t_v={t_v!r}"
        )
    iterations = 0
    while hi - lo >= eps:
        mid = 0.5 * (lo + hi)
        if balance(mid) <= 0.0:
            hi = mid
        else:
            lo = mid
        iterations += 1
    return _result_from_ratio(0.5 * (lo + hi), n, t_v, sigma2, iterations)


def build_level_set(res, sigma2, l_alpha):
    """Amplitudes of the designed levels from a bisection result.

    alpha_i = sqrt((sigma2 + alpha_0^2) r^i - sigma2) for i = 0 .. 2^l_alpha - 1.
    l_alpha = 0 is the trivial single level at amplitude 1.
    """
    sigma2 = _check_sigma2(sigma2)
    if l_alpha < 0:
        raise ValueError(f"l_alpha must be >= 0, got {l_alpha}")
    if l_alpha == 0:
        return LevelSet([1.0], sigma2)
    if not isinstance(res, BisectionResult):
        raise TypeError("res must be a BisectionResult")
    n = 2**l_alpha
    shifted = (sigma2 + res.alpha0**2) * res.r0 ** np.arange(n)
    radicand = shifted - sigma2
    if np.any(radicand < 0.0):
        raise ArithmeticError(
            "negative squared amplitude; the bisection result does not "
            "satisfy the power identity"
        )
    return LevelSet(np.sqrt(radicand), sigma2, ratio=res.r0)


def energy_only_levels(sigma2, l_alpha):
    """Levels of the single-direction (all-energy) design.

    The base level is exactly zero; with no intra pairs the objective is
    the consecutive inter distance alone, which grows with the ratio, so
    the power constraint is saturated at alpha_0 = 0:

        2^l_alpha (sigma2 + 1) = sigma2 (r^{2^l_alpha} - 1)/(r - 1).
    """
    sigma2 = _check_sigma2(sigma2)
    if l_alpha < 1:
        raise ValueError(f"l_alpha must be >= 1, got {l_alpha}")
    n = 2**l_alpha
    if n == 2:
        # linear case, solved in closed form: sigma2 (1 + r) = 2 (sigma2 + 1)
        r = (sigma2 + 2.0) / sigma2
        return LevelSet([0.0, math.sqrt(2.0)], sigma2, ratio=r)
    # Same boundary as the feasibility ceiling of the general solver: the
    # ratio at which the power identity holds with a zero base level.
    r = _feasible_ratio_ceiling(n, sigma2)
    shifted = sigma2 * r ** np.arange(n)
    amps = np.sqrt(np.maximum(shifted - sigma2, 0.0))
    amps[0] = 0.0
    return LevelSet(amps, sigma2, ratio=r)


def _objective_rows(l_s, sigma2, unitary_library):
    rows = []
    for l_alpha in range(l_s + 1):
        l_v = l_s - l_alpha
        directions = unitary_library[l_v]
        if l_alpha == 0:
            rows.append(
                AllocationRow(
                    l_alpha=0,
                    min_kl=intra_level_kl(1.0, directions.min_sq_dist, sigma2),
                    r0=None,
                    alpha0=1.0,
                )
            )
        elif l_alpha == l_s:
            levels = energy_only_levels(sigma2, l_alpha)
            rows.append(
                AllocationRow(
                    l_alpha=l_alpha,
                    min_kl=_min_pair_objective(levels, directions, sigma2),
                    r0=levels.ratio,
                    alpha0=0.0,
                )
            )
        else:
            res = solve_bisection(sigma2, l_alpha, directions.min_sq_dist)
            levels = build_level_set(res, sigma2, l_alpha)
            rows.append(
                AllocationRow(
                    l_alpha=l_alpha,
                    min_kl=_min_pair_objective(levels, directions, sigma2),
                    r0=res.r0,
                    alpha0=res.alpha0,
                )
            )
    return rows


def _min_pair_objective(levels, directions, sigma2):
    """Achieved objective of a constructed design, computed analytically.

    The minimum over all point pairs sits either inside the lowest level or
    between consecutive levels, so only those terms are evaluated.
    """
    a = levels.amplitudes
    best = intra_level_kl(a[0], directions.min_sq_dist, sigma2)
    for i in range(a.size - 1):
        best = min(best, inter_level_kl(a[i], a[i + 1], sigma2))
    return best


def allocate_bits(l_s, sigma2, unitary_library):
    """Choose the bit split l_alpha + l_v = l_s with the largest objective.

    Parameters
    ----------
    l_s : int
        Total bits per block, >= 1.
    sigma2 : float
        Design noise variance.
    unitary_library : mapping l_v -> UnitarySet
        Must contain an entry of cardinality 2^l_v for every l_v in 0..l_s
        (the 0 entry being a canonical single vector).

    Returns
    -------
    DesignOutcome
        The argmax allocation (ties toward smaller l_alpha, which keeps the
        level detection stage smaller), the built constellation, and the
        full candidate table.
    """
    sigma2 = _check_sigma2(sigma2)
    if l_s < 1:
        raise ValueError(f"l_s must be >= 1, got {l_s}")
    for l_v in range(l_s + 1):
        entry = unitary_library.get(l_v)
        if entry is None:
            raise KeyError(f"unitary library is missing the l_v={l_v} entry")
        if not isinstance(entry, UnitarySet) or entry.size != 2**l_v:
            raise ValueError(
                f"unitary library entry for l_v={l_v} must be a UnitarySet "
                f"of cardinality {2 ** l_v}"
            )
    rows = _objective_rows(l_s, sigma2, unitary_library)
    best = rows[0]
    for row in rows[1:]:
        if row.min_kl > best.min_kl:
            best = row
    directions = unitary_library[l_s - best.l_alpha]
    if best.l_alpha == 0:
        levels = build_level_set(None, sigma2, 0)
    elif best.l_alpha == l_s:
        levels = energy_only_levels(sigma2, best.l_alpha)
    else:
        levels = build_level_set(
            solve_bisection(sigma2, best.l_alpha, directions.min_sq_dist),
            sigma2,
            best.l_alpha,
        )
    constellation = MultiLevelConstellation(levels, directions)
    return DesignOutcome(
        l_alpha=best.l_alpha,
        constellation=constellation,
        min_kl=best.min_kl,
        per_allocation_table=rows,
    )
