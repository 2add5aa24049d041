"""Independent verification machinery: closed-form tail bounds and
exhaustive-search baselines.

Transcendental evaluation policy: natural logarithm and exponential run on
``decimal`` contexts (correctly rounded per IBM's specification) at 45
working digits, with the rounding direction chosen so the returned value is
conservative for the inequality it will be used in.  Results are reported at
30 significant digits.  No transcendental value ever feeds an allocation
decision; they appear only in probability bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_CEILING, ROUND_DOWN, ROUND_FLOOR, Context, Decimal
from fractions import Fraction
from itertools import product

from .core import Allocation, Instance
from .errors import DomainError, InstanceTooLargeError
from .metrics import ENUMERATION_GUARD, prop1_ratio

REPORT_DIGITS = 30
_WORK_DIGITS = REPORT_DIGITS + 15
_UP = Context(prec=_WORK_DIGITS, rounding=ROUND_CEILING)
_DOWN = Context(prec=_WORK_DIGITS, rounding=ROUND_FLOOR)


def _decimal_up(x: Fraction) -> Decimal:
    return _UP.divide(Decimal(x.numerator), Decimal(x.denominator))


def _decimal_down(x: Fraction) -> Decimal:
    return _DOWN.divide(Decimal(x.numerator), Decimal(x.denominator))


def rand_alpha_bound(n: int, delta: Fraction) -> Decimal:
    """The PROP1 factor 27 / (128 ln(n/delta)) the uniform rule guarantees
    with probability 1 - delta against a non-adaptive adversary.

    Natural log (the tail derivation needs exp(-ln(n/delta)) = delta/n).
    Rounded toward zero at 30 significant digits, so the returned factor
    never exceeds the true one.
    """
    if n < 2:
        raise DomainError("need at least 2 agents")
    if not 0 < delta < 1:
        raise DomainError(f"failure probability {delta} outside (0, 1)")
    log_up = _UP.ln(_decimal_up(Fraction(n) / delta))
    alpha_down = _DOWN.divide(Decimal(27), _UP.multiply(Decimal(128), log_up))
    return Context(prec=REPORT_DIGITS, rounding=ROUND_DOWN).plus(alpha_down)


@dataclass(frozen=True)
class BernsteinParams:
    """Inputs to the one-sided Bernstein tail bound."""

    variance_bound: Fraction  # sigma^2
    term_bound: Fraction  # b, the per-term upper deviation
    deviation: Fraction  # t, the threshold above the mean
    mean: Fraction

    @classmethod
    def from_small_goods(cls, n: int, alpha: Fraction, total: Fraction) -> "BernsteinParams":
        """Parameters for the others'-share variable when every good is worth
        less than alpha * total / n to the agent: variance at most
        alpha total^2 / n^2, per-term deviation at most alpha total / n, mean
        (n-1)/n total, and threshold (1-alpha) total / n."""
        if n < 2 or total <= 0 or not 0 < alpha < 1:
            raise DomainError("need n >= 2, total > 0 and alpha in (0, 1)")
        return cls(
            variance_bound=alpha * total * total / (n * n),
            term_bound=alpha * total / n,
            deviation=(1 - alpha) * total / n,
            mean=Fraction(n - 1, n) * total,
        )


def bernstein_tail(params: BernsteinParams) -> Decimal:
    """Upper bound exp(-t^2 / (2 sigma^2 + 2 b t / 3)) on the upper tail.

    The exponent is exact rational arithmetic; only the final exp is rounded,
    upward, so the result is a true upper bound.
    """
    if params.variance_bound < 0 or params.term_bound <= 0 or params.deviation <= 0:
        raise DomainError("need sigma^2 >= 0, b > 0 and t > 0")
    t, s2, b = params.deviation, params.variance_bound, params.term_bound
    exponent = -(t * t) / (2 * s2 + Fraction(2, 3) * b * t)
    tail_up = _UP.exp(_decimal_up(exponent))
    return Context(prec=REPORT_DIGITS, rounding=ROUND_CEILING).plus(tail_up)


def rand_tail_certificate(n: int, delta: Fraction) -> tuple[Decimal, Fraction, bool]:
    """Instantiate the tail bound with the factor from ``rand_alpha_bound``
    and report (tail upper bound, delta/n, bound holds).

    The comparison chain is scale-free in the agent's total value, so total
    is fixed at 1.
    """
    alpha = Fraction(rand_alpha_bound(n, delta))
    params = BernsteinParams.from_small_goods(n, alpha, Fraction(1))
    tail = bernstein_tail(params)
    threshold = delta / n
    return tail, threshold, Fraction(tail) <= threshold


@dataclass(frozen=True)
class RandMoments:
    """Exact moments of the others'-share variable under the uniform rule."""

    mean: Fraction
    variance: Fraction


def analytic_moments(inst: Instance, agent: int) -> RandMoments:
    """Mean (n-1)/n v_i(G) and variance (n-1)/n^2 sum_j v_i(g_j)^2 of the
    value received by the other agents when every good lands uniformly."""
    inst._check_agent(agent)
    n = inst.n
    row = inst.values[agent - 1]
    mean = Fraction(n - 1, n) * sum(row, Fraction(0))
    variance = Fraction(n - 1, n * n) * sum((v * v for v in row), Fraction(0))
    return RandMoments(mean, variance)


def small_goods_variance_bound(inst: Instance, agent: int, alpha: Fraction) -> bool | None:
    """Check variance <= alpha v_i(G)^2 / n^2 under the small-goods premise.

    Returns None when the premise fails (some good is worth more than
    alpha v_i(G) / n to the agent), otherwise whether the bound holds; the
    bound always holds for such rows, so False indicates a regression.
    """
    inst._check_agent(agent)
    row = inst.values[agent - 1]
    total = sum(row, Fraction(0))
    n = inst.n
    if row and max(row) > alpha * total / n:
        return None
    return analytic_moments(inst, agent).variance <= alpha * total * total / (n * n)


# ---------------------------------------------------------------------------
# Offline optimum by exhaustive search
# ---------------------------------------------------------------------------


def best_allocation_search(inst: Instance) -> tuple[Allocation, Fraction]:
    """Allocation maximizing the PROP1 ratio, by enumerating all n^m of them.

    Ties resolve to the first maximizer in enumeration order, so repeated
    searches agree.  Instances above the enumeration guard are refused.
    """
    n, m = inst.n, inst.m
    if n**m > ENUMERATION_GUARD:
        raise InstanceTooLargeError(f"{n}^{m} allocations exceed {ENUMERATION_GUARD}")
    if m == 0:
        return Allocation(()), Fraction(1)
    if n == 2:
        return _best_allocation_two_agents(inst)
    best_alloc: Allocation | None = None
    best_ratio = Fraction(-1)
    for owners in product(range(1, n + 1), repeat=m):
        alloc = Allocation(owners)
        ratio = prop1_ratio(inst, alloc)
        if ratio > best_ratio:
            best_alloc, best_ratio = alloc, ratio
            if best_ratio == 1:
                break
    return best_alloc, best_ratio


def _best_allocation_two_agents(inst: Instance) -> tuple[Allocation, Fraction]:
    """Two-agent search on scaled integers with subset-sum tables."""
    from math import lcm

    m = inst.m
    rows = inst.values
    scales = [lcm(*(v.denominator for v in row)) for row in rows]
    weights = [[int(v * s) for v in row] for row, s in zip(rows, scales)]
    totals = [sum(w) for w in weights]
    size = 1 << m
    sums = [[0] * size for _ in range(2)]
    maxing = [[0] * size for _ in range(2)]
    for i in range(2):
        wi, si, mi = weights[i], sums[i], maxing[i]
        for mask in range(1, size):
            low = mask & -mask
            w = wi[low.bit_length() - 1]
            prev = mask ^ low
            si[mask] = si[prev] + w
            mi[mask] = w if w > mi[prev] else mi[prev]

    full = size - 1
    best_mask = 0
    best_num, best_den = -1, 1  # worst agent value as a fraction num/den; den 0 flags infinity

    def sort_key(pair: tuple[int, int]):
        num, den = pair
        return (1, Fraction(0)) if den == 0 else (0, Fraction(num, den))

    for mask in range(size):
        comp = full ^ mask
        # agent 1 holds `mask`, agent 2 holds `comp`
        pairs = []
        for i, own, other in ((0, mask, comp), (1, comp, mask)):
            if other == 0 or totals[i] == 0:
                pairs.append((1, 0))  # vacuously satisfied
            else:
                pairs.append((sums[i][own] + maxing[i][other], totals[i]))
        num, den = min(pairs, key=sort_key)
        if den == 0:
            better = best_den != 0
        elif best_den == 0:
            better = False
        else:
            better = num * best_den > best_num * den
        if better:
            best_mask, best_num, best_den = mask, num, den
            if best_den and best_num * 2 >= best_den:  # ratio already 1
                break
            if best_den == 0:
                break
    owners = tuple(1 if best_mask >> t & 1 else 2 for t in range(m))
    alloc = Allocation(owners)
    return alloc, prop1_ratio(inst, alloc)
