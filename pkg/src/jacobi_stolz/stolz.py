"""
Finite differences and numerical diagnostics of the Stolz classes.

A bounded sequence belongs to ``D_{r,s}`` when for every ``j = 1, ..., r - s``

    sum_n sup_K ||Delta^j x_n||^{r/(j+s)} < infinity.

Finite data cannot certify this, so :func:`stolz_diagnose` reports partial
sums together with fitted log-log tail slopes and a three-valued verdict.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

CONSISTENT = "consistent"
INCONSISTENT = "inconsistent"
INCONCLUSIVE = "inconclusive"

MIN_TAIL_POINTS = 16
R2_GOOD = 0.9


@dataclass
class DiffTable:
    """
    Forward differences of a sampled sequence.

    ``diffs[j]`` has length ``L - j``; ``diffs[j][n]`` is ``Delta^j x_n``
    (0-based ``n``).  Trailing axes of ``base`` (grid, matrix entries) are
    carried along unchanged.
    """

    base: np.ndarray
    max_order: int
    diffs: list


def build_diff_table(xs, j_max):
    """Exact forward differences ``Delta^j x`` for ``0 <= j <= j_max``."""
    xs = np.asarray(xs)
    if xs.shape[0] <= j_max:
        raise ValueError(f"need more than {j_max} samples, got {xs.shape[0]}")
    diffs = [xs]
    for _ in range(j_max):
        diffs.append(diffs[-1][1:] - diffs[-1][:-1])
    return DiffTable(xs, j_max, diffs)


def leibniz_check(xs, ys, j):
    """
    Max deviation between both sides of the discrete Leibniz rule

        Delta^j (x y)_n = sum_k C(j, k) Delta^{j-k} x_n Delta^k y_{n+j-k}.
    """
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    L = xs.shape[0]
    lhs = build_diff_table(xs * ys, j).diffs[j]
    tx = build_diff_table(xs, j).diffs
    ty = build_diff_table(ys, j).diffs
    m = L - j
    rhs = np.zeros_like(lhs)
    for k in range(j + 1):
        rhs = rhs + comb(j, k) * tx[j - k][:m] * ty[k][j - k:j - k + m]
    if m == 0:
        return 0.0
    return float(np.max(np.abs(lhs - rhs)))


def _sup_norm(d):
    """``sup`` over the grid of the entry norm; axis 0 is the sequence index."""
    d = np.asarray(d, float)
    if d.ndim >= 3 and d.shape[-2:] == (2, 2):
        nrm = np.linalg.norm(d, 2, axis=(-2, -1))
    else:
        nrm = np.abs(d)
    return nrm.reshape(nrm.shape[0], -1).max(axis=1)


def _range_max(v, lo, hi):
    """``max(v[lo:hi+1])`` for index arrays ``lo <= hi`` via a sparse table."""
    levels = [v]
    width = 1
    while 2 * width <= v.size:
        prev = levels[-1]
        levels.append(np.maximum(prev[:-width], prev[width:]))
        width *= 2
    span = hi - lo + 1
    p = np.floor(np.log2(span)).astype(int)
    out = np.empty(lo.size)
    for q in np.unique(p):
        sel = p == q
        t = levels[q]
        out[sel] = np.maximum(t[lo[sel]], t[hi[sel] - 2 ** q + 1])
    return out


def tail_slope(summand, frac=0.5):
    """
    Least-squares slope of ``log envelope`` against ``log n`` over the tail.

    ``envelope_n = max(summand[n//2 : n+1])`` with 1-based ``n``; the fit uses
    the last ``frac`` of the indices where the envelope is positive.

    Returns
    -------
    slope, r2 : float
        ``slope = -inf`` when the tail is identically zero.  A constant tail
        fits perfectly (``r2 = 1``).

    Raises
    ------
    ValueError
        With fewer than 16 tail points.
    """
    s = np.asarray(summand, float)
    L = s.size
    start = int(np.floor(L * (1 - frac)))
    if L - start < MIN_TAIL_POINTS:
        raise ValueError(f"too few samples for a tail fit ({L - start} < {MIN_TAIL_POINTS})")
    n = np.arange(1, L + 1)
    env = _range_max(s, (n[start:] - 1) // 2, n[start:] - 1)
    keep = env > 0
    if not keep.any():
        return -np.inf, 1.0
    if keep.sum() < MIN_TAIL_POINTS:
        return -np.inf, 0.0
    lx = np.log(n[start:][keep])
    ly = np.log(env[keep])
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    fit = A @ coef
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    ss_res = np.sum((ly - fit) ** 2)
    r2 = 1.0 if ss_tot <= 1e-30 * max(1.0, ly.size) else 1.0 - ss_res / ss_tot
    return float(coef[0]), float(r2)


@dataclass
class StolzReport:
    """Partial sums, tail slopes and verdict of a Stolz diagnostic."""

    r: int
    s: int
    partial_sums: dict
    cumulative: dict
    tail_slopes: dict
    r_squared: dict
    verdict: str

    def as_dict(self):
        return {"r": self.r, "s": self.s, "verdict": self.verdict,
                "partial_sums": {str(j): v for j, v in self.partial_sums.items()},
                "tail_slopes": {str(j): v for j, v in self.tail_slopes.items()},
                "r_squared": {str(j): v for j, v in self.r_squared.items()}}


def stolz_diagnose(xs, r, s=0, K=None):
    """
    Heuristic ``D_{r,s}`` membership check on a sampled sequence.

    Parameters
    ----------
    xs : ndarray
        Shape ``(L,)``, ``(L, G)`` or ``(L, G, 2, 2)``: the sequence sampled
        on a grid ``K`` (already applied) with scalar or 2x2 values.
    r, s : int
        Class indices, ``0 <= s <= r - 1``.
    K : array_like, optional
        Grid the samples were taken on; informational only.

    Returns
    -------
    StolzReport
        Verdict ``consistent`` when every slope is below ``-1``,
        ``inconsistent`` when some slope is ``>= -1`` with ``R^2 >= 0.9``,
        else ``inconclusive``.
    """
    if r < 1 or not 0 <= s <= r - 1:
        raise ValueError("need r >= 1 and 0 <= s <= r - 1")
    orders = range(1, r - s + 1)
    table = build_diff_table(xs, r - s)
    sums, cums, slopes, r2s = {}, {}, {}, {}
    for j in orders:
        summand = _sup_norm(table.diffs[j]) ** (r / (j + s))
        cum = np.cumsum(summand)
        cums[j] = cum
        sums[j] = float(cum[-1])
        slopes[j], r2s[j] = tail_slope(summand)
    if all(slopes[j] < -1 for j in orders):
        verdict = CONSISTENT
    elif any(slopes[j] >= -1 and r2s[j] >= R2_GOOD for j in orders):
        verdict = INCONSISTENT
    else:
        verdict = INCONCLUSIVE
    return StolzReport(r, s, sums, cums, slopes, r2s, verdict)


def entrywise_sequences(model, N, i, n_stop):
    """
    The scalar sequences controlling ``B_{nN+i}``:

    ``a_{nN+i-1}/a_{nN+i}``, ``b_{nN+i}/a_{nN+i}`` and ``1/a_{nN+i}``
    for ``n`` with ``1 <= nN + i < n_stop``.
    """
    k0 = 0 if i >= 1 else 1
    n = np.arange(k0, (n_stop - 1 - i) // N + 1) * N + i
    a = model.a_at(n)
    return {"a_ratio": model.a_at(n - 1) / a, "b_over_a": model.b_at(n) / a,
            "inv_a": 1.0 / a}


@dataclass
class CarlemanReport:
    partial_sum: float
    tail_slope: float
    divergent: bool


def carleman_check(model, n_max, threshold=-1.05):
    """
    Partial sum of ``1/a_n`` for ``0 <= n <= n_max`` and a divergence flag.

    The flag is raised when the fitted tail slope of ``1/a_n`` exceeds
    ``threshold`` (harmonic decay has slope ``-1``).
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    inv = 1.0 / model.a_at(np.arange(n_max + 1))
    slope, _ = tail_slope(inv)
    return CarlemanReport(float(inv.sum()), slope, bool(slope > threshold))
