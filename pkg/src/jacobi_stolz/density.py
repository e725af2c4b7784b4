"""
Density of the orthonormalizing measure on the elliptic region.

With ``h = lim discr X_{kN+i}`` and ``g = lim |S_{kN+i}|`` the density is

    nu'(x) = sqrt(-h(x)) / (2 pi g(x)).

The truncated model freezes the coefficients into an exactly periodic tail
after index ``L``; its density ``mu'_L`` has the same form with both limits
attained at ``n = L + N``, which gives an independent oracle for ``nu'``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NonEllipticError, QuadratureError
from .jacobi_core import (CoefficientModel, E, block_stack, discriminant,
                          eval_polynomials, opnorm, transfer_stack)
from .turan import TOL, WINDOW, estimate_g, window_limit

#: Geometric ladder of truncation rungs ``k`` (``L = kN + i``).
LADDER = tuple(2 ** p for p in range(4, 15))


def discr_sequence(model, N, i, x, k_start, k_stop, chunk=2048, with_sup=False):
    """
    ``discr X_{kN+i}(x)`` for ``k_start <= k < k_stop``, shape ``(K, G)``.

    With ``with_sup`` also returns ``sup_k ||X_{kN+i}(x)||`` per grid point.
    """
    x = np.atleast_1d(np.asarray(x, float))
    out = np.empty((k_stop - k_start, x.size))
    sup = np.zeros(x.size)
    for s in range(k_start, k_stop, chunk):
        e = min(s + chunk, k_stop)
        X = block_stack(model, N, i, s, e, x)
        out[s - k_start:e - k_start] = discriminant(X)
        if with_sup:
            sup = np.maximum(sup, opnorm(X).max(axis=0))
    return (out, sup) if with_sup else out


def estimate_h(model, N, i, x, tol=TOL, n_max=10_000, window=WINDOW):
    """
    Limit of ``discr X_{kN+i}(x)`` over blocks with ``kN + i + N <= n_max``.

    Returns
    -------
    h : float or ndarray
    converged : bool or ndarray
        Trailing-window relative spread below ``tol``.
    in_lambda : bool or ndarray
        ``h < 0``; points with ``h >= 0`` lie outside the elliptic region.
    """
    scalar = np.ndim(x) == 0
    k0 = 0 if i >= 1 else 1
    k1 = (n_max - N - i) // N + 1
    d = discr_sequence(model, N, i, x, k0, k1)
    est = window_limit(d, tol, window, k0)
    h, conv = est.value, est.converged
    if scalar:
        return float(h[0]), bool(conv[0]), bool(h[0] < 0)
    return h, conv, h < 0


@dataclass
class DensityProfile:
    """Per grid point limits, density and truncation ladder."""

    grid: np.ndarray
    g: np.ndarray
    h: np.ndarray
    nu_prime: np.ndarray
    converged: np.ndarray
    status: list
    N: int
    i: int
    mu_L: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def ok(self):
        """Points with a usable density (elliptic, ``h < 0``)."""
        return np.array([s == "ok" for s in self.status])

    def ladder_gaps(self, mask=None):
        """``sup |nu' - mu'_L|`` over ``mask`` (default: usable points) per rung."""
        mask = self.ok if mask is None else mask
        return {L: float(np.max(np.abs(self.nu_prime[mask] - mu[mask])))
                for L, mu in self.mu_L.items()}


def density_profile(model, N, i, K_grid, r=1, tol=TOL, n_max=10_000, window=WINDOW,
                    ladder=None, delta_min=1e-9):
    """
    ``g``, ``h`` and ``nu'`` on a grid with per-point error collection.

    Points whose final sampled block is not elliptic get status
    ``"non-elliptic"`` and NaN values; they never abort the run.

    Parameters
    ----------
    ladder : iterable of int, optional
        Rungs ``k``; ``mu'_L`` with ``L = kN + i`` is stored per rung.
    r : int
        Stolz order the run is declared for (recorded in ``meta``).
    """
    x = np.atleast_1d(np.asarray(K_grid, float))
    G = x.size
    k0 = 0 if i >= 1 else 1
    k1 = (n_max - N - i) // N + 1
    d, sup_X = discr_sequence(model, N, i, x, k0, k1, with_sup=True)
    h_est = window_limit(d, tol, window, k0)
    last_ok = d[-1] < -delta_min
    g = np.full(G, np.nan)
    gconv = np.zeros(G, bool)
    if last_ok.any():
        g[last_ok], gconv[last_ok], _ = estimate_g(model, N, i, x[last_ok], tol=tol,
                                                   n_max=n_max, window=window,
                                                   check_elliptic=False)
    h = np.where(last_ok, h_est.value, np.nan)
    usable = last_ok & (h < 0) & (g > 0)
    nu = np.full(G, np.nan)
    nu[usable] = np.sqrt(-h[usable]) / (2 * np.pi * g[usable])
    status = ["ok" if u else "non-elliptic" for u in usable]
    prof = DensityProfile(grid=x, g=g, h=h, nu_prime=nu,
                          converged=usable & gconv & h_est.converged, status=status,
                          N=N, i=i,
                          meta={"r": r, "tol": tol, "n_max": n_max, "window": window,
                                "g_converged": gconv, "h_converged": h_est.converged,
                                "sup_norm_X": sup_X})
    if ladder:
        Ls = [k * N + i for k in ladder]
        p_seq = eval_polynomials(model, x, max(Ls) + N)
        for L in Ls:
            prof.mu_L[L] = ladder_density(model, N, L, x, strict=False, p_seq=p_seq)
    return prof


# ---------------------------------------------------------------------------
# Truncation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncatedModel(CoefficientModel):
    """
    Coefficients equal to ``base`` below ``L + N`` and ``N``-periodic from ``L`` on.

    Build with :meth:`of`.
    """

    base: CoefficientModel = None
    L: int = 0
    N: int = 1

    @classmethod
    def of(cls, base, L, N):
        if L < 1 or N < 1:
            raise ValueError("need L >= 1 and N >= 1")

        def fold(n):
            n = np.asarray(n)
            return np.where(n < L + N, n, L + (n - L) % N)

        return cls(a=lambda n: base.a_at(fold(n)), b=lambda n: base.b_at(fold(n)),
                   period_N=N, label=f"{base.label}|L={L}", base=base, L=L, N=N)


def _mu_from(disc, S, strict):
    bad = ~(disc < 0)
    if strict and np.any(bad):
        raise NonEllipticError("x outside the periodic band (discr >= 0)")
    with np.errstate(invalid="ignore", divide="ignore"):
        mu = np.sqrt(-disc) / (2 * np.pi * np.abs(S))
    return np.where(bad, np.nan, mu)


def periodized_density(model, N, L, x, strict=True):
    """
    ``mu'_L(x) = sqrt(-discr X^L_{L+N}) / (2 pi |S^L_{L+N}|)`` by direct evaluation.

    The truncated polynomials are run up to ``L + 2N`` and
    ``S^L_{L+N} = a^L_{L+2N-1} (p_{L+N} p_{L+2N-1} - p_{L+N-1} p_{L+2N})``.

    Raises
    ------
    NonEllipticError
        When ``strict`` and some ``x`` lies outside the band of the truncated
        model; otherwise such points return NaN.
    """
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, float))
    tm = TruncatedModel.of(model, L, N)
    n = L + N
    seq = eval_polynomials(tm, x, L + 2 * N)
    p, ref = seq.rebased([n - 1, n, n + N - 1, n + N])
    S = tm.a_at(n + N - 1) * (p[1] * p[2] - p[0] * p[3]) * np.exp(2 * ref)
    disc = discriminant(block_stack(tm, N, n % N, n // N, n // N + 1, x)[0])
    mu = _mu_from(disc, S, strict)
    return float(mu[0]) if scalar else mu


def ladder_density(model, N, L, x, strict=True, p_seq=None):
    """
    ``mu'_L`` from the untruncated polynomials, without building ``p^L``.

    Uses ``p^L_n = p_n`` for ``n <= L + N`` and the quadratic form
    ``S^L_{L+N} = a_{L+N-1} <E X^L_{L+N} w, w>`` with
    ``w = (p_{L+N-1}, p_{L+N})``.  ``p_seq`` may carry precomputed
    polynomials (a :class:`ScaledSequence` long enough for ``L + N``).
    """
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, float))
    n = L + N
    if p_seq is None:
        p_seq = eval_polynomials(model, x, n)
    w, ref = p_seq.rebased([n - 1, n])
    # X^L_{L+N} = B^L_{L+2N-1} ... B^L_{L+N}; B^L_j needs a^L_{j-1}, a^L_j, b^L_j
    a_base, b_base = model.coefficients(L + N)
    j = np.arange(n - 1, n + N)
    src = np.where(j < L + N, j, L + (j - L) % N)
    a = a_base[src]
    b = b_base[src]
    X = np.broadcast_to(np.eye(2), x.shape + (2, 2)).copy()
    for t in range(N):
        B = np.zeros(x.shape + (2, 2))
        B[..., 0, 1] = 1.0
        B[..., 1, 0] = -a[t] / a[t + 1]
        B[..., 1, 1] = (x - b[t + 1]) / a[t + 1]
        X = B @ X
    Ew = np.einsum("ij,gjk,kg->ig", E, X, w)
    S = a_base[n - 1] * np.sum(Ew * w, axis=0) * np.exp(2 * ref)
    mu = _mu_from(discriminant(X), S, strict)
    return float(mu[0]) if scalar else mu


def truncation_stability(model, N, L, x):
    """
    Both sides of ``|discr X^L_{L+N} - discr X_L| <= c ||X_L||^2 |a_{L+N-1}/a_{L-1} - 1|``.

    Returns ``(lhs, rhs_without_c)`` arrays over ``x``.
    """
    x = np.atleast_1d(np.asarray(x, float))
    tm = TruncatedModel.of(model, L, N)
    n = L + N
    XL = block_stack(model, N, L % N, L // N, L // N + 1, x)[0]
    XT = block_stack(tm, N, n % N, n // N, n // N + 1, x)[0]
    lhs = np.abs(discriminant(XT) - discriminant(XL))
    ratio = model.a_at(L + N - 1) / model.a_at(L - 1)
    return lhs, opnorm(XL) ** 2 * abs(ratio - 1.0)


# ---------------------------------------------------------------------------
# Orthonormality by quadrature
# ---------------------------------------------------------------------------

@dataclass
class GramResult:
    """Gram matrix with Richardson diagnostics."""

    gram: np.ndarray
    max_deviation: float
    error_estimate: float
    order: float
    gram_2h: np.ndarray
    gram_4h: np.ndarray


def _simpson_weights(n_points, h):
    if n_points < 3 or n_points % 2 == 0:
        raise QuadratureError("Simpson needs an odd number of at least 3 points")
    w = np.ones(n_points)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


def _gram(P, nu, h):
    w = _simpson_weights(P.shape[1], h) * nu
    G = (P * w) @ P.T
    # matmul rounding differs between (j, k) and (k, j)
    return 0.5 * (G + G.T)


def orthonormality_quadrature(profile, model, j_max, tol=1e-3):
    """
    ``G_jk = int p_j p_k nu' dx`` over the profile grid by composite Simpson.

    Richardson comparison of step sizes ``h``, ``2h`` and ``4h`` yields an
    observed order and an error estimate ``|G_h - G_2h| / (2**order - 1)``.

    Raises
    ------
    QuadratureError
        If the grid is not uniform, ``(count - 1)`` is not a multiple of 8, any
        density value is unusable, or the error estimate exceeds ``tol``.
    """
    x = profile.grid
    dx = np.diff(x)
    h = dx.mean()
    if not np.allclose(dx, h, rtol=1e-9, atol=0):
        raise QuadratureError("grid must be uniform")
    if (x.size - 1) % 8:
        raise QuadratureError("grid needs (count - 1) divisible by 8 for the 4h rule")
    nu = profile.nu_prime
    if not np.all(np.isfinite(nu)):
        raise QuadratureError("density is undefined at some grid points")
    P = eval_polynomials(model, x, j_max).values()
    G1 = _gram(P, nu, h)
    G2 = _gram(P[:, ::2], nu[::2], 2 * h)
    G4 = _gram(P[:, ::4], nu[::4], 4 * h)
    d12 = np.max(np.abs(G1 - G2))
    d24 = np.max(np.abs(G2 - G4))
    if d12 == 0:
        order, err = np.inf, 0.0
    else:
        order = float(np.log2(d24 / d12))
        err = float(d12 / (2.0 ** order - 1)) if order > 0 else float("inf")
    if err > tol:
        raise QuadratureError(f"Simpson error estimate {err:.3e} exceeds {tol:g}")
    return GramResult(G1, float(np.max(np.abs(G1 - np.eye(j_max + 1)))), err, order, G2, G4)
