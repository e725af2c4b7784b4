"""
N-shifted Turán determinants and their limits.

For a generalized eigenvector ``u``

    S_n = a_{n+N-1} (u_n u_{n+N-1} - u_{n-1} u_{n+N}),

which equals ``a_{n+N-1} <E X_n w, w>`` with ``w = (u_{n-1}, u_n)``.  Along a
residue class ``n = kN + i`` the sequence converges on the elliptic region and
its absolute limit ``g`` enters the density formula.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import NonEllipticError
from .jacobi_core import (E, ScaledSequence, block_stack, discriminant,
                          eval_solution, n_step, polynomial_alpha)

WINDOW = 32
TOL = 1e-6


def shifted_turan(model, N, n, x, u):
    """
    ``S_n`` from an eigenvector window.

    Parameters
    ----------
    u : ndarray or ScaledSequence
        Values ``u_0, u_1, ...`` (at least up to ``n + N``).  A
        :class:`ScaledSequence` is rebased to a common scale first.

    Raises
    ------
    ValueError
        On a zero pair ``(u_{n-1}, u_n)`` or a scaling mismatch.
    """
    if n < 1:
        raise ValueError("S_n is defined for n >= 1")
    idx = np.array([n - 1, n, n + N - 1, n + N])
    if isinstance(u, ScaledSequence):
        w, ref = u.rebased(idx)
        factor = np.exp(2.0 * ref)
    else:
        w = np.asarray(u, float)[idx]
        factor = 1.0
    if np.any((w[0] == 0) & (w[1] == 0)):
        raise ValueError("(u_{n-1}, u_n) must be non-zero")
    a = model.a_at(n + N - 1)
    return a * (w[1] * w[2] - w[0] * w[3]) * factor


def turan_quadratic(model, N, n, x, w):
    """Quadratic-form route ``a_{n+N-1} <E X_n w, w>`` with ``w = (u_{n-1}, u_n)``."""
    X = n_step(model, n, N, float(x))
    w = np.asarray(w, float)
    return float(model.a_at(n + N - 1) * (w @ (E @ X @ w)))


def turan_sequence(model, N, i, u, k_start, k_stop):
    """
    ``S_{kN+i}`` for ``k_start <= k < k_stop`` from a scaled solution.

    Returns values of shape ``(K,) + grid_shape``.
    """
    k = np.arange(k_start, k_stop)
    n = k * N + i
    m, l = u.mantissa, u.log_scale
    ref = np.maximum.reduce([l[n - 1], l[n], l[n + N - 1], l[n + N]])
    t1 = m[n] * m[n + N - 1] * np.exp(l[n] + l[n + N - 1] - 2 * ref)
    t2 = m[n - 1] * m[n + N] * np.exp(l[n - 1] + l[n + N] - 2 * ref)
    a = model.a_at(n + N - 1).reshape((-1,) + (1,) * (m.ndim - 1))
    with np.errstate(over="ignore"):
        return a * (t1 - t2) * np.exp(2 * ref)


@dataclass
class WindowLimit:
    """Trailing-window limit estimate of a sequence (per grid point)."""

    value: np.ndarray
    converged: np.ndarray
    k_converged: np.ndarray
    spread: np.ndarray


def window_limit(values, tol=TOL, window=WINDOW, k_offset=0):
    """
    Limit of ``values`` (axis 0) by trailing-window relative spread.

    The estimate is the entry at the first index whose trailing window of
    ``window`` values has ``(max - min) / |mean| < tol``.  Without such an
    index the mean of the final window is returned with ``converged = False``.
    """
    v = np.asarray(values, float)
    if v.shape[0] < window:
        raise ValueError(f"need at least {window} values, got {v.shape[0]}")
    win = sliding_window_view(v, window, axis=0)
    lo, hi, mean = win.min(axis=-1), win.max(axis=-1), win.mean(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        spread = (hi - lo) / np.abs(mean)
    ok = spread < tol
    conv = ok.any(axis=0)
    first = np.argmax(ok, axis=0)
    pos = first + window - 1
    hit = np.take_along_axis(v, np.expand_dims(pos, 0), axis=0)[0]
    value = np.where(conv, hit, mean[-1])
    kc = np.where(conv, pos + k_offset, -1)
    return WindowLimit(value, conv, kc, spread)


@dataclass
class TuranTrace:
    """``S_{kN+i}`` along the residue class with its Cauchy profile."""

    i: int
    k: np.ndarray
    values: np.ndarray
    alpha: tuple
    cauchy_profile: np.ndarray


def _check_elliptic(model, N, i, x, k_last, delta_min=0.0):
    X = block_stack(model, N, i, k_last, k_last + 1, np.atleast_1d(x))[0]
    disc = discriminant(X)
    if np.any(~(disc < -delta_min)):
        bad = np.atleast_1d(x)[~(disc < -delta_min)]
        raise NonEllipticError(f"x outside the elliptic region (discr = {np.max(disc):.3e})",
                               x=bad, index=k_last)
    return disc


def estimate_g(model, N, i, x, alpha=None, tol=TOL, n_max=10_000, window=WINDOW,
               check_elliptic=True):
    """
    Limit ``g = lim |S_{kN+i}|`` by trailing-window detection.

    Parameters
    ----------
    x : float or ndarray
        Grid point(s); evaluation is vectorized over ``x``.
    alpha : pair, optional
        ``(u_0, u_1)``; defaults to the polynomial pair ``(1, (x - b_0)/a_0)``.

    Returns
    -------
    g : ndarray
    converged : ndarray of bool
    trace : TuranTrace

    Raises
    ------
    NonEllipticError
        If the last sampled block is not elliptic at some grid point.
    """
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, float))
    if alpha is None:
        alpha = polynomial_alpha(model, x)
    k0 = 0 if i >= 1 else 1
    k1 = (n_max - N - i) // N + 1
    if check_elliptic:
        _check_elliptic(model, N, i, x, k1 - 1)
    u = eval_solution(model, x, alpha, n_max)
    S = turan_sequence(model, N, i, u, k0, k1)
    est = window_limit(np.abs(S), tol, window, k0)
    win = sliding_window_view(S, window, axis=0)
    profile = win.max(axis=-1) - win.min(axis=-1)
    trace = TuranTrace(i, np.arange(k0, k1), S[:, 0] if scalar else S, alpha, profile)
    g, conv = est.value, est.converged
    if scalar:
        return float(g[0]), bool(conv[0]), trace
    return g, conv, trace


def eigenvector_bounds(model, N, i, x, alpha, n_max):
    """
    Extremes of ``a_{nN+i-1} (u_{nN+i-1}^2 + u_{nN+i}^2) / (u_0^2 + u_1^2)``.

    ``x`` and the entries of ``alpha`` broadcast together; the extremes are
    taken over ``n`` for each broadcast element.

    Raises
    ------
    NonEllipticError
        If the last sampled block is not elliptic.
    """
    x = np.asarray(x, float)
    u0, u1 = (np.asarray(v, float) for v in alpha)
    x, u0, u1 = np.broadcast_arrays(x, u0, u1)
    k_last = (n_max - i) // N
    _check_elliptic(model, N, i, np.unique(x), k_last - 1)
    u = eval_solution(model, x, (u0, u1), n_max)
    k0 = 0 if i >= 1 else 1
    n = np.arange(k0, k_last + 1) * N + i
    m, l = u.mantissa, u.log_scale
    a = model.a_at(n - 1).reshape((-1,) + (1,) * x.ndim)
    with np.errstate(over="ignore"):
        ratio = a * (m[n - 1] ** 2 * np.exp(2 * l[n - 1]) + m[n] ** 2 * np.exp(2 * l[n])) \
            / (u0 ** 2 + u1 ** 2)
    return ratio.min(axis=0), ratio.max(axis=0)


def residue_limits(model, N, x, residues=None, warn_above=1e-2, **kwargs):
    """
    ``g_i`` for several residues and their worst relative spread against the first.

    A ``RuntimeWarning`` is emitted when the spread exceeds ``warn_above``;
    equality across residues is expected but not guaranteed.
    """
    residues = range(N) if residues is None else residues
    kwargs.setdefault("check_elliptic", False)
    gs = {i: estimate_g(model, N, i, x, **kwargs)[0] for i in residues}
    ref = gs[next(iter(gs))]
    spread = max(np.max(np.abs(np.asarray(g) - ref) / np.abs(ref)) for g in gs.values())
    if spread > warn_above:
        warnings.warn(f"residue limits differ by {spread:.2e}", RuntimeWarning, stacklevel=2)
    return gs, float(spread)
