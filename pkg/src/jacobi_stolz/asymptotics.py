"""
Sine-law asymptotics of orthonormal polynomials on the elliptic region.

With phases ``theta_j = arg gamma_j`` from a diagonalization chain,

    sqrt(a_{nN+i-1}) p_{nN+i}(x) ~ A(x) sin(sum_{j=M+1}^{n} theta_j + eta(x)),

    A(x) = sqrt(2 |X_21(x)| / (pi nu'(x) sqrt(-h(x)))),

where ``X`` is the limit of ``X_{nN+i}``.  ``eta`` has no closed form; it is
fitted on early indices and validated out of sample.
"""

from dataclasses import dataclass

import numpy as np

from .errors import FitDegenerate, ZeroEntryError
from .jacobi_core import block_stack, eval_polynomials, tr2

ZERO_FLOOR = 1e-12
RMS_FRACTION = 0.05


def phase_sequence(chain):
    """``theta_k = arg gamma_k`` for the chain blocks ``k = M, ..., k_max``."""
    return np.angle(chain.gamma)


def cumulative_phase(chain):
    """``Phi_k = sum_{j=M+1}^{k} theta_j`` (``Phi_M = 0``) aligned with ``chain.k``."""
    th = phase_sequence(chain)
    out = np.zeros_like(th)
    out[1:] = np.cumsum(th[1:])
    return out


def amplitude(nu_prime, h, X_limit, floor=ZERO_FLOOR):
    """
    ``A = sqrt(2 |X_21| / (pi nu' sqrt(-h)))``.

    Raises
    ------
    ZeroEntryError
        If ``|X_21|`` is below ``floor``.
    ValueError
        If ``nu' <= 0`` or ``h >= 0``.
    """
    x21 = abs(np.asarray(X_limit)[..., 1, 0])
    if np.any(x21 < floor):
        raise ZeroEntryError("limit matrix has a vanishing (2, 1) entry")
    if np.any(~(np.asarray(nu_prime) > 0)) or np.any(~(np.asarray(h) < 0)):
        raise ValueError("amplitude needs nu' > 0 and h < 0")
    return np.sqrt(2 * x21 / (np.pi * nu_prime * np.sqrt(-h)))


def estimated_limit(model, N, i, x, k_last, window=32, tol=1e-6):
    """
    ``X_{k_last N + i}(x)`` as a limit estimate, with a staleness flag.

    The flag is True when the spread ``max ||X_k - X_{k_last}||`` over the
    trailing window is not below ``tol``.
    """
    k0 = max(k_last - window + 1, 0 if i >= 1 else 1)
    X = block_stack(model, N, i, k0, k_last + 1, np.array([float(x)]))[:, 0]
    spread = np.max(np.linalg.norm(X - X[-1], 2, axis=(-2, -1)))
    return X[-1], bool(spread >= tol)


def phase_limit_gap(chain, X_limit, frac=0.1):
    """Max of ``|theta_j - arccos(tr X / 2)|`` over the last ``frac`` of the chain."""
    target = np.arccos(np.clip(tr2(X_limit) / 2, -1, 1))
    th = phase_sequence(chain)
    tail = th[int(np.floor(len(th) * (1 - frac))):]
    return float(np.max(np.abs(tail - target)))


@dataclass
class SineLawFit:
    """Result of :func:`fit_sine_law` at one grid point."""

    x: float
    amplitude: float
    eta: float
    n: np.ndarray
    phases: np.ndarray
    observed: np.ndarray
    residuals: np.ndarray
    n_fit: int
    tail_rms: float
    ok: bool
    stale_limit: bool = False

    @property
    def tail_residuals(self):
        return self.residuals[self.n_fit:]


def fit_sine_law(model, N, i, x, chain, nu_prime, h, n_range=None, X_limit=None,
                 rms_fraction=RMS_FRACTION):
    """
    Fit ``eta`` and validate the sine law over block indices ``n_range``.

    Parameters
    ----------
    chain : DiagChain
        Built at ``x`` for residue ``i``; supplies ``M`` and the phases.
    nu_prime, h : float
        Density and limit discriminant at ``x``.
    n_range : (int, int), optional
        Inclusive block range, clipped to ``[M, chain.k_max]``.
    X_limit : ndarray, optional
        Limit matrix; estimated from the last chain block when omitted.

    Notes
    -----
    ``eta`` comes from linear least squares of the observations on
    ``(sin Phi, cos Phi)`` over the first quarter of the range and is
    normalized to ``[0, 2 pi)``.  Residuals use the fixed amplitude.

    Raises
    ------
    FitDegenerate
        If the design matrix is rank deficient.
    """
    lo, hi = (chain.M, chain.k_max) if n_range is None else n_range
    lo, hi = max(lo, chain.M), min(hi, chain.k_max)
    if hi - lo < 8:
        raise ValueError("range too short for a fit")
    stale = False
    if X_limit is None:
        X_limit, stale = estimated_limit(model, N, i, x, chain.k_max)
    A = float(amplitude(nu_prime, h, X_limit))
    n = np.arange(lo, hi + 1)
    idx = n * N + i
    p = eval_polynomials(model, float(x), int(idx[-1])).values()
    y = np.sqrt(model.a_at(idx - 1)) * p[idx]
    phi = cumulative_phase(chain)[n - chain.M]
    n_fit = max((hi - lo + 1) // 4, 2)
    design = np.column_stack([np.sin(phi[:n_fit]), np.cos(phi[:n_fit])])
    coef, _, rank, sv = np.linalg.lstsq(design, y[:n_fit], rcond=None)
    if rank < 2 or sv[-1] < 1e-10 * sv[0]:
        raise FitDegenerate(f"design matrix rank deficient at x={x}")
    eta = float(np.mod(np.arctan2(coef[1], coef[0]), 2 * np.pi))
    resid = np.abs(y - A * np.sin(phi + eta))
    tail = resid[n_fit:]
    rms = float(np.sqrt(np.mean(tail ** 2)))
    return SineLawFit(float(x), A, eta, n, phi, y, resid, n_fit, rms,
                      bool(rms < rms_fraction * A), stale)
