"""
Iterated uniform diagonalization of N-step transfer matrices.

For a block index ``k`` write ``X_k = X_{kN+i}(x)``.  Level 0 diagonalizes each
``X_k`` directly, ``X_k = C_{k,0} D_{k,0} C_{k,0}^{-1}``.  Level ``l >= 1``
diagonalizes the defect matrix

    W_{k,l} = D_{k,l-1} C_{k,l-1}^{-1} C_{k-1,l-1} = C_{k,l} D_{k,l} C_{k,l}^{-1}

with ``C_{k,l} = [[1, conj(v)], [v, 1]]`` and ``D_{k,l} = diag(gamma, conj(gamma))``.
After ``r - 1`` refinements, for ``M + 1 <= m <= n``

    X_n ... X_m = Q_n (prod_j D_j C_j^{-1} C_{j-1}) Q_{m-1}^{-1},

where ``Q_k = C_{k,0} C_{k,1} ... C_{k,r-1}`` and ``D, C`` are the last level.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRefinement, NonEllipticError
from .jacobi_core import block_stack, discriminant, tr2

DELTA_MIN = 1e-9
DELTA_GUARD = 1e-6

_SIGMA = np.array([[0.0, 1.0], [1.0, 0.0]])


def _cinv2(m):
    out = np.empty_like(m)
    d = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    out[..., 0, 0] = m[..., 1, 1] / d
    out[..., 0, 1] = -m[..., 0, 1] / d
    out[..., 1, 0] = -m[..., 1, 0] / d
    out[..., 1, 1] = m[..., 0, 0] / d
    return out


def _diag(z):
    out = np.zeros(np.shape(z) + (2, 2), dtype=complex)
    out[..., 0, 0] = z
    out[..., 1, 1] = np.conj(z)
    return out


def principal_eigen(X, delta_min=DELTA_MIN):
    """
    Upper eigenvalue and eigenvector matrix of an elliptic real 2x2 matrix.

    Parameters
    ----------
    X : array_like, shape (..., 2, 2)
        Real matrices with ``discr X < -delta_min``.
    delta_min : float
        Ellipticity floor.

    Returns
    -------
    lam : complex ndarray
        ``tr X / 2 + (i/2) sqrt(-discr X)``.
    C0 : complex ndarray, shape (..., 2, 2)
        ``[[1, 1], [lam, conj(lam)]]`` so that ``X = C0 diag(lam, conj(lam)) C0^{-1}``.

    Raises
    ------
    NonEllipticError
        If some discriminant is not below ``-delta_min``.
    """
    X = np.asarray(X, float)
    disc = discriminant(X)
    if np.any(~(disc < -delta_min)):
        raise NonEllipticError(f"discriminant {np.max(disc):.3e} is not below -{delta_min:g}")
    lam = tr2(X) / 2 + 0.5j * np.sqrt(-disc)
    C0 = np.ones(np.shape(lam) + (2, 2), dtype=complex)
    C0[..., 1, 0] = lam
    C0[..., 1, 1] = np.conj(lam)
    return lam, C0


def _refine(D, C_cur, C_prev, delta):
    """Vectorized refinement; returns ``(gamma, Y, bad)`` without raising."""
    W = np.asarray(D) @ _cinv2(np.asarray(C_cur)) @ np.asarray(C_prev)
    tr = (W[..., 0, 0] + W[..., 1, 1]).real
    det = (W[..., 0, 0] * W[..., 1, 1] - W[..., 0, 1] * W[..., 1, 0]).real
    disc = tr * tr - 4.0 * det
    with np.errstate(invalid="ignore"):
        gamma = tr / 2 + 0.5j * np.sqrt(-disc)
        denom = (W[..., 0, 0] + gamma).imag
        bad = ~(disc < 0) | ~(np.abs(denom) >= delta)
        v = -1j * W[..., 1, 0] / np.where(bad, 1.0, denom)
    Y = np.ones(np.shape(gamma) + (2, 2), dtype=complex)
    Y[..., 0, 1] = np.conj(v)
    Y[..., 1, 0] = v
    return gamma, Y, bad


def refine_step(D, C_cur, C_prev, delta=DELTA_GUARD):
    """
    One refinement: diagonalize ``W = D C_cur^{-1} C_prev``.

    ``W`` is of the form ``[[w, z], [conj(z), conj(w)]]`` so its trace and
    discriminant are real; the imaginary parts left by rounding are dropped.

    Returns
    -------
    gamma : complex ndarray
        Eigenvalue of ``W`` with positive imaginary part.
    Y : complex ndarray, shape (..., 2, 2)
        ``[[1, conj(v)], [v, 1]]`` with ``v = -i w21 / Im(w11 + gamma)``.

    Raises
    ------
    DegenerateRefinement
        If ``W`` is not elliptic or ``|Im(w11 + gamma)| < delta``.
    """
    gamma, Y, bad = _refine(D, C_cur, C_prev, delta)
    if np.any(bad):
        raise DegenerateRefinement(f"refinement guard failed (delta={delta:g})")
    return gamma, Y


@dataclass
class DiagChain:
    """
    Diagonalization data for one grid point and residue.

    Arrays are aligned with ``k = arange(M, k_max + 1)``.  ``levels[l]`` holds
    ``C_{k,l}`` for ``k >= M0 + l`` (aligned with ``k_levels[l]``), where
    ``M0 = M - (r - 1)``.
    """

    x: float
    N: int
    i: int
    r: int
    M: int
    k: np.ndarray
    gamma: np.ndarray
    lam: np.ndarray
    Q: np.ndarray
    C: np.ndarray
    D: np.ndarray
    levels: list
    k_levels: list

    def _pos(self, kk):
        p = np.asarray(kk) - self.M
        if np.any(p < 0) or np.any(p >= len(self.k)):
            raise IndexError(f"block index outside chain range [{self.M}, {self.k[-1]}]")
        return p

    def gamma_at(self, kk):
        return self.gamma[self._pos(kk)]

    def Q_at(self, kk):
        return self.Q[self._pos(kk)]

    @property
    def k_max(self):
        return int(self.k[-1])


def _levels(X, r, delta_min, delta):
    """All levels over the full block range; ``bad[l]`` flags failures per block."""
    disc = discriminant(X)
    ell = disc < -delta_min
    Xs = np.where(ell[:, None, None], X, np.array([[0.0, 1.0], [-1.0, 0.0]]))
    lam, C = principal_eigen(Xs, delta_min)
    D = _diag(lam)
    Cs, gammas, bads = [C], [lam], [~ell]
    for lev in range(1, r):
        gamma, C, bad = _refine(D[1:], C[1:], C[:-1], delta)
        bad |= bads[-1][1:] | bads[-1][:-1]
        D = _diag(gamma)
        Cs.append(C)
        gammas.append(gamma)
        bads.append(bad)
    return lam, Cs, gammas, bads


def build_chain(model, N, i, r, x, M_hint=None, n_max=10_000,
                delta_min=DELTA_MIN, delta=DELTA_GUARD):
    """
    Run ``r - 1`` refinement levels over blocks ``X_{kN+i}(x)``.

    Blocks ``k`` with ``1 <= kN + i <= n_max`` are sampled.  The level-0 start
    ``M0`` is the smallest block such that, over the whole sampled tail, every
    discriminant is below ``-delta_min`` and every refinement level passes its
    guard (raised to ``M_hint`` if given).  The chain starts at
    ``M = M0 + r - 1``, the first block carrying all levels.

    Raises
    ------
    NonEllipticError
        If the end of the sampled range is not elliptic.
    DegenerateRefinement
        With ``level`` and ``index`` (block) set, when a refinement fails at
        the end of the sampled range.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if not 0 <= i < N:
        raise ValueError("residue must satisfy 0 <= i < N")
    x = float(x)
    k0 = 0 if i >= 1 else 1
    k_max = (n_max - i) // N
    if k_max - k0 < r:
        raise ValueError("n_max too small for the requested depth")
    X = block_stack(model, N, i, k0, k_max + 1, np.array([x]))[:, 0]
    lam, Cs, gammas, bads = _levels(X, r, delta_min, delta)
    if bads[0][-1]:
        raise NonEllipticError("discriminant is not negative at the end of the sampled range",
                               x=x, index=k_max)
    M0 = k0
    for lev, bad in enumerate(bads):
        hit = np.nonzero(bad)[0]
        if hit.size == 0:
            continue
        k_bad = k0 + lev + int(hit[-1])
        if k_bad == k_max:
            raise DegenerateRefinement("refinement fails at the end of the sampled range",
                                       level=lev, index=k_bad)
        M0 = max(M0, k_bad - lev + 1)
    if M_hint is not None:
        M0 = max(M0, int(M_hint))
    M = M0 + r - 1
    if k_max - M < 1:
        raise NonEllipticError("elliptic tail too short for the requested depth", x=x)
    # level l arrays start at block k0 + l; realign to M0 + l
    levels = [Cs[lev][M0 - k0:] for lev in range(r)]
    k_levels = [np.arange(M0 + lev, k_max + 1) for lev in range(r)]
    Q = levels[0][r - 1:]
    for lev in range(1, r):
        Q = Q @ levels[lev][r - 1 - lev:]
    gamma = gammas[-1][M - (k0 + r - 1):]
    return DiagChain(x=x, N=N, i=i, r=r, M=M, k=np.arange(M, k_max + 1),
                     gamma=gamma, lam=lam[M - k0:], Q=Q, C=levels[-1], D=_diag(gamma),
                     levels=levels, k_levels=k_levels)


@dataclass
class ReconstructionError:
    """Deviation of the factorized product from the direct one over ``span``."""

    span: tuple
    max_norm_deviation: float
    relative_deviation: float


def _direct_and_factored(chain, model, m, n):
    X = block_stack(model, chain.N, chain.i, m, n + 1, np.array([chain.x]))[:, 0]
    pm = chain._pos(np.arange(m, n + 1))
    steps = chain.D[pm] @ _cinv2(chain.C[pm]) @ chain.C[pm - 1]
    return X, steps


def reconstruct_check(chain, model, m, n):
    """
    Compare ``X_n ... X_m`` with ``Q_n (prod D_j C_j^{-1} C_{j-1}) Q_{m-1}^{-1}``.

    Both products are accumulated with a shared running scale so long spans
    cannot overflow.  ``m = n + 1`` is the empty product and gives zero.

    Returns
    -------
    ReconstructionError
        ``max_norm_deviation`` is the spectral norm of the difference at the
        common scale and ``relative_deviation`` divides by the norm of the
        direct product.
    """
    if m == n + 1:
        return ReconstructionError((m, n), 0.0, 0.0)
    if m < chain.M + 1 or n > chain.k_max or m > n:
        raise IndexError(f"span ({m}, {n}) outside [{chain.M + 1}, {chain.k_max}]")
    X, steps = _direct_and_factored(chain, model, m, n)
    direct = np.eye(2, dtype=complex)
    fact = np.eye(2, dtype=complex)
    log_scale = 0.0
    for j in range(n - m + 1):
        direct = X[j] @ direct
        fact = steps[j] @ fact
        s = np.linalg.norm(direct, 2)
        if s > 1e100 or s < 1e-100:
            direct /= s
            fact /= s
            log_scale += np.log(s)
    fact = chain.Q_at(n) @ fact @ _cinv2(chain.Q_at(m - 1))
    dev = float(np.linalg.norm(direct - fact, 2))
    ref = float(np.linalg.norm(direct, 2))
    return ReconstructionError((m, n), dev * np.exp(log_scale), dev / ref)


def reconstruct_sweep(chain, model, m, n_stop):
    """
    Worst relative deviation over every span ``(m, n)`` with ``m <= n < n_stop``.

    Single pass: both running products are extended one block at a time.
    """
    n_stop = min(n_stop, chain.k_max + 1)
    if m < chain.M + 1 or m >= n_stop:
        raise IndexError("empty or invalid sweep range")
    X, steps = _direct_and_factored(chain, model, m, n_stop - 1)
    Qinv = _cinv2(chain.Q_at(m - 1))
    Qs = chain.Q_at(np.arange(m, n_stop))
    direct = np.eye(2, dtype=complex)
    fact = np.eye(2, dtype=complex)
    worst = 0.0
    for j in range(n_stop - m):
        direct = X[j] @ direct
        fact = steps[j] @ fact
        s = np.linalg.norm(direct, 2)
        diff = direct - Qs[j] @ fact @ Qinv
        worst = max(worst, float(np.linalg.norm(diff, 2) / s))
        direct /= s
        fact /= s
    return worst


def sigma_symmetry_defect(Y):
    """Entrywise ``max |sigma Y sigma - conj(Y)|``."""
    return float(np.max(np.abs(_SIGMA @ Y @ _SIGMA - np.conj(Y))))
