"""
Coefficient models, transfer matrices and three-term recurrences.

A Jacobi matrix is described by its off-diagonal ``a_n > 0`` and diagonal
``b_n``.  Generalized eigenvectors satisfy

    a_{n-1} u_{n-1} + b_n u_n + a_n u_{n+1} = x u_n,   n >= 1,

which is advanced by the transfer matrices

    B_n(x) = [[0, 1], [-a_{n-1}/a_n, (x - b_n)/a_n]].

All 2x2 matrices are plain ``numpy`` arrays whose last two axes have shape
``(2, 2)``; leading axes are batch axes (grid points, indices).
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# Renormalization window for eigenvector pairs; far from float overflow.
SCALE_HI = 2.0 ** 512
SCALE_LO = 2.0 ** -512

#: The symplectic matrix ``[[0, -1], [1, 0]]``.
E = np.array([[0.0, -1.0], [1.0, 0.0]])


# ---------------------------------------------------------------------------
# 2x2 helpers (batched over leading axes)
# ---------------------------------------------------------------------------

def det2(m):
    m = np.asarray(m)
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def tr2(m):
    m = np.asarray(m)
    return m[..., 0, 0] + m[..., 1, 1]


def discriminant(m):
    """Return ``tr(m)**2 - 4 det(m)`` computed from the entries."""
    return tr2(m) ** 2 - 4.0 * det2(m)


def inv2(m):
    m = np.asarray(m)
    out = np.empty_like(m)
    d = det2(m)
    out[..., 0, 0] = m[..., 1, 1] / d
    out[..., 0, 1] = -m[..., 0, 1] / d
    out[..., 1, 0] = -m[..., 1, 0] / d
    out[..., 1, 1] = m[..., 0, 0] / d
    return out


def opnorm(m):
    """Spectral norm of each 2x2 matrix in a batch."""
    m = np.asarray(m)
    return np.linalg.norm(m, ord=2, axis=(-2, -1))


# ---------------------------------------------------------------------------
# Coefficient models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientModel:
    """
    Recurrence coefficients given as vectorized functions of the index.

    Parameters
    ----------
    a, b : callable
        Functions mapping an integer ``numpy`` array ``n`` to ``a_n`` and
        ``b_n`` (arrays of the same shape).  ``a`` must be positive.
    period_N : int
        Period of the modulation the family is built around.
    label : str
        Free-form identifier used in reports.
    meta : dict
        Family metadata (kind and parameters) when built by
        :func:`jacobi_stolz.families.make_family`.
    """

    a: Callable
    b: Callable
    period_N: int = 1
    label: str = "custom"
    meta: dict = field(default_factory=dict, compare=False)

    def a_at(self, n):
        n = np.asarray(n)
        if np.any(n < 0):
            raise IndexError("coefficient index must be non-negative")
        vals = np.broadcast_to(np.asarray(self.a(n), dtype=float), n.shape)
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise ValueError(f"{self.label}: a_n must be positive and finite")
        return vals

    def b_at(self, n):
        n = np.asarray(n)
        if np.any(n < 0):
            raise IndexError("coefficient index must be non-negative")
        vals = np.broadcast_to(np.asarray(self.b(n), dtype=float), n.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"{self.label}: b_n must be finite")
        return vals

    def coefficients(self, stop, start=0):
        """Arrays ``a[start:stop]`` and ``b[start:stop]``."""
        n = np.arange(start, stop)
        return np.array(self.a_at(n)), np.array(self.b_at(n))

    @classmethod
    def from_arrays(cls, a, b, period_N=1, label="array"):
        """Adapter for tabulated coefficients; indexing past the end raises."""
        a = np.asarray(a, dtype=float).copy()
        b = np.asarray(b, dtype=float).copy()
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("a and b must be 1-D arrays of equal length")
        return cls(a=lambda n: a[n], b=lambda n: b[n], period_N=period_N, label=label)


# ---------------------------------------------------------------------------
# Transfer matrices
# ---------------------------------------------------------------------------

def _transfer_from(a_prev, a_cur, b_cur, x):
    """Batched ``B`` from coefficient arrays; result shape ``broadcast + (2, 2)``."""
    a_prev, a_cur, b_cur, x = np.broadcast_arrays(
        np.asarray(a_prev, float), np.asarray(a_cur, float),
        np.asarray(b_cur, float), np.asarray(x, float))
    out = np.zeros(a_cur.shape + (2, 2))
    out[..., 0, 1] = 1.0
    out[..., 1, 0] = -a_prev / a_cur
    out[..., 1, 1] = (x - b_cur) / a_cur
    return out


def transfer(model, n, x):
    """Transfer matrix ``B_n(x)``; ``x`` may be an array of grid points."""
    if n < 1:
        raise ValueError("B_n is defined for n >= 1")
    a = model.a_at(np.array([n - 1, n]))
    b = model.b_at(n)
    return _transfer_from(a[0], a[1], b, x)


def transfer_stack(model, n_start, n_stop, x):
    """
    ``B_n(x)`` for ``n_start <= n < n_stop`` and every grid point.

    Returns an array of shape ``(n_stop - n_start, len(x), 2, 2)``.
    """
    if n_start < 1:
        raise ValueError("B_n is defined for n >= 1")
    x = np.atleast_1d(np.asarray(x, float))
    a, b = model.coefficients(n_stop, n_start - 1)
    return _transfer_from(a[:-1, None], a[1:, None], b[1:, None], x[None, :])


def n_step(model, n, N, x):
    """Ordered product ``X_n = B_{n+N-1} ... B_n`` (largest index on the left)."""
    if n < 1:
        raise ValueError("X_n is defined for n >= 1")
    scalar = np.ndim(x) == 0
    bs = transfer_stack(model, n, n + N, x)
    out = bs[0]
    for j in range(1, N):
        out = bs[j] @ out
    return out[0] if scalar else out


def block_stack(model, N, i, k_start, k_stop, x):
    """
    ``X_{kN+i}(x)`` for ``k_start <= k < k_stop``.

    Shape ``(k_stop - k_start, len(x), 2, 2)``.  Requires ``k_start*N + i >= 1``.
    """
    n0 = k_start * N + i
    n1 = k_stop * N + i
    bs = transfer_stack(model, n0, n1, x)
    K = k_stop - k_start
    bs = bs.reshape((K, N) + bs.shape[1:])
    out = bs[:, 0]
    for j in range(1, N):
        out = bs[:, j] @ out
    return out


# ---------------------------------------------------------------------------
# Scaled recurrences
# ---------------------------------------------------------------------------

@dataclass
class ScaledSequence:
    """
    Sequence values stored as ``mantissa * exp(log_scale)``.

    ``mantissa`` and ``log_scale`` have shape ``(n_max + 1,) + grid_shape``.
    """

    mantissa: np.ndarray
    log_scale: np.ndarray

    def values(self):
        return self.mantissa * np.exp(self.log_scale)

    def __len__(self):
        return self.mantissa.shape[0]

    def rebased(self, idx):
        """
        Entries ``idx`` expressed at a common scale.

        Returns ``(mantissas, log_scale)`` with mantissas shaped
        ``(len(idx),) + grid_shape``.
        """
        idx = np.asarray(idx)
        ls = self.log_scale[idx]
        ref = ls.max(axis=0)
        shift = ls - ref
        if np.any(shift < -700.0):
            raise ValueError("scaling mismatch: entries differ by more than exp(700)")
        return self.mantissa[idx] * np.exp(shift), ref


def eval_solution(model, x, alpha, n_max):
    """
    Generalized eigenvector ``u_0, ..., u_{n_max}`` with ``(u_0, u_1) = alpha``.

    ``alpha`` entries broadcast against ``x``.  Scaling is handled as in
    :func:`eval_polynomials`.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    x = np.asarray(x, float)
    u0, u1 = (np.asarray(v, float) for v in alpha)
    x, u0, u1 = np.broadcast_arrays(x, u0, u1)
    if np.any((u0 == 0) & (u1 == 0)):
        raise ValueError("(u_0, u_1) must be non-zero")
    shape = x.shape
    x = x.reshape(-1)
    mant = np.empty((n_max + 1, x.size))
    logs = np.zeros((n_max + 1, x.size))
    mant[0] = u0.reshape(-1)
    mant[1] = u1.reshape(-1)
    a, b = model.coefficients(n_max)
    prev, cur = mant[0].copy(), mant[1].copy()
    ls = np.zeros(x.size)
    for n in range(1, n_max):
        nxt = ((x - b[n]) * cur - a[n - 1] * prev) / a[n]
        prev, cur = cur, nxt
        nrm = np.hypot(prev, cur)
        bad = (nrm > SCALE_HI) | (nrm < SCALE_LO)
        if bad.any():
            prev = np.where(bad, prev / nrm, prev)
            cur = np.where(bad, cur / nrm, cur)
            ls = np.where(bad, ls + np.log(nrm), ls)
            # the stored previous entry must share the new scale
            mant[n] = np.where(bad, prev, mant[n])
            logs[n] = ls
        mant[n + 1] = cur
        logs[n + 1] = ls
    return ScaledSequence(mant.reshape((n_max + 1,) + shape), logs.reshape((n_max + 1,) + shape))


def eval_polynomials(model, x, n_max):
    """
    Orthonormal polynomials ``p_0(x), ..., p_{n_max}(x)`` with a scaling ledger.

    ``p_0 = 1``, ``p_1 = (x - b_0)/a_0`` and the three-term recurrence
    afterwards.  Whenever the pair ``(p_{n-1}, p_n)`` leaves the window
    ``[2**-512, 2**512]`` in Euclidean norm it is renormalized to unit norm
    and the factor is folded into ``log_scale``.

    Parameters
    ----------
    model : CoefficientModel
    x : float or array_like
        Evaluation point(s).
    n_max : int
        Highest degree, ``n_max >= 0``.

    Returns
    -------
    ScaledSequence
        Shape ``(n_max + 1,)`` for scalar ``x``, else ``(n_max + 1,) + x.shape``.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    x = np.asarray(x, float)
    if n_max == 0:
        return ScaledSequence(np.ones((1,) + x.shape), np.zeros((1,) + x.shape))
    a0, b0 = model.coefficients(1)
    return eval_solution(model, x, (np.ones_like(x), (x - b0[0]) / a0[0]), n_max)


def polynomial_alpha(model, x):
    """Initial pair ``(p_0, p_1) = (1, (x - b_0)/a_0)``."""
    x = np.asarray(x, float)
    a0, b0 = model.coefficients(1)
    return np.ones_like(x), (x - b0[0]) / a0[0]


@dataclass
class EigenvectorState:
    """
    Pair ``(u_{n-1}, u_n)`` of a generalized eigenvector with a log scale.

    The unscaled pair is ``exp(log_scale) * (u_prev, u_cur)``.  Fields may be
    scalars or arrays over a grid of ``x`` values.
    """

    n: int
    u_prev: np.ndarray
    u_cur: np.ndarray
    log_scale: np.ndarray = 0.0

    def __post_init__(self):
        self.u_prev = np.asarray(self.u_prev, float)
        self.u_cur = np.asarray(self.u_cur, float)
        self.log_scale = np.asarray(self.log_scale, float)
        if np.any((self.u_prev == 0) & (self.u_cur == 0)):
            raise ValueError("(u_prev, u_cur) must be non-zero")

    @classmethod
    def initial(cls, alpha):
        """State at ``n = 1`` holding ``(u_0, u_1) = alpha``."""
        u0, u1 = alpha
        return cls(1, u0, u1, 0.0)

    def unscaled(self):
        f = np.exp(self.log_scale)
        return self.u_prev * f, self.u_cur * f


def propagate(model, state, x, steps):
    """
    Apply ``steps`` transfer matrices to an eigenvector state.

    Returns a new state at index ``state.n + steps``.
    """
    if steps == 0:
        return EigenvectorState(state.n, state.u_prev.copy(), state.u_cur.copy(),
                                state.log_scale.copy())
    x = np.asarray(x, float)
    a, b = model.coefficients(state.n + steps, state.n - 1)
    prev, cur = np.broadcast_arrays(state.u_prev, state.u_cur)
    prev, cur = prev.astype(float), cur.astype(float)
    ls = np.broadcast_to(state.log_scale, prev.shape).astype(float)
    for j in range(steps):
        nxt = ((x - b[j + 1]) * cur - a[j] * prev) / a[j + 1]
        prev, cur = cur, nxt
        nrm = np.hypot(prev, cur)
        bad = (nrm > SCALE_HI) | (nrm < SCALE_LO)
        if np.any(bad):
            prev = np.where(bad, prev / nrm, prev)
            cur = np.where(bad, cur / nrm, cur)
            ls = np.where(bad, ls + np.log(nrm), ls)
    return EigenvectorState(state.n + steps, prev, cur, ls)


def wronskian(model, n, u, v):
    """``a_n (u_n v_{n+1} - u_{n+1} v_n)`` for plain (unscaled) sequences."""
    return model.a_at(n) * (u[n] * v[n + 1] - u[n + 1] * v[n])
