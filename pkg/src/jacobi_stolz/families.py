"""
Bundled coefficient families and their limit transfer matrices.

Kinds
-----
constant
    ``a_n = alpha[n mod N]``, ``b_n = beta[n mod N]`` (the free Jacobi matrix
    for ``alpha = (1,)``, ``beta = (0,)``).
asymptotically_periodic
    periodic background plus a decaying (optionally oscillating) perturbation
    ``amp * cos((n+1)**gamma) / (n+1)**kappa``.
periodic_modulation
    ``a_n = alpha[n mod N] * (n+1)**tau``, ``b_n = beta[n mod N] * (n+1)**tau``.
blend
    ``N`` bounded slots followed by two unbounded slots ``c_k = (k+1)**tau``
    per block of length ``N + 2``.
intro_oscillation
    ``a_n = 1``, ``b_n = cos(n**gamma) / log(n + 2)``.
custom
    ``a`` and ``b`` given as numpy expressions in ``n``.
"""

from dataclasses import dataclass, field, asdict

import numpy as np

from .jacobi_core import CoefficientModel

KINDS = ("constant", "asymptotically_periodic", "periodic_modulation",
         "blend", "intro_oscillation", "custom")

_EXPR_NAMESPACE = {
    "np": np, "cos": np.cos, "sin": np.sin, "log": np.log, "exp": np.exp,
    "sqrt": np.sqrt, "abs": np.abs, "pi": np.pi, "where": np.where,
}


@dataclass(frozen=True)
class FamilySpec:
    """Parameters of a bundled family; unused fields are ignored per kind."""

    kind: str = "constant"
    N: int = 1
    alpha: tuple = (1.0,)
    beta: tuple = (0.0,)
    gamma: float = 0.5
    tau: float = 0.5
    amp_a: float = 0.0
    amp_b: float = 0.0
    kappa: float = 1.0
    a_expr: str = "1 + 0*n"
    b_expr: str = "0*n"
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(v) for v in np.atleast_1d(self.alpha)))
        object.__setattr__(self, "beta", tuple(float(v) for v in np.atleast_1d(self.beta)))

    @property
    def period(self):
        """Effective period of the transfer-matrix sequence."""
        if self.kind == "blend":
            return self.N + 2
        if self.kind == "intro_oscillation":
            return 1
        return self.N

    def as_dict(self):
        d = asdict(self)
        d.pop("extra")
        d["alpha"] = list(self.alpha)
        d["beta"] = list(self.beta)
        return d


def _validate(spec):
    if spec.kind not in KINDS:
        raise ValueError(f"unknown family kind {spec.kind!r}")
    if spec.N < 1:
        raise ValueError("N must be a positive integer")
    if spec.kind in ("constant", "asymptotically_periodic", "periodic_modulation", "blend"):
        if len(spec.alpha) != spec.N or len(spec.beta) != spec.N:
            raise ValueError("alpha and beta must have length N")
        if min(spec.alpha) <= 0:
            raise ValueError("alpha must be positive")
    if spec.kind == "intro_oscillation" and not 0 < spec.gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    if spec.kind in ("periodic_modulation", "blend") and not 0 < spec.tau <= 1:
        raise ValueError("tau must lie in (0, 1]")
    if spec.kind == "asymptotically_periodic" and spec.kappa <= 0:
        raise ValueError("kappa must be positive")


def _perturbation(n, amp, kappa, gamma):
    m = n + 1.0
    if gamma > 0:
        return amp * np.cos(m ** gamma) / m ** kappa
    return amp / m ** kappa


def _eval_expr(src, n):
    # no builtins: only numpy helpers and n are visible
    return eval(src, {"__builtins__": {}}, {**_EXPR_NAMESPACE, "n": np.asarray(n, float)})


def make_family(spec):
    """Build the :class:`CoefficientModel` described by ``spec``."""
    _validate(spec)
    N = spec.N
    alpha = np.array(spec.alpha)
    beta = np.array(spec.beta)
    kind = spec.kind
    meta = {"kind": kind, **spec.as_dict()}

    if kind == "constant":
        a = lambda n: alpha[n % N]
        b = lambda n: beta[n % N]
    elif kind == "asymptotically_periodic":
        a = lambda n: alpha[n % N] + _perturbation(n, spec.amp_a, spec.kappa, spec.gamma)
        b = lambda n: beta[n % N] + _perturbation(n, spec.amp_b, spec.kappa, spec.gamma)
    elif kind == "periodic_modulation":
        a = lambda n: alpha[n % N] * (n + 1.0) ** spec.tau
        b = lambda n: beta[n % N] * (n + 1.0) ** spec.tau
    elif kind == "blend":
        a, b = _blend_coefficients(spec)
    elif kind == "intro_oscillation":
        g = spec.gamma
        a = lambda n: np.ones(np.shape(n))
        b = lambda n: np.cos(np.asarray(n, float) ** g) / np.log(n + 2.0)
    else:
        a_src, b_src = spec.a_expr, spec.b_expr
        a = lambda n: _eval_expr(a_src, n)
        b = lambda n: _eval_expr(b_src, n)

    return CoefficientModel(a=a, b=b, period_N=spec.period, label=kind, meta=meta)


def _blend_coefficients(spec):
    """Interleave bounded and unbounded slots with period ``N + 2``."""
    N = spec.N
    alpha = np.array(spec.alpha)
    beta = np.array(spec.beta)
    P = N + 2

    def atilde(m):
        return alpha[m % N] + _perturbation(m, spec.amp_a, spec.kappa, spec.gamma)

    def btilde(m):
        return beta[m % N] + _perturbation(m, spec.amp_b, spec.kappa, spec.gamma)

    def ctilde(m):
        return (m + 1.0) ** spec.tau

    def a(n):
        n = np.asarray(n)
        k, i = np.divmod(n, P)
        bounded = i < N
        m_b = np.where(bounded, k * N + i, 0)
        m_c = np.where(bounded, 0, 2 * k + i - N)
        return np.where(bounded, atilde(m_b), ctilde(m_c))

    def b(n):
        n = np.asarray(n)
        k, i = np.divmod(n, P)
        bounded = i < N
        m_b = np.where(bounded, k * N + i, 0)
        return np.where(bounded, btilde(m_b), 0.0)

    return a, b


def _periodic_B(alpha, beta, j, x):
    N = len(alpha)
    out = np.zeros(np.shape(x) + (2, 2))
    out[..., 0, 1] = 1.0
    out[..., 1, 0] = -alpha[(j - 1) % N] / alpha[j % N]
    out[..., 1, 1] = (x - beta[j % N]) / alpha[j % N]
    return out


def _ordered_product(mats, shape):
    """``mats[-1] @ ... @ mats[0]``; identity for an empty list."""
    out = np.broadcast_to(np.eye(2), shape + (2, 2)).copy()
    for m in mats:
        out = m @ out
    return out


def limit_matrix(spec, i, x):
    """
    Closed-form limit of ``X_{nP+i}(x)`` where ``P`` is the family period.

    For the modulated kind the limit does not depend on ``x`` and equals the
    periodic product evaluated at ``0``.  The blend kind accepts residues
    ``1 <= i <= N``.
    """
    _validate(spec)
    x = np.asarray(x, float)
    alpha = np.array(spec.alpha)
    beta = np.array(spec.beta)
    N = spec.N
    kind = spec.kind
    if kind in ("constant", "asymptotically_periodic", "periodic_modulation"):
        if not 0 <= i < N:
            raise ValueError("residue out of range")
        xe = np.zeros_like(x) if kind == "periodic_modulation" else x
        return _ordered_product([_periodic_B(alpha, beta, j, xe) for j in range(i, N + i)], x.shape)
    if kind == "intro_oscillation":
        return _periodic_B(np.array([1.0]), np.array([0.0]), 0, x)
    if kind == "blend":
        if not 1 <= i <= N:
            raise ValueError("blend residues are 1..N")
        C = np.zeros(x.shape + (2, 2))
        C[..., 0, 1] = -1.0
        C[..., 1, 0] = alpha[N - 1] / alpha[0]
        C[..., 1, 1] = -(2.0 * x - beta[0]) / alpha[0]
        right = _ordered_product([_periodic_B(alpha, beta, j, x) for j in range(i, N)], x.shape)
        left = _ordered_product([_periodic_B(alpha, beta, j, x) for j in range(1, i)], x.shape)
        return left @ C @ right
    raise ValueError(f"no closed-form limit for kind {kind!r}")
