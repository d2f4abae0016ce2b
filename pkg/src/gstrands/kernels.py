"""Green's functions of (1 - alpha^2 Lap) and Gram-matrix machinery.

The 1D and 3D kernels are closed-form; the 2D kernel (a modified Bessel K0
profile) is an optional extension behind the ``allow_dim2`` flag and uses the
classical 9.8.5/9.8.6 polynomial fits.  Gram solves go through a Cholesky
factorization with one fixed-order refinement sweep so repeated runs are
bitwise identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, NearCollisionError, SingularKernelError

COND_LIMIT = 1e12
SOLVE_RTOL = 1e-10

# K0 polynomial fits on (0, 2] and [2, inf); abs error < 1e-7
_K0_SMALL = (-0.57721566, 0.42278420, 0.23069756, 0.03488590,
             0.00262698, 0.00010750, 0.00000740)
_K0_LARGE = (1.25331414, -0.07832358, 0.02189568, -0.01062446,
             0.00587872, -0.00251540, 0.00053208)
_I0_SMALL = (1.0, 3.5156229, 3.0899424, 1.2067492,
             0.2659732, 0.0360768, 0.0045813)


def _poly(coeffs, x):
    out = np.zeros_like(x)
    for c in reversed(coeffs):
        out = out * x + c
    return out


def _k0(x):
    x = np.asarray(x, dtype=float)
    small = x <= 2.0
    out = np.empty_like(x)
    xs = np.where(small, x, 1.0)
    i0 = _poly(_I0_SMALL, (xs / 3.75) ** 2)
    out_s = -np.log(xs / 2.0) * i0 + _poly(_K0_SMALL, (xs / 2.0) ** 2)
    xl = np.where(small, 2.0, x)
    out_l = np.exp(-xl) / np.sqrt(xl) * _poly(_K0_LARGE, 2.0 / xl)
    out[...] = np.where(small, out_s, out_l)
    return out


@dataclass(frozen=True)
class HelmholtzKernel:
    """Green's function of (1 - alpha^2 Lap) in dimension 1, 2 (optional) or 3."""

    alpha: float
    dim: int = 1
    allow_dim2: bool = False

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise InvalidParameterError(f"alpha must be positive, got {self.alpha}")
        if self.dim not in (1, 2, 3):
            raise InvalidParameterError(f"unsupported kernel dimension {self.dim}")
        if self.dim == 2 and not self.allow_dim2:
            raise InvalidParameterError("dim=2 kernel is optional; pass allow_dim2=True")


def _separation(k, m, m_prime):
    m = np.asarray(m, dtype=float)
    m_prime = np.asarray(m_prime, dtype=float)
    if k.dim == 1:
        return np.abs(m - m_prime)
    return np.linalg.norm(m - m_prime, axis=-1)


def eval(k: HelmholtzKernel, m, m_prime):
    """G(m, m') >= 0, monotone decreasing in |m - m'|; batched."""
    r = _separation(k, m, m_prime)
    a = k.alpha
    if k.dim == 1:
        return np.exp(-r / a) / (2.0 * a)
    if np.any(r == 0.0):
        raise SingularKernelError(f"{k.dim}D kernel is singular at coincident points")
    if k.dim == 3:
        return np.exp(-r / a) / (4.0 * math.pi * a * a * r)
    return _k0(r / a) / (2.0 * math.pi * a * a)


def grad_q(k: HelmholtzKernel, q, q_prime):
    """d/dq G(q, q'); at q = q' the 1D kernel returns 0 (peakon convention)."""
    if k.dim == 1:
        q = np.asarray(q, dtype=float)
        q_prime = np.asarray(q_prime, dtype=float)
        d = q - q_prime
        a = k.alpha
        # np.sign(0) = 0 realizes the coincidence convention
        return -np.sign(d) * np.exp(-np.abs(d) / a) / (2.0 * a * a)
    if k.dim == 3:
        q = np.asarray(q, dtype=float)
        q_prime = np.asarray(q_prime, dtype=float)
        d = q - q_prime
        r = np.linalg.norm(d, axis=-1)
        if np.any(r == 0.0):
            raise SingularKernelError("3D kernel gradient is singular at coincident points")
        g = eval(k, q, q_prime)
        return (-g * (1.0 / k.alpha + 1.0 / r) / r)[..., None] * d
    raise InvalidParameterError("gradient of the 2D kernel is not provided")


@dataclass(frozen=True)
class GramSystem:
    points: np.ndarray
    matrix: np.ndarray
    cond_estimate: float


def _cond_1(mats):
    """1-norm condition number, batched; inf marks singular matrices."""
    norm = np.abs(mats).sum(axis=-2).max(axis=-1)
    try:
        inv_norm = np.abs(np.linalg.inv(mats)).sum(axis=-2).max(axis=-1)
    except np.linalg.LinAlgError:
        return np.full(mats.shape[:-2], np.inf) if mats.ndim > 2 else np.inf
    with np.errstate(over="ignore", invalid="ignore"):
        return norm * inv_norm


def gram(k: HelmholtzKernel, points) -> GramSystem:
    """Kernel matrix G(points[a], points[b]) with a 1-norm conditioning estimate."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 0:
        points = points[None]
    if points.shape[0] < 1:
        raise InvalidParameterError("gram needs at least one point")
    left = points[:, None] if k.dim == 1 else points[:, None, :]
    right = points[None, :] if k.dim == 1 else points[None, :, :]
    matrix = eval(k, left, right)
    return GramSystem(points, matrix, float(_cond_1(matrix)))


def chol_solve_batched(mats, rhs):
    """Cholesky solve of (..., n, n) systems with one refinement sweep.

    The forward/back substitutions run in a fixed loop order so the result
    does not depend on BLAS threading.
    """
    mats = np.asarray(mats, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    try:
        low = np.linalg.cholesky(mats)
    except np.linalg.LinAlgError as exc:
        raise NearCollisionError(f"Gram matrix not positive definite: {exc}") from exc

    def substitute(b):
        n = mats.shape[-1]
        y = np.zeros_like(b)
        for i in range(n):
            acc = b[..., i].copy()
            for j in range(i):
                acc -= low[..., i, j] * y[..., j]
            y[..., i] = acc / low[..., i, i]
        x = np.zeros_like(b)
        for i in range(n - 1, -1, -1):
            acc = y[..., i].copy()
            for j in range(i + 1, n):
                acc -= low[..., j, i] * x[..., j]
            x[..., i] = acc / low[..., i, i]
        return x

    x = substitute(rhs)
    resid = rhs - np.einsum("...ij,...j->...i", mats, x)
    x = x + substitute(resid)
    resid = rhs - np.einsum("...ij,...j->...i", mats, x)
    scale = np.max(np.abs(rhs)) if rhs.size else 0.0
    if np.max(np.abs(resid), initial=0.0) > SOLVE_RTOL * max(scale, 1e-300):
        raise NearCollisionError("Gram solve residual above tolerance; system near singular")
    return x


def solve_gram(g: GramSystem, rhs):
    """SPD solve of g.matrix @ x = rhs; refuses ill-conditioned systems."""
    if not np.isfinite(g.cond_estimate) or g.cond_estimate > COND_LIMIT:
        raise NearCollisionError(
            f"Gram conditioning {g.cond_estimate:.3e} exceeds {COND_LIMIT:.0e}")
    return chol_solve_batched(g.matrix, np.asarray(rhs, dtype=float))
