"""Finite-dimensional Lie algebra arithmetic.

Algebra elements (and dual elements, identified through the pairing kappa)
are plain coordinate arrays of length ``dim``.  Operations accept batched
arrays with the coordinate axis last, so a strand field of shape
``(n_s, dim)`` goes through ``bracket``/``ad_star`` in one call.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, UnsupportedAlgebraError

JACOBI_TOL = 1e-12


@dataclass(frozen=True)
class LieAlgebraSpec:
    """Structure constants and pairing of a finite-dimensional Lie algebra.

    c[k, i, j] is the coefficient of e_k in [e_i, e_j].  kappa is a symmetric
    positive-definite matrix identifying the dual with the algebra; all
    builtins use kappa = identity in their documented basis.
    ``basis_matrices``, when present, is a faithful matrix representation
    (stacked along axis 0) used for group reconstruction.
    """

    dim: int
    c: np.ndarray
    kappa: np.ndarray
    name: str = ""
    basis_matrices: np.ndarray | None = None
    kappa_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        kappa = np.asarray(self.kappa, dtype=float)
        if c.shape != (self.dim,) * 3:
            raise DimensionMismatchError(
                f"structure constants must have shape {(self.dim,) * 3}, got {c.shape}")
        if not np.array_equal(c, -np.swapaxes(c, 1, 2)):
            raise DimensionMismatchError("structure constants must be antisymmetric in (i, j)")
        if kappa.shape != (self.dim, self.dim) or not np.array_equal(kappa, kappa.T):
            raise DimensionMismatchError("kappa must be a symmetric dim x dim matrix")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "kappa_inv", np.linalg.inv(kappa))


def _check_coords(spec, *elements):
    for x in elements:
        if x.shape[-1] != spec.dim:
            raise DimensionMismatchError(
                f"element has {x.shape[-1]} coordinates, algebra '{spec.name}' has dim {spec.dim}")


def bracket(spec: LieAlgebraSpec, xi, eta):
    """[xi, eta]^k = c^k_ij xi^i eta^j, batched over leading axes."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    _check_coords(spec, xi, eta)
    return np.einsum("kij,...i,...j->...k", spec.c, xi, eta)


def ad_star(spec: LieAlgebraSpec, xi, mu):
    """Coadjoint operator: the unique nu with kappa(nu, eta) = kappa(mu, [xi, eta])."""
    xi = np.asarray(xi, dtype=float)
    mu = np.asarray(mu, dtype=float)
    _check_coords(spec, xi, mu)
    w = mu @ spec.kappa
    t = np.einsum("kij,...i,...k->...j", spec.c, xi, w)
    return t @ spec.kappa_inv


def pair(spec: LieAlgebraSpec, mu, xi):
    """Duality pairing kappa(mu, xi), batched."""
    mu = np.asarray(mu, dtype=float)
    xi = np.asarray(xi, dtype=float)
    _check_coords(spec, mu, xi)
    return np.einsum("...i,ij,...j->...", mu, spec.kappa, xi)


def jacobi_residual(spec: LieAlgebraSpec) -> float:
    """Max-norm of the Jacobi identity over all index quadruples."""
    c = spec.c
    r = (np.einsum("kij,mkl->ijlm", c, c)
         + np.einsum("kjl,mki->ijlm", c, c)
         + np.einsum("kli,mkj->ijlm", c, c))
    return float(np.max(np.abs(r)))


def validate(spec: LieAlgebraSpec):
    """Raise unless the spec is a genuine Lie algebra with admissible pairing."""
    res = jacobi_residual(spec)
    if res >= JACOBI_TOL:
        raise DimensionMismatchError(f"Jacobi residual {res:.3e} exceeds {JACOBI_TOL}")
    if np.min(np.linalg.eigvalsh(spec.kappa)) <= 0.0:
        raise DimensionMismatchError("kappa must be positive definite")


def to_matrix(spec: LieAlgebraSpec, xi):
    """Matrix of an element in the builtin representation, batched."""
    if spec.basis_matrices is None:
        raise UnsupportedAlgebraError(f"algebra '{spec.name}' carries no matrix representation")
    xi = np.asarray(xi, dtype=float)
    _check_coords(spec, xi)
    return np.einsum("...i,iab->...ab", xi, spec.basis_matrices)


def structure_constants_from_matrices(basis) -> np.ndarray:
    """c[k, i, j] from pairwise commutators, expanding in the given basis
    by least squares (exact for all builtins, whose constants are integers)."""
    basis = np.asarray(basis, dtype=float)
    dim = basis.shape[0]
    flat = basis.reshape(dim, -1).T
    c = np.zeros((dim, dim, dim))
    for i in range(dim):
        for j in range(i + 1, dim):
            comm = basis[i] @ basis[j] - basis[j] @ basis[i]
            coeff = np.linalg.lstsq(flat, comm.ravel(), rcond=None)[0]
            c[:, i, j] = coeff
            c[:, j, i] = -coeff
    return c


def _hat_so3(v):
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


def so_n_basis(n):
    """E_ab (a < b, lexicographic): +1 at (a, b), -1 at (b, a).

    Orthonormal under <A, B> = -tr(AB)/2, which the coordinate pairing
    kappa = I represents.
    """
    mats = []
    for a in range(n):
        for b in range(a + 1, n):
            m = np.zeros((n, n))
            m[a, b] = 1.0
            m[b, a] = -1.0
            mats.append(m)
    return np.array(mats)


def so_n_index_pairs(n):
    return [(a, b) for a in range(n) for b in range(a + 1, n)]


def vee_so_n(n, mats):
    """Coordinates of (batched) so(n) matrices in the E_ab basis."""
    mats = np.asarray(mats, dtype=float)
    pairs = so_n_index_pairs(n)
    return np.stack([mats[..., a, b] for a, b in pairs], axis=-1)


def hat_so_n(n, coords):
    coords = np.asarray(coords, dtype=float)
    out = np.zeros(coords.shape[:-1] + (n, n))
    for k, (a, b) in enumerate(so_n_index_pairs(n)):
        out[..., a, b] = coords[..., k]
        out[..., b, a] = -coords[..., k]
    return out


def _builtin_so3():
    # hat-map basis: [e1, e2] = e3 cyclically; c^k_ij is the Levi-Civita symbol
    basis = np.array([_hat_so3(v) for v in np.eye(3)])
    c = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        c[k, i, j] = 1.0
        c[k, j, i] = -1.0
    return LieAlgebraSpec(3, c, np.eye(3), name="so3", basis_matrices=basis)


def _builtin_so_n(n):
    basis = so_n_basis(n)
    dim = n * (n - 1) // 2
    c = structure_constants_from_matrices(basis)
    return LieAlgebraSpec(dim, c, np.eye(dim), name=f"soN({n})", basis_matrices=basis)


def _builtin_se3():
    # block order (rotation, translation), embedded as 4x4 homogeneous matrices
    basis = np.zeros((6, 4, 4))
    for i, v in enumerate(np.eye(3)):
        basis[i, :3, :3] = _hat_so3(v)
        basis[3 + i, :3, 3] = v
    c = structure_constants_from_matrices(basis)
    return LieAlgebraSpec(6, c, np.eye(6), name="se3", basis_matrices=basis)


def _builtin_gl_n(n):
    # matrix units E_ij, row-major; Frobenius pairing is the identity on them
    basis = np.zeros((n * n, n, n))
    for k in range(n * n):
        basis[k, k // n, k % n] = 1.0
    c = structure_constants_from_matrices(basis)
    return LieAlgebraSpec(n * n, c, np.eye(n * n), name=f"glN({n})", basis_matrices=basis)


def builtin(name: str) -> LieAlgebraSpec:
    """Builtin algebras: "so3", "se3", "soN(n)", "glN(n)" with n >= 2."""
    if name == "so3":
        return _builtin_so3()
    if name == "se3":
        return _builtin_se3()
    m = re.fullmatch(r"(soN|glN)\((\d+)\)", name)
    if m:
        n = int(m.group(2))
        if n < 2:
            raise UnsupportedAlgebraError(f"{m.group(1)} requires n >= 2, got {n}")
        return _builtin_so_n(n) if m.group(1) == "soN" else _builtin_gl_n(n)
    raise UnsupportedAlgebraError(f"unknown builtin algebra '{name}'")
