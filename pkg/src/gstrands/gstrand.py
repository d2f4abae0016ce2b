"""Method-of-lines solver for strand field equations on (t, s).

The reduced field sigma = nu dt + gamma ds is sampled on an s-grid.  The
momentum m = A_t nu and the connection component gamma evolve by classical
RK4; s-derivatives are 2nd-order centered stencils.  Diagnostics recompute
the field equations and the zero-curvature relation from stored history with
centered differences in both t and s.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import BlowUpError, DimensionMismatchError, ReconstructionRefusedError
from .liealg import LieAlgebraSpec, ad_star, bracket, pair, to_matrix

ZCC_RECONSTRUCT_TOL = 1e-6


@dataclass(frozen=True)
class StrandGrid:
    """Uniform s-grid of extent ``s_extent`` with time step ``dt``.

    n_s = 1 is the degenerate mode in which every s-derivative is zero
    (classical, s-independent dynamics on the same code path).
    """

    n_s: int
    s_extent: float
    dt: float
    t_end: float
    bc: str = "periodic"
    store_every: int = 1

    def __post_init__(self):
        if self.n_s < 8 and self.n_s != 1:
            raise DimensionMismatchError(f"n_s must be >= 8 (or 1 for classical mode), got {self.n_s}")
        if self.bc not in ("periodic", "fixed"):
            raise DimensionMismatchError(f"bc must be periodic or fixed, got {self.bc!r}")
        if self.dt <= 0.0 or self.s_extent <= 0.0 or self.t_end < 0.0:
            raise DimensionMismatchError("dt and s_extent must be positive, t_end nonnegative")
        if self.bc == "fixed" and 1 < self.n_s < 3:
            raise DimensionMismatchError("fixed bc needs at least 3 gridpoints")
        if self.store_every < 1:
            raise DimensionMismatchError("store_every must be >= 1")

    @property
    def ds(self) -> float:
        return self.s_extent / self.n_s

    @property
    def s_nodes(self) -> np.ndarray:
        return np.arange(self.n_s) * self.ds

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def refined(self, factor: int) -> "StrandGrid":
        """Jointly refined grid: ds and dt both divided by ``factor``."""
        return StrandGrid(self.n_s * factor, self.s_extent, self.dt / factor,
                          self.t_end, self.bc, self.store_every * factor)


def d_s(arr, grid: StrandGrid):
    """Centered s-derivative along axis 0; periodic wrap or one-sided ends."""
    if grid.n_s == 1:
        return np.zeros_like(arr)
    if grid.bc == "periodic":
        return (np.roll(arr, -1, axis=0) - np.roll(arr, 1, axis=0)) / (2.0 * grid.ds)
    out = np.empty_like(arr)
    out[1:-1] = (arr[2:] - arr[:-2]) / (2.0 * grid.ds)
    out[0] = (-3.0 * arr[0] + 4.0 * arr[1] - arr[2]) / (2.0 * grid.ds)
    out[-1] = (3.0 * arr[-1] - 4.0 * arr[-2] + arr[-3]) / (2.0 * grid.ds)
    return out


@dataclass(frozen=True)
class QuadraticLagrangian:
    """l(nu, gamma) = <A_t nu, nu>/2 + <A_s gamma, gamma>/2.

    A_s may be negative definite (wave-type systems store it with the
    potential sign already applied, e.g. the chiral model has A_s = -I).
    """

    a_t: np.ndarray
    a_s: np.ndarray
    a_t_inv: np.ndarray = field(init=False, repr=False)
    a_s_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a_t = np.atleast_2d(np.asarray(self.a_t, dtype=float))
        a_s = np.atleast_2d(np.asarray(self.a_s, dtype=float))
        object.__setattr__(self, "a_t", a_t)
        object.__setattr__(self, "a_s", a_s)
        object.__setattr__(self, "a_t_inv", np.linalg.inv(a_t))
        object.__setattr__(self, "a_s_inv", np.linalg.inv(a_s))


def chiral_lagrangian(dim: int) -> QuadraticLagrangian:
    """l = |nu|^2/2 - |gamma|^2/2, the classical chiral-model density."""
    return QuadraticLagrangian(np.eye(dim), -np.eye(dim))


@dataclass
class StrandField:
    nu: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        self.nu = np.asarray(self.nu, dtype=float)
        self.gamma = np.asarray(self.gamma, dtype=float)
        if self.nu.shape != self.gamma.shape or self.nu.ndim != 2:
            raise DimensionMismatchError("nu and gamma must share shape (n_s, dim)")


def ep_rhs(alg: LieAlgebraSpec, lag: QuadraticLagrangian, f: StrandField, grid: StrandGrid):
    """d/dt of the momentum A_t nu implied by the strand field equations."""
    m = f.nu @ lag.a_t.T
    n = f.gamma @ lag.a_s.T
    return -d_s(n, grid) - ad_star(alg, f.nu, m) - ad_star(alg, f.gamma, n)


def zcc_rhs(alg: LieAlgebraSpec, f: StrandField, grid: StrandGrid):
    """d/dt of gamma from the zero-curvature relation: d_s nu + [nu, gamma]."""
    return d_s(f.nu, grid) + bracket(alg, f.nu, f.gamma)


def _stage(alg, lag, m, gamma, grid):
    nu = m @ lag.a_t_inv.T
    f = StrandField(nu, gamma)
    return ep_rhs(alg, lag, f, grid), zcc_rhs(alg, f, grid)


def step(alg: LieAlgebraSpec, lag: QuadraticLagrangian, f: StrandField,
         grid: StrandGrid, step_index: int | None = None) -> StrandField:
    """One classical RK4 step of the coupled (momentum, gamma) system."""
    dt = grid.dt
    m0 = f.nu @ lag.a_t.T
    g0 = f.gamma
    k1m, k1g = _stage(alg, lag, m0, g0, grid)
    k2m, k2g = _stage(alg, lag, m0 + 0.5 * dt * k1m, g0 + 0.5 * dt * k1g, grid)
    k3m, k3g = _stage(alg, lag, m0 + 0.5 * dt * k2m, g0 + 0.5 * dt * k2g, grid)
    k4m, k4g = _stage(alg, lag, m0 + dt * k3m, g0 + dt * k3g, grid)
    m1 = m0 + dt / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m)
    g1 = g0 + dt / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
    if grid.bc == "fixed" and grid.n_s > 1:
        # frozen endpoint values
        m1[[0, -1]] = m0[[0, -1]]
        g1[[0, -1]] = g0[[0, -1]]
    if not (np.all(np.isfinite(m1)) and np.all(np.isfinite(g1))):
        raise BlowUpError("strand field blew up", step_index=step_index)
    return StrandField(m1 @ lag.a_t_inv.T, g1)


@dataclass
class StrandHistory:
    times: np.ndarray      # stored times, uniformly spaced
    nu: np.ndarray         # (n_stored, n_s, dim)
    gamma: np.ndarray

    @property
    def dt_stored(self) -> float:
        return float(self.times[1] - self.times[0])


def simulate(alg, lag, f0: StrandField, grid: StrandGrid) -> StrandHistory:
    """Integrate to t_end, storing every ``grid.store_every``-th slice."""
    times = [0.0]
    nus = [f0.nu.copy()]
    gammas = [f0.gamma.copy()]
    f = f0
    for k in range(grid.n_steps):
        f = step(alg, lag, f, grid, step_index=k)
        if (k + 1) % grid.store_every == 0:
            times.append((k + 1) * grid.dt)
            nus.append(f.nu.copy())
            gammas.append(f.gamma.copy())
    return StrandHistory(np.array(times), np.array(nus), np.array(gammas))


def hamiltonian_energy(alg, lag, f: StrandField, grid: StrandGrid) -> float:
    """Sum over s of (<A_t nu, nu> - <A_s gamma, gamma>)/2 * ds.

    Conserved exactly by the centered semidiscretization on a periodic grid;
    equals the chiral strand energy (|U|^2 + |V|^2)/2 when A_t = I, A_s = -I.
    """
    dens = 0.5 * (pair(alg, f.nu @ lag.a_t.T, f.nu) - pair(alg, f.gamma @ lag.a_s.T, f.gamma))
    return float(np.sum(dens) * grid.ds)


def _centered_dt(series, dt):
    return (series[2:] - series[:-2]) / (2.0 * dt)


def ep_residual(alg, lag, hist: StrandHistory, grid: StrandGrid) -> float:
    """Max-norm residual of the field equations over interior stored slices."""
    if len(hist.times) < 3:
        raise DimensionMismatchError("residuals need at least 3 stored slices")
    dt = hist.dt_stored
    m = hist.nu @ lag.a_t.T
    n = hist.gamma @ lag.a_s.T
    dmdt = _centered_dt(m, dt)
    res = dmdt.copy()
    for i in range(res.shape[0]):
        k = i + 1
        res[i] += (d_s(n[k], grid)
                   + ad_star(alg, hist.nu[k], m[k])
                   + ad_star(alg, hist.gamma[k], n[k]))
    return float(np.max(np.abs(res)))


def zcc_residual(alg, hist: StrandHistory, grid: StrandGrid) -> float:
    """Max-norm of d_t gamma - d_s nu - [nu, gamma] over interior slices."""
    if len(hist.times) < 3:
        raise DimensionMismatchError("residuals need at least 3 stored slices")
    dt = hist.dt_stored
    dgdt = _centered_dt(hist.gamma, dt)
    res = dgdt.copy()
    for i in range(res.shape[0]):
        k = i + 1
        res[i] -= d_s(hist.nu[k], grid) + bracket(alg, hist.nu[k], hist.gamma[k])
    return float(np.max(np.abs(res)))


def residual_report(alg, lag, hist: StrandHistory, grid: StrandGrid) -> dict:
    return {
        "ep_residual": ep_residual(alg, lag, hist, grid),
        "zcc_residual": zcc_residual(alg, hist, grid),
    }


@dataclass
class ReconstructionResult:
    g: np.ndarray               # (n_stored, n_s, N, N)
    gamma_mismatch: float       # max |(d_s g) g^-1 - gamma_hat|
    zcc_residual: float


def reconstruct(alg: LieAlgebraSpec, g0, hist: StrandHistory, grid: StrandGrid,
                tol: float = ZCC_RECONSTRUCT_TOL) -> ReconstructionResult:
    """Exponential-Euler reconstruction g <- exp(dt nu) g from stored history.

    Requires the zero-curvature residual of the history to be below ``tol``;
    otherwise a group-valued field with d g g^-1 = sigma does not exist and
    the call is refused.
    """
    zr = zcc_residual(alg, hist, grid)
    if zr > tol:
        raise ReconstructionRefusedError(
            f"zero-curvature residual {zr:.3e} exceeds {tol:.1e}; reconstruction is ill-posed")
    g0 = np.asarray(g0, dtype=float)
    nmat = alg.basis_matrices.shape[-1]
    if g0.ndim == 2:
        g0 = np.broadcast_to(g0, (grid.n_s, nmat, nmat))
    g = g0.copy()
    out = [g.copy()]
    dt = hist.dt_stored
    for k in range(len(hist.times) - 1):
        nu_hat = to_matrix(alg, hist.nu[k])
        for j in range(grid.n_s):
            g[j] = scipy.linalg.expm(dt * nu_hat[j]) @ g[j]
        out.append(g.copy())
    gs = np.array(out)
    mismatch = 0.0
    for k in range(len(hist.times)):
        dsg = d_s(gs[k], grid)
        gam_hat = to_matrix(alg, hist.gamma[k])
        mismatch = max(mismatch, float(np.max(np.abs(
            np.einsum("jab,jbc->jac", dsg, np.linalg.inv(gs[k])) - gam_hat))))
    return ReconstructionResult(gs, mismatch, zr)
