"""Potentials: minimizers of the p-energy with value 1 pinned at a point.

The solve is a projected quasi-Newton descent: at each iterate the energy's
positive-definite lagged-weight metric (the weighted P1 stiffness matrix) is
assembled, the metric system is solved for a descent direction, and a
backtracking line search plus a clamp to [0, 1] finishes the step.  Clamping
never increases the energy (symmetrized-split monotonicity), so the
projection doubles as the maximum principle.  The pinned node is eliminated
from the unknowns rather than penalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.ndimage import label as _label
from scipy.sparse.linalg import cg as _cg
from scipy.sparse.linalg import spsolve

try:
    import pyamg

    _HAVE_PYAMG = True
except Exception:  # pragma: no cover
    _HAVE_PYAMG = False

from .geometry import Domain, SimilarityTransform
from .mesh import (
    DiscreteFunction,
    EnergyReport,
    GridSpec,
    p_energy,
    p_energy_gradient,
    rasterize,
    resample,
)

__all__ = [
    "SolveOptions",
    "PotentialSolution",
    "solve_potential",
    "solve_potential_ladder",
    "component_support_check",
    "tent_function",
    "unit_ball_volume",
]

_AMG_THRESHOLD = 20000  # unknowns above which CG+AMG replaces a direct solve


def unit_ball_volume(n: int) -> float:
    return {1: 2.0, 2: math.pi}[n]


@dataclass
class SolveOptions:
    tol: float | None = None        # projected-gradient max-norm; default 1e-8 * energy scale
    eps_reg: float | None = None    # default 1e-8 / h
    max_iter: int = 200
    cg_rtol: float = 1e-10
    init: np.ndarray | None = None  # override the tent initialization


@dataclass
class PotentialSolution:
    w: DiscreteFunction
    y: np.ndarray           # snapped singular point
    y_index: tuple
    energy: float           # re-evaluated at eps_reg = 0
    report: EnergyReport
    domain: Domain

    @property
    def d_y(self) -> float:
        return float(self.domain.distance(self.y))


def tent_function(grid: GridSpec, mask: np.ndarray, y: np.ndarray, d_y: float) -> np.ndarray:
    nodes = grid.nodes()
    vals = np.clip(1.0 - np.linalg.norm(nodes - y, axis=-1) / d_y, 0.0, 1.0)
    vals[~mask] = 0.0
    return vals


def _snap_to_active(grid: GridSpec, mask: np.ndarray, y: np.ndarray) -> tuple:
    nodes = grid.nodes().reshape(-1, grid.ndim)
    flat = mask.reshape(-1)
    idx = np.flatnonzero(flat)
    k = idx[np.argmin(np.linalg.norm(nodes[idx] - y, axis=1))]
    return tuple(np.unravel_index(k, grid.dims))


def _metric_weights(v: np.ndarray, h: float, p: float, eps2: float):
    """Per-cell lagged weights G'(s) = (p/2)(s + eps^2)^(p/2-1) per simplex."""
    if v.ndim == 1:
        g = np.diff(v) / h
        s = g * g
        floor = 1e-8 * max(float(s.max()), 1e-12)
        return ((p / 2.0) * (s + max(eps2, floor)) ** (p / 2 - 1),)
    a = v[:-1, :-1]
    b = v[1:, :-1]
    c = v[:-1, 1:]
    d = v[1:, 1:]
    P = (b - a) / h
    Q = (d - c) / h
    R = (c - a) / h
    S = (d - b) / h
    s1 = P * P + S * S
    s2 = Q * Q + R * R
    s3 = P * P + R * R
    s4 = Q * Q + S * S
    floor = 1e-8 * max(float(max(s1.max(), s2.max(), s3.max(), s4.max())), 1e-12)
    e2 = max(eps2, floor)
    k = p / 2 - 1
    return (
        (p / 2.0) * (s1 + e2) ** k,
        (p / 2.0) * (s2 + e2) ** k,
        (p / 2.0) * (s3 + e2) ** k,
        (p / 2.0) * (s4 + e2) ** k,
    )


def _edge_arrays(grid: GridSpec):
    """Flat endpoint indices of the lattice edges (horizontal, vertical)."""
    if grid.ndim == 1:
        n = grid.dims[0]
        left = np.arange(n - 1)
        return (left, left + 1), None
    nx, ny = grid.dims
    flat = np.arange(nx * ny).reshape(nx, ny)
    hor = (flat[:-1, :].reshape(-1), flat[1:, :].reshape(-1))
    ver = (flat[:, :-1].reshape(-1), flat[:, 1:].reshape(-1))
    return hor, ver


def _weighted_laplacian(grid: GridSpec, weights) -> sp.csr_matrix:
    """Graph Laplacian of the lagged quadratic form u^T L u."""
    n = grid.node_count
    if grid.ndim == 1:
        (w,) = weights
        c = w / grid.h
        i = np.arange(grid.dims[0] - 1)
        rows = np.concatenate([i, i + 1, i, i + 1])
        cols = np.concatenate([i, i + 1, i + 1, i])
        vals = np.concatenate([c, c, -c, -c])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    w1, w2, w3, w4 = weights
    nx, ny = grid.dims
    flat = np.arange(nx * ny).reshape(nx, ny)
    a = flat[:-1, :-1].reshape(-1)
    b = flat[1:, :-1].reshape(-1)
    c_ = flat[:-1, 1:].reshape(-1)
    d = flat[1:, 1:].reshape(-1)
    cb = ((w1 + w3) / 4.0).reshape(-1)   # bottom edge a-b
    ct = ((w2 + w4) / 4.0).reshape(-1)   # top edge c-d
    cl = ((w2 + w3) / 4.0).reshape(-1)   # left edge a-c
    cr = ((w1 + w4) / 4.0).reshape(-1)   # right edge b-d
    rows = []
    cols = []
    vals = []
    for (i, j), cij in (((a, b), cb), ((c_, d), ct), ((a, c_), cl), ((b, d), cr)):
        rows += [i, j, i, j]
        cols += [i, j, j, i]
        vals += [cij, cij, -cij, -cij]
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


class _MetricSolver:
    """Solves the lagged-metric system; AMG-preconditioned CG on big grids.

    The hierarchy is rebuilt every call (the weights move with the iterate
    and setup is cheap next to a poorly preconditioned CG run), and the
    inner tolerance follows the outer progress: loose while far from the
    minimizer, tight near it.
    """

    def __init__(self, rtol: float):
        self.rtol = rtol

    def solve(self, A: sp.csr_matrix, rhs: np.ndarray, x0: np.ndarray, loose: float) -> np.ndarray:
        if A.shape[0] < _AMG_THRESHOLD or not _HAVE_PYAMG:
            return spsolve(A.tocsc(), rhs)
        ml = pyamg.smoothed_aggregation_solver(A, max_coarse=64)
        rtol = max(self.rtol, min(1e-4, loose * loose))
        x, info = _cg(A, rhs, x0=x0, rtol=rtol, maxiter=600, M=ml.aspreconditioner())
        return x


def solve_potential(
    domain: Domain,
    grid: GridSpec,
    y,
    p: float,
    opts: SolveOptions | None = None,
) -> PotentialSolution:
    """Minimize the regularized p-energy among fields vanishing off the mask
    with value 1 at (the snapped) y."""
    if p <= grid.ndim:
        raise ValueError("requires p > n")
    if p < 2:
        raise ValueError("p >= 2 required")
    opts = opts or SolveOptions()
    y = np.asarray(y, dtype=float)
    mask, dist = rasterize(domain, grid)
    y_idx = _snap_to_active(grid, mask, y)
    y_node = grid.node_point(y_idx)
    d_y = float(dist[y_idx])
    if d_y < 2 * grid.h:
        raise ValueError(
            f"singular point too close to the boundary: d={d_y:.3g} < 2h={2 * grid.h:.3g}"
        )

    eps_reg = opts.eps_reg if opts.eps_reg is not None else 1e-8 / grid.h
    if opts.init is not None:
        vals = np.clip(np.asarray(opts.init, dtype=float), 0.0, 1.0)
        vals[~mask] = 0.0
    else:
        vals = tent_function(grid, mask, y_node, d_y)
    vals[y_idx] = 1.0

    work = DiscreteFunction(grid, vals.copy(), mask)
    e0 = p_energy(work, p, eps_reg)
    tol = opts.tol if opts.tol is not None else 1e-8 * max(1.0, e0)

    free = mask.copy()
    free[y_idx] = False
    free_flat = free.reshape(-1)
    pin_flat = np.zeros(grid.node_count)
    pin_flat[np.ravel_multi_index(y_idx, grid.dims)] = 1.0

    metric = _MetricSolver(opts.cg_rtol)
    energy = e0
    nit = 0
    pg0 = None
    converged = False
    for nit in range(1, opts.max_iter + 1):
        pg = _projected_gradient(work, y_idx, p, eps_reg)
        if pg <= tol:
            converged = True
            break
        pg0 = pg if pg0 is None else pg0
        weights = _metric_weights(work.values, grid.h, p, eps_reg**2)
        L = _weighted_laplacian(grid, weights)
        A = L[free_flat][:, free_flat]
        rhs = -L[free_flat] @ pin_flat
        x0 = work.values.reshape(-1)[free_flat]
        target = metric.solve(A, rhs, x0, loose=0.1 * pg / pg0)

        direction = np.zeros(grid.node_count)
        direction[free_flat] = target - x0
        direction = direction.reshape(grid.dims)
        g = p_energy_gradient(work, p, eps_reg)
        g[y_idx] = 0.0
        slope = float(np.sum(g * direction))
        if slope > 0:
            direction = -direction
            slope = -slope

        t = 1.0
        base = work.values.copy()
        accepted = False
        for _ in range(40):
            trial = np.clip(base + t * direction, 0.0, 1.0)
            trial[~mask] = 0.0
            trial[y_idx] = 1.0
            work.values = trial
            e_t = p_energy(work, p, eps_reg)
            if e_t <= energy + 1e-4 * t * slope:
                energy = e_t
                accepted = True
                break
            t *= 0.5
        if not accepted:
            work.values = base
            converged = _projected_gradient(work, y_idx, p, eps_reg) <= tol
            break

    out_vals = work.values.copy()
    out_vals[~mask] = 0.0
    out_vals[y_idx] = 1.0
    w = DiscreteFunction(grid, out_vals, mask)
    pg = _projected_gradient(w, y_idx, p, eps_reg)
    report = EnergyReport(
        energy=p_energy(w, p, 0.0),
        grad_norm=pg,
        eps_reg=eps_reg,
        iterations=nit,
        converged=bool(converged or pg <= tol),
    )
    return PotentialSolution(w, y_node, y_idx, report.energy, report, domain)


def _projected_gradient(w: DiscreteFunction, y_idx, p, eps_reg) -> float:
    g = p_energy_gradient(w, p, eps_reg)
    g[y_idx] = 0.0
    g[(w.values <= 0.0) & (g > 0)] = 0.0
    g[(w.values >= 1.0) & (g < 0)] = 0.0
    return float(np.max(np.abs(g))) if g.size else 0.0


def solve_potential_ladder(
    domain: Domain,
    grids: list,
    y,
    p: float,
    opts: SolveOptions | None = None,
) -> PotentialSolution:
    """Coarse-to-fine solve; each level warm-starts from the previous one."""
    opts = opts or SolveOptions()
    sol = None
    ident = SimilarityTransform.identity(grids[0].ndim)
    for grid in grids:
        level = SolveOptions(
            tol=opts.tol,
            eps_reg=opts.eps_reg,
            max_iter=opts.max_iter,
            cg_rtol=opts.cg_rtol,
            init=None if sol is None else resample(sol.w, ident, grid).values,
        )
        sol = solve_potential(domain, grid, y, p, level)
    return sol


def component_support_check(sol: PotentialSolution, tol: float = 1e-9) -> bool:
    """Potential must vanish off the connected component of its singular
    point and be strictly positive on it."""
    if sol.w.grid.ndim == 2:
        structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    else:
        structure = np.ones((3,), dtype=int)
    labels, _ = _label(sol.w.active, structure=structure)
    home = labels[sol.y_index]
    others = sol.w.active & (labels != home)
    if others.any() and np.max(np.abs(sol.w.values[others])) >= tol:
        return False
    mine = labels == home
    return bool(np.min(sol.w.values[mine]) > 0.0)
