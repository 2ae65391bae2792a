"""Rayleigh quotients with the distance weight and the lambda_p search.

The outer search minimizes y -> R_p(Omega, w_y) over singular points: coarse
candidates first (a lattice, or a ray for radially symmetric domains), then a
derivative-free simplex refinement whose evaluations snap to grid nodes.
Independent solves run in a bounded work pool (HML_THREADS), and reports are
assembled in deterministic order.
"""

from __future__ import annotations

import math
import os
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    Annulus,
    Ball,
    Cone2D,
    Domain,
    ExteriorOfCompact,
    Halfspace,
    Intersection,
    PuncturedDomain,
    PuncturedSpace,
)
from .mesh import DiscreteFunction, GridSpec, p_energy, rasterize
from .potential import PotentialSolution, SolveOptions, solve_potential, solve_potential_ladder

__all__ = [
    "RayleighReport",
    "LambdaEstimate",
    "LambdaRow",
    "BoundaryProfile",
    "SearchOptions",
    "rayleigh",
    "potential_dominance_check",
    "estimate_lambda",
    "boundary_profile",
    "morrey_constant",
    "truncated_halfplane",
    "truncated_punctured_plane",
    "truncated_cone",
]


def _pool_size() -> int:
    env = os.environ.get("HML_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def _pool_map(fn, items):
    items = list(items)
    if len(items) <= 1 or _pool_size() == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=_pool_size()) as ex:
        return list(ex.map(fn, items))


@dataclass(frozen=True)
class RayleighReport:
    sup_quotient: float       # M = max |u| / d^(1 - n/p)
    argmax: np.ndarray
    energy: float             # eps_reg = 0 evaluation
    rayleigh: float           # energy / M^p


def rayleigh(u: DiscreteFunction, domain: Domain, p: float) -> RayleighReport:
    """Weighted sup and quotient of u over the exact distance field."""
    if p <= u.grid.ndim:
        raise ValueError("requires p > n")
    mask, dist = rasterize(domain, u.grid)
    return _rayleigh_masked(u, mask & u.active, dist, p)


def _rayleigh_masked(u, mask, dist, p) -> RayleighReport:
    n = u.grid.ndim
    quot = np.zeros(u.grid.dims)
    np.divide(np.abs(u.values), dist ** (1.0 - n / p), out=quot, where=mask)
    m = float(quot.max())
    if m <= 0.0:
        raise ValueError("Rayleigh quotient undefined for the zero function")
    arg = np.unravel_index(int(np.argmax(quot)), u.grid.dims)
    energy = p_energy(u, p, 0.0)
    return RayleighReport(m, u.grid.node_point(arg), energy, energy / m**p)


def potential_dominance_check(
    u: DiscreteFunction,
    domain: Domain,
    p: float,
    solve_opts: SolveOptions | None = None,
    rtol: float = 1e-6,
):
    """Chain R_p(u) >= d(x0)^(p-n) E(w_x0) >= R_p(w_x0) at u's weighted argmax.

    Returns the three values; raises if the chain fails beyond rtol.
    """
    rep = rayleigh(u, domain, p)
    sol = solve_potential(domain, u.grid, rep.argmax, p, solve_opts)
    mid = sol.d_y ** (p - u.grid.ndim) * sol.energy
    bottom = rayleigh(sol.w, domain, p).rayleigh
    scale = max(abs(rep.rayleigh), abs(mid), 1e-30)
    if rep.rayleigh < mid - rtol * scale or mid < bottom - rtol * scale:
        raise ValueError(
            f"dominance chain violated: {rep.rayleigh} >= {mid} >= {bottom} fails"
        )
    return rep.rayleigh, mid, bottom


@dataclass(frozen=True)
class LambdaRow:
    y: tuple
    d_energy: float           # d(y)^(p-n) * energy
    rayleigh: float
    energy: float
    iterations: int
    converged: bool


@dataclass
class LambdaEstimate:
    value: float
    minimizer: np.ndarray
    rows: list
    grid: GridSpec
    bracket: tuple = (0.0, math.inf)
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "lambda": self.value,
            "minimizer": list(self.minimizer),
            "bracket": [self.bracket[0], self.bracket[1]],
            "h": self.grid.h,
            "rows": [
                {
                    "y": list(r.y),
                    "d_energy": r.d_energy,
                    "rayleigh": r.rayleigh,
                    "energy": r.energy,
                    "iters": r.iterations,
                    "converged": r.converged,
                }
                for r in self.rows
            ],
            "meta": self.meta,
        }


@dataclass
class SearchOptions:
    mode: str = "lattice"               # "lattice" | "radial" | "ray"
    max_candidates: int = 12
    candidates: list | None = None      # explicit seed points override mode
    refine: bool = True
    refine_budget: int = 24
    ray_origin: np.ndarray | None = None
    ray_direction: np.ndarray | None = None
    solve: SolveOptions = field(default_factory=SolveOptions)
    warm_ladder: bool = True            # coarse-to-fine warm starts on fine grids
    bracket: tuple = (0.0, math.inf)


def _default_ray(domain: Domain):
    """Origin and direction of the symmetry ray for radial candidate search."""
    core = domain
    while isinstance(core, Intersection):
        core = core.parts[0]
    if isinstance(core, (Ball, Annulus)):
        return np.array(core.center), _unit_first(core.dim)
    if isinstance(core, PuncturedSpace):
        return np.array(core.puncture), _unit_first(core.dim)
    if isinstance(core, PuncturedDomain):
        return np.array(core.puncture), _unit_first(core.dim)
    if isinstance(core, ExteriorOfCompact) and isinstance(core.body, Ball):
        return np.array(core.body.center), _unit_first(core.dim)
    if isinstance(core, Cone2D):
        return np.array(core.vertex), np.array(core.axis)
    if isinstance(core, Halfspace):
        origin = core.offset * core.normal
        return origin, np.array(core.normal)
    raise ValueError("no default symmetry ray for this domain; pass ray options")


def _unit_first(n: int) -> np.ndarray:
    e = np.zeros(n)
    e[0] = 1.0
    return e


def _candidate_points(domain, grid, opts: SearchOptions, mask, dist):
    if opts.candidates is not None:
        return [np.asarray(c, dtype=float) for c in opts.candidates]
    feasible = mask & (dist >= 2 * grid.h)
    if not feasible.any():
        raise ValueError("no admissible candidates: domain thinner than 4h")
    if opts.mode in ("radial", "ray"):
        origin, direction = (
            (opts.ray_origin, opts.ray_direction)
            if opts.ray_origin is not None
            else _default_ray(domain)
        )
        direction = np.asarray(direction, dtype=float)
        direction = direction / np.linalg.norm(direction)
        span = grid.h * max(grid.dims)
        ts = np.linspace(grid.h, span, 4 * max(grid.dims))
        pts = origin[None, :] + ts[:, None] * direction[None, :]
        ds = domain.distance(pts)
        ok = ds >= 2 * grid.h
        if not ok.any():
            raise ValueError("no admissible candidates on the symmetry ray")
        ts = ts[ok]
        picks = np.unique(
            np.linspace(0, len(ts) - 1, min(opts.max_candidates, len(ts))).astype(int)
        )
        return [origin + ts[k] * direction for k in picks]
    idx = np.argwhere(feasible)
    lo = idx.min(axis=0)
    hi = idx.max(axis=0)
    per_axis = max(2, int(round(opts.max_candidates ** (1.0 / grid.ndim))))
    axes = [np.unique(np.linspace(a, b, per_axis).astype(int)) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([m.reshape(-1) for m in mesh], axis=1)
    out = []
    for c in coords:
        if feasible[tuple(c)]:
            out.append(grid.node_point(c))
        else:
            near = idx[np.argmin(np.sum((idx - c) ** 2, axis=1))]
            out.append(grid.node_point(near))
    return out


def estimate_lambda(
    domain: Domain,
    grid: GridSpec,
    p: float,
    opts: SearchOptions | None = None,
) -> LambdaEstimate:
    """Estimate lambda_p by minimizing R_p(Omega, w_y) over singular points."""
    if p <= grid.ndim:
        raise ValueError("requires p > n")
    opts = opts or SearchOptions()
    mask, dist = rasterize(domain, grid)
    n = grid.ndim

    cache: dict = {}

    def evaluate(point) -> LambdaRow | None:
        try:
            sol = _solve(domain, grid, point, p, opts)
        except ValueError:
            return None
        key = sol.y_index
        if key in cache:
            return cache[key]
        rep = _rayleigh_masked(sol.w, mask, dist, p)
        row = LambdaRow(
            tuple(sol.y),
            sol.d_y ** (p - n) * sol.energy,
            rep.rayleigh,
            sol.energy,
            sol.report.iterations,
            sol.report.converged,
        )
        cache[key] = row
        return row

    seeds = _candidate_points(domain, grid, opts, mask, dist)
    rows = [r for r in _pool_map(evaluate, seeds) if r is not None]
    if not rows:
        raise ValueError("no candidate solve succeeded")

    if opts.refine:
        best = min(rows, key=lambda r: r.rayleigh)
        step = max(grid.h * 2, _seed_spacing(seeds))
        _simplex_refine(evaluate, np.array(best.y), step, grid.h, opts.refine_budget)

    rows = sorted(cache.values(), key=lambda r: r.y)
    best = min(rows, key=lambda r: r.rayleigh)
    return LambdaEstimate(
        best.rayleigh,
        np.array(best.y),
        rows,
        grid,
        bracket=opts.bracket,
        meta={"p": p, "h": grid.h, "mode": opts.mode},
    )


def _seed_spacing(seeds) -> float:
    if len(seeds) < 2:
        return 0.0
    arr = np.array(seeds)
    return float(np.min(np.linalg.norm(np.diff(arr, axis=0), axis=1)))


def _solve(domain, grid, point, p, opts: SearchOptions) -> PotentialSolution:
    if opts.warm_ladder and min(grid.dims) >= 129:
        ladder = _coarsen_ladder(grid)
        return solve_potential_ladder(domain, ladder, point, p, opts.solve)
    return solve_potential(domain, grid, point, p, opts.solve)


def _coarsen_ladder(grid: GridSpec) -> list:
    """Nested coarser grids over the same box (every other node)."""
    grids = [grid]
    while min(grids[0].dims) >= 129 and all((d - 1) % 2 == 0 for d in grids[0].dims):
        g = grids[0]
        grids.insert(
            0, GridSpec(g.origin, g.h * 2, tuple((d - 1) // 2 + 1 for d in g.dims))
        )
        if len(grids) == 3:
            break
    return grids


def _simplex_refine(evaluate, y0: np.ndarray, step: float, h: float, budget: int):
    """Reflect/contract/shrink descent on y; stops when the simplex is below h.

    Infeasible points (snap rejection) evaluate to +inf so the simplex
    contracts back into the admissible region.
    """

    def f(v):
        row = evaluate(v)
        return row.rayleigh if row is not None else math.inf

    n = y0.shape[0]
    verts = [y0] + [y0 + step * _unit(k, n) for k in range(n)]
    vals = [f(v) for v in verts]
    evals = 0
    while evals < budget:
        order = np.argsort(vals)
        verts = [verts[i] for i in order]
        vals = [vals[i] for i in order]
        if _diameter(verts) < h:
            break
        centroid = np.mean(verts[:-1], axis=0)
        refl = centroid + (centroid - verts[-1])
        fr = f(refl)
        evals += 1
        if fr < vals[0]:
            verts[-1], vals[-1] = refl, fr
            continue
        contr = centroid + 0.5 * (verts[-1] - centroid)
        fc = f(contr)
        evals += 1
        if fc < vals[-1]:
            verts[-1], vals[-1] = contr, fc
        else:
            best = verts[0]
            verts = [best] + [best + 0.5 * (v - best) for v in verts[1:]]
            vals = [vals[0]] + [f(v) for v in verts[1:]]
            evals += n


def _unit(k: int, n: int) -> np.ndarray:
    e = np.zeros(n)
    e[k] = 1.0
    return e


def _diameter(verts) -> float:
    return max(
        float(np.linalg.norm(a - b)) for i, a in enumerate(verts) for b in verts[i + 1 :]
    )


@dataclass
class BoundaryProfile:
    points: list
    values: list                 # d(x_k)^(p-n) * energy(w_{x_k})
    tail: float                  # median of the last three values
    grids: list

    def to_json(self) -> dict:
        return {
            "points": [list(map(float, q)) for q in self.points],
            "values": [float(v) for v in self.values],
            "tail": float(self.tail),
            "h": [g.h for g in self.grids],
        }


def boundary_profile(
    domain: Domain,
    path,
    grid_ladder,
    p: float,
    opts: SolveOptions | None = None,
) -> BoundaryProfile:
    """d^(p-n)-weighted energies along a path approaching the boundary.

    Each point is solved on the first ladder grid with h <= d(x_k)/8; the
    ladder must therefore end fine enough for the whole path.
    """
    path = [np.asarray(q, dtype=float) for q in path]
    ladder = sorted(grid_ladder, key=lambda g: -g.h)
    chosen = []
    for q in path:
        d = float(domain.distance(q))
        fits = [g for g in ladder if g.h <= d / 8]
        if not fits:
            raise ValueError(f"grid ladder exhausted at path point {q} (d={d:.4g})")
        chosen.append(fits[0])

    def run(item):
        q, g = item
        sol = solve_potential(domain, g, q, p, opts)
        return sol.d_y ** (p - g.ndim) * sol.energy

    values = _pool_map(run, list(zip(path, chosen)))
    tail = statistics.median(values[-3:]) if len(values) >= 3 else values[-1]
    return BoundaryProfile(path, values, tail, chosen)


def truncated_halfplane(radius: float) -> Domain:
    """Upper halfplane cut to a half-disk (Dirichlet on the artificial arc)."""
    return Intersection(
        (Halfspace(_e2(), 0.0), Ball(np.zeros(2), radius))
    )


def truncated_punctured_plane(radius: float) -> Domain:
    return PuncturedDomain(Ball(np.zeros(2), radius), np.zeros(2))


def truncated_cone(phi: float, radius: float) -> Domain:
    return Intersection(
        (Cone2D(np.zeros(2), _e2(), phi), Ball(np.zeros(2), radius))
    )


def _e2() -> np.ndarray:
    return np.array([0.0, 1.0])


def morrey_constant(
    n: int,
    p: float,
    radii=(1.0, 2.0, 4.0),
    h: float = 1 / 32,
    opts: SearchOptions | None = None,
):
    """Back out the Morrey constant from punctured-ball estimates.

    C = lambda^(-1/p) with lambda extrapolated over the truncation ladder;
    the ladder trend is returned so callers can flag non-monotone runs.
    """
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    if p <= n:
        raise ValueError("requires p > n")
    lams = []
    for R in radii:
        if n == 1:
            dom = PuncturedDomain(Ball(np.zeros(1), R), np.zeros(1))
            grid = GridSpec.from_box((-R,), (R,), h)
        else:
            dom = truncated_punctured_plane(R)
            grid = GridSpec.from_box((-R, -R), (R, R), h)
        o = opts or SearchOptions(mode="radial", max_candidates=6)
        lams.append(estimate_lambda(dom, grid, p, o).value)
    diffs = np.diff(lams)
    monotone = bool(np.all(diffs <= 0) or np.all(diffs >= 0))
    lam = _aitken(lams) if monotone else lams[-1]
    return {
        "C": lam ** (-1.0 / p),
        "lambda": lam,
        "ladder": list(map(float, lams)),
        "radii": list(map(float, radii)),
        "monotone": monotone,
    }


def _aitken(seq) -> float:
    if len(seq) < 3:
        return seq[-1]
    x0, x1, x2 = seq[-3], seq[-2], seq[-1]
    denom = (x2 - x1) - (x1 - x0)
    if abs(denom) < 1e-14 * max(1.0, abs(x2)):
        return x2
    acc = x2 - (x2 - x1) ** 2 / denom
    lo, hi = min(x0, x1, x2), max(x0, x1, x2)
    span = hi - lo
    return float(min(max(acc, lo - span), hi + span))
