"""Exact domain geometry: membership, distance to the complement, similarity maps.

Every domain variant evaluates its distance-to-complement in closed form
(the epigraph variant refines numerically to near machine precision); none
of the distances are derived from a grid.  Points are numpy arrays, and all
queries accept either a single point of shape ``(n,)`` or a batch with
shape ``(..., n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Domain",
    "Halfspace",
    "Ball",
    "PuncturedSpace",
    "PuncturedDomain",
    "Annulus",
    "Cone2D",
    "Polygon2D",
    "ExteriorOfCompact",
    "Epigraph",
    "Intersection",
    "TransformedDomain",
    "SimilarityTransform",
    "EvaluationBoundError",
    "distance",
    "contains",
    "apply_transform",
    "supporting_halfspace",
    "nearest_boundary_point",
    "domain_to_json",
    "domain_from_json",
]

_TIE_TOL = 1e-12


class EvaluationBoundError(ValueError):
    """An epigraph profile was queried beyond its declared evaluation bound."""


def _as_points(x) -> tuple[np.ndarray, bool]:
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    return pts, single


def _frozen_array(v) -> np.ndarray:
    a = np.array(v, dtype=float)
    a.flags.writeable = False
    return a


def _lex_min(candidates: list[np.ndarray]) -> np.ndarray:
    return min(candidates, key=lambda c: tuple(c))


@dataclass(frozen=True)
class SimilarityTransform:
    """x -> scale * Q @ x + shift with Q orthogonal and scale > 0."""

    scale: float
    Q: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        Q = _frozen_array(self.Q)
        shift = _frozen_array(self.shift)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] != shift.shape[0]:
            raise ValueError("Q must be n x n and match the translation")
        if not np.allclose(Q.T @ Q, np.eye(Q.shape[0]), atol=1e-12):
            raise ValueError("Q must be orthogonal")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "shift", shift)

    @property
    def dim(self) -> int:
        return self.shift.shape[0]

    def __call__(self, x):
        pts, single = _as_points(x)
        out = self.scale * pts @ self.Q.T + self.shift
        return out[0] if single else out

    def inverse(self) -> "SimilarityTransform":
        Qi = self.Q.T
        return SimilarityTransform(1.0 / self.scale, Qi, -(Qi @ self.shift) / self.scale)

    def compose(self, other: "SimilarityTransform") -> "SimilarityTransform":
        """Transform equal to applying ``other`` first, then ``self``."""
        return SimilarityTransform(
            self.scale * other.scale,
            self.Q @ other.Q,
            self.scale * (self.Q @ other.shift) + self.shift,
        )

    @staticmethod
    def identity(n: int) -> "SimilarityTransform":
        return SimilarityTransform(1.0, np.eye(n), np.zeros(n))

    @staticmethod
    def translation(v) -> "SimilarityTransform":
        v = np.asarray(v, dtype=float)
        return SimilarityTransform(1.0, np.eye(v.shape[0]), v)

    @staticmethod
    def dilation(r: float, n: int) -> "SimilarityTransform":
        return SimilarityTransform(r, np.eye(n), np.zeros(n))

    @staticmethod
    def rotation2d(angle: float) -> "SimilarityTransform":
        c, s = math.cos(angle), math.sin(angle)
        return SimilarityTransform(1.0, np.array([[c, -s], [s, c]]), np.zeros(2))


class Domain:
    """Base class for open sets with exact distance to the complement."""

    dim: int

    def distance(self, x):
        pts, single = _as_points(x)
        d = self._distance(pts)
        return float(d[0]) if single else d

    def contains(self, x):
        """True where x is strictly inside (distance > 0)."""
        d = self.distance(x)
        return d > 0.0 if np.isscalar(d) else np.asarray(d) > 0.0

    def _distance(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Halfspace(Domain):
    """{x : normal . x > offset}; normal is normalized at construction."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.array(self.normal, dtype=float)
        norm = np.linalg.norm(n)
        if norm == 0:
            raise ValueError("normal must be nonzero")
        object.__setattr__(self, "normal", _frozen_array(n / norm))
        object.__setattr__(self, "offset", float(self.offset) / norm)

    @property
    def dim(self) -> int:
        return self.normal.shape[0]

    def _distance(self, pts):
        return np.maximum(pts @ self.normal - self.offset, 0.0)


@dataclass(frozen=True)
class Ball(Domain):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", _frozen_array(self.center))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def _distance(self, pts):
        return np.maximum(self.radius - np.linalg.norm(pts - self.center, axis=-1), 0.0)


@dataclass(frozen=True)
class PuncturedSpace(Domain):
    """All of R^n except one point; the distance is plainly |x - puncture|."""

    puncture: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "puncture", _frozen_array(self.puncture))

    @property
    def dim(self) -> int:
        return self.puncture.shape[0]

    def _distance(self, pts):
        return np.linalg.norm(pts - self.puncture, axis=-1)


@dataclass(frozen=True)
class PuncturedDomain(Domain):
    base: Domain
    puncture: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "puncture", _frozen_array(self.puncture))

    @property
    def dim(self) -> int:
        return self.base.dim

    def _distance(self, pts):
        return np.minimum(
            self.base._distance(pts), np.linalg.norm(pts - self.puncture, axis=-1)
        )


@dataclass(frozen=True)
class Annulus(Domain):
    center: np.ndarray
    r1: float
    r2: float

    def __post_init__(self):
        if not 0 < self.r1 < self.r2:
            raise ValueError("annulus requires 0 < r1 < r2")
        object.__setattr__(self, "center", _frozen_array(self.center))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def _distance(self, pts):
        rho = np.linalg.norm(pts - self.center, axis=-1)
        return np.maximum(np.minimum(rho - self.r1, self.r2 - rho), 0.0)


@dataclass(frozen=True)
class Cone2D(Domain):
    """Planar cone about ``axis`` with half-opening angle phi in (0, pi].

    The interior angle of the cone is 2*phi; phi = pi/2 is a halfplane and
    phi = pi is the plane slit along the ray opposite to the axis.
    """

    vertex: np.ndarray
    axis: np.ndarray
    phi: float

    dim = 2

    def __post_init__(self):
        if not 0 < self.phi <= math.pi:
            raise ValueError("phi must lie in (0, pi]")
        a = np.array(self.axis, dtype=float)
        norm = np.linalg.norm(a)
        if norm == 0:
            raise ValueError("axis must be nonzero")
        object.__setattr__(self, "axis", _frozen_array(a / norm))
        object.__setattr__(self, "vertex", _frozen_array(self.vertex))

    def _distance(self, pts):
        v = pts - self.vertex
        r = np.linalg.norm(v, axis=-1)
        dot = v @ self.axis
        cross = self.axis[0] * v[..., 1] - self.axis[1] * v[..., 0]
        theta = np.arctan2(np.abs(cross), dot)
        gap = self.phi - theta
        d = np.where(gap <= math.pi / 2, r * np.sin(np.maximum(gap, 0.0)), r)
        return np.where(gap > 0, d, 0.0)

    def boundary_rays(self) -> list[np.ndarray]:
        """Unit directions of the boundary rays through the vertex."""
        c, s = math.cos(self.phi), math.sin(self.phi)
        a = self.axis
        perp = np.array([-a[1], a[0]])
        return [c * a + s * perp, c * a - s * perp]


def _segment_distance(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    e = b - a
    t = np.clip(((pts - a) @ e) / (e @ e), 0.0, 1.0)
    return np.linalg.norm(pts - (a + t[..., None] * e), axis=-1)


def _segment_nearest(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    e = b - a
    t = float(np.clip(((p - a) @ e) / (e @ e), 0.0, 1.0))
    return a + t * e


@dataclass(frozen=True)
class Polygon2D(Domain):
    """Simple closed polygon; interior decided by the even-odd rule."""

    vertices: np.ndarray

    dim = 2

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValueError("need at least 3 planar vertices")
        m = v.shape[0]
        for i in range(m):
            a, b, c = v[i], v[(i + 1) % m], v[(i + 2) % m]
            if np.allclose(a, b):
                raise ValueError("repeated consecutive vertices")
            if abs(np.cross(b - a, c - b)) <= 1e-14 * max(1.0, np.abs(v).max()) ** 2:
                raise ValueError("collinear consecutive vertices")
        for i in range(m):
            for j in range(i + 1, m):
                if j == i or (j + 1) % m == i or (i + 1) % m == j:
                    continue
                if _segments_cross(v[i], v[(i + 1) % m], v[j], v[(j + 1) % m]):
                    raise ValueError("polygon chain is not simple")
        object.__setattr__(self, "vertices", _frozen_array(v))

    def _edges(self):
        v = self.vertices
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    def _inside(self, pts: np.ndarray) -> np.ndarray:
        v = self.vertices
        x, y = pts[..., 0], pts[..., 1]
        inside = np.zeros(pts.shape[:-1], dtype=bool)
        m = len(v)
        for i in range(m):
            x1, y1 = v[i]
            x2, y2 = v[(i + 1) % m]
            crosses = (y1 > y) != (y2 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crosses & (x < np.where(crosses, xint, np.inf))
        return inside

    def _distance(self, pts):
        dmin = np.full(pts.shape[:-1], np.inf)
        for a, b in self._edges():
            dmin = np.minimum(dmin, _segment_distance(pts, a, b))
        return np.where(self._inside(pts), dmin, 0.0)

    def is_convex(self) -> bool:
        v = self.vertices
        m = len(v)
        signs = [
            np.sign(np.cross(v[(i + 1) % m] - v[i], v[(i + 2) % m] - v[(i + 1) % m]))
            for i in range(m)
        ]
        return all(s >= 0 for s in signs) or all(s <= 0 for s in signs)


def _segments_cross(p1, p2, q1, q2) -> bool:
    d1 = np.cross(q2 - q1, p1 - q1)
    d2 = np.cross(q2 - q1, p2 - q1)
    d3 = np.cross(p2 - p1, q1 - p1)
    d4 = np.cross(p2 - p1, q2 - p1)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True

    def on_seg(a, b, c):
        return np.cross(b - a, c - a) == 0 and min(a[0], b[0]) <= c[0] <= max(
            a[0], b[0]
        ) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    return any(on_seg(p1, p2, q) for q in (q1, q2)) or any(
        on_seg(q1, q2, p) for p in (p1, p2)
    )


@dataclass(frozen=True)
class ExteriorOfCompact(Domain):
    """Complement of a compact body (a closed ball or a convex polygon)."""

    body: Domain

    def __post_init__(self):
        if isinstance(self.body, Polygon2D):
            if not self.body.is_convex():
                raise ValueError("exterior body polygon must be convex")
        elif not isinstance(self.body, Ball):
            raise ValueError("body must be a Ball or a convex Polygon2D")

    @property
    def dim(self) -> int:
        return self.body.dim

    def _distance(self, pts):
        if isinstance(self.body, Ball):
            return np.maximum(
                np.linalg.norm(pts - self.body.center, axis=-1) - self.body.radius, 0.0
            )
        dmin = np.full(pts.shape[:-1], np.inf)
        for a, b in self.body._edges():
            dmin = np.minimum(dmin, _segment_distance(pts, a, b))
        return np.where(self.body._inside(pts), 0.0, dmin)


@dataclass(frozen=True)
class Epigraph(Domain):
    """{(t, s) : s > profile(t)} for a user profile valid on |t| <= bound.

    The profile is arbitrary user code, so queries that would need values of
    the profile beyond ``bound`` raise EvaluationBoundError instead of
    silently extrapolating.
    """

    profile: Callable[[np.ndarray], np.ndarray]
    bound: float
    label: str = "custom"
    params: dict = field(default_factory=dict)

    dim = 2

    def __post_init__(self):
        if self.bound <= 0:
            raise ValueError("evaluation bound must be positive")

    def _distance(self, pts):
        out = np.empty(pts.shape[:-1])
        flat = pts.reshape(-1, 2)
        res = out.reshape(-1)
        for k, (t, s) in enumerate(flat):
            res[k] = self._distance_one(t, s)
        return out

    def _distance_one(self, t: float, s: float) -> float:
        if abs(t) > self.bound:
            raise EvaluationBoundError(
                f"query abscissa {t} outside declared bound {self.bound}"
            )
        vert = s - float(self.profile(np.array([t]))[0])
        if vert <= 0:
            return 0.0
        lo, hi = t - vert, t + vert
        if lo < -self.bound or hi > self.bound:
            raise EvaluationBoundError(
                "distance search window exceeds the profile evaluation bound"
            )
        ts = np.linspace(lo, hi, 257)
        fs = np.asarray(self.profile(ts), dtype=float)
        d2 = (ts - t) ** 2 + np.maximum(s - fs, 0.0) ** 2
        k = int(np.argmin(d2))
        a = ts[max(k - 1, 0)]
        b = ts[min(k + 1, len(ts) - 1)]

        def f(u):
            fu = float(self.profile(np.array([u]))[0])
            return (u - t) ** 2 + max(s - fu, 0.0) ** 2

        a, b = _golden_section(f, a, b, 1e-13)
        best = 0.5 * (a + b)
        return math.sqrt(f(best))

    def nearest_hypograph_point(self, x) -> np.ndarray:
        t, s = float(x[0]), float(x[1])
        d = self._distance_one(t, s)
        if d == 0.0:
            return np.array([t, s])
        vert = s - float(self.profile(np.array([t]))[0])
        ts = np.linspace(t - vert, t + vert, 257)
        fs = np.asarray(self.profile(ts), dtype=float)
        d2 = (ts - t) ** 2 + np.maximum(s - fs, 0.0) ** 2
        k = int(np.argmin(d2))

        def f(u):
            fu = float(self.profile(np.array([u]))[0])
            return (u - t) ** 2 + max(s - fu, 0.0) ** 2

        a, b = _golden_section(f, ts[max(k - 1, 0)], ts[min(k + 1, len(ts) - 1)], 1e-13)
        u = 0.5 * (a + b)
        return np.array([u, min(float(self.profile(np.array([u]))[0]), s)])


def _golden_section(f, a, b, tol):
    invphi = (math.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return a, b


@dataclass(frozen=True)
class Intersection(Domain):
    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValueError("intersection needs at least one part")
        if len({p.dim for p in parts}) != 1:
            raise ValueError("all parts must share a dimension")
        object.__setattr__(self, "parts", parts)

    @property
    def dim(self) -> int:
        return self.parts[0].dim

    def _distance(self, pts):
        d = self.parts[0]._distance(pts)
        for p in self.parts[1:]:
            d = np.minimum(d, p._distance(pts))
        return d


@dataclass(frozen=True)
class TransformedDomain(Domain):
    """Image T(base) of a domain under a similarity transform."""

    transform: SimilarityTransform
    base: Domain

    @property
    def dim(self) -> int:
        return self.base.dim

    def _distance(self, pts):
        inv = self.transform.inverse()
        return self.transform.scale * self.base._distance(inv(pts))


def distance(domain: Domain, x):
    """Distance from x to the complement of the domain (0 outside)."""
    return domain.distance(x)


def contains(domain: Domain, x):
    """True iff x is strictly inside the domain (distance > 0)."""
    return domain.contains(x)


def apply_transform(T: SimilarityTransform, domain: Domain) -> Domain:
    """Image of the domain under T, rewritten per variant when possible."""
    if isinstance(domain, Ball):
        return Ball(T(domain.center), T.scale * domain.radius)
    if isinstance(domain, Halfspace):
        n = T.Q @ domain.normal
        return Halfspace(n, T.scale * domain.offset + float(n @ T.shift))
    if isinstance(domain, PuncturedSpace):
        return PuncturedSpace(T(domain.puncture))
    if isinstance(domain, PuncturedDomain):
        return PuncturedDomain(apply_transform(T, domain.base), T(domain.puncture))
    if isinstance(domain, Annulus):
        return Annulus(T(domain.center), T.scale * domain.r1, T.scale * domain.r2)
    if isinstance(domain, Cone2D):
        return Cone2D(T(domain.vertex), T.Q @ domain.axis, domain.phi)
    if isinstance(domain, Polygon2D):
        return Polygon2D(T(domain.vertices))
    if isinstance(domain, ExteriorOfCompact):
        return ExteriorOfCompact(apply_transform(T, domain.body))
    if isinstance(domain, Intersection):
        return Intersection(tuple(apply_transform(T, p) for p in domain.parts))
    if isinstance(domain, TransformedDomain):
        return TransformedDomain(T.compose(domain.transform), domain.base)
    return TransformedDomain(T, domain)


def supporting_halfspace(domain: Domain, boundary_point, tol: float = 1e-9) -> Halfspace:
    """Halfspace containing a convex domain and touching it at boundary_point.

    At polygon corners the returned normal bisects the two edge normals.
    """
    bp = np.asarray(boundary_point, dtype=float)
    if domain.distance(bp) > tol:
        raise ValueError("point is not on the boundary")
    if isinstance(domain, Halfspace):
        if abs(bp @ domain.normal - domain.offset) > tol:
            raise ValueError("point is not on the boundary")
        return domain
    if isinstance(domain, Ball):
        u = bp - domain.center
        if abs(np.linalg.norm(u) - domain.radius) > tol:
            raise ValueError("point is not on the boundary")
        n = -u / np.linalg.norm(u)
        return Halfspace(n, float(n @ bp))
    if isinstance(domain, Polygon2D):
        if not domain.is_convex():
            raise ValueError("supporting halfspace requires a convex domain")
        centroid = domain.vertices.mean(axis=0)
        normals = []
        for a, b in domain._edges():
            if np.linalg.norm(bp - _segment_nearest(bp, a, b)) <= tol:
                e = b - a
                n = np.array([-e[1], e[0]])
                n /= np.linalg.norm(n)
                if (centroid - a) @ n < 0:
                    n = -n
                normals.append(n)
        if not normals:
            raise ValueError("point is not on the boundary")
        n = np.sum(normals, axis=0)
        n /= np.linalg.norm(n)
        return Halfspace(n, float(n @ bp))
    raise ValueError(f"unsupported (non-convex) variant {type(domain).__name__}")


def nearest_boundary_point(domain: Domain, x) -> np.ndarray:
    """Closest complement point to an interior x, lexicographic ties."""
    p = np.asarray(x, dtype=float)
    d = domain.distance(p)
    if d <= 0:
        raise ValueError("x must be strictly inside the domain")
    cands = _nearest_candidates(domain, p)
    dists = [np.linalg.norm(p - c) for c in cands]
    dmin = min(dists)
    best = [c for c, dd in zip(cands, dists) if dd <= dmin + _TIE_TOL]
    return _lex_min(best)


def _nearest_candidates(domain: Domain, p: np.ndarray) -> list[np.ndarray]:
    if isinstance(domain, Halfspace):
        return [p - (p @ domain.normal - domain.offset) * domain.normal]
    if isinstance(domain, Ball):
        u = p - domain.center
        r = np.linalg.norm(u)
        if r == 0:
            e = np.zeros(domain.dim)
            e[0] = -1.0
            return [domain.center + domain.radius * e]
        return [domain.center + domain.radius * u / r]
    if isinstance(domain, PuncturedSpace):
        return [domain.puncture.copy()]
    if isinstance(domain, PuncturedDomain):
        return [domain.puncture.copy()] + _nearest_candidates(domain.base, p)
    if isinstance(domain, Annulus):
        u = p - domain.center
        r = np.linalg.norm(u)
        u = u / r
        return [domain.center + domain.r1 * u, domain.center + domain.r2 * u]
    if isinstance(domain, Cone2D):
        v = p - domain.vertex
        out = []
        for ray in domain.boundary_rays():
            t = max(float(v @ ray), 0.0)
            out.append(domain.vertex + t * ray)
        return out
    if isinstance(domain, Polygon2D):
        return [_segment_nearest(p, a, b) for a, b in domain._edges()]
    if isinstance(domain, ExteriorOfCompact):
        body = domain.body
        if isinstance(body, Ball):
            u = p - body.center
            return [body.center + body.radius * u / np.linalg.norm(u)]
        return [_segment_nearest(p, a, b) for a, b in body._edges()]
    if isinstance(domain, Intersection):
        out = []
        for part in domain.parts:
            out.extend(_nearest_candidates(part, p))
        return out
    if isinstance(domain, TransformedDomain):
        inv = domain.transform.inverse()
        return [
            domain.transform(c) for c in _nearest_candidates(domain.base, inv(p))
        ]
    if isinstance(domain, Epigraph):
        return [domain.nearest_hypograph_point(p)]
    raise ValueError(f"nearest boundary point unsupported for {type(domain).__name__}")


# --- JSON wire format -------------------------------------------------------

_BUMP_DOC = "compactly supported C^2 bump: a*exp(1 - 1/(1 - (t/w)^2)) on |t|<w"


def bump_profile(amplitude: float, width: float) -> Callable[[np.ndarray], np.ndarray]:
    def f(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        inside = np.abs(t) < width
        q = (t[inside] / width) ** 2
        out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - q))
        return out

    return f


def domain_to_json(domain: Domain) -> dict:
    if isinstance(domain, Halfspace):
        return {
            "type": "halfspace",
            "normal": domain.normal.tolist(),
            "offset": domain.offset,
        }
    if isinstance(domain, Ball):
        return {"type": "ball", "center": domain.center.tolist(), "radius": domain.radius}
    if isinstance(domain, PuncturedSpace):
        return {"type": "punctured_space", "puncture": domain.puncture.tolist()}
    if isinstance(domain, PuncturedDomain):
        return {
            "type": "puncture",
            "puncture": domain.puncture.tolist(),
            "inner": domain_to_json(domain.base),
        }
    if isinstance(domain, Annulus):
        return {
            "type": "annulus",
            "center": domain.center.tolist(),
            "r1": domain.r1,
            "r2": domain.r2,
        }
    if isinstance(domain, Cone2D):
        return {
            "type": "cone",
            "vertex": domain.vertex.tolist(),
            "axis": domain.axis.tolist(),
            "phi": domain.phi,
        }
    if isinstance(domain, Polygon2D):
        return {"type": "polygon", "vertices": domain.vertices.tolist()}
    if isinstance(domain, ExteriorOfCompact):
        return {"type": "exterior", "inner": domain_to_json(domain.body)}
    if isinstance(domain, Intersection):
        return {"type": "intersection", "parts": [domain_to_json(p) for p in domain.parts]}
    if isinstance(domain, Epigraph):
        if domain.label != "bump":
            raise ValueError("only named epigraph profiles serialize to JSON")
        return {"type": "epigraph", "profile": "bump", "bound": domain.bound, **domain.params}
    if isinstance(domain, TransformedDomain):
        t = domain.transform
        return {
            "type": "transform",
            "r": t.scale,
            "Q": t.Q.tolist(),
            "shift": t.shift.tolist(),
            "inner": domain_to_json(domain.base),
        }
    raise ValueError(f"cannot serialize {type(domain).__name__}")


def domain_from_json(spec: dict) -> Domain:
    kind = spec["type"]
    if kind == "halfspace":
        return Halfspace(np.array(spec["normal"]), spec["offset"])
    if kind == "ball":
        return Ball(np.array(spec["center"]), spec["radius"])
    if kind == "punctured_space":
        return PuncturedSpace(np.array(spec["puncture"]))
    if kind == "puncture":
        return PuncturedDomain(domain_from_json(spec["inner"]), np.array(spec["puncture"]))
    if kind == "annulus":
        return Annulus(np.array(spec["center"]), spec["r1"], spec["r2"])
    if kind == "cone":
        return Cone2D(np.array(spec["vertex"]), np.array(spec["axis"]), spec["phi"])
    if kind == "polygon":
        return Polygon2D(np.array(spec["vertices"]))
    if kind == "exterior":
        return ExteriorOfCompact(domain_from_json(spec["inner"]))
    if kind == "intersection":
        return Intersection(tuple(domain_from_json(p) for p in spec["parts"]))
    if kind == "epigraph":
        if spec.get("profile") != "bump":
            raise ValueError("unknown epigraph profile")
        amp, width = spec["amplitude"], spec["width"]
        return Epigraph(
            bump_profile(amp, width),
            spec["bound"],
            label="bump",
            params={"amplitude": amp, "width": width},
        )
    if kind == "scale":
        inner = domain_from_json(spec["inner"])
        return apply_transform(SimilarityTransform.dilation(spec["r"], inner.dim), inner)
    if kind == "translate":
        inner = domain_from_json(spec["inner"])
        return apply_transform(SimilarityTransform.translation(np.array(spec["offset"])), inner)
    if kind == "rotate":
        inner = domain_from_json(spec["inner"])
        return apply_transform(SimilarityTransform.rotation2d(spec["angle"]), inner)
    if kind == "transform":
        inner = domain_from_json(spec["inner"])
        T = SimilarityTransform(spec["r"], np.array(spec["Q"]), np.array(spec["shift"]))
        return apply_transform(T, inner)
    raise ValueError(f"unknown domain type {kind!r}")
