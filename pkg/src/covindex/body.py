"""Oracle-backed closed bounded convex subsets of a block space.

Shapes: norm balls, halfspaces, residue-class cylinder pieces (the sets the
explicit ball coverings are made of) and finite intersections.  Bodies
expose a membership margin (<= 0 inside), a support-function estimate, and
a sampled convexity self-test.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .space import INF, BlockSpace, DimensionMismatchError, sample_ball

MEMBERSHIP_TOL = 1e-9


class UnboundedBodyError(ValueError):
    """Support direction along which the body is unbounded."""


# -- shapes -------------------------------------------------------------------


@dataclass(frozen=True)
class NormBall:
    """{x : |x - center| <= radius} in the space norm."""

    center: tuple[float, ...]
    radius: float

    def center_array(self, dim: int) -> np.ndarray:
        if isinstance(self.center, (int, float)) and self.center == 0:
            return np.zeros(dim)
        c = np.asarray(self.center, dtype=np.float64)
        if c.shape == ():
            return np.full(dim, float(c))
        return c


@dataclass(frozen=True)
class Halfspace:
    """{x : <normal, x> <= offset}."""

    normal: tuple[float, ...]
    offset: float


@dataclass(frozen=True)
class QCylinder:
    """Residue-class cylinder piece of the unit ball:

        {x in B_X : sign*x0 <= level - beta * sum_{b in R} |x_b|^q}

    where R is the set of block indices b >= 1 with (b mod modulus) in
    ``residues``, |x_b| is the weighted inner block norm, and
    beta = c^q * (modulus / 2).  ``sign`` may be -1, 0 or +1 (0 gives the
    pure cylinder cell with no scalar-coordinate term).
    """

    sign: int
    residues: tuple[int, ...]
    modulus: int
    c: float
    q: float
    level: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or +1")
        if self.modulus < 1:
            raise ValueError("modulus must be >= 1")
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if self.c < 0:
            raise ValueError("c must be >= 0")
        object.__setattr__(
            self, "residues",
            tuple(sorted({r % self.modulus for r in self.residues})))

    @property
    def beta(self) -> float:
        return self.c**self.q * (self.modulus / 2.0)

    def residue_blocks(self, n_blocks: int) -> np.ndarray:
        return np.array(
            [b for b in range(1, n_blocks) if b % self.modulus in self.residues],
            dtype=np.int64)


@dataclass(frozen=True)
class Intersection:
    parts: tuple


Shape = NormBall | Halfspace | QCylinder | Intersection


@dataclass(frozen=True)
class ConvexBody:
    """A shape bound to its ambient space, with a membership oracle."""

    space: BlockSpace
    shape: Shape

    # -- membership --------------------------------------------------------

    def margins(self, pts) -> np.ndarray:
        """Worst constraint violation per row; <= 0 means member."""
        pts = self.space._as_batch(pts)
        return _margins(self.space, self.shape, pts)

    def margin(self, x) -> float:
        return float(self.margins(np.asarray(x, dtype=np.float64)[None, :])[0])

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.space.dim,):
            raise DimensionMismatchError(f"expected length-{self.space.dim} point")
        return bool(self.margin(x) <= tol)

    def contains_batch(self, pts, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
        return self.margins(pts) <= tol

    # -- geometry ----------------------------------------------------------

    def bounding_radius(self) -> float:
        return _bounding_radius(self.space, self.shape)

    def interior_anchor(self, seed: int = 0) -> np.ndarray | None:
        """A member point to anchor searches, or None if none was found."""
        dim = self.space.dim
        candidates = [np.zeros(dim)]
        candidates.extend(_shape_centers(self.space, self.shape))
        pts = sample_ball(self.space, 64, seed=seed)
        candidates.extend(pts)
        for cand in candidates:
            if self.margin(cand) <= MEMBERSHIP_TOL:
                return np.asarray(cand, dtype=np.float64)
        return None

    def to_json(self) -> dict:
        return {"space": self.space.to_json(), "shape": shape_to_json(self.shape)}

    @staticmethod
    def from_json(doc: dict) -> "ConvexBody":
        return ConvexBody(space=BlockSpace.from_json(doc["space"]),
                          shape=shape_from_json(doc["shape"]))


# -- margin evaluation ---------------------------------------------------------


def _margins(space: BlockSpace, shape: Shape, pts: np.ndarray) -> np.ndarray:
    if isinstance(shape, NormBall):
        c = shape.center_array(space.dim)
        return space.norms(pts - c[None, :]) - shape.radius
    if isinstance(shape, Halfspace):
        a = np.asarray(shape.normal, dtype=np.float64)
        return pts @ a - shape.offset
    if isinstance(shape, QCylinder):
        blocks = shape.residue_blocks(space.n_blocks)
        cyl = kernels.qcyl_margins(pts, space.offsets, space.lengths,
                                   space.weights, space.inner_p,
                                   float(shape.sign), blocks, shape.beta,
                                   shape.q, shape.level)
        ball = space.norms(pts) - 1.0
        return np.maximum(cyl, ball)
    if isinstance(shape, Intersection):
        out = np.full(pts.shape[0], -np.inf)
        for part in shape.parts:
            out = np.maximum(out, _margins(space, part, pts))
        return out
    raise TypeError(f"unknown shape {type(shape).__name__}")


def _bounding_radius(space: BlockSpace, shape: Shape) -> float:
    if isinstance(shape, NormBall):
        c = shape.center_array(space.dim)
        return shape.radius + space.norm(c)
    if isinstance(shape, Halfspace):
        return INF
    if isinstance(shape, QCylinder):
        return 1.0
    if isinstance(shape, Intersection):
        return min(_bounding_radius(space, p) for p in shape.parts)
    raise TypeError(f"unknown shape {type(shape).__name__}")


def _shape_centers(space: BlockSpace, shape: Shape) -> list[np.ndarray]:
    if isinstance(shape, NormBall):
        return [shape.center_array(space.dim)]
    if isinstance(shape, Intersection):
        out = []
        for p in shape.parts:
            out.extend(_shape_centers(space, p))
        return out
    return []


# -- support function -----------------------------------------------------------


class SupportValue(float):
    """Support-function value; ``exact`` is False for ascent estimates."""

    exact: bool

    def __new__(cls, value: float, exact: bool):
        obj = super().__new__(cls, value)
        obj.exact = exact
        return obj


def support(body: ConvexBody, direction, max_iter: int = 400) -> SupportValue:
    """sup over the body of <direction, x>.

    Closed form for norm balls and for halfspaces along their own normal;
    otherwise projected ascent with membership bisection, reconciled with
    the cheapest closed-form upper bound (exact when the two meet).
    """
    d = np.asarray(direction, dtype=np.float64)
    if not np.any(d):
        raise ValueError("direction must be nonzero")
    space = body.space
    shape = body.shape

    if isinstance(shape, NormBall):
        c = shape.center_array(space.dim)
        return SupportValue(float(d @ c) + shape.radius * space.dual_norm(d), True)
    if isinstance(shape, Halfspace):
        a = np.asarray(shape.normal, dtype=np.float64)
        t = _parallel_factor(d, a)
        if t is None or t <= 0:
            raise UnboundedBodyError("halfspace unbounded in this direction")
        return SupportValue(t * shape.offset, True)

    upper = _support_upper(space, shape, d)
    if upper == INF:
        raise UnboundedBodyError("body unbounded in this direction")
    anchor = body.interior_anchor()
    if anchor is None:
        raise ValueError("no feasible point found; body looks empty")
    lower = _support_ascent(body, d, anchor, max_iter=max_iter)
    if upper - lower <= 1e-6:
        return SupportValue(upper, True)
    return SupportValue(lower, False)


def _parallel_factor(d: np.ndarray, a: np.ndarray) -> float | None:
    na, nd = np.linalg.norm(a), np.linalg.norm(d)
    if na == 0:
        return None
    cos = float(d @ a) / (na * nd)
    if cos < 1 - 1e-12:
        return None
    return nd / na


def _support_upper(space: BlockSpace, shape: Shape, d: np.ndarray) -> float:
    if isinstance(shape, NormBall):
        c = shape.center_array(space.dim)
        return float(d @ c) + shape.radius * space.dual_norm(d)
    if isinstance(shape, QCylinder):
        return space.dual_norm(d)  # contained in the unit ball
    if isinstance(shape, Halfspace):
        a = np.asarray(shape.normal, dtype=np.float64)
        t = _parallel_factor(d, a)
        return INF if t is None or t <= 0 else t * shape.offset
    if isinstance(shape, Intersection):
        vals = [_support_upper(space, p, d) for p in shape.parts]
        return min(vals)
    raise TypeError(f"unknown shape {type(shape).__name__}")


def _support_ascent(body: ConvexBody, d: np.ndarray, anchor: np.ndarray,
                    max_iter: int = 400) -> float:
    """Ascent along d with membership bisection; on stall, contract toward
    the anchor to slide along the boundary."""
    d_unit = d / np.linalg.norm(d)
    x = anchor.copy()
    best = float(d @ x)
    step = 0.5
    for _ in range(max_iter):
        if step < 1e-9:
            break
        z = x + step * d_unit
        if body.contains(z):
            x = z
        else:
            lo, hi = 0.0, step
            for _ in range(30):
                mid = 0.5 * (lo + hi)
                if body.contains(x + mid * d_unit):
                    lo = mid
                else:
                    hi = mid
            if lo > 1e-12:
                x = x + lo * d_unit
            else:
                # stalled against the boundary: contract toward the anchor
                x = anchor + 0.9 * (x - anchor)
                step *= 0.5
        val = float(d @ x)
        if val > best:
            best = val
    return best


# -- convexity self-test ---------------------------------------------------------


@dataclass
class SelfTestReport:
    trials: int
    violations: int
    examples: list = field(default_factory=list)


def convexity_selftest(body: ConvexBody, trials: int, seed: int,
                       tol: float = MEMBERSHIP_TOL) -> SelfTestReport:
    """Sample member pairs and check random convex combinations stay in."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    members = _sample_members(body, max(2, 4 * trials), rng)
    report = SelfTestReport(trials=trials, violations=0)
    if len(members) < 2:
        return report
    members = np.asarray(members)
    for _ in range(trials):
        i, j = rng.integers(0, len(members), size=2)
        t = rng.uniform()
        mid = t * members[i] + (1 - t) * members[j]
        if not body.contains(mid, tol=10 * tol):
            report.violations += 1
            if len(report.examples) < 5:
                report.examples.append(mid)
    return report


def _sample_members(body: ConvexBody, want: int, rng: np.random.Generator):
    pts = sample_ball(body.space, 16 * want, seed=int(rng.integers(2**31)))
    keep = pts[body.contains_batch(pts)]
    if len(keep) >= want:
        return keep[:want]
    anchor = body.interior_anchor()
    if anchor is None:
        return keep
    # pull ball samples toward a known member until they enter the body
    extra = []
    for p in pts[: 4 * want]:
        z = p
        for _ in range(12):
            if body.contains(z):
                extra.append(z)
                break
            z = anchor + 0.5 * (z - anchor)
    if extra:
        keep = np.concatenate([keep, np.asarray(extra)]) if len(keep) else np.asarray(extra)
    return keep[:want]


# -- slab neighborhoods -----------------------------------------------------------


@dataclass(frozen=True)
class SlabNeighborhood:
    """Finite-functional weak-neighborhood model:
    {x : |<f_i, x - center>| < half_width for every functional f_i}."""

    center: tuple[float, ...]
    functionals: tuple[tuple[float, ...], ...]
    half_width: float

    def __post_init__(self):
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        c = np.asarray(self.center, dtype=np.float64)
        x = np.asarray(x, dtype=np.float64)
        for f in self.functionals:
            if abs(float(np.asarray(f) @ (x - c))) >= self.half_width + tol:
                return False
        return True

    def as_halfspaces(self) -> list[Halfspace]:
        c = np.asarray(self.center, dtype=np.float64)
        out = []
        for f in self.functionals:
            fa = np.asarray(f, dtype=np.float64)
            off = float(fa @ c)
            out.append(Halfspace(tuple(fa), off + self.half_width))
            out.append(Halfspace(tuple(-fa), -off + self.half_width))
        return out


def intersect_with_slab(body: ConvexBody, slab: SlabNeighborhood) -> ConvexBody:
    parts = [body.shape]
    parts.extend(slab.as_halfspaces())
    return ConvexBody(space=body.space, shape=Intersection(tuple(parts)))


# -- serialization -----------------------------------------------------------------


def shape_to_json(shape: Shape) -> dict:
    if isinstance(shape, NormBall):
        return {"shape": "norm_ball", "center": _center_json(shape.center),
                "radius": shape.radius}
    if isinstance(shape, Halfspace):
        return {"shape": "halfspace", "normal": list(map(float, shape.normal)),
                "offset": shape.offset}
    if isinstance(shape, QCylinder):
        doc = {"shape": "qcylinder", "sign": shape.sign, "modulus": shape.modulus,
               "c": shape.c, "q": shape.q, "level": shape.level}
        if len(shape.residues) == 1:
            doc["residue"] = shape.residues[0]
        else:
            doc["residues"] = list(shape.residues)
        return doc
    if isinstance(shape, Intersection):
        return {"shape": "intersection",
                "parts": [shape_to_json(p) for p in shape.parts]}
    raise TypeError(f"unknown shape {type(shape).__name__}")


def _center_json(center):
    if isinstance(center, (int, float)):
        return float(center)
    return list(map(float, center))


def shape_from_json(doc: dict) -> Shape:
    kind = doc["shape"]
    if kind == "norm_ball":
        c = doc["center"]
        center = float(c) if isinstance(c, (int, float)) else tuple(map(float, c))
        return NormBall(center=center, radius=float(doc["radius"]))
    if kind == "halfspace":
        return Halfspace(normal=tuple(map(float, doc["normal"])),
                         offset=float(doc["offset"]))
    if kind == "qcylinder":
        residues = doc.get("residues")
        if residues is None:
            residues = [doc["residue"]]
        return QCylinder(sign=int(doc["sign"]), residues=tuple(residues),
                         modulus=int(doc["modulus"]), c=float(doc["c"]),
                         q=float(doc["q"]), level=float(doc["level"]))
    if kind == "intersection":
        return Intersection(tuple(shape_from_json(p) for p in doc["parts"]))
    raise ValueError(f"unknown shape kind {kind!r}")


# -- convenience constructors --------------------------------------------------------


def unit_ball(space: BlockSpace) -> ConvexBody:
    return ConvexBody(space=space, shape=NormBall(center=0.0, radius=1.0))


def ball_with_halfspaces(space: BlockSpace, halfspaces) -> ConvexBody:
    parts = [NormBall(center=0.0, radius=1.0)]
    parts.extend(halfspaces)
    return ConvexBody(space=space, shape=Intersection(tuple(parts)))
