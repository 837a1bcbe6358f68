"""Codimension-budgeted essential inradius.

For a body A and budget k this module estimates

    rho_k(A) = sup { r : exists x, exists Y with codim(Y) <= k,
                         x + r*(B_X /\\ Y) subset of A }

with three routes: an exact closed-form optimizer over coordinate
subspaces for separable shapes, a general alternating search returning
verified lower witnesses, and the analytic upper bound for cylinder
pieces.  At finite dimension the unrestricted supremum degenerates, so the
budget k is always explicit.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .body import ConvexBody, Halfspace, Intersection, NormBall, QCylinder
from .space import INF, BlockSpace, sample_ball


class UnsupportedShapeError(ValueError):
    """Shape outside the coordinate-exact family; use inradius_search."""


class BudgetTooLargeError(ValueError):
    """Codimension budget voids the analytic family bound."""


# -- certificates ---------------------------------------------------------------


@dataclass(frozen=True)
class Subspace:
    """Either a coordinate complement (dropped indices) or a general
    subspace given by an orthonormal spanning basis (rows)."""

    kind: str  # "coordinate" | "general"
    codim: int
    dropped: tuple[int, ...] = ()
    basis: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "coordinate":
            if len(self.dropped) != self.codim:
                raise ValueError("dropped-index count must equal codim")
        elif self.kind == "general":
            if self.basis is None:
                raise ValueError("general subspace requires a basis")
            gram = self.basis @ self.basis.T
            if not np.allclose(gram, np.eye(len(self.basis)), atol=1e-10):
                raise ValueError("basis must be orthonormal to 1e-10")
        else:
            raise ValueError(f"unknown subspace kind {self.kind!r}")

    def to_json(self) -> dict:
        if self.kind == "coordinate":
            return {"kind": "coordinate", "codim": self.codim,
                    "dropped": list(self.dropped)}
        return {"kind": "general", "codim": self.codim,
                "basis": np.asarray(self.basis).tolist()}


@dataclass
class InradiusCertificate:
    value: float
    witness_center: np.ndarray
    witness_subspace: Subspace
    kind: str  # "exact" | "lower_witness" | "upper_bound"
    notes: str = ""

    def to_json(self) -> dict:
        return {"value": self.value, "kind": self.kind,
                "center": np.asarray(self.witness_center).tolist(),
                "subspace": self.witness_subspace.to_json(),
                "notes": self.notes}


def _coordinate_subspace(dropped) -> Subspace:
    dropped = tuple(sorted(int(i) for i in dropped))
    return Subspace(kind="coordinate", codim=len(dropped), dropped=dropped)


# -- shared closed-form pieces ----------------------------------------------------


def _phi(m: int, qc: float, qs: float) -> float:
    """sup of sum u_i^qc over m nonnegative coordinates with l_qs norm <= 1."""
    if m <= 0:
        return 0.0
    if qs == INF:
        return float(m)
    return float(m) ** max(0.0, 1.0 - qc / qs)


def _bisect_decreasing(fn, lo: float, hi: float, iters: int = 80) -> float:
    """Root of a function decreasing in its argument on [lo, hi]."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fn(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _max_linear_tradeoff(c1: float, c2: float, qs: float, qc: float) -> float:
    """max over a in [0,1] of c1*a + c2*(1-a^qs)^(qc/qs).

    Analytic for matching exponents (the usual stationarity condition);
    dense grid for the mixed-exponent case."""
    if c2 == 0.0:
        return max(c1, 0.0)
    if qs == INF:
        return c1 + c2
    if qc == qs:
        q = qs
        if q == 1.0:
            return max(c1, c2)
        a = min((c1 / (c2 * q)) ** (1.0 / (q - 1.0)), 1.0) if c1 > 0 else 0.0
        return c1 * a + c2 * (1.0 - a**q)
    grid = np.linspace(0.0, 1.0, 4001)
    vals = c1 * grid + c2 * np.maximum(1.0 - grid**qs, 0.0) ** (qc / qs)
    return float(vals.max())


# -- QCylinder coordinate solver ---------------------------------------------------


def _qcyl_case_a(w0: float, qs: float, qc: float, betaphi: float,
                 level: float) -> tuple[float, float]:
    """Coordinate 0 dropped, center -sign*t*e0.  Returns (r, t)."""
    if qs == INF:
        t = 1.0 / w0
        if betaphi == 0.0:
            return 1.0, 0.0
        r = min(1.0, ((level + t) / betaphi) ** (1.0 / qc))
        t_needed = max(0.0, betaphi * r**qc - level)
        return r, min(t, t_needed)
    f1 = lambda t: max(1.0 - (w0 * t) ** qs, 0.0) ** (1.0 / qs)
    if betaphi == 0.0:
        return 1.0, 0.0
    f2 = lambda t: ((level + t) / betaphi) ** (1.0 / qc)
    if f2(0.0) >= f1(0.0):
        return f1(0.0), 0.0
    t_star = _bisect_decreasing(lambda t: f1(t) - f2(t), 0.0, 1.0 / w0)
    return f1(t_star), t_star


def _qcyl_case_b(w0: float, qs: float, qc: float, betaphi: float,
                 level: float) -> tuple[float, float]:
    """Coordinate 0 live, center -sign*t*e0.  Returns (r, t)."""

    def constraint_sup(r: float) -> float:
        # sup over ball directions of the cylinder functional increment
        if qs == INF:
            return r / w0 + betaphi * r**qc
        return _max_linear_tradeoff(r / w0, betaphi * r**qc, qs, qc)

    def r2(t: float) -> float:
        target = level + t
        if constraint_sup(1.0) <= target:
            return 1.0
        lo, hi = 0.0, 1.0
        for _ in range(70):
            mid = 0.5 * (lo + hi)
            if constraint_sup(mid) <= target:
                lo = mid
            else:
                hi = mid
        return lo

    f1 = lambda t: 1.0 - w0 * t
    if r2(0.0) >= f1(0.0):
        return f1(0.0), 0.0
    t_star = _bisect_decreasing(lambda t: f1(t) - r2(t), 0.0, 1.0 / w0)
    return min(f1(t_star), r2(t_star)), t_star


def _qcyl_coordinate_exact(body: ConvexBody, k: int) -> InradiusCertificate:
    space = body.space
    shape: QCylinder = body.shape
    qs, qc = space.outer_q, shape.q
    w0 = float(space.weights[0])
    residues = [int(b) for b in shape.residue_blocks(space.n_blocks)]
    beta = shape.beta
    level = shape.level
    nres = len(residues)

    best = None  # (value, t, drop0, m_drop)
    if shape.sign == 0:
        for m_drop in range(0, min(k, nres) + 1):
            m = nres - m_drop
            bp = beta * _phi(m, qc, qs)
            if level < 0:
                r = 0.0
            elif bp == 0.0:
                r = 1.0
            else:
                r = min(1.0, (level / bp) ** (1.0 / qc))
            if best is None or r > best[0] + 1e-15:
                best = (r, 0.0, False, m_drop)
    else:
        for drop0 in (True, False):
            cost0 = 1 if drop0 else 0
            if cost0 > k:
                continue
            for m_drop in range(0, min(k - cost0, nres) + 1):
                m = nres - m_drop
                bp = beta * _phi(m, qc, qs)
                if drop0:
                    r, t = _qcyl_case_a(w0, qs, qc, bp, level)
                else:
                    r, t = _qcyl_case_b(w0, qs, qc, bp, level)
                if best is None or r > best[0] + 1e-15:
                    best = (r, t, drop0, m_drop)

    value, t, drop0, m_drop = best
    dropped = ([0] if drop0 else []) + residues[:m_drop]
    center = np.zeros(space.dim)
    if shape.sign != 0:
        center[0] = -shape.sign * t
    return InradiusCertificate(
        value=float(value), witness_center=center,
        witness_subspace=_coordinate_subspace(dropped), kind="exact",
        notes=f"cylinder coordinate optimum (drop0={drop0}, residue_drops={m_drop})")


# -- box (ball + coordinate halfspaces) solver --------------------------------------


def _coordinate_bounds(space: BlockSpace, shape: Intersection):
    """Interpret an Intersection as ball(0, R) + per-coordinate bounds.
    Returns (R0, lo, hi) or None when some part is not coordinate-aligned."""
    radius = None
    lo = np.full(space.dim, -np.inf)
    hi = np.full(space.dim, np.inf)
    for part in shape.parts:
        if isinstance(part, NormBall):
            c = part.center_array(space.dim)
            if np.any(c != 0.0):
                return None
            radius = part.radius if radius is None else min(radius, part.radius)
        elif isinstance(part, Halfspace):
            a = np.asarray(part.normal, dtype=np.float64)
            nz = np.nonzero(a)[0]
            if len(nz) != 1:
                return None
            i = int(nz[0])
            bound = part.offset / a[i]
            if a[i] > 0:
                hi[i] = min(hi[i], bound)
            else:
                lo[i] = max(lo[i], bound)
        else:
            return None
    if radius is None:
        return None
    return radius, lo, hi


def _box_coordinate_exact(body: ConvexBody, k: int) -> InradiusCertificate:
    space = body.space
    parsed = _coordinate_bounds(space, body.shape)
    if parsed is None:
        raise UnsupportedShapeError(
            "unsupported shape for the coordinate solver, use inradius_search")
    radius, lo, hi = parsed
    qs = space.outer_q
    w = space.coord_weights
    constrained = [i for i in range(space.dim)
                   if lo[i] > -np.inf or hi[i] < np.inf]
    n_subsets = sum(1 for s in range(min(k, len(constrained)) + 1)
                    for _ in itertools.combinations(constrained, s))
    if n_subsets > 20000:
        raise UnsupportedShapeError(
            "too many coordinate subsets; use inradius_search")

    def feasible_center(r: float, dropped: set[int]):
        z = np.zeros(space.dim)
        for i in constrained:
            s_i = 0.0 if i in dropped else 1.0 / w[i]
            a, b = lo[i] + r * s_i, hi[i] - r * s_i
            if a > b + 1e-15:
                return None
            z[i] = min(max(0.0, a), b)
        live = [i for i in constrained if i not in dropped]
        if qs == INF:
            total = r
            if dropped:
                total = max(total, max(w[i] * abs(z[i]) for i in dropped))
            if live:
                total = max(total, max(w[i] * abs(z[i]) for i in live) + r)
        else:
            drop_q = sum((w[i] * abs(z[i])) ** qs for i in dropped)
            live_norm = sum((w[i] * abs(z[i])) ** qs for i in live) ** (1.0 / qs)
            total = (drop_q + (live_norm + r) ** qs) ** (1.0 / qs)
        if total > radius + 1e-15:
            return None
        return z

    best = None  # (value, dropped, center)
    for size in range(0, min(k, len(constrained)) + 1):
        for combo in itertools.combinations(constrained, size):
            dropped = set(combo)
            lo_r, hi_r = 0.0, radius
            if feasible_center(0.0, dropped) is None:
                continue
            for _ in range(80):
                mid = 0.5 * (lo_r + hi_r)
                if feasible_center(mid, dropped) is not None:
                    lo_r = mid
                else:
                    hi_r = mid
            z = feasible_center(lo_r, dropped)
            if best is None or lo_r > best[0] + 1e-15:
                best = (lo_r, combo, z)
    value, combo, z = best
    return InradiusCertificate(
        value=float(value), witness_center=z,
        witness_subspace=_coordinate_subspace(combo), kind="exact",
        notes="box coordinate optimum")


# -- public coordinate entry point ---------------------------------------------------


def inradius_coordinate(body: ConvexBody, k: int) -> InradiusCertificate:
    """Exact optimum of the inradius over coordinate subspaces of
    codimension <= k, for separable shapes on width-1-block spaces."""
    space = body.space
    if not (0 <= k < space.dim):
        raise ValueError("need 0 <= k < dim")
    shape = body.shape
    if isinstance(shape, NormBall):
        c = shape.center_array(space.dim)
        return InradiusCertificate(
            value=float(shape.radius), witness_center=c,
            witness_subspace=_coordinate_subspace(()), kind="exact",
            notes="norm ball: concentric witness")
    if not space.is_pure:
        raise UnsupportedShapeError(
            "coordinate solver requires width-1 blocks, use inradius_search")
    if isinstance(shape, QCylinder):
        return _qcyl_coordinate_exact(body, k)
    if isinstance(shape, Intersection):
        return _box_coordinate_exact(body, k)
    raise UnsupportedShapeError(
        "unsupported shape for the coordinate solver, use inradius_search")


# -- analytic upper bound for cylinder pieces -----------------------------------------


def inradius_upper_family(body: ConvexBody, k: int) -> float:
    """Analytic upper bound (M / (c^q n))^(1/q) for cylinder pieces, where
    M = level + max |x0| over the ball and n = modulus/2.  Valid whenever
    every codim-k coordinate subspace retains a residue coordinate; clamps
    to the ball radius 1."""
    shape = body.shape
    if not isinstance(shape, QCylinder):
        raise UnsupportedShapeError("family bound applies to cylinder pieces")
    nres = len(shape.residue_blocks(body.space.n_blocks))
    if k >= nres:
        raise BudgetTooLargeError("budget too large: bound void")
    if shape.c == 0.0:
        return 1.0
    w0 = float(body.space.weights[0])
    m_const = shape.level + 1.0 / w0
    raw = (m_const / (shape.c**shape.q * (shape.modulus / 2.0))) ** (1.0 / shape.q)
    return min(1.0, float(raw))


# -- general search --------------------------------------------------------------------


def _norm_gradient(space: BlockSpace, v: np.ndarray) -> np.ndarray:
    """(Sub)gradient direction of the space norm at v (pure spaces analytic,
    block spaces by central differences)."""
    if space.is_pure:
        w = space.coord_weights
        q = space.outer_q
        if q == INF:
            g = np.zeros_like(v)
            i = int(np.argmax(w * np.abs(v)))
            g[i] = np.sign(v[i]) * w[i]
            return g
        return np.sign(v) * (w * np.abs(v)) ** (q - 1.0) * w
    g = np.zeros_like(v)
    h = 1e-6
    for i in range(space.dim):
        e = np.zeros_like(v)
        e[i] = h
        g[i] = (space.norm(v + e) - space.norm(v - e)) / (2 * h)
    return g


def _active_normal(body: ConvexBody, pt: np.ndarray) -> np.ndarray:
    """Outward normal of the constraint that is (nearly) active at pt."""
    space = body.space
    shape = body.shape
    if isinstance(shape, Intersection):
        sub = max(shape.parts,
                  key=lambda p: float(_shape_margin_single(space, p, pt)))
        return _active_normal(ConvexBody(space=space, shape=sub), pt)
    if isinstance(shape, Halfspace):
        return np.asarray(shape.normal, dtype=np.float64)
    if isinstance(shape, NormBall):
        return _norm_gradient(space, pt - shape.center_array(space.dim))
    if isinstance(shape, QCylinder):
        blocks = shape.residue_blocks(space.n_blocks)
        ball_m = space.norm(pt) - 1.0
        from . import kernels

        cyl_m = float(kernels.qcyl_margins(
            np.ascontiguousarray(pt[None, :]), space.offsets, space.lengths,
            space.weights, space.inner_p, float(shape.sign), blocks,
            shape.beta, shape.q, shape.level)[0])
        if ball_m >= cyl_m:
            return _norm_gradient(space, pt)
        g = np.zeros(space.dim)
        g[0] = float(shape.sign)
        w = space.coord_weights
        for b in blocks:
            off, length = body.space.blocks[b]
            seg = pt[off : off + length]
            bn = space.block_norms(pt)[0][b]
            if bn <= 0:
                continue
            # gradient of beta * bn^q through the inner norm
            inner = _norm_gradient(_pure_like(space, off, length), seg) \
                if length > 1 else np.sign(seg)
            g[off : off + length] = shape.beta * shape.q * bn ** (shape.q - 1.0) \
                * w[off] * inner
        return g
    raise UnsupportedShapeError(f"no normal rule for {type(shape).__name__}")


def _pure_like(space: BlockSpace, off: int, length: int) -> BlockSpace:
    from .space import lp_space

    return lp_space(space.inner_p, length)


def _shape_margin_single(space, shape, pt) -> float:
    from .body import _margins

    return float(_margins(space, shape, np.ascontiguousarray(pt[None, :]))[0])


def _complement_basis(dropped: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal rows spanning the orthogonal complement of the dropped
    directions."""
    if dropped.size == 0:
        return np.eye(dim)
    q, _ = np.linalg.qr(dropped.T, mode="complete")
    return q[:, dropped.shape[0]:].T


def _direction_net(space: BlockSpace, dropped: np.ndarray, budget: int,
                   rng: np.random.Generator) -> np.ndarray:
    """Unit-space-norm directions inside the complement of `dropped`:
    the signed basis projections plus `budget` random ball directions."""
    dim = space.dim
    cands = np.vstack([np.eye(dim), -np.eye(dim),
                       sample_ball(space, max(budget, 1), seed=int(rng.integers(2**31)))])
    if dropped.size:
        cands = cands - cands @ dropped.T @ dropped
    norms = space.norms(cands)
    keep = norms > 1e-9
    return cands[keep] / norms[keep][:, None]


def _boundary_distances(body: ConvexBody, x: np.ndarray, units: np.ndarray,
                        s_max: float = 2.5) -> np.ndarray:
    lo = np.zeros(len(units))
    hi = np.full(len(units), s_max)
    for _ in range(52):
        mid = 0.5 * (lo + hi)
        member = body.contains_batch(x[None, :] + mid[:, None] * units)
        lo = np.where(member, mid, lo)
        hi = np.where(member, hi, mid)
    return lo


def _improve_center(body: ConvexBody, x: np.ndarray, units: np.ndarray,
                    iters: int = 48) -> tuple[np.ndarray, np.ndarray]:
    """Nudge the center away from the tightest boundary to grow the
    smallest boundary distance (step doubles on success, halves on
    failure)."""
    d = _boundary_distances(body, x, units)
    step = 0.5 * max(float(d.max() - d.min()), 1e-3)
    for _ in range(iters):
        if step < 1e-8:
            break
        dmin = float(d.min())
        near = np.where(d <= dmin * 1.05 + 1e-9)[0][:8]
        ns = []
        for j in near:
            n = _active_normal(body, x + d[j] * units[j])
            nn = np.linalg.norm(n)
            if nn > 1e-12:
                ns.append(n / nn)
        if not ns:
            break
        moved = False
        # mean of the near-worst normals first (handles tied boundaries),
        # then the single worst as a fallback
        for n in ([np.mean(ns, axis=0)] if len(ns) > 1 else []) + [ns[0]]:
            nn = np.linalg.norm(n)
            if nn < 1e-9:
                continue
            cand = x - step * n / nn
            if body.contains(cand):
                d_cand = _boundary_distances(body, cand, units)
                if d_cand.min() > dmin + 1e-12:
                    x, d = cand, d_cand
                    moved = True
                    break
        if moved:
            step *= 2.0
        else:
            step *= 0.5
    return x, d


def _euclid_halfspace_candidate(body: ConvexBody, k: int):
    """Closed-form witness for euclidean-type balls cut by at most k
    halfspaces: drop the (orthonormalized) cut normals and recentre with
    alternating projections onto the cut constraints."""
    space = body.space
    if not (space.is_pure and space.outer_q == 2.0
            and np.all(space.coord_weights == space.coord_weights[0])):
        return None
    shape = body.shape
    if not isinstance(shape, Intersection):
        return None
    radius = None
    normals = []
    offsets = []
    for part in shape.parts:
        if isinstance(part, NormBall):
            c = part.center_array(space.dim)
            if np.any(c != 0.0):
                return None
            radius = part.radius if radius is None else min(radius, part.radius)
        elif isinstance(part, Halfspace):
            a = np.asarray(part.normal, dtype=np.float64)
            nn = np.linalg.norm(a)
            if nn == 0:
                continue
            normals.append(a / nn)
            offsets.append(part.offset / nn)
        else:
            return None
    if radius is None or len(normals) == 0 or len(normals) > k:
        return None
    mat = _orthonormalize(normals)
    if mat is None or len(mat) > k:
        return None
    scale = float(space.coord_weights[0])
    x = np.zeros(space.dim)
    for _ in range(64):  # alternating projections onto the halfspaces
        moved = False
        for a, b in zip(normals, offsets):
            slack = float(a @ x) - b
            if slack > 0:
                x = x - slack * a
                moved = True
        if not moved:
            break
    if space.norm(x) > radius + 1e-9 or body.margin(x) > 1e-7:
        return None
    eucl = (radius / scale) ** 2 - float(x @ x)
    value = 0.0 if eucl <= 0 else scale * float(np.sqrt(eucl))
    return mat, x, value


def inradius_search(body: ConvexBody, k: int, budget: int = 64,
                    seed: int = 0, rounds: int = 2,
                    improve_iters: int = 48) -> InradiusCertificate:
    """Alternating lower-witness search over general subspaces.

    Rounds alternate (a) radius/center maximization on a direction net and
    (b) re-pointing the dropped directions at the most-violating outward
    normals; every size-k combination of proposed normals is scored and the
    best two are polished.  The result is verified on a direction net
    (signed basis plus random directions) and never claims optimality.
    """
    space = body.space
    if not (0 <= k < space.dim):
        raise ValueError("need 0 <= k < dim")
    rng = np.random.default_rng(seed)
    anchor = body.interior_anchor(seed=seed)
    if anchor is None:
        return InradiusCertificate(
            value=0.0, witness_center=np.zeros(space.dim),
            witness_subspace=_coordinate_subspace(()), kind="lower_witness",
            notes="no feasible center found; body looks empty")

    candidates: list[tuple[np.ndarray, np.ndarray, str]] = []
    candidates.append((np.zeros((0, space.dim)), anchor.copy(), "no drops"))

    closed = _euclid_halfspace_candidate(body, k)
    if closed is not None:
        mat, center, _ = closed
        candidates.append((mat, center, "euclidean halfspace drops"))

    # seed with the coordinate-exact witness when the shape qualifies
    coord_cert = None
    try:
        coord_cert = inradius_coordinate(body, k)
        drop_idx = coord_cert.witness_subspace.dropped
        mat = np.zeros((len(drop_idx), space.dim))
        for row, i in enumerate(drop_idx):
            mat[row, i] = 1.0
        candidates.append((mat, coord_cert.witness_center.copy(),
                           "coordinate-exact seed"))
    except UnsupportedShapeError:
        pass

    # alternating rounds: the full-space view proposes dropped directions
    # (active outward normals at the tightest boundary points); every
    # size-k combination of the proposals becomes a candidate
    x = anchor.copy()
    if k > 0 and closed is None:
        for rnd in range(rounds):
            units = _direction_net(space, np.zeros((0, space.dim)), budget, rng)
            x, d = _improve_center(body, x, units, iters=16)
            order = np.argsort(d)
            normals: list[np.ndarray] = []
            for j in order:
                n = _active_normal(body, x + d[j] * units[j])
                nn = np.linalg.norm(n)
                if nn < 1e-12:
                    continue
                n = n / nn
                if any(abs(float(n @ prev)) > 1.0 - 1e-9 for prev in normals):
                    continue
                normals.append(n)
                if len(normals) >= max(2 * k, 4):
                    break
            for combo in itertools.combinations(range(len(normals)),
                                                min(k, len(normals))):
                mat = _orthonormalize([normals[i] for i in combo])
                if mat is not None:
                    candidates.append((mat, x.copy(),
                                       f"alternating round {rnd}"))

    # cheap scoring pass, then polish the best two
    scored = []
    for dropped, center, label in candidates:
        units = _direction_net(space, dropped, budget, rng)
        if len(units) == 0:
            continue
        if not body.contains(center):
            center = anchor.copy()
        d = _boundary_distances(body, center, units)
        scored.append((float(d.min()), dropped, center, label, units))
    scored.sort(key=lambda t: -t[0])
    best = None
    for value0, dropped, center, label, units in scored[:2]:
        center, d = _improve_center(body, center, units, iters=improve_iters)
        value = float(d.min()) * (1.0 - 1e-9)
        if best is None or value > best[0]:
            best = (value, center, dropped, label)

    value, center, dropped, label = best
    if dropped.size == 0:
        sub = _coordinate_subspace(())
    else:
        snapped = _snap_to_coordinates(dropped)
        if snapped is not None:
            sub = _coordinate_subspace(snapped)
        else:
            sub = Subspace(kind="general", codim=len(dropped),
                           basis=_complement_basis(dropped, space.dim))
    cert = InradiusCertificate(
        value=value, witness_center=center, witness_subspace=sub,
        kind="lower_witness",
        notes=f"net-verified ({label}); containment checked on the direction net")
    if coord_cert is not None and coord_cert.value > cert.value:
        cert = InradiusCertificate(
            value=coord_cert.value, witness_center=coord_cert.witness_center,
            witness_subspace=coord_cert.witness_subspace, kind="lower_witness",
            notes="coordinate-exact witness")
    return cert


def _orthonormalize(vectors) -> np.ndarray | None:
    out: list[np.ndarray] = []
    for v in vectors:
        u = v.copy()
        for prev in out:
            u = u - (u @ prev) * prev
        nn = np.linalg.norm(u)
        if nn < 1e-8:
            return None
        out.append(u / nn)
    return np.vstack(out) if out else None


def _snap_to_coordinates(dropped: np.ndarray) -> tuple[int, ...] | None:
    idx = []
    for row in dropped:
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) < 1.0 - 1e-9:
            return None
        idx.append(j)
    if len(set(idx)) != len(idx):
        return None
    return tuple(sorted(idx))


def containment_check(body: ConvexBody, cert: InradiusCertificate,
                      n_random: int = 256, seed: int = 0,
                      shrink: float = 1e-9) -> bool:
    """Monte-Carlo + signed-basis verification that the witness ball sits
    inside the body (net semantics, matching the certificate contract)."""
    space = body.space
    sub = cert.witness_subspace
    if sub.kind == "coordinate":
        keep = np.ones(space.dim, dtype=bool)
        keep[list(sub.dropped)] = False
        basis = np.eye(space.dim)[keep]
    else:
        basis = sub.basis
    rng = np.random.default_rng(seed)
    dirs = np.vstack([basis, -basis,
                      rng.normal(size=(n_random, basis.shape[0])) @ basis])
    norms = space.norms(dirs)
    dirs = dirs[norms > 1e-12] / norms[norms > 1e-12][:, None]
    pts = cert.witness_center[None, :] + cert.value * (1 - shrink) * dirs
    return bool(np.all(body.contains_batch(pts, tol=1e-7)))
