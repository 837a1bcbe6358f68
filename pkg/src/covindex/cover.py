"""Finite convex coverings of the unit ball.

``alternating_cover`` builds the 2n-piece family of sign-alternating
residue cylinders whose union is certified algebraically; ``cell_cover``
is its pure-cylinder degeneration (no scalar term); ``two_piece_family``
is the tunable two-piece variant used by the two-piece optimization; and
``random_convex_cover`` produces grid-of-halfspace covers for adversarial
corpora.  ``verify_cover`` stress-tests any covering by sampling.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._parallel import chunked_map, split_indices
from .body import ConvexBody, Halfspace, Intersection, NormBall, QCylinder
from .space import BlockSpace, INF, norming_functional, sample_ball


@dataclass
class CoverCertificate:
    kind: str  # "algebraic" | "sampled" | "failed" | "none"
    samples: int = 0
    misses: int = 0
    worst_margin: float = 0.0
    witness: np.ndarray | None = None
    derivation: str = ""
    replayed: int = 0

    @property
    def accepted(self) -> bool:
        return self.kind == "algebraic" or (self.kind == "sampled"
                                            and self.misses == 0)

    def to_json(self) -> dict:
        doc = {"kind": self.kind, "samples": self.samples,
               "misses": self.misses, "worst_margin": self.worst_margin,
               "replayed": self.replayed}
        if self.derivation:
            doc["derivation"] = self.derivation
        if self.witness is not None:
            doc["witness"] = np.asarray(self.witness).tolist()
        return doc


@dataclass
class Covering:
    space: BlockSpace
    pieces: tuple[ConvexBody, ...]
    provenance: dict
    certificate: CoverCertificate = field(
        default_factory=lambda: CoverCertificate(kind="none"))

    def to_json(self) -> dict:
        from .body import shape_to_json

        return {"space": self.space.to_json(),
                "pieces": [shape_to_json(p.shape) for p in self.pieces],
                "provenance": self.provenance,
                "certificate": self.certificate.to_json()}

    @staticmethod
    def from_json(doc: dict) -> "Covering":
        from .body import shape_from_json

        space = BlockSpace.from_json(doc["space"])
        pieces = tuple(ConvexBody(space=space, shape=shape_from_json(s))
                       for s in doc["pieces"])
        cert_doc = doc.get("certificate", {"kind": "none"})
        cert = CoverCertificate(
            kind=cert_doc.get("kind", "none"),
            samples=cert_doc.get("samples", 0),
            misses=cert_doc.get("misses", 0),
            worst_margin=cert_doc.get("worst_margin", 0.0),
            derivation=cert_doc.get("derivation", ""),
            replayed=cert_doc.get("replayed", 0))
        return Covering(space=space, pieces=pieces,
                        provenance=doc.get("provenance", {}), certificate=cert)


# -- cylinder-family covers ------------------------------------------------------


def _cylinder_family(space: BlockSpace, n: int, signs) -> tuple[ConvexBody, ...]:
    pieces = []
    for j in range(1, 2 * n + 1):
        pieces.append(ConvexBody(
            space=space,
            shape=QCylinder(sign=signs(j), residues=(j % (2 * n),),
                            modulus=2 * n, c=space.lower_c, q=space.outer_q,
                            level=0.5)))
    return tuple(pieces)


def _family_preconditions(space: BlockSpace, n: int):
    if n < 1:
        raise ValueError("n must be >= 1")
    if space.outer_q == INF:
        raise ValueError("cylinder covers need a finite outer exponent")
    if 2 * n > space.n_blocks - 1:
        warnings.warn(
            f"only {space.n_blocks - 1} residue blocks for {2 * n} pieces; "
            "some residue classes are empty and those pieces stay large",
            stacklevel=3)


def _partition_derivation(space: BlockSpace, pieces) -> str:
    """Re-derive the summed-inequality coverage certificate for a family of
    cylinder pieces with exact rational bookkeeping."""
    shapes = [p.shape for p in pieces]
    count = len(shapes)
    sign_sum = sum(s.sign for s in shapes)
    if sign_sum != 0:
        raise ValueError("piece signs must cancel for the summed inequality")
    levels = {Fraction(s.level).limit_denominator(10**9) for s in shapes}
    betas = {s.beta for s in shapes}
    qs = {s.q for s in shapes}
    if len(levels) != 1 or len(betas) != 1 or len(qs) != 1:
        raise ValueError("pieces must share level, beta and exponent")
    covered = np.zeros(space.n_blocks - 1, dtype=int)
    for s in shapes:
        for b in s.residue_blocks(space.n_blocks):
            covered[b - 1] += 1
    if not np.all(covered == 1):
        raise ValueError("residue classes must partition the blocks")
    level = levels.pop()
    beta = betas.pop()
    q = qs.pop()
    # a point outside every piece reverses all inequalities; summing them:
    #   0 > count*level - beta * sum_i |x_i|^q
    # so sum_i |x_i|^q > count*level/beta, and the lower outer estimate
    # turns that into |x| > c * (count*level/beta)^(1/q) >= 1.
    threshold = float(count * level) / beta
    if space.lower_c**q * threshold < 1.0 - 1e-12:
        raise ValueError("summed inequality too weak to certify coverage")
    return (f"sum of {count} reversed inequalities gives "
            f"0 > {count}*{float(level)} - {beta:g}*sum|x_i|^{q:g}; hence "
            f"sum|x_i|^{q:g} > {threshold:g} and |x| >= "
            f"{space.lower_c:g}*(sum)^{1/q:g} > 1, impossible in the ball")


def alternating_cover(space: BlockSpace, n: int) -> Covering:
    """2n cylinder pieces with alternating scalar sign, residue class j mod
    2n, level 1/2; the union is the whole ball by the summed-inequality
    argument recorded in the certificate."""
    _family_preconditions(space, n)
    pieces = _cylinder_family(space, n, signs=lambda j: -1 if j % 2 else 1)
    derivation = _partition_derivation(space, pieces)
    return Covering(space=space, pieces=pieces,
                    provenance={"family": "alternating", "n": n},
                    certificate=CoverCertificate(kind="algebraic",
                                                 derivation=derivation))


def cell_cover(space: BlockSpace, n: int) -> Covering:
    """2n pure residue cells {x in B : beta*sum_R |x_b|^q <= 1/2}; the
    degenerate (no scalar term) relative of the alternating family with the
    same summed-inequality certificate and exactly grid-like pieces."""
    _family_preconditions(space, n)
    pieces = _cylinder_family(space, n, signs=lambda j: 0)
    derivation = _partition_derivation(space, pieces)
    return Covering(space=space, pieces=pieces,
                    provenance={"family": "cells", "n": n},
                    certificate=CoverCertificate(kind="algebraic",
                                                 derivation=derivation))


def two_piece_family(space: BlockSpace, alpha: float, beta: float,
                     split=((0,), (1,)), modulus: int = 2,
                     check_samples: int = 2048, seed: int = 0) -> Covering:
    """Two cylinder pieces {x in B : +/- x0 <= alpha - beta*sum_{I+-} x_i^2}
    with I+- the residue classes of `split` mod `modulus`.  Coverage is
    validated by sampling; parameter choices that fail come back with a
    failed certificate (still usable for searches)."""
    if not space.is_pure or space.outer_q != 2.0:
        raise ValueError("two-piece family is defined on the q=2 models")
    if not (0 < alpha):
        raise ValueError("alpha must be positive")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    c = float(np.sqrt(2.0 * beta / modulus))
    plus, minus = split
    pieces = (
        ConvexBody(space=space, shape=QCylinder(sign=1, residues=tuple(plus),
                                                modulus=modulus, c=c, q=2.0,
                                                level=alpha)),
        ConvexBody(space=space, shape=QCylinder(sign=-1, residues=tuple(minus),
                                                modulus=modulus, c=c, q=2.0,
                                                level=alpha)),
    )
    cov = Covering(space=space, pieces=pieces,
                   provenance={"family": "two_piece", "alpha": alpha,
                               "beta": beta, "modulus": modulus,
                               "split": [list(plus), list(minus)]})
    return verify_cover(cov, samples=check_samples, seed=seed)


# -- verification -------------------------------------------------------------------


def _min_margins(cov: Covering, pts: np.ndarray) -> np.ndarray:
    out = np.full(pts.shape[0], np.inf)
    for piece in cov.pieces:
        out = np.minimum(out, piece.margins(pts))
    return out


def verify_cover(cov: Covering, samples: int, seed: int = 0,
                 tol: float = 1e-9) -> Covering:
    """Sample ball points and look for members of no piece.  Returns the
    covering with an upgraded certificate: failed (with a witness) on any
    true miss, otherwise sampled with the worst near-miss margin.  Cylinder
    partition families additionally replay the summed-inequality
    contradiction on pseudo-points built to lie outside every piece."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    pts = sample_ball(cov.space, samples, seed=seed)
    chunks = split_indices(samples, 20000)
    results = chunked_map(lambda se: _min_margins(cov, pts[se[0]:se[1]]), chunks)
    margins = np.concatenate(results)
    miss_idx = np.nonzero(margins > tol)[0]
    worst = float(margins.max())
    if len(miss_idx):
        cert = CoverCertificate(kind="failed", samples=samples,
                                misses=int(len(miss_idx)), worst_margin=worst,
                                witness=pts[miss_idx[0]],
                                derivation=cov.certificate.derivation)
        return Covering(space=cov.space, pieces=cov.pieces,
                        provenance=cov.provenance, certificate=cert)
    replayed = 0
    if cov.certificate.kind == "algebraic" and \
            cov.provenance.get("family") in ("alternating", "cells"):
        replayed = _replay_contradiction(cov, count=100, seed=seed + 1)
    cert = CoverCertificate(kind="sampled", samples=samples, misses=0,
                            worst_margin=worst,
                            derivation=cov.certificate.derivation,
                            replayed=replayed)
    return Covering(space=cov.space, pieces=cov.pieces,
                    provenance=cov.provenance, certificate=cert)


def _replay_contradiction(cov: Covering, count: int, seed: int) -> int:
    """Build pseudo-points that satisfy every reversed piece inequality
    (ignoring the ball constraint) by loading each residue class, polish by
    a feasibility pass, and confirm each violates the ball bound."""
    space = cov.space
    rng = np.random.default_rng(seed)
    shapes = [p.shape for p in cov.pieces]
    ok = 0
    for _ in range(count):
        x = 0.05 * sample_ball(space, 1, seed=int(rng.integers(2**31)))[0]
        x[0] = 0.0
        for s in shapes:
            blocks = s.residue_blocks(space.n_blocks)
            if len(blocks) == 0:
                continue
            b = int(blocks[rng.integers(len(blocks))])
            off, _ = space.blocks[b]
            excess = (s.level + rng.uniform(0.05, 0.3)) / s.beta
            x[off] = np.sign(rng.standard_normal() + 1e-9) * \
                excess ** (1.0 / s.q) / space.coord_weights[off]
        # feasibility polish: bump any still-unsatisfied reversed inequality
        for _ in range(8):
            bad = [s for s in shapes
                   if _cyl_functional(space, s, x) <= s.level + 1e-12
                   and len(s.residue_blocks(space.n_blocks))]
            if not bad:
                break
            for s in bad:
                blocks = s.residue_blocks(space.n_blocks)
                b = int(blocks[rng.integers(len(blocks))])
                off, _ = space.blocks[b]
                x[off] *= 2.0 if x[off] != 0 else 1.0
                if x[off] == 0:
                    x[off] = 1.0 / space.coord_weights[off]
        reversed_all = all(
            _cyl_functional(space, s, x) > s.level - 1e-12 for s in shapes
            if len(s.residue_blocks(space.n_blocks)))
        if reversed_all and space.norm(x) > 1.0 + 1e-9:
            ok += 1
    return ok


def _cyl_functional(space: BlockSpace, shape: QCylinder, x: np.ndarray) -> float:
    from . import kernels

    blocks = shape.residue_blocks(space.n_blocks)
    val = kernels.qcyl_margins(np.ascontiguousarray(x[None, :]), space.offsets,
                               space.lengths, space.weights, space.inner_p,
                               float(shape.sign), blocks, shape.beta, shape.q,
                               shape.level)[0]
    return float(val + shape.level)


# -- random grid covers ----------------------------------------------------------------


def random_convex_cover(space: BlockSpace, pieces: int, complexity: int,
                        seed: int) -> Covering:
    """Random cover by a grid of halfspace cells.

    ``complexity`` is the number of distinct cut directions (capped at 2);
    directions are norming functionals of random ball points, so they
    follow the space's own duality (coordinate functionals for sup-norm
    models, dense directions for power norms).  Offsets are sample
    quantiles, which keeps every cell inhabited; the cells partition the
    space, so the union is the ball by construction.
    """
    if pieces < 2:
        raise ValueError("pieces must be >= 2")
    rng = np.random.default_rng(seed)
    probe = sample_ball(space, 512, seed=int(rng.integers(2**31)))
    n_dirs = max(1, min(complexity, 2))
    dirs = []
    for _ in range(n_dirs):
        z = probe[rng.integers(len(probe))]
        f = norming_functional(space, z)
        dirs.append(f / np.linalg.norm(f))
    if n_dirs == 2 and abs(float(dirs[0] @ dirs[1])) > 1 - 1e-9:
        n_dirs = 1
        dirs = dirs[:1]

    body_parts_per_piece: list[list[Halfspace]] = []
    if n_dirs == 1 or pieces < 4:
        cuts = _quantile_cuts(probe @ dirs[0], pieces, rng)
        for lo, hi in zip([-np.inf] + cuts, cuts + [np.inf]):
            body_parts_per_piece.append(_interval_halfspaces(dirs[0], lo, hi))
    else:
        rows = 2
        row_cut = _quantile_cuts(probe @ dirs[1], rows, rng)
        per_row = [pieces // 2, pieces - pieces // 2]
        row_bounds = zip([-np.inf] + row_cut, row_cut + [np.inf])
        for (rlo, rhi), m in zip(row_bounds, per_row):
            proj1 = probe @ dirs[1]
            inside = probe[(proj1 >= rlo) & (proj1 <= rhi)]
            base = inside if len(inside) >= m else probe
            cuts = _quantile_cuts(base @ dirs[0], m, rng)
            for lo, hi in zip([-np.inf] + cuts, cuts + [np.inf]):
                parts = _interval_halfspaces(dirs[1], rlo, rhi)
                parts += _interval_halfspaces(dirs[0], lo, hi)
                body_parts_per_piece.append(parts)

    out_pieces = tuple(
        ConvexBody(space=space,
                   shape=Intersection((NormBall(center=0.0, radius=1.0),
                                       *parts)))
        for parts in body_parts_per_piece)
    cert = CoverCertificate(
        kind="algebraic",
        derivation="grid cells partition the space; their union with the "
                   "ball is the ball by construction")
    return Covering(space=space, pieces=out_pieces,
                    provenance={"family": "random_grid", "pieces": pieces,
                                "complexity": complexity, "seed": seed},
                    certificate=cert)


def _quantile_cuts(proj: np.ndarray, cells: int, rng: np.random.Generator):
    """cells-1 interior cut offsets at sample quantiles (deduplicated)."""
    if cells <= 1:
        return []
    qs = np.linspace(0, 1, cells + 1)[1:-1]
    cuts = sorted(set(float(np.quantile(proj, q)) for q in qs))
    # de-duplicate collisions by a deterministic jitter
    out = []
    for c in cuts:
        while out and c <= out[-1]:
            c = out[-1] + 1e-9
        out.append(c)
    return out


def _interval_halfspaces(direction: np.ndarray, lo: float, hi: float):
    parts = []
    if np.isfinite(hi):
        parts.append(Halfspace(tuple(direction), float(hi)))
    if np.isfinite(lo):
        parts.append(Halfspace(tuple(-direction), float(-lo)))
    return parts


def trivial_cover(space: BlockSpace) -> Covering:
    """The one-piece cover by the whole ball."""
    piece = ConvexBody(space=space, shape=NormBall(center=0.0, radius=1.0))
    return Covering(space=space, pieces=(piece,),
                    provenance={"family": "trivial"},
                    certificate=CoverCertificate(
                        kind="algebraic", derivation="single piece is the ball"))
