"""Finite-dimensional block-norm spaces.

A ``BlockSpace`` models a finite truncation of an FDD sum: coordinates are
partitioned into contiguous blocks, each block carries an inner-p norm and
the block norms are combined with an outer-q norm.  Pure l_q^N models are
the special case of width-1 blocks; q = inf stands in for the sup-norm
space.  Block 0 always has width 1 (a distinguished scalar coordinate).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels

INF = float("inf")
FEASIBILITY_TOL = 1e-9

_VALIDATION_SEED = 0x5EED
_VALIDATION_TUPLES = 24


class DimensionMismatchError(ValueError):
    """Point length does not match the space dimension."""


class SpaceValidationError(ValueError):
    """Space parameters violate a construction invariant."""


def _exp_to_json(p: float):
    return "inf" if p == INF else p


def _exp_from_json(v) -> float:
    if v == "inf":
        return INF
    return float(v)


@dataclass(frozen=True)
class BlockSpace:
    """Block-norm model: dim N, blocks (offset, length), inner/outer
    exponents, and the lower/upper outer-estimate constants.

    ``block_weights`` are per-block diagonal weights (all 1.0 by default);
    they are how renormings are represented.
    """

    dim: int
    blocks: tuple[tuple[int, int], ...]
    inner_p: float
    outer_q: float
    lower_c: float = 1.0
    upper_C: float = 1.0
    block_weights: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.dim < 1:
            raise SpaceValidationError("dim must be positive")
        cursor = 0
        for off, length in self.blocks:
            if off != cursor or length < 1:
                raise SpaceValidationError("blocks must be contiguous and nonempty")
            cursor += length
        if cursor != self.dim:
            raise SpaceValidationError("blocks must cover exactly the dim coordinates")
        if self.blocks[0][1] != 1:
            raise SpaceValidationError("block 0 must have width 1")
        for p in (self.inner_p, self.outer_q):
            if not (p >= 1.0):
                raise SpaceValidationError("exponents must lie in [1, inf]")
        if not (self.lower_c > 0 and self.upper_C > 0):
            raise SpaceValidationError("estimate constants must be positive")
        if not self.block_weights:
            object.__setattr__(self, "block_weights", (1.0,) * len(self.blocks))
        if len(self.block_weights) != len(self.blocks):
            raise SpaceValidationError("one weight per block required")
        if any(w <= 0 for w in self.block_weights):
            raise SpaceValidationError("weights must be positive")
        self._validate_estimates()

    # -- derived arrays ---------------------------------------------------

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.array([b[0] for b in self.blocks], dtype=np.int64)

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.array([b[1] for b in self.blocks], dtype=np.int64)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array(self.block_weights, dtype=np.float64)

    @cached_property
    def coord_weights(self) -> np.ndarray:
        """Per-coordinate weight (the weight of the owning block)."""
        out = np.empty(self.dim)
        for (off, length), w in zip(self.blocks, self.block_weights):
            out[off : off + length] = w
        return out

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def is_pure(self) -> bool:
        """True when every block has width 1 (an l_q^N-type model)."""
        return self.n_blocks == self.dim

    # -- norms -------------------------------------------------------------

    def _as_batch(self, x) -> np.ndarray:
        pts = np.ascontiguousarray(x, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.shape[1] != self.dim:
            raise DimensionMismatchError(
                f"point length {pts.shape[1]} != dim {self.dim}"
            )
        return pts

    def norms(self, pts) -> np.ndarray:
        """Norm of each row of ``pts``."""
        pts = self._as_batch(pts)
        return kernels.norms(pts, self.offsets, self.lengths, self.weights,
                             self.inner_p, self.outer_q)

    def norm(self, x) -> float:
        """Norm of a single point; validates shape and finiteness."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] != self.dim:
            raise DimensionMismatchError(f"expected length-{self.dim} point")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite coordinate")
        return float(self.norms(x)[0])

    def block_norms(self, pts) -> np.ndarray:
        pts = self._as_batch(pts)
        return kernels.block_norms(pts, self.offsets, self.lengths,
                                   self.weights, self.inner_p)

    def dual_norm(self, d) -> float:
        """Norm of ``d`` as a functional: conjugate exponents, inverse weights."""
        d = np.asarray(d, dtype=np.float64)
        if d.shape != (self.dim,):
            raise DimensionMismatchError(f"expected length-{self.dim} functional")
        p_star = _conjugate(self.inner_p)
        q_star = _conjugate(self.outer_q)
        bn = kernels.block_norms(np.ascontiguousarray(d[None, :]), self.offsets,
                                 self.lengths, 1.0 / self.weights, p_star)[0]
        if q_star == INF:
            return float(bn.max())
        return float((bn**q_star).sum() ** (1.0 / q_star))

    # -- invariant validation ----------------------------------------------

    def _validate_estimates(self):
        """Check the lower/upper outer-q estimates on random block-supported
        tuples.  For the concrete block norm the combination is exact, so
        the check amounts to lower_c <= 1 <= upper_C; it is still performed
        on samples so misconfigured constants fail loudly."""
        rng = np.random.default_rng(_VALIDATION_SEED)
        q = self.outer_q
        for _ in range(_VALIDATION_TUPLES):
            x = rng.normal(size=self.dim)
            bn = self.block_norms(x)[0]
            total = self.norms(x)[0]
            if q == INF:
                combined = bn.max()
            else:
                combined = (bn**q).sum() ** (1.0 / q)
            if total < self.lower_c * combined - 1e-9:
                raise SpaceValidationError(
                    f"lower estimate fails with c={self.lower_c}")
            if total > self.upper_C * combined + 1e-9:
                raise SpaceValidationError(
                    f"upper estimate fails with C={self.upper_C}")

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        doc = {
            "dim": self.dim,
            "blocks": [list(b) for b in self.blocks],
            "inner_p": _exp_to_json(self.inner_p),
            "outer_q": _exp_to_json(self.outer_q),
            "lower_c": self.lower_c,
            "upper_C": self.upper_C,
        }
        if any(w != 1.0 for w in self.block_weights):
            doc["block_weights"] = list(self.block_weights)
        return doc

    @staticmethod
    def from_json(doc: dict) -> "BlockSpace":
        return BlockSpace(
            dim=int(doc["dim"]),
            blocks=tuple((int(o), int(n)) for o, n in doc["blocks"]),
            inner_p=_exp_from_json(doc["inner_p"]),
            outer_q=_exp_from_json(doc["outer_q"]),
            lower_c=float(doc.get("lower_c", 1.0)),
            upper_C=float(doc.get("upper_C", 1.0)),
            block_weights=tuple(doc.get("block_weights", ())),
        )

    def describe(self) -> str:
        if self.is_pure:
            tag = "linf" if self.outer_q == INF else f"l{self.outer_q:g}"
            w = "" if all(v == 1.0 for v in self.block_weights) else "~w"
            return f"{tag}^{self.dim}{w}"
        return f"blocks[{self.n_blocks}]^{self.dim}"


def _conjugate(p: float) -> float:
    if p == 1.0:
        return INF
    if p == INF:
        return 1.0
    return p / (p - 1.0)


# -- factories ---------------------------------------------------------------


def lp_space(p: float, dim: int, lower_c: float = 1.0,
             upper_C: float = 1.0) -> BlockSpace:
    """Pure l_p^dim model (width-1 blocks, inner and outer exponent p)."""
    blocks = tuple((i, 1) for i in range(dim))
    return BlockSpace(dim=dim, blocks=blocks, inner_p=p, outer_q=p,
                      lower_c=lower_c, upper_C=upper_C)


def linf_space(dim: int) -> BlockSpace:
    """l_inf^dim, the finite-dimensional sup-norm stand-in."""
    return lp_space(INF, dim)


def block_space(lengths, inner_p: float, outer_q: float, lower_c: float = 1.0,
                upper_C: float = 1.0, block_weights=()) -> BlockSpace:
    """FDD-sum model from explicit block lengths (block 0 must be 1)."""
    blocks = []
    off = 0
    for n in lengths:
        blocks.append((off, int(n)))
        off += int(n)
    return BlockSpace(dim=off, blocks=tuple(blocks), inner_p=inner_p,
                      outer_q=outer_q, lower_c=lower_c, upper_C=upper_C,
                      block_weights=tuple(block_weights))


# -- sampling -----------------------------------------------------------------


def _uniform_lq_ball(rng: np.random.Generator, count: int, dim: int,
                     q: float) -> np.ndarray:
    """Uniform sample of the unit l_q^dim ball.

    q < inf uses the generalized-Gaussian radial construction
    (|g_i| ~ Gamma(1/q)^(1/q) with random signs, scaled by
    (sum |g|^q + Exp(1))^(-1/q)); q = inf is the uniform cube.
    """
    if q == INF:
        return rng.uniform(-1.0, 1.0, size=(count, dim))
    g = rng.standard_gamma(1.0 / q, size=(count, dim)) ** (1.0 / q)
    g *= rng.integers(0, 2, size=(count, dim)) * 2 - 1
    w = rng.standard_exponential(size=count)
    scale = ((np.abs(g) ** q).sum(axis=1) + w) ** (1.0 / q)
    return g / scale[:, None]


def sample_ball(space: BlockSpace, count: int, seed: int) -> np.ndarray:
    """Deterministic sample of `count` points of the unit ball.

    Scheme: draw the block-norm profile uniformly from the outer-q ball,
    then an independent inner-p direction per block, and scale so the
    weighted block norm matches the profile.  For pure spaces this is the
    standard uniform-on-ball construction; it is sign-symmetric throughout.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    nb = space.n_blocks
    profile = np.abs(_uniform_lq_ball(rng, count, nb, space.outer_q))
    out = np.zeros((count, space.dim))
    for b, (off, length) in enumerate(space.blocks):
        target = profile[:, b] / space.block_weights[b]
        if length == 1:
            signs = rng.integers(0, 2, size=count) * 2 - 1
            out[:, off] = signs * target
            continue
        p = space.inner_p
        if p == INF:
            direction = rng.uniform(-1.0, 1.0, size=(count, length))
            dnorm = np.abs(direction).max(axis=1)
        else:
            direction = rng.standard_gamma(1.0 / p, size=(count, length)) ** (1.0 / p)
            direction *= rng.integers(0, 2, size=(count, length)) * 2 - 1
            dnorm = (np.abs(direction) ** p).sum(axis=1) ** (1.0 / p)
        dnorm[dnorm == 0] = 1.0
        out[:, off : off + length] = direction * (target / dnorm)[:, None]
    return out


def norming_functional(space: BlockSpace, z) -> np.ndarray:
    """A functional of dual norm 1 attaining (or nearly attaining) the norm
    of z.  For sup-norm models this concentrates on the largest weighted
    coordinate; for power norms it is the usual gradient direction."""
    z = np.asarray(z, dtype=np.float64)
    if not np.any(z):
        out = np.zeros(space.dim)
        out[0] = space.coord_weights[0]
        return out
    if space.is_pure:
        w = space.coord_weights
        q = space.outer_q
        if q == INF:
            j = int(np.argmax(w * np.abs(z)))
            f = np.zeros(space.dim)
            f[j] = np.sign(z[j]) * w[j]
            return f
        f = np.sign(z) * (w * np.abs(z)) ** (q - 1.0) * w
    else:
        # numeric norm gradient for general block layouts
        f = np.zeros(space.dim)
        h = 1e-6
        for i in range(space.dim):
            e = np.zeros(space.dim)
            e[i] = h
            f[i] = (space.norm(z + e) - space.norm(z - e)) / (2 * h)
    dn = space.dual_norm(f)
    return f / dn if dn > 0 else f


# -- renorming ----------------------------------------------------------------


def renorm(space: BlockSpace, weights) -> tuple[BlockSpace, float]:
    """Diagonally reweighted space and its equivalence constant lambda.

    New block weights multiply the existing ones; lambda is the tightest
    constant with (1/lambda)*|x| <= |x|~ <= lambda*|x|.
    """
    weights = tuple(float(w) for w in weights)
    if len(weights) != space.n_blocks:
        raise ValueError("one weight per block required")
    if any(w <= 0 for w in weights):
        raise ValueError("weights must be positive")
    lam = max(max(weights), 1.0 / min(weights))
    new = BlockSpace(dim=space.dim, blocks=space.blocks, inner_p=space.inner_p,
                     outer_q=space.outer_q, lower_c=space.lower_c,
                     upper_C=space.upper_C,
                     block_weights=tuple(w0 * w for w0, w in
                                         zip(space.block_weights, weights)))
    return new, lam


# -- presets ------------------------------------------------------------------


def space_from_preset(preset: str, dim: int) -> BlockSpace:
    """CLI preset: 'l1', 'l2', 'linf', or 'lq:<q>'."""
    preset = preset.strip().lower()
    if preset == "l1":
        return lp_space(1.0, dim)
    if preset == "l2":
        return lp_space(2.0, dim)
    if preset == "linf":
        return linf_space(dim)
    if preset.startswith("lq:"):
        return lp_space(float(preset[3:]), dim)
    raise ValueError(f"unknown space preset {preset!r}")


def space_from_file(path: str) -> BlockSpace:
    with open(path) as fh:
        return BlockSpace.from_json(json.load(fh))
