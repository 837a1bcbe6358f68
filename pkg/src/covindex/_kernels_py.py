"""Pure-NumPy fallback for the compiled kernels in ``_kernels.pyx``.

Same signatures and semantics; used when the extension is not built.
"""

from __future__ import annotations

import numpy as np

COMPILED = False


def block_norms(pts, offsets, lengths, weights, inner_p):
    """Weighted inner-p norm of every block of every point: (n, B) array."""
    pts = np.asarray(pts, dtype=np.float64)
    n = pts.shape[0]
    nb = len(offsets)
    out = np.empty((n, nb), dtype=np.float64)
    for b in range(nb):
        seg = np.abs(pts[:, offsets[b] : offsets[b] + lengths[b]])
        if lengths[b] == 1:
            bn = seg[:, 0]
        elif inner_p == np.inf:
            bn = seg.max(axis=1)
        elif inner_p == 1.0:
            bn = seg.sum(axis=1)
        elif inner_p == 2.0:
            bn = np.sqrt(np.einsum("ij,ij->i", seg, seg))
        else:
            bn = (seg**inner_p).sum(axis=1) ** (1.0 / inner_p)
        out[:, b] = weights[b] * bn
    return out


def _combine(bnorms, outer_q):
    if outer_q == np.inf:
        return bnorms.max(axis=1)
    if outer_q == 1.0:
        return bnorms.sum(axis=1)
    if outer_q == 2.0:
        return np.sqrt(np.einsum("ij,ij->i", bnorms, bnorms))
    return (bnorms**outer_q).sum(axis=1) ** (1.0 / outer_q)


def norms(pts, offsets, lengths, weights, inner_p, outer_q):
    """Space norm of every point: outer-q combination of block norms."""
    return _combine(block_norms(pts, offsets, lengths, weights, inner_p), outer_q)


def qcyl_margins(pts, offsets, lengths, weights, inner_p, sign,
                 residue_blocks, beta, qc, level):
    """Constraint margin sign*x0 + beta * sum_R bnorm^qc - level per point."""
    pts = np.asarray(pts, dtype=np.float64)
    acc = sign * pts[:, 0].copy()
    if len(residue_blocks):
        bn = block_norms(pts, [offsets[b] for b in residue_blocks],
                         [lengths[b] for b in residue_blocks],
                         [weights[b] for b in residue_blocks], inner_p)
        acc += beta * (bn**qc).sum(axis=1)
    return acc - level
