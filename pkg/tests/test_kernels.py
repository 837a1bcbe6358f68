import numpy as np
import pytest

from covindex import kernels
from covindex import _kernels_py as fallback


def _space_arrays(blocks):
    offsets = np.array([b[0] for b in blocks], dtype=np.int64)
    lengths = np.array([b[1] for b in blocks], dtype=np.int64)
    weights = np.linspace(0.5, 2.0, len(blocks))
    return offsets, lengths, weights


@pytest.mark.parametrize("inner_p", [1.0, 2.0, 3.0, np.inf])
@pytest.mark.parametrize("outer_q", [1.0, 2.0, 2.5, np.inf])
def test_backends_agree_on_norms(inner_p, outer_q):
    rng = np.random.default_rng(0)
    blocks = [(0, 1), (1, 3), (4, 2), (6, 4)]
    offsets, lengths, weights = _space_arrays(blocks)
    pts = np.ascontiguousarray(rng.normal(size=(64, 10)))
    a = kernels.norms(pts, offsets, lengths, weights, inner_p, outer_q)
    b = fallback.norms(pts, offsets, lengths, weights, inner_p, outer_q)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-13)
    a = kernels.block_norms(pts, offsets, lengths, weights, inner_p)
    b = fallback.block_norms(pts, offsets, lengths, weights, inner_p)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("qc", [1.0, 2.0, 3.0])
def test_backends_agree_on_cylinder_margins(qc):
    rng = np.random.default_rng(1)
    blocks = [(i, 1) for i in range(12)]
    offsets, lengths, weights = _space_arrays(blocks)
    pts = np.ascontiguousarray(rng.normal(size=(128, 12)))
    res = np.array([1, 5, 9], dtype=np.int64)
    a = kernels.qcyl_margins(pts, offsets, lengths, weights, 2.0, -1.0, res,
                             2.0, qc, 0.5)
    b = fallback.qcyl_margins(pts, offsets, lengths, weights, 2.0, -1.0, res,
                              2.0, qc, 0.5)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-13)


def test_empty_residue_set():
    blocks = [(0, 1), (1, 1)]
    offsets, lengths, weights = _space_arrays(blocks)
    pts = np.ascontiguousarray(np.array([[0.5, -0.25]]))
    res = np.array([], dtype=np.int64)
    a = kernels.qcyl_margins(pts, offsets, lengths, weights, 2.0, 1.0, res,
                             1.0, 2.0, 0.5)
    assert a[0] == pytest.approx(0.0, abs=1e-15)  # 0.5 - 0.5


def test_backend_name_reports():
    assert kernels.backend_name() in ("compiled", "numpy")
