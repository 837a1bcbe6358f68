import numpy as np
import pytest

from covindex.body import (
    ConvexBody,
    Halfspace,
    Intersection,
    NormBall,
    QCylinder,
    SlabNeighborhood,
    UnboundedBodyError,
    ball_with_halfspaces,
    convexity_selftest,
    intersect_with_slab,
    shape_from_json,
    shape_to_json,
    support,
    unit_ball,
)
from covindex.space import linf_space, lp_space, sample_ball


def qcyl_body(space, sign=-1, residue=1, modulus=2, c=1.0, q=2.0, level=0.5):
    return ConvexBody(space=space,
                      shape=QCylinder(sign=sign, residues=(residue,),
                                      modulus=modulus, c=c, q=q, level=level))


def test_qcylinder_contains_origin_and_sign_check():
    sp = lp_space(2.0, 4)
    body = qcyl_body(sp, sign=-1, residue=1, modulus=2, c=1.0, q=2.0, level=0.5)
    assert body.contains(np.zeros(4))
    e0 = np.zeros(4); e0[0] = 1.0
    assert not body.contains(-e0)  # inequality reads 1 <= 1/2
    assert body.contains(e0)


def test_normball_boundary_membership():
    sp = lp_space(2.0, 3)
    ball = unit_ball(sp)
    assert ball.contains(np.array([3.0, 4.0, 0.0]) / 5.0)
    assert not ball.contains(np.array([3.0, 4.0, 0.0]) / 5.0 * (1 + 1e-6))


def test_membership_monotone_in_tol():
    sp = lp_space(2.0, 4)
    body = qcyl_body(sp)
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(50, 4))
    loose = body.contains_batch(pts, tol=0.2)
    tight = body.contains_batch(pts, tol=0.0)
    assert np.all(loose[tight])  # tight members stay members when tol grows


def test_qcylinder_margin_matches_direct_evaluation():
    # independent re-evaluation of the defining inequality
    sp = lp_space(2.0, 6)
    body = qcyl_body(sp, sign=-1, residue=1, modulus=4, c=1.0, q=2.0, level=0.5)
    beta = 1.0**2 * (4 / 2.0)
    rng = np.random.default_rng(1)
    pts = rng.uniform(-1, 1, size=(200, 6))
    for x in pts:
        res = sum(x[i] ** 2 for i in range(1, 6) if i % 4 == 1)
        direct = max(-x[0] + beta * res - 0.5, np.linalg.norm(x) - 1.0)
        assert body.margin(x) == pytest.approx(direct, abs=1e-12)


def test_support_unit_ball_is_dual_norm():
    sp = lp_space(2.0, 3)
    e0 = np.array([1.0, 0.0, 0.0])
    val = support(unit_ball(sp), e0)
    assert val == pytest.approx(1.0, abs=1e-12)
    assert val.exact


def test_support_active_halfspace():
    sp = lp_space(2.0, 2)
    body = ball_with_halfspaces(sp, [Halfspace(normal=(1.0, 0.0), offset=0.3)])
    val = support(body, np.array([1.0, 0.0]))
    assert val == pytest.approx(0.3, abs=1e-5)


def test_support_qcylinder_contains_e0():
    sp = lp_space(2.0, 4)
    body = qcyl_body(sp, sign=-1, residue=1, modulus=2, c=1.0, q=2.0, level=0.5)
    val = support(body, np.array([1.0, 0.0, 0.0, 0.0]))
    assert val == pytest.approx(1.0, abs=1e-5)


def test_support_unbounded_halfspace():
    sp = lp_space(2.0, 2)
    body = ConvexBody(space=sp, shape=Halfspace(normal=(1.0, 0.0), offset=0.5))
    with pytest.raises(UnboundedBodyError):
        support(body, np.array([0.0, 1.0]))


def test_convexity_selftest_zero_violations():
    sp = lp_space(2.0, 5)
    for body in (unit_ball(sp),
                 qcyl_body(sp, modulus=2),
                 ConvexBody(space=sp, shape=Intersection((
                     QCylinder(sign=-1, residues=(1,), modulus=2, c=1.0, q=2.0, level=0.5),
                     QCylinder(sign=1, residues=(0,), modulus=2, c=1.0, q=2.0, level=0.5),
                 )))):
        report = convexity_selftest(body, trials=200, seed=2)
        assert report.violations == 0


def test_weak_closedness_under_sampled_limits():
    # members converging inside the piece have member limits
    sp = lp_space(2.0, 4)
    body = qcyl_body(sp)
    rng = np.random.default_rng(3)
    pts = sample_ball(sp, 400, seed=4)
    members = pts[body.contains_batch(pts)]
    target = members[rng.integers(len(members))]
    seq = [target + (0.5**j) * (m - target) for j, m in enumerate(members[:20])]
    assert body.contains(seq[-1], tol=1e-6)


def test_slab_contains_center_and_budget():
    slab = SlabNeighborhood(center=(0.0, 0.0), functionals=((1.0, 0.0),),
                            half_width=0.05)
    assert slab.contains(np.zeros(2))
    assert not slab.contains(np.array([0.1, 0.0]))
    sp = lp_space(2.0, 2)
    cut = intersect_with_slab(unit_ball(sp), slab)
    assert cut.contains(np.array([0.0, 0.9]))
    assert not cut.contains(np.array([0.2, 0.0]))


def test_shape_json_roundtrip():
    shapes = [
        NormBall(center=0.0, radius=1.0),
        Halfspace(normal=(1.0, 0.0), offset=0.25),
        QCylinder(sign=-1, residues=(1,), modulus=4, c=1.0, q=2.0, level=0.5),
        Intersection((NormBall(center=0.0, radius=1.0),
                      Halfspace(normal=(0.0, 1.0), offset=0.1))),
    ]
    for s in shapes:
        doc = shape_to_json(s)
        assert shape_from_json(doc) == s
    # single residue serializes under the scalar key
    assert "residue" in shape_to_json(shapes[2])
