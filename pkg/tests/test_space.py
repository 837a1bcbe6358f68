import numpy as np
import pytest

from covindex.space import (
    INF,
    BlockSpace,
    DimensionMismatchError,
    SpaceValidationError,
    block_space,
    linf_space,
    lp_space,
    renorm,
    sample_ball,
    space_from_preset,
)


def test_norm_pythagorean_triple():
    sp = lp_space(2.0, 3)
    assert sp.norm([3.0, 4.0, 0.0]) == pytest.approx(5.0, abs=1e-12)


def test_norm_linf_is_max_abs():
    sp = linf_space(4)
    assert sp.norm([0.2, -0.9, 0.1, 0.0]) == pytest.approx(0.9, abs=1e-12)


def test_norm_block_sum_of_inner_norms():
    sp = block_space([1, 2], inner_p=2.0, outer_q=1.0)
    assert sp.norm([1.0, 3.0, 4.0]) == pytest.approx(6.0, abs=1e-12)


def test_norm_rejects_bad_input():
    sp = lp_space(2.0, 3)
    with pytest.raises(DimensionMismatchError):
        sp.norm([1.0, 2.0])
    with pytest.raises(ValueError):
        sp.norm([1.0, np.nan, 0.0])


def test_norm_axioms_on_random_triples():
    rng = np.random.default_rng(7)
    for sp in (lp_space(1.0, 6), lp_space(2.0, 6), lp_space(3.0, 6),
               linf_space(6), block_space([1, 2, 3], 2.0, 1.5)):
        for _ in range(50):
            x = rng.normal(size=sp.dim)
            y = rng.normal(size=sp.dim)
            t = rng.uniform(-3, 3)
            assert sp.norm(t * x) == pytest.approx(abs(t) * sp.norm(x), abs=1e-12)
            assert sp.norm(x + y) <= sp.norm(x) + sp.norm(y) + 1e-12
        assert sp.norm(np.zeros(sp.dim)) == 0.0


def test_block_estimate_validation_rejects_bad_constants():
    with pytest.raises(SpaceValidationError):
        lp_space(2.0, 4, lower_c=1.5)
    with pytest.raises(SpaceValidationError):
        lp_space(2.0, 4, upper_C=0.5)


def test_block_partition_validation():
    with pytest.raises(SpaceValidationError):
        BlockSpace(dim=3, blocks=((0, 2), (2, 1)), inner_p=2.0, outer_q=2.0)
    with pytest.raises(SpaceValidationError):
        BlockSpace(dim=3, blocks=((0, 1), (1, 1)), inner_p=2.0, outer_q=2.0)


@pytest.mark.parametrize("sp", [lp_space(1.0, 8), lp_space(2.0, 8),
                                linf_space(8), block_space([1, 3, 4], 2.0, 1.0)])
def test_sample_ball_feasible_and_deterministic(sp):
    pts = sample_ball(sp, 200, seed=11)
    assert np.all(sp.norms(pts) <= 1 + 1e-12)
    again = sample_ball(sp, 200, seed=11)
    assert np.array_equal(pts, again)


def test_sample_ball_mean_near_origin():
    sp = lp_space(2.0, 2)
    pts = sample_ball(sp, 10_000, seed=3)
    assert np.all(np.abs(pts.mean(axis=0)) < 0.05)


def test_sample_ball_sign_symmetric_per_coordinate():
    # loose distributional check: flipping any coordinate should not move
    # the empirical quantiles much
    sp = lp_space(1.0, 4)
    pts = sample_ball(sp, 20_000, seed=5)
    for i in range(4):
        pos = (pts[:, i] > 0).mean()
        assert abs(pos - 0.5) < 0.02


def test_renorm_identity():
    sp = lp_space(2.0, 2)
    tilted, lam = renorm(sp, [1.0, 1.0])
    assert lam == 1.0
    x = np.array([0.3, -0.4])
    assert tilted.norm(x) == pytest.approx(sp.norm(x), abs=1e-15)


def test_renorm_diagonal_scaling():
    sp = lp_space(2.0, 2)
    tilted, lam = renorm(sp, [2.0, 1.0])
    assert lam == 2.0
    e0 = np.array([1.0, 0.0])
    assert tilted.norm(e0) == pytest.approx(2.0, abs=1e-15)


def test_renorm_ratio_bounded_by_lambda():
    sp = lp_space(2.0, 6)
    rng = np.random.default_rng(9)
    w = rng.uniform(0.5, 2.0, size=6)
    tilted, lam = renorm(sp, w)
    assert lam <= 2.0 + 1e-12
    for _ in range(100):
        x = rng.normal(size=6)
        ratio = tilted.norm(x) / sp.norm(x)
        assert 0.5 - 1e-12 <= ratio <= 2.0 + 1e-12


def test_json_roundtrip_with_inf_literal():
    sp = linf_space(5)
    doc = sp.to_json()
    assert doc["inner_p"] == "inf" and doc["outer_q"] == "inf"
    back = BlockSpace.from_json(doc)
    assert back == sp

    tilted, _ = renorm(lp_space(2.0, 3), [1.0, 2.0, 1.0])
    assert BlockSpace.from_json(tilted.to_json()) == tilted


def test_presets():
    assert space_from_preset("l2", 8).outer_q == 2.0
    assert space_from_preset("lq:3", 8).outer_q == 3.0
    assert space_from_preset("linf", 8).outer_q == INF
    with pytest.raises(ValueError):
        space_from_preset("banach", 8)
