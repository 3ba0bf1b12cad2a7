import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coslat.bounds import enumerate_dual_lattice
from coslat.cosine_space import enumerate_l1_ball
from coslat.errors import EvaluationError
from coslat.integrator import (
    WeightCache,
    WeightTable,
    approximate_expectation,
    build_weight_table,
    kernel_expected_weight,
    kernel_weights_at,
    qmc_uniform,
    weight_table_chain,
)
from coslat.lattice import Box, GeneratingVector, generate_rank1_points, tent_lattice_points
from coslat.measures import AsymmetricLaplace, MultivariateNormal, UniformOnBox, cos_transform_table
from coslat.testlab import TestFunction, alternating_box, uniform_reference

NBOX2 = Box.cube(2, -4.5, 4.5)
NORMAL2 = MultivariateNormal.isotropic(2, 0.5)


def test_weight_examples(g):
    box = Box([-1.0, 0.0], [2.0, 1.0])
    for m in (UniformOnBox(box), NORMAL2, AsymmetricLaplace(np.array([0.1, 0.2]), np.eye(2))):
        for n in (0, 3, 17):
            assert kernel_expected_weight(n, g, 32, m, box, 0) == 1.0
    u = UniformOnBox(box)
    for n in range(8):
        assert kernel_expected_weight(n, g, 8, u, box, 6) == pytest.approx(1.0, abs=1e-14)
    one = GeneratingVector([1], 4)
    w = kernel_expected_weight(1, one, 2, MultivariateNormal.isotropic(1, 0.5), Box([-4.5], [4.5]), 1)
    assert w == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        kernel_expected_weight(8, g, 8, u, box, 2)


@pytest.mark.parametrize(
    "m,box,K",
    [
        (NORMAL2, NBOX2, 24),
        (AsymmetricLaplace(np.array([0.3, -0.1]), np.array([[0.25, -0.15], [-0.15, 0.75]])), Box([-4.7, -15.1], [5.3, 14.9]), 16),
        (MultivariateNormal(np.array([0.1, 0.0, -0.2]), np.diag([0.3, 0.2, 0.5])), Box.cube(3, -3, 3), 8),
    ],
)
def test_fast_paths_match_reference(g, m, box, K):
    N = 64
    ref = np.array([kernel_expected_weight(n, g, N, m, box, K) for n in range(N)])
    u = tent_lattice_points(g, N, box.dim)
    scale = max(1.0, np.abs(ref).max())
    for method in ("dense", "gather"):
        got = kernel_weights_at(u, m, box, K, method=method)
        np.testing.assert_allclose(got, ref, atol=1e-12 * scale, rtol=0)


def test_tent_equals_doubled_frequency(g):
    N, K = 128, 20
    p = generate_rank1_points(g, N, 2)
    w_tent = kernel_weights_at(tent_lattice_points(g, N, 2), NORMAL2, NBOX2, K, method="gather")
    ks = enumerate_l1_ball(2, K)
    phase = np.prod(np.cos(2 * np.pi * ks[None, :, :] * p[:, None, :]), axis=2)
    from coslat.measures import phase_corrected_cf

    w_direct = phase @ phase_corrected_cf(NORMAL2, ks, NBOX2).real
    np.testing.assert_allclose(w_tent, w_direct, atol=1e-12, rtol=0)


def test_uniform_table_is_all_ones(g):
    box = Box([-2.0, 1.0, 0.0], [1.0, 4.0, 0.5])
    table = build_weight_table(g, 256, UniformOnBox(box), box, 12)
    np.testing.assert_allclose(table.weights, 1.0, atol=1e-13, rtol=0)
    f = lambda y: np.full(len(y), 3.25)
    assert approximate_expectation(f, table, g) == pytest.approx(3.25, abs=1e-13)


def test_rebuild_is_bitwise_identical(g):
    a = build_weight_table(g, 512, NORMAL2, NBOX2, 40)
    b = build_weight_table(g, 512, NORMAL2, NBOX2, 40)
    c = build_weight_table(g, 512, NORMAL2, NBOX2, 40, workers=4)
    assert np.array_equal(a.weights, b.weights)
    assert np.array_equal(a.weights, c.weights)


def test_doubling_reuses_shared_points(g):
    half = build_weight_table(g, 256, NORMAL2, NBOX2, 32)
    full = build_weight_table(g, 512, NORMAL2, NBOX2, 32, base=half)
    assert np.array_equal(full.weights[::2], half.weights)
    scratch = build_weight_table(g, 512, NORMAL2, NBOX2, 32)
    np.testing.assert_allclose(full.weights, scratch.weights, atol=1e-12, rtol=0)
    # shared points really are the same nodes
    assert np.array_equal(tent_lattice_points(g, 512, 2)[::2], tent_lattice_points(g, 256, 2))
    with pytest.raises(ValueError):
        build_weight_table(g, 512, NORMAL2, NBOX2, 16, base=half)


def test_constant_integrates_to_dual_correction(g):
    N, K = 2**12, 128
    table = build_weight_table(g, N, NORMAL2, NBOX2, K)
    val = approximate_expectation(lambda y: np.ones(len(y)), table, g)
    assert val == pytest.approx(1.0, abs=1e-6)
    dual = enumerate_dual_lattice(g, N, 2, K).points
    dual = dual[np.abs(dual).sum(axis=1) <= K]
    corr = cos_transform_table(NORMAL2, np.abs(dual), NBOX2).sum() if len(dual) else 0.0
    assert val == pytest.approx(1.0 + corr, abs=1e-12)


@pytest.mark.parametrize("mode", [(0, 0), (1, 0), (3, 5), (7, 2), (64, 0), (0, 64)])
def test_character_sum_exactness(g, mode):
    N = 64
    box = Box([-1.0, 0.5], [2.0, 3.0])
    table = build_weight_table(g, N, UniformOnBox(box), box, 10)
    f = TestFunction.cosine_mode(mode, box)
    got = approximate_expectation(f, table, g)
    dual = enumerate_dual_lattice(g, N, 2, 64).as_set() | {(0, 0)}
    signs = [(a, b) for a in (1, -1) for b in (1, -1)]
    variants = {(sa * mode[0], sb * mode[1]) for sa, sb in signs}
    want = sum(v in dual for v in variants) / len(variants)
    assert got == pytest.approx(want, abs=1e-12)


def test_online_stage_never_calls_cf(g, monkeypatch):
    table = build_weight_table(g, 128, NORMAL2, NBOX2, 16)
    calls = []
    orig = MultivariateNormal.characteristic_function

    def counting(self, t):
        calls.append(1)
        return orig(self, t)

    monkeypatch.setattr(MultivariateNormal, "characteristic_function", counting)
    approximate_expectation(TestFunction.f1(2, 0.9), table, g)
    assert calls == []
    build_weight_table(g, 16, NORMAL2, NBOX2, 4)
    assert calls


@settings(max_examples=20, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_linearity(a, b):
    from coslat.lattice import default_generating_vector

    g = default_generating_vector()
    table = _small_table(g)
    f1 = TestFunction.f1(2, 0.9)
    f2 = lambda y: np.sin(y[:, 0]) * y[:, 1]
    lhs = approximate_expectation(lambda y: a * f1(y) + b * f2(y), table, g)
    rhs = a * approximate_expectation(f1, table, g) + b * approximate_expectation(f2, table, g)
    pts = tent_lattice_points(g, table.N, 2) * NBOX2.width + NBOX2.a
    w = np.abs(table.weights)
    scale = abs(a) * np.mean(np.abs(f1(pts)) * w) + abs(b) * np.mean(np.abs(f2(pts)) * w)
    assert lhs == pytest.approx(rhs, abs=1e-12 * max(1.0, scale))


_TABLES = {}


def _small_table(g):
    if "t" not in _TABLES:
        _TABLES["t"] = build_weight_table(g, 256, NORMAL2, NBOX2, 32)
    return _TABLES["t"]


def test_non_finite_integrand_names_point(g):
    table = _small_table(g)
    with pytest.raises(EvaluationError) as info:
        approximate_expectation(lambda y: np.where(np.arange(len(y)) == 5, np.nan, y[:, 0]), table, g)
    pts = tent_lattice_points(g, table.N, 2) * NBOX2.width + NBOX2.a
    assert np.array_equal(info.value.point, pts[5])


def test_online_checks_configuration(g):
    table = _small_table(g)
    with pytest.raises(ValueError):
        approximate_expectation(lambda y: y[:, 0], table, g, Box.cube(2, -4, 4))
    other = GeneratingVector([1, 5], 2**10)
    with pytest.raises(ValueError):
        approximate_expectation(lambda y: y[:, 0], table, other)
    with pytest.raises(ValueError):
        approximate_expectation(lambda y: y, table, g)


def test_single_point_rule_rejected(g):
    with pytest.raises(ValueError):
        build_weight_table(g, 1, NORMAL2, NBOX2, 4)


def test_qmc_uniform_examples(g):
    for s in (1, 3):
        assert qmc_uniform(lambda y: np.ones(len(y)), g, 64, Box.cube(s, 0, 1)) == 1.0
    val = qmc_uniform(TestFunction.f1(2, 0.5), g, 2**16, alternating_box(2), lebesgue=True)
    assert abs(val - 2.167) <= 1e-3
    assert abs(val - uniform_reference(2, 0.5)) <= 1e-3


def test_table_text_roundtrip(tmp_path, g):
    table = _small_table(g)
    path = tmp_path / "t.wt"
    table.save(path)
    back = WeightTable.load(path)
    assert np.array_equal(back.weights, table.weights)
    assert back.box == table.box and back.K == table.K and back.N == table.N
    assert back.matches(g, NORMAL2)
    assert path.read_text().startswith("COSLAT-WT-1\n")
    with pytest.raises(ValueError):
        WeightTable.from_text("NOPE\n")


def test_cache_cold_and_warm_agree(tmp_path, g):
    schedule = [2**k for k in range(4, 10)]
    cold = weight_table_chain(g, schedule, NORMAL2, NBOX2, 24, cache=WeightCache(tmp_path))
    warm = weight_table_chain(g, schedule, NORMAL2, NBOX2, 24, cache=WeightCache(tmp_path))
    plain = weight_table_chain(g, schedule, NORMAL2, NBOX2, 24)
    f = TestFunction.f1(2, 0.9)
    for a, b, c in zip(cold, warm, plain):
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.weights, c.weights)
        assert approximate_expectation(f, a, g) == approximate_expectation(f, b, g)
    assert len(list(tmp_path.glob("*.wt"))) == len(schedule)


def test_cache_extends_from_smaller_table(tmp_path, g):
    cache = WeightCache(tmp_path)
    small = cache.get(g, 128, NORMAL2, NBOX2, 16)
    big = cache.get(g, 512, NORMAL2, NBOX2, 16)
    assert np.array_equal(big.weights[::4], small.weights)
