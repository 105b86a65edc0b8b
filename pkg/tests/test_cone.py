import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mutualcone.cone import (
    AlsConfig,
    AngleSpectrum,
    ConvexCone,
    angle_to_vector,
    angles_between,
    project,
    similarity,
)
from mutualcone.errors import ContractError
from oracles import min_angle_by_rays, nnls_enumeration


def E(i, d):
    v = np.zeros(d)
    v[i] = 1.0
    return v


def cone(*cols, nonnegative=True):
    return ConvexCone.from_generators(np.column_stack(cols), nonnegative=nonnegative)


def test_construction_contracts():
    with pytest.raises(ContractError):
        ConvexCone(np.array([[2.0], [0.0]]))
    with pytest.raises(ContractError):
        ConvexCone.from_generators(np.array([[-1.0], [1.0]]))
    c = ConvexCone.from_generators(np.array([[3.0, 0.0], [4.0, 0.0]]))
    assert c.rank == 1 and c.ambient_dim == 2
    np.testing.assert_allclose(c.generators[:, 0], [0.6, 0.8])
    with pytest.raises(ValueError):
        c.generators[0, 0] = 1.0


def test_project_examples():
    c = cone(E(0, 2))
    p, w = project(c, [2.0, 3.0])
    np.testing.assert_allclose(p, [2, 0])
    p, w = project(c, [-1.0, 5.0])
    np.testing.assert_allclose(p, [0, 0])
    with pytest.raises(ContractError):
        project(c, [1.0, 2.0, 3.0])


def test_project_matches_oracle():
    rng = np.random.default_rng(1)
    c = ConvexCone.from_generators(rng.random((4, 3)))
    x = rng.standard_normal(4)
    p, w = project(c, x)
    _, best = nnls_enumeration(c.generators, x)
    assert np.linalg.norm(x - p) == pytest.approx(best, abs=1e-10)
    assert np.all(w >= 0)


def test_angle_to_vector_examples():
    c = cone(E(0, 2))
    assert angle_to_vector(c, E(0, 2)) == 0.0
    assert angle_to_vector(c, E(1, 2)) == pytest.approx(np.pi / 2)
    c2 = cone(E(0, 3), E(1, 3))
    x = np.ones(3) / np.sqrt(3)
    assert angle_to_vector(c2, x) == pytest.approx(np.arccos(np.sqrt(2 / 3)), abs=1e-12)
    assert angle_to_vector(c2, x) == pytest.approx(0.61548, abs=1e-5)
    with pytest.raises(ContractError):
        angle_to_vector(c, np.zeros(2))


def test_identical_cones_have_zero_angles():
    rng = np.random.default_rng(2)
    c = ConvexCone.from_generators(rng.random((6, 3)))
    spec = angles_between(c, c)
    assert np.max(spec.angles) <= 1e-6
    assert similarity(spec) == pytest.approx(1.0, abs=1e-6)


def test_orthogonal_rays():
    spec = angles_between(cone(E(0, 2)), cone(E(1, 2)))
    assert spec.angles == pytest.approx((np.pi / 2,))
    assert similarity(spec) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_first_angle_matches_ray_oracle(seed):
    rng = np.random.default_rng(500 + seed)
    c1 = ConvexCone.from_generators(rng.random((3, 2)))
    c2 = ConvexCone.from_generators(rng.random((3, 2)))
    spec = angles_between(c1, c2, AlsConfig(seed=seed))
    oracle = min_angle_by_rays(c1.generators, c2.generators)
    assert abs(np.degrees(spec.first - oracle)) <= 0.5


def test_similarity_examples():
    assert similarity([0.0, 0.0]) == 1.0
    assert similarity([0.0, np.pi / 2]) == pytest.approx(0.5)
    assert similarity([np.pi / 2]) == pytest.approx(0.0)
    with pytest.raises(ContractError):
        similarity([])


@pytest.mark.parametrize("seed", range(5))
def test_spectrum_invariants(seed):
    rng = np.random.default_rng(seed)
    c1 = ConvexCone.from_generators(rng.random((8, 3)))
    c2 = ConvexCone.from_generators(rng.random((8, 4)))
    spec = angles_between(c1, c2, AlsConfig(seed=seed))
    a = np.array(spec.angles)
    assert spec.count == 3 == len(spec)
    assert np.all(np.diff(a) >= -1e-8)
    assert np.all((a >= 0) & (a <= np.pi / 2))
    for th, (p, q) in zip(spec.angles, spec.pairs):
        if th < np.pi / 2:
            assert np.cos(th) == pytest.approx(p @ q, abs=1e-8)
    # later witnesses orthogonal to earlier ones (in discovery order)
    found = [spec.pairs[i] for i in spec.discovery_order[: len(spec.pairs)]]
    for k in range(1, len(found)):
        for p0, q0 in found[:k]:
            for v in found[k]:
                assert abs(v @ p0) <= 1e-8 and abs(v @ q0) <= 1e-8
    assert 0.0 <= similarity(spec) <= 1.0


@pytest.mark.parametrize("seed", range(5))
def test_symmetry(seed):
    rng = np.random.default_rng(40 + seed)
    c1 = ConvexCone.from_generators(rng.random((6, 2)))
    c2 = ConvexCone.from_generators(rng.random((6, 3)))
    s12 = similarity(angles_between(c1, c2, AlsConfig(seed=1)))
    s21 = similarity(angles_between(c2, c1, AlsConfig(seed=2)))
    assert abs(s12 - s21) <= 2e-3


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_single_ray_reduction(seed, d):
    rng = np.random.default_rng(seed)
    b1, b2 = rng.random(d) + 1e-3, rng.random(d) + 1e-3
    c1, c2 = cone(b1), cone(b2)
    expected = np.arccos(np.clip(c1.generators[:, 0] @ c2.generators[:, 0], 0, 1))
    assert angles_between(c1, c2).angles[0] == pytest.approx(expected, abs=1e-10)


def test_first_angle_local_optimality():
    rng = np.random.default_rng(9)
    c1 = ConvexCone.from_generators(rng.random((5, 3)))
    c2 = ConvexCone.from_generators(rng.random((5, 3)))
    spec = angles_between(c1, c2)
    p, q = spec.pairs[spec.discovery_order[0]]
    base = p @ q
    eps = 1e-4
    for c, v, other in ((c1, p, q), (c2, q, p)):
        for g in c.generators.T:
            moved = v + eps * g
            moved /= np.linalg.norm(moved)
            assert moved @ other <= base + 1e-6


def test_deflation_vanishing_is_flagged():
    # disjoint fans in the plane: the first witness pair spans R^2, so both
    # deflated cones vanish before the second angle
    def fan(*deg):
        return cone(*[np.array([np.cos(np.radians(a)), np.sin(np.radians(a))]) for a in deg])

    spec = angles_between(fan(0, 10), fan(60, 80))
    assert spec.degenerate
    assert spec.angles == pytest.approx((np.radians(50), np.pi / 2))


def test_dependent_generators_limit_angle_count():
    rng = np.random.default_rng(0)
    c = ConvexCone.from_generators(rng.random((3, 5)))
    assert c.rank == 5 and c.span_rank == 3
    spec = angles_between(c, c)
    assert len(spec.angles) == 3 and not spec.degenerate
    assert similarity(spec) == pytest.approx(1.0, abs=1e-12)


def test_dimension_mismatch():
    with pytest.raises(ContractError):
        angles_between(cone(E(0, 2)), cone(E(0, 3)))


def test_als_config_contract():
    with pytest.raises(ContractError):
        AlsConfig(restarts=0)
    with pytest.raises(ContractError):
        AlsConfig(tolerance=-1.0)


def test_deterministic_given_seed():
    rng = np.random.default_rng(3)
    c1 = ConvexCone.from_generators(rng.random((7, 3)))
    c2 = ConvexCone.from_generators(rng.random((7, 3)))
    a = angles_between(c1, c2, AlsConfig(seed=5))
    b = angles_between(c1, c2, AlsConfig(seed=5))
    assert a.angles == b.angles
    assert isinstance(a, AngleSpectrum)
