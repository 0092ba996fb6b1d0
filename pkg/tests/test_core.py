import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bosonsim.core import (
    ComplexMatrix,
    FockConfiguration,
    InvalidInputError,
    OutputDistribution,
    ResourceLimitError,
    UnitaryMatrix,
    enumerate_configurations,
    standard_input,
    total_variation_distance,
)
from bosonsim.interferometer import haar_unitary

from oracles import uniform_brute_compositions


def cfg(*occ):
    return FockConfiguration(occ)


@pytest.mark.parametrize(
    "n, m, expected",
    [(3, 5, (1, 1, 1, 0, 0)), (0, 4, (0, 0, 0, 0)), (2, 2, (1, 1))],
)
def test_standard_input(n, m, expected):
    assert standard_input(n, m).occupations == expected


def test_standard_input_rejects_more_photons_than_modes():
    with pytest.raises(InvalidInputError):
        standard_input(4, 3)


def test_fock_configuration_basics():
    c = cfg(2, 0, 1)
    assert c.total() == 3
    assert c.modes == 3
    assert c.photon_modes() == [0, 0, 2]
    assert not c.is_collision_free()
    assert c == FockConfiguration([2, 0, 1])
    assert c != cfg(2, 1, 0)
    assert hash(c) == hash(FockConfiguration((2, 0, 1)))
    assert FockConfiguration.from_modes([2, 0, 0], 3) == c
    with pytest.raises(InvalidInputError):
        cfg(1, -1)


def test_enumerate_small_cases():
    assert enumerate_configurations(1, 3) == [cfg(1, 0, 0), cfg(0, 1, 0), cfg(0, 0, 1)]
    assert len(enumerate_configurations(3, 9)) == 165
    assert enumerate_configurations(0, 5) == [cfg(0, 0, 0, 0, 0)]


def test_enumeration_is_sorted_in_canonical_order():
    configs = enumerate_configurations(3, 4)
    assert configs == sorted(configs)
    assert configs[0] == cfg(3, 0, 0, 0)
    assert configs[-1] == cfg(0, 0, 0, 3)


@pytest.mark.parametrize("n", range(0, 6))
@pytest.mark.parametrize("m", range(1, 13))
def test_enumeration_count_matches_binomial(n, m):
    configs = enumerate_configurations(n, m)
    assert len(configs) == math.comb(n + m - 1, n)
    assert len(set(configs)) == len(configs)
    assert all(c.total() == n and c.modes == m for c in configs)


@pytest.mark.parametrize("n, m", [(3, 4), (4, 3), (2, 5)])
def test_enumeration_matches_brute_force_placement(n, m):
    got = {c.occupations for c in enumerate_configurations(n, m)}
    assert got == uniform_brute_compositions(n, m)


def test_enumeration_cap():
    with pytest.raises(ResourceLimitError):
        enumerate_configurations(10, 30)
    with pytest.raises(ResourceLimitError):
        enumerate_configurations(3, 9, cap=100)


def test_complex_matrix_bounds_checked():
    a = ComplexMatrix.from_entries(2, 3, [1, 2, 3, 4, 5, 6j])
    assert a.shape == (2, 3)
    assert a[1, 2] == 6j
    assert a.entries[4] == 5
    with pytest.raises(IndexError):
        a[2, 0]
    with pytest.raises(IndexError):
        a[-1, 0]
    with pytest.raises(InvalidInputError):
        ComplexMatrix.from_entries(2, 2, [1, 2, 3])
    with pytest.raises(ValueError):
        a.array[0, 0] = 7


def test_unitary_rejects_small_perturbation():
    u = haar_unitary(5, 11).array.copy()
    UnitaryMatrix(u)
    u[2, 3] += 1e-6
    with pytest.raises(InvalidInputError):
        UnitaryMatrix(u)


def test_unitary_rejects_non_square():
    with pytest.raises(InvalidInputError):
        UnitaryMatrix(np.ones((2, 3)))


def test_unitary_json_round_trip():
    u = haar_unitary(4, 2)
    obj = json.loads(json.dumps(u.to_json_obj()))
    assert set(obj) == {"m", "re", "im"}
    v = UnitaryMatrix.from_json_obj(obj)
    assert v == u
    assert v.digest() == u.digest()
    assert haar_unitary(4, 3).digest() != u.digest()


def test_distribution_validation():
    with pytest.raises(InvalidInputError):
        OutputDistribution({cfg(1, 0): 0.5}, 1, 2)
    with pytest.raises(InvalidInputError):
        OutputDistribution({cfg(1, 1): 1.0}, 1, 2)
    with pytest.raises(InvalidInputError):
        OutputDistribution({cfg(1, 0): 1.2, cfg(0, 1): -0.2}, 1, 2)
    d = OutputDistribution({cfg(0, 1): 0.25, cfg(1, 0): 0.75}, 1, 2)
    assert d.configurations() == [cfg(1, 0), cfg(0, 1)]
    assert d[cfg(1, 0)] == 0.75


def test_distribution_serialization_round_trips():
    d = OutputDistribution({cfg(2, 0): 0.5, cfg(1, 1): 0.125, cfg(0, 2): 0.375}, 2, 2)
    rows = json.loads(json.dumps(d.to_json_obj()))
    assert [r["config"] for r in rows] == [[2, 0], [1, 1], [0, 2]]
    assert dict(OutputDistribution.from_json_obj(rows).items()) == dict(d.items())
    text = d.to_csv()
    assert text.splitlines()[0] == "config,p"
    assert text.splitlines()[1] == "2-0,0.5"
    assert dict(OutputDistribution.from_csv(text).items()) == dict(d.items())


A, B = cfg(1, 0), cfg(0, 1)


def test_tvd_examples():
    p = OutputDistribution({A: 0.75, B: 0.25}, 1, 2)
    q = OutputDistribution({A: 0.5, B: 0.5}, 1, 2)
    assert total_variation_distance(p, p) == 0
    assert total_variation_distance(
        OutputDistribution.point_mass(A), OutputDistribution.point_mass(B)
    ) == 1
    assert total_variation_distance(p, q) == pytest.approx(0.25, abs=1e-15)


def test_tvd_rejects_mismatched_shapes():
    with pytest.raises(InvalidInputError):
        total_variation_distance(
            OutputDistribution.point_mass(A), OutputDistribution.point_mass(cfg(1, 0, 0))
        )


SUPPORT = enumerate_configurations(2, 3)


@st.composite
def distributions(draw):
    w = draw(st.lists(st.floats(0, 1), min_size=len(SUPPORT), max_size=len(SUPPORT)))
    w = np.array(w) + 1e-3
    w /= w.sum()
    return OutputDistribution(dict(zip(SUPPORT, w)), 2, 3)


@settings(max_examples=200, deadline=None)
@given(distributions(), distributions(), distributions())
def test_tvd_is_a_metric(p, q, r):
    pq = total_variation_distance(p, q)
    assert pq == pytest.approx(total_variation_distance(q, p), abs=1e-15)
    assert 0 <= pq <= 1 + 1e-15
    assert pq <= total_variation_distance(p, r) + total_variation_distance(r, q) + 1e-12
