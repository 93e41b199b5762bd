import pytest
from hypothesis import given, settings, strategies as st

from vmplace.classifier import (
    ClassificationError,
    ClassifierConfig,
    PlacementSet,
    assign_set,
    infer_dominant_set,
)
from vmplace.model import ResourceKind as R, ResourceVector, ValidationError

from conftest import rv, vm

TEN = ClassifierConfig(0.75, rv(10, 10, 10, 10))


def test_single_dominant():
    assert infer_dominant_set(rv(8, 1, 1, 1), TEN) == {R.CPU}


@pytest.mark.parametrize("alpha", [0.01, 0.5, 0.75, 1.0])
def test_symmetric_demand_all_dominant(alpha):
    cfg = ClassifierConfig(alpha, rv(10, 10, 10, 10))
    assert infer_dominant_set(rv(5, 5, 5, 5), cfg) == set(R)


def test_two_dominant():
    # shares 0.6, 0.5, 0.1, 0.1; cut 0.45
    assert infer_dominant_set(rv(6, 5, 1, 1), TEN) == {R.CPU, R.MEMORY}


def test_reference_capacity_normalizes():
    # 8/100 vs 1/4: memory dominates once normalized
    cfg = ClassifierConfig(0.75, rv(100, 4, 10, 10))
    assert infer_dominant_set(rv(8, 1, 0, 0), cfg) == {R.MEMORY}


def test_zero_demand_rejected():
    with pytest.raises(ClassificationError):
        infer_dominant_set(rv(0, 0, 0, 0), TEN)
    assert assign_set(vm(0, (0, 0, 0, 0)), TEN) is PlacementSet.NO_PREFERENCE


@pytest.mark.parametrize("alpha", [0, -0.1, 1.5])
def test_alpha_bounds(alpha):
    with pytest.raises(ValidationError, match=r"\(0, 1\]"):
        ClassifierConfig(alpha)


@pytest.mark.parametrize("dominant,expected", [
    ({R.NETWORK}, PlacementSet.NETWORK),
    ({R.CPU, R.DISK}, PlacementSet.CPU),
    ({R.DISK, R.MEMORY}, PlacementSet.MEMORY),
    ({R.CPU, R.MEMORY, R.NETWORK}, PlacementSet.NO_PREFERENCE),
    (set(R), PlacementSet.NO_PREFERENCE),
    (set(), PlacementSet.NO_PREFERENCE),
])
def test_assign_declared(dominant, expected):
    # declared sets win over whatever the demand suggests
    assert assign_set(vm(0, (9, 1, 1, 1), dominant=dominant), TEN) is expected


def test_assign_inferred():
    assert assign_set(vm(0, (1, 1, 9, 1)), TEN) is PlacementSet.NETWORK
    assert assign_set(vm(0, (5, 5, 5, 1)), TEN) is PlacementSet.NO_PREFERENCE


pos = st.floats(min_value=0.01, max_value=1000, allow_nan=False)
nonneg = st.floats(min_value=0, max_value=1000, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.tuples(nonneg, nonneg, nonneg, pos), st.tuples(pos, pos, pos, pos),
       st.sampled_from([0.5, 2.0, 4.0, 0.25]), st.floats(min_value=0.05, max_value=1.0))
def test_scale_invariant(demand, ref, k, alpha):
    # power-of-two scalars keep the float arithmetic exact
    base = infer_dominant_set(ResourceVector(*demand), ClassifierConfig(alpha, ResourceVector(*ref)))
    scaled = infer_dominant_set(ResourceVector(*demand).scale(k),
                                ClassifierConfig(alpha, ResourceVector(*ref).scale(k)))
    assert base == scaled


@settings(max_examples=200, deadline=None)
@given(st.tuples(nonneg, nonneg, nonneg, pos))
def test_alpha_extremes(demand):
    d = ResourceVector(*demand)
    top = max(demand)
    assert infer_dominant_set(d, ClassifierConfig(1.0)) == {k for k in R if d[k] == top}
    tiny = ClassifierConfig(1e-12)
    assert infer_dominant_set(d, tiny) == {k for k in R if d[k] > 0 and d[k] >= 1e-12 * top}


@settings(max_examples=200, deadline=None)
@given(st.one_of(st.none(), st.frozensets(st.sampled_from(list(R)))),
       st.tuples(nonneg, nonneg, nonneg, nonneg))
def test_assign_total(dominant, demand):
    s = assign_set(vm(0, demand, dominant=dominant), TEN)
    assert s in set(PlacementSet)
