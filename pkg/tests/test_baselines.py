import random
from collections import Counter

import pytest

from vmplace import rng
from vmplace.baselines import (
    InstanceTooLargeError,
    OracleLimits,
    best_fit,
    exact_oracle,
    first_fit,
    oracle_report,
    random_fit,
)
from vmplace.model import ServerState, ValidationError, VmSpec

from conftest import brute_force_min_peak, rv, server, vm


def test_splitmix_reference_values():
    # First outputs of the reference SplitMix64 generator seeded with 0:
    # state advances by the golden gamma, output = mix(state).
    assert rng.splitmix64(0) == 0xE220A8397B1DCDAF
    assert rng.splitmix64(0x9E3779B97F4A7C15) == 0x6E789E6AA1B965F4


def test_uniform_range_and_below():
    xs = [rng.uniform(5, 1, i) for i in range(2000)]
    assert all(0 <= x < 1 for x in xs)
    assert 0.45 < sum(xs) / len(xs) < 0.55
    assert all(0 <= rng.below(3, 9, i) < 3 for i in range(300))
    with pytest.raises(ValueError):
        rng.below(0, 1)


@pytest.mark.parametrize("placer", [first_fit, best_fit, lambda v, s: random_fit(v, s, 1)])
def test_empty_and_infeasible(placer, square_servers):
    assert placer([], square_servers).placement == {}
    rep = placer([vm(0, (11, 1, 1, 1))], square_servers)
    assert rep.placement == {} and set(rep.unplaced) == {0}


@pytest.mark.parametrize("placer", [first_fit, best_fit, lambda v, s: random_fit(v, s, 1)])
def test_duplicate_ids(placer, square_servers):
    with pytest.raises(ValidationError):
        placer([vm(1, (1, 1, 1, 1)), vm(1, (1, 1, 1, 1))], square_servers)


def test_first_fit_fills_in_id_order(square_servers):
    rep = first_fit([vm(0, (4, 1, 1, 1)), vm(1, (4, 1, 1, 1))], square_servers[:1])
    assert rep.placement == {0: 0, 1: 0}
    rep = first_fit([vm(i, (4, 1, 1, 1)) for i in range(4)], square_servers)
    assert rep.placement_order == [(0, 0), (1, 0), (2, 1), (3, 1)]


def test_best_fit_tightest():
    servers = [server(0, (10, 10, 10, 10), [8]), server(1, (10, 10, 10, 10), [9])]
    pre = [vm(8, (1, 0, 0, 0)), vm(9, (5, 0, 0, 0))]
    # residual CPU 9 on server 0, 5 on server 1
    rep = best_fit(pre + [vm(0, (4, 1, 1, 1))], servers)
    assert rep.placement[0] == 1


def test_random_fit_reproducible_and_single_option():
    vms = [vm(i, (1, 1, 1, 1)) for i in range(20)]
    servers = [server(j, (10, 10, 10, 10)) for j in range(4)]
    assert random_fit(vms, servers, 7) == random_fit(vms, servers, 7)
    assert random_fit(vms, servers, 7) != random_fit(vms, servers, 8)
    only = [server(0, (10, 10, 10, 10)), server(1, (1, 1, 1, 1))]
    for seed in range(20):
        assert random_fit([vm(0, (5, 5, 5, 5))], only, seed).placement == {0: 0}


def test_random_fit_uniform():
    counts = Counter(
        random_fit([vm(0, (1, 1, 1, 1))], [server(0, (10,) * 4), server(1, (10,) * 4)], s).placement[0]
        for s in range(1000)
    )
    assert abs(counts[0] - 500) <= 50 and abs(counts[1] - 500) <= 50


def test_oracle_examples(square_servers):
    res = exact_oracle([vm(0, (5, 1, 1, 1))], square_servers)
    assert res.feasible and res.objective_value == pytest.approx(0.5)
    res = exact_oracle([vm(0, (6, 1, 1, 1)), vm(1, (6, 1, 1, 1))], square_servers[:1])
    assert not res.feasible and res.best_placement is None

    vms = [vm(i, (4, 1, 1, 1)) for i in range(4)]
    expected = brute_force_min_peak(vms, square_servers)
    assert expected[0] == pytest.approx(0.8)
    res = exact_oracle(vms, square_servers)
    assert res.feasible and res.objective_value == pytest.approx(0.8)
    # first optimum in lexicographic order
    assert tuple(res.best_placement[i] for i in range(4)) == expected[1] == (0, 0, 1, 1)


def test_oracle_limits():
    vms = [vm(i, (0.1, 0.1, 0.1, 0.1)) for i in range(11)]
    with pytest.raises(InstanceTooLargeError, match="limited"):
        exact_oracle(vms, [server(0, (10,) * 4)])
    with pytest.raises(InstanceTooLargeError):
        exact_oracle(vms[:2], [server(j, (10,) * 4) for j in range(5)])
    assert exact_oracle(vms, [server(0, (10,) * 4)], OracleLimits(11, 1)).feasible


def test_oracle_edge_cases():
    assert exact_oracle([], [server(0, (1,) * 4)]).objective_value == 0.0
    assert not exact_oracle([vm(0, (1,) * 4)], []).feasible
    rep = oracle_report([vm(0, (20, 1, 1, 1))], [server(0, (10,) * 4)])
    assert set(rep.unplaced) == {0}


def random_small(r):
    servers = [ServerState(j, rv(*(r.choice([6, 8, 10]) for _ in range(4))))
               for j in range(r.randint(1, 3))]
    vms = [VmSpec(i, r.randint(1, 100), rv(*(r.uniform(0.5, 5) for _ in range(4))))
           for i in range(r.randint(0, 6))]
    return vms, servers


@pytest.mark.parametrize("seed", range(40))
def test_oracle_matches_enumeration(seed):
    vms, servers = random_small(random.Random(seed))
    res = exact_oracle(vms, servers)
    expected = brute_force_min_peak(vms, servers)
    if expected is None:
        assert not res.feasible
    else:
        assert res.feasible
        assert res.objective_value == pytest.approx(expected[0], abs=1e-12)
        assert tuple(res.best_placement[v.id] for v in vms) == expected[1]
