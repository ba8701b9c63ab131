import math
import numpy as np
import pytest
import hpi
from hpi import ground_state as gs


def _boundary_points(N, k, rng):
    # the origin plus 2k - 1 distinct points on the top, right and bottom sides of [0, N] x [-N, N]
    outer = set((x, N) for x in range(N + 1))
    outer.update((x, -N) for x in range(N + 1))
    outer.update((N, y) for y in range(-N, N + 1))
    outer = sorted(outer)
    chosen = rng.choice(len(outer), size=2 * k - 1, replace=False)
    return [(0, 0)] + [outer[i] for i in sorted(chosen)]


def _cost(points, pairing):
    return sum(abs(points[i][0] - points[j][0]) + abs(points[i][1] - points[j][1]) for i, j in pairing)


def _random_pairing(n_points, rng):
    order = rng.permutation(n_points)
    return tuple(tuple(sorted((int(order[i]), int(order[i + 1])))) for i in range(0, n_points, 2))


def test_reduce_angle():
    assert gs.reduce_angle(0.3) == (0.3, False)
    reduced, swapped = gs.reduce_angle(1.2)
    assert swapped and reduced == pytest.approx(math.pi / 2 - 1.2)
    with pytest.raises(hpi.DomainError):
        gs.reduce_angle(math.pi / 2)


def test_step_probability():
    assert gs.step_probability(0.0) == 0.0
    assert gs.step_probability(math.pi / 4) == 0.5
    t = math.tan(math.pi / 8)
    assert gs.step_probability(math.pi / 8) == pytest.approx(t / (1 + t))
    with pytest.raises(hpi.DomainError):
        gs.step_probability(1.0)


def test_ray_endpoint():
    assert gs.ray_endpoint(0.0, 50) == (50, 0)
    assert gs.ray_endpoint(math.pi / 4, 10_000) == (10_000, 10_000)
    assert gs.ray_endpoint(math.pi / 8, 64) == (64, 26)


def test_staircase_flat():
    path = gs.sample_staircase(0.0, 20, seed=1)
    assert path.column_increments == (0,) * 20
    assert path.length == 20
    assert path.vertices() == [(x, 0) for x in range(21)]


def test_staircase_deterministic():
    assert gs.sample_staircase(0.4, 50, seed=3) == gs.sample_staircase(0.4, 50, seed=3)
    assert gs.sample_staircase(0.4, 50, seed=3) != gs.sample_staircase(0.4, 50, seed=4)


def test_staircase_mean_slope():
    theta = math.pi / 8
    increments = np.concatenate([gs.sample_staircase(theta, 2000, seed=s).column_increments for s in range(20)])
    # geometric mean p / (1 - p) = tan(theta)
    assert increments.mean() == pytest.approx(math.tan(theta), rel=0.05)


def test_staircase_swapped():
    path = gs.sample_staircase(1.2, 30, seed=5)
    assert path.swapped
    vertices = path.vertices()
    assert vertices[0] == (0, 0)
    # reflected: the long direction is vertical
    assert vertices[-1][1] == 30
    for (x0, y0), (x1, y1) in zip(vertices[:-1], vertices[1:]):
        assert abs(x1 - x0) + abs(y1 - y0) == 1


def test_staircase_heights():
    path = gs.StaircasePath(0.3, (1, 0, 2), final_rise=1)
    assert list(path.heights()) == [0, 1, 1, 3]
    assert path.rise == 4
    assert path.length == 7
    assert path.vertices() == [(0, 0), (0, 1), (1, 1), (2, 1), (2, 2), (2, 3), (3, 3), (3, 4)]


def test_bridge_endpoint():
    theta = math.pi / 8
    for seed in range(5):
        path = gs.sample_staircase_bridge(theta, 64, seed)
        assert path.N == 64
        assert path.rise == 26
        assert path.vertices()[-1] == (64, 26)


def test_bridge_uniform():
    # N = 2, rise 1: three staircases, vertical step at abscissa 0, 1 or 2
    theta = math.atan(0.5)
    counts = np.zeros(3)
    for seed in range(3000):
        path = gs.sample_staircase_bridge(theta, 2, seed)
        placed = list(path.column_increments) + [path.final_rise]
        counts[placed.index(1)] += 1
    assert counts / counts.sum() == pytest.approx([1 / 3] * 3, abs=0.04)


def test_chord_distance():
    assert gs.chord_distance(gs.sample_staircase_bridge(0.0, 10, seed=1)) == 0.0
    corner = gs.StaircasePath(math.pi / 4, (2, 0))
    assert corner.vertices() == [(0, 0), (0, 1), (0, 2), (1, 2), (2, 2)]
    assert gs.chord_distance(corner) == pytest.approx(math.sqrt(2))
    swapped = gs.StaircasePath(math.pi / 4, (2, 0), swapped=True)
    assert gs.chord_distance(swapped) == gs.chord_distance(corner)


def test_chord_excess_frequency_decreases():
    freq = [gs.chord_excess_frequency(math.pi / 4, N, 2000, seed=1) for N in (64, 256, 1024)]
    assert freq[0] > 0
    assert freq[0] > freq[2]
    assert hpi.verify().trend(freq).decreasing()
    with pytest.raises(hpi.DomainError):
        gs.chord_excess_frequency(math.pi / 4, 64, 0, seed=1)


def test_binomial_log():
    assert gs.binomial_log(5, 3) == pytest.approx(math.log(56))
    assert gs.binomial_log(7, 0) == 0.0
    # exact and log-gamma branches agree across the switch
    exact = math.log(math.comb(10_000, 4_000))
    assert gs.binomial_log(6_000, 4_000) == pytest.approx(exact, rel=1e-12)
    assert gs.binomial_log(6_001, 4_000) == pytest.approx(exact + math.log(10_001 / 6_001), rel=1e-10)
    with pytest.raises(hpi.DomainError):
        gs.binomial_log(-1, 3)


def test_cross_ratio_equal_endpoints():
    assert gs.binomial_cross_ratio(100, 40, 40, 3, 2) == 1.0


def test_cross_ratio_small_case():
    a, b, b_bar, m, n = 10, 6, 4, 3, 2
    upper = math.comb(a + b - m - n, b - n) / math.comb(a + b, b)
    lower = math.comb(a + b_bar - m - n, b_bar - n) / math.comb(a + b_bar, b_bar)
    assert gs.binomial_cross_ratio(a, b, b_bar, m, n) == pytest.approx(upper / lower, rel=1e-12)


def test_cross_ratio_inadmissible():
    with pytest.raises(hpi.DomainError):
        gs.binomial_cross_ratio(10, 5, 1, 3, 2)


def test_cross_ratio_convergence():
    rows, threshold = gs.cross_ratio_sequence(math.pi / 4, [100, 400, 1600, 10_000])
    assert abs(rows[-1].ratio - 1) < 0.01
    assert hpi.verify().trend([abs(r.ratio - 1) for r in rows]).decreasing().strictly()
    assert threshold == 100
    assert rows[-1].b == rows[-1].b_bar + 100


def test_cross_ratio_grows_with_offset():
    deviations = [abs(gs.binomial_cross_ratio(10_000, 10_000 + 100, 10_000, m, 2) - 1) for m in (5, 20, 100)]
    assert hpi.verify().trend(deviations).increasing().strictly()


def test_ground_pairing_simple():
    result = gs.ground_pairing([(0, 0), (0, 1), (5, 0), (5, 1)])
    assert result.pairing == ((0, 1), (2, 3))
    assert result.cost == 2
    assert result.degeneracy == 1


def test_ground_pairing_degenerate():
    result = gs.ground_pairing([(0, 0), (1, 0), (0, 1), (1, 1)])
    assert result.cost == 2
    assert result.degeneracy == 2
    assert result.pairing == ((0, 1), (2, 3))


def test_ground_pairing_matches_brute_force():
    rng = np.random.default_rng(8)
    for k in (1, 2, 3, 4):
        for _ in range(10):
            points = _boundary_points(12, k, rng)
            result = gs.ground_pairing(points)
            costs = [_cost(points, p) for p in gs.brute_force_pairings(len(points))]
            assert result.cost == min(costs)
            assert result.degeneracy == costs.count(min(costs))


def test_ground_pairing_beats_random():
    rng = np.random.default_rng(9)
    points = _boundary_points(40, 6, rng)
    best = gs.ground_pairing(points).cost
    for _ in range(50):
        assert _cost(points, _random_pairing(len(points), rng)) >= best


def test_ground_pairing_domain():
    with pytest.raises(hpi.DomainError):
        gs.ground_pairing([(0, 0), (1, 1), (2, 2)])
    with pytest.raises(hpi.DomainError):
        gs.ground_pairing([(0, 0), (0, 0)])
    with pytest.raises(hpi.DomainError):
        gs.ground_pairing([(i, 0) for i in range(18)])


def test_brute_force_count():
    assert sum(1 for _ in gs.brute_force_pairings(6)) == 15
    assert sum(1 for _ in gs.brute_force_pairings(8)) == 105


def test_separation_predicate_geometry():
    N = 40
    assert gs.separation_predicate([((0, 0), (40, 10)), ((40, -40), (40, 40))], N)
    assert not gs.separation_predicate([((0, 0), (40, 10)), ((5, -40), (5, 40))], N)
    # touching the box boundary counts as a hit
    assert not gs.separation_predicate([((10, 10), (10, 40))], N)


def test_separation_predicate_random():
    rng = np.random.default_rng(10)
    N = 64
    checked = 0
    while checked < 200:
        points = _boundary_points(N, int(rng.integers(1, 5)), rng)
        result = gs.ground_pairing(points)
        if result.degeneracy != 1:
            continue
        assert gs.separation_predicate(result, N)
        checked += 1


def test_endpoint_set_without_pairing():
    with pytest.raises(ValueError):
        gs.EndpointSet(((0, 0), (1, 0))).cost


@pytest.mark.parametrize("theta", [math.pi / 8, math.pi / 4])
def test_oz_coefficient(theta):
    N_list = [2 ** e for e in range(6, 15)]
    assert gs.oz_coefficient_fit(theta, N_list) == pytest.approx(-0.5, abs=0.05)


def test_oz_degenerate():
    with pytest.raises(hpi.NumericalError):
        gs.oz_coefficient_fit(0.0, [2 ** e for e in range(6, 15)])


def test_oz_needs_two_decades():
    with pytest.raises(hpi.DomainError):
        gs.oz_coefficient_fit(math.pi / 8, [64, 128, 256])
