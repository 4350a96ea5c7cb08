import math
from collections import Counter

import numpy as np
import pytest

import brwlab as B
from brwlab.competition import RED, BLUE
import helpers


def _rngs(seed=0, replica=0):
    return B.arena_rngs(seed, replica)


def test_arena_init_colors_start_sites():
    st = B.arena_init(0, 1, "red_first")
    assert st.colors.color_at(0) == "red"
    assert st.colors.color_at(1) == "blue"
    assert st.colors.time_at(0) == 0
    assert B.color_counts(st) == (1, 1)


def test_arena_init_equal_starts_tie_rules():
    assert B.arena_init(0, 0, "blue_first").colors.color_at(0) == "blue"
    assert B.arena_init(0, 0, "red_first").colors.color_at(0) == "red"
    with pytest.raises(ValueError):
        B.arena_init(0, 0, "fair_coin")  # needs a tie rng
    with pytest.raises(ValueError):
        B.arena_init(0, 0, "coin_flip")


def test_fair_coin_balanced(rng):
    n = 4000
    reds = 0
    for r in range(n):
        st = B.arena_init(0, 0, "fair_coin", tie_rng=np.random.default_rng((1, r)))
        reds += st.colors.color_at(0) == "red"
    sigma = math.sqrt(0.25 / n)
    assert abs(reds / n - 0.5) < 4 * sigma


def test_one_step_fresh_site_distribution():
    # both colors branch into two +-1 children; red can only paint -1 fresh,
    # blue can only paint 2 fresh, independently with probability 3/4
    spec = helpers.spec_mean2_pm1()
    cfg = B.EngineConfig()
    n = 20_000
    freq = Counter()
    for r in range(n):
        st = B.arena_init(0, 1, "red_first")
        st = B.arena_step(st, spec, spec, cfg, _rngs(3, r))
        freq[(st.colors.color_at(-1), st.colors.color_at(2))] += 1
    p_red = sum(v for (cr, _), v in freq.items() if cr == "red") / n
    p_blue = sum(v for (_, cb), v in freq.items() if cb == "blue") / n
    sigma = math.sqrt(0.75 * 0.25 / n)
    assert abs(p_red - 0.75) < 4 * sigma
    assert abs(p_blue - 0.75) < 4 * sigma
    # independence of the two marginals
    p_both = freq.get(("red", "blue"), 0) / n
    assert abs(p_both - p_red * p_blue) < 5 * sigma


def test_contested_site_goes_to_tie_rule():
    hop = B.ProductForm(B.CountLaw.fixed(1), B.StepLaw(((1, 1.0),)))
    cfg = B.EngineConfig()
    for rule, want in (("red_first", "red"), ("blue_first", "blue")):
        st = B.arena_init(0, 0, rule, tie_rng=np.random.default_rng(0))
        st = B.arena_step(st, hop, hop, cfg, _rngs())
        assert st.colors.color_at(1) == want
        assert st.generation == 1


def test_frontier_gaps():
    st = B.arena_init(0, 1, "red_first")
    assert B.frontier_gaps(st) == (1, -1)


def test_hole_census_at_start():
    st = B.arena_init(0, 1, "red_first")
    census = B.hole_census(st, 3)
    # right of red front: sites 1 (blue), 2, 3 -> holes {2, 3}
    assert census.right_even == 1 and census.right_odd == 1
    # left of red front: sites -3, -2, -1 all uncolored
    assert census.left_even == 1 and census.left_odd == 2
    with pytest.raises(ValueError):
        B.hole_census(st, 0)


def test_hole_census_fully_colored_window(rng):
    st = B.arena_init(0, 1, "red_first")
    st.colors.paint(np.arange(-5, 6), RED, 1)
    census = B.hole_census(st, 4)
    assert census.right_even == census.right_odd == 0
    assert census.left_even == census.left_odd == 0


def test_color_field_is_append_only(spec15):
    cfg = B.EngineConfig()
    st = B.arena_init(0, 1, "red_first")
    first_seen = {0: ("red", 0), 1: ("blue", 0)}
    for n in range(60):
        st = B.arena_step(st, spec15, spec15, cfg, _rngs(11, 0))
        for site, value in st.colors.items():
            if site in first_seen:
                assert first_seen[site] == value
            else:
                first_seen[site] = value
    assert dict(st.colors.items()) == first_seen


def test_red_marginal_unchanged_by_blue(spec15):
    cfg = B.EngineConfig()
    rngs = _rngs(21, 0)
    st = B.arena_init(0, 1, "red_first")
    arena_max = []
    for _ in range(40):
        st = B.arena_step(st, spec15, spec15, cfg, rngs)
        arena_max.append(st.red.max_pos)

    solo = B.init(0)
    solo_rng = B.arena_rngs(21, 0).red  # same stream as the arena's red
    solo_max = []
    for _ in range(40):
        solo = B.advance(solo, spec15, cfg, solo_rng)
        solo_max.append(solo.max_pos)
    assert arena_max == solo_max


def test_tie_rule_and_color_swap_symmetry(spec15):
    # swapping both the streams and the tie rule mirrors the arena exactly
    cfg = B.EngineConfig()
    for r in range(30):
        base = B.arena_rngs(31, r)
        swapped = B.arena_rngs(31, r)
        a = B.arena_init(0, 0, "red_first", tie_rng=base.tie)
        b = B.arena_init(0, 0, "blue_first", tie_rng=swapped.tie)
        for _ in range(25):
            a = B.arena_step(a, spec15, spec15, cfg, base)
            b = B.arena_step(
                b, spec15, spec15, cfg,
                B.ArenaRngs(red=swapped.blue, blue=swapped.red, tie=swapped.tie),
            )
        mirrored = {s: ("red" if c == "blue" else "blue", t) for s, (c, t) in b.colors.items()}
        assert dict(a.colors.items()) == mirrored
        assert B.color_counts(a) == tuple(reversed(B.color_counts(b)))


def test_window_presence(spec15):
    cfg = B.EngineConfig()
    st = B.arena_init(0, 1, "red_first")
    for _ in range(30):
        st = B.arena_step(st, spec15, spec15, cfg, _rngs(41, 0))
    red_in, blue_in = B.window_presence(st, 1, 4)
    assert blue_in  # site 1 is blue from the start
    with pytest.raises(B.WindowOutOfRange):
        B.window_presence(st, 0, 10**6)
    with pytest.raises(B.WindowOutOfRange):
        B.window_presence(st, 5.2, 5.8)  # no lattice site inside


def test_color_field_accessors():
    field = B.ColorField()
    field.paint(np.array([3, 5]), RED, 2)
    field.paint(np.array([5, 6]), BLUE, 3)  # 5 stays red
    assert field.color_at(5) == "red" and field.time_at(5) == 2
    assert field.color_at(6) == "blue" and field.time_at(6) == 3
    assert field.color_at(4) is None and field.time_at(4) is None
    assert field.counts() == (2, 1)
    assert sorted(dict(field.items())) == [3, 5, 6]
    codes = field.window_colors(3, 6)
    assert codes.tolist() == [RED, 0, RED, BLUE]
