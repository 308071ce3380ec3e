import math

import numpy as np
import pytest

from conftest import graph_from_checks, random_tree_graph
from ldpcglass.bp import (
    MSG_CLIP,
    MSG_CLIP_EFFECTIVE,
    ber_simulation,
    check_update,
    hard_decision_error,
    run_bp,
    tree_magnetization,
    variable_update,
)
from ldpcglass.channel import NoiseScale, draw_fields
from ldpcglass.errors import ParameterError, PreconditionError
from ldpcglass.gibbs import exact_marginals_hard
from ldpcglass.graph import DegreeDistribution, extract_neighborhood, sample_regular


def test_check_update_examples():
    assert check_update([]) == pytest.approx(math.atanh(1 - 1e-15))
    assert check_update([]) == MSG_CLIP_EFFECTIVE < MSG_CLIP
    assert check_update([0.0, 3.0, -2.0]) == 0.0
    assert check_update([0.5, 0.5]) == pytest.approx(math.atanh(math.tanh(0.5) ** 2))
    # the rounded reference value 0.21691 is off by 2e-5 from the formula (0.216890)
    assert check_update([0.5, 0.5]) == pytest.approx(0.21691, abs=5e-5)
    assert abs(check_update([40.0, 40.0])) <= MSG_CLIP_EFFECTIVE


def test_variable_update_examples():
    assert variable_update(0.7, []) == 0.7
    assert variable_update(0.1, [0.2, -0.3]) == pytest.approx(0.0, abs=1e-15)
    assert variable_update(0.1, [0.2, -0.3, 5.0], exclude=2) == pytest.approx(0.0, abs=1e-15)
    assert variable_update(5.0, [20.0, 20.0]) == MSG_CLIP
    assert variable_update(-5.0, [-20.0, -20.0]) == -MSG_CLIP


def test_hard_decision_ties():
    assert hard_decision_error(np.array([1.0, -2.0, 0.0])).tolist() == [0.0, 1.0, 0.5]


def test_run_bp_trivial_fields():
    g = sample_regular(12, 3, 6, seed=1)
    res = run_bp(g, np.full(12, 10.0))
    assert res.iterations == 1 and res.bit_error == 0 and np.all(res.estimates == 1)
    zero = run_bp(g, np.zeros(12))
    assert np.all(zero.messages.check_to_var == 0) and np.all(zero.beliefs == 0)
    assert zero.bit_error == 0.5
    with pytest.raises(ParameterError):
        run_bp(g, np.zeros(12), max_iters=0)
    with pytest.raises(ParameterError):
        run_bp(g, np.zeros(11))


def test_bp_exact_on_trees(rng):
    for _ in range(50):
        g = random_tree_graph(rng)
        h = draw_fields(rng, float(rng.uniform(0.3, 3.0)), g.n_vars)
        res = run_bp(g, h, max_iters=2 * g.n_vars + 2, stop_eps=0.0, stop_on_parity=False)
        exact = exact_marginals_hard(g, h).magnetizations
        assert np.max(np.abs(np.tanh(res.beliefs) - exact)) <= 1e-9


def test_tree_magnetization_examples(rng):
    star = graph_from_checks([(0, 1, 2, 3)], 4)
    h = np.array([0.3, -0.7, 1.1, 0.4])
    assert tree_magnetization(extract_neighborhood(star, 0, 0), h) == pytest.approx(math.tanh(0.3))
    expect = math.tanh(0.3 + math.atanh(np.prod(np.tanh(h[1:]))))
    assert tree_magnetization(extract_neighborhood(star, 0, 1), h) == pytest.approx(expect, abs=1e-14)
    for _ in range(30):
        g = random_tree_graph(rng, max_vars=20)
        h = draw_fields(rng, 1.0, g.n_vars)
        o = int(rng.integers(g.n_vars))
        nb = extract_neighborhood(g, o, g.n_vars)
        exact = exact_marginals_hard(g, h).magnetizations[o]
        assert abs(tree_magnetization(nb, h) - exact) <= 1e-9


def test_tree_magnetization_batch_and_errors(rng):
    g = random_tree_graph(rng)
    nb = extract_neighborhood(g, 0, 2)
    fields = draw_fields(rng, 1.0, (7, g.n_vars))
    batch = tree_magnetization(nb, fields)
    single = [tree_magnetization(nb, f) for f in fields]
    assert np.array_equal(batch, single)
    loop = graph_from_checks([(0, 1, 2), (0, 1, 3)], 4)
    with pytest.raises(PreconditionError):
        tree_magnetization(extract_neighborhood(loop, 0, 2), np.zeros(4))


def test_field_negation_symmetry():
    g = sample_regular(24, 3, 6, seed=5)
    h = draw_fields(np.random.default_rng(3), 0.8, 24)
    a = run_bp(g, h, max_iters=20, stop_on_parity=False, stop_eps=0)
    b = run_bp(g, -h, max_iters=20, stop_on_parity=False, stop_eps=0)
    assert np.array_equal(a.beliefs, -b.beliefs)
    assert np.array_equal(a.messages.check_to_var, -b.messages.check_to_var)


def test_messages_bounded():
    g = sample_regular(60, 3, 6, seed=2)
    h = draw_fields(np.random.default_rng(0), 25.0, 60)
    for iters in (1, 3, 10):
        res = run_bp(g, h, max_iters=iters, stop_on_parity=False, stop_eps=0)
        assert np.max(np.abs(res.messages.check_to_var)) <= MSG_CLIP
        assert np.max(np.abs(res.messages.var_to_check)) <= MSG_CLIP


def test_ber_limits():
    assert ber_simulation(60, (3, 6), NoiseScale(60.0), 20, seed=1).ber.estimate == 0
    assert ber_simulation(60, (3, 6), NoiseScale(0.0), 20, seed=1).ber.estimate == 0.5


def test_ber_below_threshold():
    res = ber_simulation(1000, (3, 6), NoiseScale.from_sigma(0.6), 200, max_iters=50, seed=11)
    assert res.ber.estimate < 1e-3


def test_ber_monotone_in_m():
    grid = [0.8, 1.0, 1.3, 1.7, 2.2]
    bers = [ber_simulation(200, (3, 6), NoiseScale(m), 200, seed=5) for m in grid]
    for lo, hi in zip(bers, bers[1:]):
        se = math.hypot(lo.ber.std_error, hi.ber.std_error)
        assert hi.ber.estimate <= lo.ber.estimate + 3 * se


def test_ber_deterministic_and_fixed_graph():
    a = ber_simulation(100, DegreeDistribution({3: 1.0}, {6: 1.0}), NoiseScale(1.2), 30, seed=2, threads=1)
    b = ber_simulation(100, DegreeDistribution({3: 1.0}, {6: 1.0}), NoiseScale(1.2), 30, seed=2, threads=4)
    assert a == b
    g = sample_regular(100, 3, 6, seed=0)
    c = ber_simulation(100, g, NoiseScale(1.2), 30, seed=2)
    assert 0 <= c.ber.estimate <= 0.5
