"""Colony core: transition rules, colored repulsion, tabu, stepping loop."""

import pytest

from stigmergraph.colony import (
    Ant,
    EngineParams,
    StepReport,
    candidate_moves,
    choose_next_exploit,
    choose_next_simple,
    colored_weight,
    exploit_distribution,
    make_rng,
    normalize,
    simple_distribution,
    step_all,
    weighted_pick,
)
from stigmergraph.errors import InvalidParameterError
from stigmergraph.graph import EnvironmentGraph, make_random_tree, make_torus
from stigmergraph.rng import DetRng


class CountingRng(DetRng):
    """DetRng that counts draws, for draw-budget contracts."""

    def __init__(self, seed):
        super().__init__(seed)
        self.draws = 0

    def next_u64(self):
        self.draws += 1
        return super().next_u64()


def star_graph(n_leaves, taus):
    """Hub vertex 0 with leaves 1..n, pheromone taus on the spokes."""
    g = EnvironmentGraph()
    hub = g.add_vertex()
    for i in range(n_leaves):
        leaf = g.add_vertex()
        eid = g.add_edge(hub, leaf)
        g.deposit(eid, taus[i])
    return g, hub


# -- parameters -------------------------------------------------------------


def test_engine_params_validation():
    EngineParams()  # defaults valid
    with pytest.raises(InvalidParameterError):
        EngineParams(rho=-0.1)
    with pytest.raises(InvalidParameterError):
        EngineParams(rho=1.0001)
    with pytest.raises(InvalidParameterError):
        EngineParams(Q=0.0)
    with pytest.raises(InvalidParameterError):
        EngineParams(q0=1.2)
    with pytest.raises(InvalidParameterError):
        EngineParams(gamma=-1.0)
    with pytest.raises(InvalidParameterError):
        EngineParams(floor=0.0)
    with pytest.raises(InvalidParameterError):
        EngineParams(tabu_size=-1)
    with pytest.raises(InvalidParameterError):
        EngineParams(tabu_size=2.5)


# -- colored weights ----------------------------------------------------------


def test_colored_weight_examples():
    assert colored_weight(1.0, 0.0, 1.0, 0.01) == pytest.approx(1.01)
    assert colored_weight(1.0, 2.0, 1.0, 0.01) == pytest.approx(0.01)
    # gamma 0 disables repulsion entirely
    assert colored_weight(1.0, 50.0, 0.0, 0.01) == pytest.approx(1.01)


def test_colored_weight_floor_and_monotonicity():
    rng = DetRng(1)
    prev_cases = []
    for _ in range(500):
        own = rng.next_float() * 10 - 5
        other = rng.next_float() * 10
        gamma = rng.next_float() * 2
        floor = 1e-6
        w = colored_weight(own, other, gamma, floor)
        assert w >= floor
        prev_cases.append((own, other, gamma, w))
    for own, other, gamma, w in prev_cases[:50]:
        assert colored_weight(own + 1.0, other, gamma, 1e-6) >= w
        assert colored_weight(own, other + 1.0, gamma, 1e-6) <= w


# -- distributions ------------------------------------------------------------


def test_simple_distribution_proportional_to_pheromone():
    g, hub = star_graph(3, [2.0, 1.0, 1.0])
    ant = Ant(0, hub)
    params = EngineParams(floor=1e-12)
    cands, probs = simple_distribution(g, ant, params)
    assert [c[0] for c in cands] == [1, 2, 3]
    assert probs == pytest.approx([0.5, 0.25, 0.25], abs=1e-9)


def test_simple_distribution_uniform_when_flat():
    g, hub = star_graph(4, [0.0, 0.0, 0.0, 0.0])
    ant = Ant(0, hub)
    cands, probs = simple_distribution(g, ant, EngineParams())
    assert probs == pytest.approx([0.25] * 4)


def test_single_candidate_is_certain():
    g, hub = star_graph(1, [0.0])
    ant = Ant(0, hub)
    cands, probs = simple_distribution(g, ant, EngineParams())
    assert probs == [1.0]
    v, e = choose_next_simple(g, ant, DetRng(0), EngineParams())
    assert v == 1


def test_exploit_distribution_mixes_q0():
    g, hub = star_graph(2, [5.0, 1.0])
    ant = Ant(0, hub)
    params = EngineParams(q0=0.6, floor=1e-12)
    cands, mixed = exploit_distribution(g, ant, params)
    simple = simple_distribution(g, ant, params, cands)[1]
    assert mixed[0] == pytest.approx(0.6 + 0.4 * simple[0], abs=1e-12)
    assert mixed[1] == pytest.approx(0.4 * simple[1], abs=1e-12)
    assert sum(mixed) == pytest.approx(1.0, abs=1e-12)


def test_exploit_pure_greedy_picks_heaviest():
    g, hub = star_graph(2, [0.1, 5.0])
    ant = Ant(0, hub)
    params = EngineParams(q0=1.0)
    rng = DetRng(3)
    for _ in range(20):
        assert choose_next_exploit(g, ant, rng, params)[0] == 2


def test_exploit_q0_zero_matches_simple_rule():
    g, hub = star_graph(3, [2.0, 1.0, 1.0])
    params = EngineParams(q0=0.0, floor=1e-12)
    ant = Ant(0, hub)
    cands, mixed = exploit_distribution(g, ant, params)
    assert mixed == pytest.approx(simple_distribution(g, ant, params, cands)[1])


def test_exploit_tie_breaks_to_lowest_vertex_id():
    # hub connected to vertices created in order 7..1; both spokes tau 5
    g = EnvironmentGraph()
    vids = [g.add_vertex() for _ in range(8)]
    hub = vids[0]
    e7 = g.add_edge(hub, vids[7])
    e3 = g.add_edge(hub, vids[3])
    g.deposit(e7, 5.0)
    g.deposit(e3, 5.0)
    params = EngineParams(q0=1.0)
    v, _ = choose_next_exploit(g, Ant(0, hub), DetRng(0), params)
    assert v == 3


def test_choice_draw_budget():
    g, hub = star_graph(3, [2.0, 1.0, 1.0])
    rng = CountingRng(0)
    choose_next_simple(g, Ant(0, hub), rng, EngineParams())
    assert rng.draws == 1
    # exploit: one gate draw, plus one roulette draw only when exploring
    rng = CountingRng(0)
    choose_next_exploit(g, Ant(0, hub), rng, EngineParams(q0=1.0))
    assert rng.draws == 1
    rng = CountingRng(0)
    choose_next_exploit(g, Ant(0, hub), rng, EngineParams(q0=0.0))
    assert rng.draws == 2


def test_choice_blocked_returns_none():
    g, hub = star_graph(1, [1.0])
    ant = Ant(0, hub)
    ant.advance_to(1)
    ant.location = 1  # at the leaf; hub is in the walk
    assert choose_next_simple(g, ant, DetRng(0), EngineParams(tabu_size=None)) is None


def test_normalize_and_weighted_pick():
    probs = normalize([2.0, 1.0, 1.0])
    assert probs == pytest.approx([0.5, 0.25, 0.25])
    counts = [0, 0, 0]
    rng = DetRng(11)
    for _ in range(6000):
        counts[weighted_pick(rng, probs)] += 1
    assert counts[0] > counts[1] > 0
    assert abs(counts[0] / 6000 - 0.5) < 0.05


# -- tabu --------------------------------------------------------------------


def test_tabu_full_walk_blocks_revisits():
    g = make_random_tree(30, 5)
    params = EngineParams(tabu_size=None)
    ant = Ant(0, 0)
    rng = DetRng(2)
    for _ in range(40):
        pick = choose_next_simple(g, ant, rng, params)
        if pick is None:
            break
        ant.advance_to(pick[0])
    assert len(ant.walk) == len(set(ant.walk))


def test_tabu_window_excludes_recent_only():
    ant = Ant(0, 0)
    for v in (1, 2, 3):
        ant.advance_to(v)
    assert ant.is_tabu(3, 2)
    assert ant.is_tabu(2, 2)
    assert not ant.is_tabu(1, 2)
    assert not ant.is_tabu(0, 2)
    assert not ant.is_tabu(3, 0)
    assert ant.is_tabu(0, None)  # full-walk memory


def test_candidate_moves_preserve_adjacency_order():
    g, hub = star_graph(3, [0.0, 0.0, 0.0])
    cands = candidate_moves(g, Ant(0, hub), EngineParams())
    assert [c[0] for c in cands] == [1, 2, 3]


# -- stepping loop -------------------------------------------------------------


def test_step_all_moves_every_ant():
    g = make_torus(15, 25)
    params = EngineParams(rho=0.03, q0=0.6, tabu_size=None)
    ants = [Ant(i, 0) for i in range(100)]
    report = step_all(g, ants, make_rng(params), params)
    assert report.ant_moves == 100
    assert report.blocked == 0
    assert g.step == 1


def test_step_all_without_ants_is_pure_evaporation():
    g = make_torus(3, 3)
    g.deposit(0, 2.0)
    report = step_all(g, [], DetRng(0), EngineParams(rho=0.5))
    assert report.ant_moves == 0
    assert g.pheromone(0) == pytest.approx(1.0)


def test_step_all_blocked_policy_resets_to_nest():
    # path graph 0-1; ant walked 0 -> 1 with full tabu: next step is blocked
    g = EnvironmentGraph()
    a, b = g.add_vertex(), g.add_vertex()
    g.add_edge(a, b)
    ant = Ant(0, a)
    ant.advance_to(b)
    params = EngineParams(tabu_size=None)
    report = step_all(g, [ant], DetRng(0), params)
    assert report.blocked == 1
    assert ant.location == a
    assert ant.walk == [a]


def test_step_all_is_deterministic():
    def run():
        g = make_torus(5, 5)
        params = EngineParams(rho=0.03, q0=0.4, tabu_size=2, seed=77)
        ants = [Ant(i, i % 25) for i in range(30)]
        rng = make_rng(params)
        rows = []
        for _ in range(50):
            rows.append(step_all(g, ants, rng, params).csv_row())
        return rows

    assert run() == run()


def test_step_report_csv_shape():
    g = make_torus(3, 3)
    c = g.ensure_color("trail")
    g.deposit(0, 1.5, c)
    report = step_all(g, [], DetRng(0), EngineParams(rho=0.0))
    assert StepReport.csv_header(g) == "step,ant_moves,blocked,pheromone_trail"
    row = report.csv_row()
    assert row.startswith("1,0,0,")
    assert float(row.split(",")[3]) == pytest.approx(1.5)


def test_transition_probabilities_sum_to_one_fuzz():
    rng = DetRng(123)
    for _ in range(300):
        n = 1 + rng.next_below(6)
        taus = [rng.next_float() * 20 - 10 for _ in range(n)]
        g, hub = star_graph(n, taus)
        ant = Ant(0, hub)
        q0 = rng.next_float()
        params = EngineParams(q0=q0, gamma=rng.next_float())
        _, probs = simple_distribution(g, ant, params)
        assert sum(probs) == pytest.approx(1.0, abs=1e-9)
        assert all(p > 0.0 for p in probs)
        _, mixed = exploit_distribution(g, ant, params)
        assert sum(mixed) == pytest.approx(1.0, abs=1e-9)
