"""Alignment blocks: factor graph, conflicts, transitions, extraction, oracle."""

import itertools

import pytest

from stigmergraph.errors import (
    GraphFormatError,
    InvalidParameterError,
    OracleSizeError,
)
from stigmergraph.msa import (
    MsaParams,
    blocks_from_gapped,
    build_alignment_graph,
    build_conflict_graph,
    classify_solution,
    edges_cross,
    enumerate_maximal_compatible,
    extract_blocks,
    is_compatible,
    msa_deposit,
    msa_transition,
    parse_factor_sequences,
    relative_distance,
    run_msa,
    transition_weights,
)
from stigmergraph.rng import DetRng


# -- parsing ----------------------------------------------------------------


def test_parse_three_sequences_square_figure():
    seqs = parse_factor_sequences("ACBCDE\nABCDE\nABCED")
    vs = [v for s in seqs for v in s.vertices()]
    assert len(vs) == 16
    labels = [v.label for v in seqs[0].vertices()]
    # repeated symbol gets occurrence-numbered labels
    assert "C_0.0" in labels and "C_0.1" in labels


def test_parse_single_symbol():
    seqs = parse_factor_sequences("A")
    assert len(seqs) == 1
    assert len(seqs[0].vertices()) == 1


def test_parse_rejects_non_alphabet():
    with pytest.raises(GraphFormatError) as err:
        parse_factor_sequences("AB1")
    assert err.value.line == 1
    assert err.value.column == 3


def test_parse_rejects_interior_blank_and_empty():
    with pytest.raises(GraphFormatError):
        parse_factor_sequences("AB\n\nBA")
    with pytest.raises(GraphFormatError):
        parse_factor_sequences("")
    # trailing newline tolerated
    assert len(parse_factor_sequences("AB\nBA\n")) == 2


# -- graph construction -------------------------------------------------------


def test_edge_counts():
    assert build_alignment_graph(["AB", "AB"]).n_edges == 2
    assert build_alignment_graph(["AB", "AB", "BA"]).n_edges == 6
    g = build_alignment_graph(["AA", "A"])
    assert g.n_edges == 2
    ends = {tuple(sorted((fa.label, fb.label))) for fa, fb in
            (g.endpoints(e) for e in g.graph.edges)}
    assert ends == {("A_0.0", "A_1.0"), ("A_0.1", "A_1.0")}


def test_no_edges_within_a_sequence():
    g = build_alignment_graph(["AA", "AA"])
    for eid in g.graph.edges:
        fa, fb = g.endpoints(eid)
        assert fa.seq != fb.seq
        assert fa.symbol == fb.symbol


def test_requires_two_sequences():
    with pytest.raises(InvalidParameterError):
        build_alignment_graph(["A"])


def test_initial_tau_is_zero():
    g = build_alignment_graph(["AB", "BA"])
    assert all(g.tau(eid) == 0.0 for eid in g.graph.edges)


# -- conflicts ---------------------------------------------------------------


def edge_by_labels(align, la, lb):
    for eid in align.graph.edges:
        fa, fb = align.endpoints(eid)
        if {fa.label, fb.label} == {la, lb}:
            return eid
    raise KeyError((la, lb))


def test_parallel_edges_do_not_conflict():
    align = build_alignment_graph(["AB", "AB"])
    conf = build_conflict_graph(align)
    assert all(not lst for lst in conf.conflicts.values())


def test_inverted_order_conflicts():
    align = build_alignment_graph(["AB", "BA"])
    conf = build_conflict_graph(align)
    ea = edge_by_labels(align, "A_0.0", "A_1.0")
    eb = edge_by_labels(align, "B_0.0", "B_1.0")
    assert conf.conflicts[ea] == [eb]
    assert conf.conflicts[eb] == [ea]


def test_figure_crossing_between_sequences_two_and_three():
    # ABCDE vs ABCED: the D-D and E-E edges invert their order
    align = build_alignment_graph(["ACBCDE", "ABCDE", "ABCED"])
    conf = build_conflict_graph(align)
    ed = edge_by_labels(align, "D_1.0", "D_2.0")
    ee = edge_by_labels(align, "E_1.0", "E_2.0")
    assert ee in conf.conflicts[ed]
    assert ed in conf.conflicts[ee]


def test_conflicts_only_within_one_sequence_pair():
    align = build_alignment_graph(["AB", "BA", "AB"])
    conf = build_conflict_graph(align)
    for eid, others in conf.conflicts.items():
        fa, fb = align.endpoints(eid)
        pair = {fa.seq, fb.seq}
        for o in others:
            fc, fd = align.endpoints(o)
            assert {fc.seq, fd.seq} == pair


def test_identical_distinct_symbol_sequences_have_no_conflicts():
    for text in ("ABCDE\nABCDE", "ABC\nABC\nABC"):
        align = build_alignment_graph(text.split("\n"))
        conf = build_conflict_graph(align)
        assert all(not lst for lst in conf.conflicts.values())


def test_repeated_symbols_cross_on_occurrence_swap():
    # the two diagonal A-pairings of AA vs AA invert their order
    align = build_alignment_graph(["AA", "AA"])
    conf = build_conflict_graph(align)
    d1 = edge_by_labels(align, "A_0.0", "A_1.1")
    d2 = edge_by_labels(align, "A_0.1", "A_1.0")
    assert conf.conflicts[d1] == [d2]
    straight = edge_by_labels(align, "A_0.0", "A_1.0")
    assert conf.conflicts[straight] == []


def test_conflict_relation_symmetric_and_irreflexive():
    align = build_alignment_graph(["ABCA", "BACA", "CABA"])
    conf = build_conflict_graph(align)
    for eid, others in conf.conflicts.items():
        assert eid not in others
        for o in others:
            assert eid in conf.conflicts[o]


def test_shared_factor_pairs():
    align = build_alignment_graph(["A", "A", "A"])
    conf = build_conflict_graph(align)
    # triangle: every pair of edges shares one endpoint
    for eid, others in conf.shared.items():
        assert len(others) == 2


def test_edges_cross_requires_same_pair():
    align = build_alignment_graph(["AB", "BA", "AB"])
    f = {v.label: v for s in align.seqs for v in s.vertices()}
    assert edges_cross(f["A_0.0"], f["A_1.0"], f["B_0.0"], f["B_1.0"])
    assert not edges_cross(f["A_0.0"], f["A_1.0"], f["B_1.0"], f["B_2.0"])


# -- distances ----------------------------------------------------------------


def test_relative_distance_examples():
    assert relative_distance(2, 6, 2, 6) == 1.0
    assert relative_distance(0, 6, 5, 6) == 6.0
    assert relative_distance(5, 6, 0, 6) == 6.0


def test_relative_distance_is_center_aligned():
    # same offset from each sequence's center -> floor value
    assert relative_distance(4, 9, 2, 5) == 1.0


def test_distance_reasoning_on_far_factor():
    # DAZZZZ vs ACGSTD: D fronts one sequence, tails the other
    align = build_alignment_graph(["DAZZZZ", "ACGSTD"])
    d_dd = align.dist[edge_by_labels(align, "D_0.0", "D_1.0")]
    d_aa = align.dist[edge_by_labels(align, "A_0.0", "A_1.0")]
    assert d_dd == 6.0
    assert d_aa == 2.0
    assert d_dd > d_aa


# -- transitions ----------------------------------------------------------------


def test_transition_weights_pheromone_path():
    w = transition_weights([3.0, 1.0], [1.0, 1.0], alpha=1.0, beta=0.0, eps_norm=1.0)
    probs = [x / sum(w) for x in w]
    assert probs == pytest.approx([0.75, 0.25])


def test_transition_weights_distance_path():
    w = transition_weights([0.0, 0.0], [1.0, 3.0], alpha=0.0, beta=1.0, eps_norm=1.0)
    probs = [x / sum(w) for x in w]
    assert probs == pytest.approx([0.75, 0.25])


def test_transition_weights_negative_pheromone_repels():
    w = transition_weights([-2.0, 0.0], [1.0, 1.0], alpha=1.0, beta=0.0, eps_norm=1.0)
    assert w == pytest.approx([1.0 / 3.0, 1.0])


def test_transition_weights_fuzz_positive_and_normalizable():
    rng = DetRng(8)
    for _ in range(500):
        n = 1 + rng.next_below(6)
        taus = [rng.next_float() * 40 - 20 for _ in range(n)]
        dists = [1.0 + rng.next_float() * 9 for _ in range(n)]
        alpha = rng.next_float() * 3
        beta = rng.next_float() * 3
        w = transition_weights(taus, dists, alpha, beta, eps_norm=1.0)
        assert all(x > 0.0 for x in w)
        probs = [x / sum(w) for x in w]
        assert sum(probs) == pytest.approx(1.0, abs=1e-9)


def test_msa_transition_respects_tabu_and_blocks():
    align = build_alignment_graph(["AB", "AB"])
    conf = build_conflict_graph(align)
    params = MsaParams()
    a0 = align.vertex_of[("A", 0, 0)]
    a1 = align.vertex_of[("A", 1, 0)]
    pick = msa_transition(align, a0, set(), params, DetRng(0))
    assert pick[0] == a1  # only neighbor
    assert msa_transition(align, a0, {a1}, params, DetRng(0)) is None


def test_msa_deposit_bookkeeping():
    align = build_alignment_graph(["AB", "BA"])
    conf = build_conflict_graph(align)
    params = MsaParams(q=1.0, Q=1.0)
    ea = edge_by_labels(align, "A_0.0", "A_1.0")
    eb = edge_by_labels(align, "B_0.0", "B_1.0")
    delta = {}
    msa_deposit(delta, ea, conf, params)
    assert delta == {ea: 1.0, eb: -1.0}
    msa_deposit(delta, ea, conf, params)  # second ant, same step
    assert delta == {ea: 2.0, eb: -2.0}
    delta2 = {}
    align2 = build_alignment_graph(["AB", "AB"])
    conf2 = build_conflict_graph(align2)
    msa_deposit(delta2, 0, conf2, params)
    assert delta2 == {0: 1.0}


# -- extraction and compatibility ----------------------------------------------


def test_extract_triangle_block():
    align = build_alignment_graph(["A", "A", "A"])
    for eid in align.graph.edges:
        align.graph.deposit(eid, 1.0, align.color)
    blocks = extract_blocks(align)
    assert len(blocks) == 1
    (block,) = blocks
    assert len(block) == 3


def test_extract_greedy_drops_crossing_edge():
    align = build_alignment_graph(["AB", "BA"])
    ea = edge_by_labels(align, "A_0.0", "A_1.0")
    eb = edge_by_labels(align, "B_0.0", "B_1.0")
    align.graph.deposit(ea, 5.0, align.color)
    align.graph.deposit(eb, 4.0, align.color)
    blocks = extract_blocks(align)
    assert len(blocks) == 1
    (block,) = blocks
    assert {fv.symbol for fv in block} == {"A"}


def test_extract_ignores_nonpositive_tau():
    align = build_alignment_graph(["AB", "AB"])
    align.graph.deposit(0, -1.0, align.color)
    assert extract_blocks(align) == frozenset()


def test_extract_output_always_compatible():
    rng = DetRng(17)
    corpus = ["AB\nAB\nBA", "BABAB\nBBABAAB\nBABAB", "DAZZZZ\nACGSTD\nACGSTD"]
    for text in corpus:
        align = build_alignment_graph(text.split("\n"))
        for _ in range(20):
            for eid in align.graph.edges:
                level = rng.next_float() * 6 - 3
                align.graph.edges[eid].pheromone[align.color] = level
            blocks = extract_blocks(align)
            assert is_compatible(blocks)


def test_is_compatible_rules():
    assert is_compatible(frozenset())
    ok = blocks_from_gapped(["AB-", "AB-", "-BA"])
    assert is_compatible(ok)
    align = build_alignment_graph(["AB", "BA"])
    f = {v.label: v for s in align.seqs for v in s.vertices()}
    crossing = [
        {f["A_0.0"], f["A_1.0"]},
        {f["B_0.0"], f["B_1.0"]},
    ]
    assert not is_compatible(crossing)
    mixed_symbol = [{f["A_0.0"], f["B_1.0"]}]
    assert not is_compatible(mixed_symbol)
    two_per_seq = [{f["A_0.0"], f["B_0.0"]}]
    assert not is_compatible(two_per_seq)


def brute_force_maximal(align):
    """Independent oracle: test every edge subset for compatibility."""
    eids = sorted(align.graph.edges)

    def blocks_of(subset):
        # union-find over endpoint factors
        parent = {}

        def find(x):
            while parent.setdefault(x, x) != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for eid in subset:
            fa, fb = align.endpoints(eid)
            ra, rb = find(fa), find(fb)
            if ra != rb:
                parent[ra] = rb
        groups = {}
        for fv in parent:
            groups.setdefault(find(fv), set()).add(fv)
        return frozenset(frozenset(g) for g in groups.values())

    compatible = []
    for r in range(len(eids) + 1):
        for subset in itertools.combinations(eids, r):
            bs = blocks_of(subset)
            if is_compatible(bs):
                compatible.append((frozenset(subset), bs))
    out = []
    keys = [s for s, _ in compatible]
    for s, bs in compatible:
        if any(s < other for other in keys):
            continue
        out.append(bs)
    return set(out)


def test_enumerate_matches_brute_force():
    align = build_alignment_graph(["AB", "AB", "BA"])
    got = {frozenset(frozenset(b) for b in bs) for bs in enumerate_maximal_compatible(align)}
    assert got == brute_force_maximal(align)


def test_enumerate_table_one_has_two_full_block_sets():
    align = build_alignment_graph(["AB", "AB", "BA"])
    sets_with_full_block = [
        bs for bs in enumerate_maximal_compatible(align)
        if any(len(b) == 3 for b in bs)
    ]
    assert len(sets_with_full_block) == 2


def test_enumerate_refuses_oversized_instances():
    align = build_alignment_graph(["ABCDEFG", "ABCDEFG", "GFEDCBA"])
    assert align.n_edges > 20
    with pytest.raises(OracleSizeError):
        enumerate_maximal_compatible(align)


def test_classify_solution():
    a = blocks_from_gapped(["AB-", "AB-", "-BA"])
    b = blocks_from_gapped(["-AB", "-AB", "BA-"])
    assert classify_solution(a, [a, b]) == 0
    assert classify_solution(b, [a, b]) == 1
    assert classify_solution(frozenset(), [a, b]) is None
    assert classify_solution(frozenset(), [a, frozenset()]) == 1


def test_blocks_from_gapped_reads_columns():
    bs = blocks_from_gapped(["AB-", "AB-", "-BA"])
    sizes = sorted(len(b) for b in bs)
    assert sizes == [2, 3]
    for b in bs:
        assert len({fv.symbol for fv in b}) == 1


# -- seeded runs ----------------------------------------------------------------


def test_run_single_pair_always_finds_the_block():
    res = run_msa(["A", "A"], MsaParams(seed=5, steps=50))
    assert len(res.blocks) == 1
    (block,) = res.blocks
    assert len(block) == 2


def test_run_is_deterministic():
    a = run_msa(["AB", "AA", "ABA"], MsaParams(seed=42, steps=200))
    b = run_msa(["AB", "AA", "ABA"], MsaParams(seed=42, steps=200))
    c = run_msa(["AB", "AA", "ABA"], MsaParams(seed=43, steps=200))
    assert a.metrics == b.metrics
    assert a.blocks == b.blocks
    assert a.tau == b.tau
    assert (a.metrics, a.blocks) != (c.metrics, c.blocks)


def test_run_metrics_replay_audit():
    params = MsaParams(seed=3, steps=150)
    res = run_msa(["AB", "AB", "BA"], params)
    keep = 1.0 - params.rho
    total_prev = 0.0
    for moves, blocked, total_tau, net_delta in res.metrics:
        # evaporate old field, then apply the step's queued deposits
        expect = total_prev * keep + net_delta
        assert total_tau == pytest.approx(expect, rel=1e-9, abs=1e-9)
        total_prev = total_tau
        assert moves + blocked == 12  # default ants = 2|V|, six factors here


def test_run_extraction_is_compatible_and_within_some_maximal_set():
    for seed in range(5):
        res = run_msa(["AB", "AB", "BA"], MsaParams(seed=seed, steps=300))
        assert is_compatible(res.blocks)
        maximal = enumerate_maximal_compatible(res.align)
        hulls = [frozenset(frozenset(b) for b in bs) for bs in maximal]
        got = {frozenset(b) for b in res.blocks}
        assert any(all(any(b <= h for h in hull) for b in got) for hull in hulls)
