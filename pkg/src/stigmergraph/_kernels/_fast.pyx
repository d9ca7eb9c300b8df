# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend.

Mirror of pure.py, operation for operation: the same SplitMix64 arithmetic,
the same float operation order, the same draw sequence.  Any edit here must
land in pure.py too (and vice versa); the cross-backend equality tests catch
drift.  Growable per-ant structures become preallocated flat buffers and the
tabu/deposit sets become flag rows, which changes nothing observable.

Buffers that can legitimately be empty get a one-element placeholder so the
typed memoryview always has storage; the true lengths live in the state's
count fields and the accessors slice with them.
"""

import array

from libc.math cimport exp, sqrt, pow as c_pow

FORWARD = 0
RETURNING = 1

_MASK = 0xFFFFFFFFFFFFFFFF

cdef double _FLOAT_SCALE = 1.0 / 9007199254740992.0


cdef inline unsigned long long _mix64(unsigned long long z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline unsigned long long _next_u64(unsigned long long *state) nogil:
    state[0] = state[0] + 0x9E3779B97F4A7C15ULL
    return _mix64(state[0])


cdef inline double _next_float(unsigned long long *state) nogil:
    return <double>(_next_u64(state) >> 11) * _FLOAT_SCALE


cdef inline double _sigmoid(double x) nogil:
    return 1.0 / (1.0 + exp(-x))


cdef _q(values):
    return array.array("q", list(values) or [0])


cdef _d(values):
    return array.array("d", [float(x) for x in values] or [0.0])


# -- shortest-path engine -----------------------------------------------------


cdef class SpState:
    cdef long long[::1] indptr, nbrs, eids
    cdef double[::1] tau
    cdef long long n_vertices, n_edges, src, dst, n_ants, tabu_k, walk_cap
    cdef long long[::1] mode, ret_idx, wlen
    cdef long long[::1] walk, walk_eids          # n_ants x walk_cap, row-major
    cdef signed char[::1] visited                # n_ants x n_vertices
    cdef signed char[::1] deposited              # n_ants x n_edges
    cdef long long step, first_goal


def sp_pack(indptr, nbrs, eids, tau, src, dst, n_ants, tabu_k, walk_cap):
    """Bundle graph arrays and fresh forward ants into a run state.

    tabu_k < 0 keeps the whole walk tabu; otherwise only the last tabu_k
    visited vertices are excluded.  walk_cap bounds recorded walk length and
    must be at least the step budget plus one.
    """
    cdef SpState st = SpState()
    st.indptr = _q(indptr)
    st.nbrs = _q(nbrs)
    st.eids = _q(eids)
    st.tau = _d(tau)
    st.n_vertices = len(indptr) - 1
    st.n_edges = len(tau)
    st.src = src
    st.dst = dst
    st.n_ants = n_ants
    st.tabu_k = tabu_k
    st.walk_cap = walk_cap
    st.mode = _q([0] * n_ants)
    st.ret_idx = _q([0] * n_ants)
    st.wlen = _q([1] * n_ants)
    st.walk = _q([0] * (n_ants * walk_cap))
    st.walk_eids = _q([0] * (n_ants * walk_cap))
    st.visited = array.array("b", bytes(n_ants * st.n_vertices) or b"\0")
    st.deposited = array.array("b", bytes(n_ants * st.n_edges) or b"\0")
    cdef long long a
    for a in range(st.n_ants):
        st.walk[a * st.walk_cap] = st.src
        st.walk_eids[a * st.walk_cap] = -1
        st.visited[a * st.n_vertices + st.src] = 1
    st.step = 0
    st.first_goal = -1
    return st


cdef inline void _sp_reset(SpState st, long long a):
    cdef long long i
    st.mode[a] = 0
    st.ret_idx[a] = 0
    st.wlen[a] = 1
    st.walk[a * st.walk_cap] = st.src
    st.walk_eids[a * st.walk_cap] = -1
    for i in range(st.n_vertices):
        st.visited[a * st.n_vertices + i] = 0
    st.visited[a * st.n_vertices + st.src] = 1
    for i in range(st.n_edges):
        st.deposited[a * st.n_edges + i] = 0


cdef inline bint _sp_is_tabu(SpState st, long long a, long long vid):
    cdef long long lo, i
    if st.tabu_k < 0:
        return st.visited[a * st.n_vertices + vid] != 0
    if st.tabu_k == 0:
        return False
    lo = st.wlen[a] - st.tabu_k
    if lo < 0:
        lo = 0
    for i in range(lo, st.wlen[a]):
        if st.walk[a * st.walk_cap + i] == vid:
            return True
    return False


cdef long long _sp_extract_length(SpState st):
    cdef long long cur, hop, idx, nid, best_nid
    cdef double t, best_tau
    visited_buf = array.array("b", bytes(st.n_vertices))
    cdef signed char[::1] visited = visited_buf
    visited[st.src] = 1
    cur = st.src
    for hop in range(st.n_vertices):
        best_nid = -1
        best_tau = 0.0
        for idx in range(st.indptr[cur], st.indptr[cur + 1]):
            nid = st.nbrs[idx]
            if visited[nid]:
                continue
            t = st.tau[st.eids[idx]]
            if best_nid < 0 or t > best_tau or (t == best_tau and nid < best_nid):
                best_nid = nid
                best_tau = t
        if best_nid < 0:
            return -1
        visited[best_nid] = 1
        cur = best_nid
        if cur == st.dst:
            return hop + 1
    return -1


def sp_extract_length(SpState st):
    """Greedy max-pheromone walk length from src to dst; -1 on failure.

    Crosses the heaviest incident edge towards an unvisited vertex each hop
    (ties to the lowest vertex id) with a hop budget of |V|.
    """
    return _sp_extract_length(st)


def sp_run(SpState st, n_steps, rho, Q, q0, floor, rng_state, track_lengths):
    """Advance the path search n_steps; returns (metric rows, rng state).

    Forward ants move by the greedy-or-explore rule and record their walk;
    an ant reaching dst turns around and retraces the walk one edge per step,
    depositing Q on each distinct walk edge, then starts over from src.
    Blocked forward ants teleport home with cleared memory.  Evaporation runs
    once per step after all moves.

    Metric row: [moves, blocked, total_tau, goal_hits, extracted_len,
    deposited].
    """
    cdef unsigned long long s = <unsigned long long>(rng_state & _MASK)
    cdef double c_rho = rho, c_Q = Q, c_q0 = q0, c_floor = floor
    cdef bint lengths = bool(track_lengths)
    cdef long long steps = n_steps
    cdef double keep = 1.0 - c_rho
    cdef long long step_i, a, loc, idx, nid, pick, i, eid, n_cand, wl
    cdef long long moves, blocked, goal_hits, extracted
    cdef double total, acc, u, t, best_tau, w, total_tau, deposited_total
    metrics = []
    cdef long long max_deg = 1, deg
    for a in range(st.n_vertices):
        deg = st.indptr[a + 1] - st.indptr[a]
        if deg > max_deg:
            max_deg = deg
    cdef long long[::1] cand_n = array.array("q", [0] * max_deg)
    cdef long long[::1] cand_e = array.array("q", [0] * max_deg)
    cdef double[::1] weights = array.array("d", [0.0] * max_deg)

    for step_i in range(steps):
        moves = 0
        blocked = 0
        goal_hits = 0
        deposited_total = 0.0
        for a in range(st.n_ants):
            if st.mode[a] == 0:
                wl = st.wlen[a]
                loc = st.walk[a * st.walk_cap + wl - 1]
                n_cand = 0
                for idx in range(st.indptr[loc], st.indptr[loc + 1]):
                    nid = st.nbrs[idx]
                    if not _sp_is_tabu(st, a, nid):
                        cand_n[n_cand] = nid
                        cand_e[n_cand] = st.eids[idx]
                        n_cand += 1
                if n_cand == 0:
                    _sp_reset(st, a)
                    blocked += 1
                    continue
                if _next_float(&s) < c_q0:
                    pick = 0
                    best_tau = st.tau[cand_e[0]]
                    for i in range(1, n_cand):
                        t = st.tau[cand_e[i]]
                        if t > best_tau or (t == best_tau and cand_n[i] < cand_n[pick]):
                            pick = i
                            best_tau = t
                else:
                    total = 0.0
                    for i in range(n_cand):
                        t = st.tau[cand_e[i]]
                        w = (t if t > 0.0 else 0.0) + c_floor
                        weights[i] = w
                        total += w
                    u = _next_float(&s) * total
                    acc = 0.0
                    pick = n_cand - 1
                    for i in range(n_cand):
                        acc += weights[i]
                        if u < acc:
                            pick = i
                            break
                nid = cand_n[pick]
                st.walk[a * st.walk_cap + wl] = nid
                st.walk_eids[a * st.walk_cap + wl] = cand_e[pick]
                st.wlen[a] = wl + 1
                if st.tabu_k < 0:
                    st.visited[a * st.n_vertices + nid] = 1
                moves += 1
                if nid == st.dst:
                    st.mode[a] = 1
                    st.ret_idx[a] = st.wlen[a] - 1
                    goal_hits += 1
                    if st.first_goal < 0:
                        st.first_goal = st.step
            else:
                i = st.ret_idx[a]
                eid = st.walk_eids[a * st.walk_cap + i]
                st.ret_idx[a] = i - 1
                if not st.deposited[a * st.n_edges + eid]:
                    st.tau[eid] += c_Q
                    st.deposited[a * st.n_edges + eid] = 1
                    deposited_total += c_Q
                moves += 1
                if st.ret_idx[a] == 0:
                    _sp_reset(st, a)
        total_tau = 0.0
        for eid in range(st.n_edges):
            st.tau[eid] *= keep
            total_tau += st.tau[eid]
        st.step += 1
        extracted = _sp_extract_length(st) if lengths else -1
        metrics.append([
            float(moves), float(blocked), total_tau,
            float(goal_hits), float(extracted), deposited_total,
        ])
    return metrics, int(s)


def sp_tau(SpState st):
    return list(st.tau[:st.n_edges])


def sp_info(SpState st):
    return {"step": st.step, "first_goal": st.first_goal}


# -- alignment-block engine ---------------------------------------------------


cdef class MsaState:
    cdef long long[::1] v_indptr, v_nbrs, v_eids, c_indptr, c_list
    cdef double[::1] d, tau, delta
    cdef long long n_vertices, n_edges, n_ants, tabu_k
    cdef long long[::1] pos, home, ring, rptr
    cdef long long step


def msa_pack(v_indptr, v_nbrs, v_eids, c_indptr, c_list, d, tau, positions, tabu_k):
    """Bundle the alignment graph, its conflict table, and placed ants."""
    cdef MsaState st = MsaState()
    st.v_indptr = _q(v_indptr)
    st.v_nbrs = _q(v_nbrs)
    st.v_eids = _q(v_eids)
    st.c_indptr = _q(c_indptr)
    st.c_list = _q(c_list)
    st.d = _d(d)
    st.tau = _d(tau)
    st.delta = _d([0.0] * len(tau))
    st.n_vertices = len(v_indptr) - 1
    st.n_edges = len(tau)
    st.n_ants = len(positions)
    st.tabu_k = tabu_k
    st.pos = _q(positions)
    st.home = _q(positions)
    st.ring = _q([-1] * (st.n_ants * tabu_k))
    st.rptr = _q([0] * st.n_ants)
    cdef long long a
    if tabu_k > 0:
        for a in range(st.n_ants):
            st.ring[a * st.tabu_k] = st.pos[a]
            st.rptr[a] = 1 % tabu_k
    st.step = 0
    return st


cdef inline void _msa_push(MsaState st, long long a, long long vid):
    if st.tabu_k > 0:
        st.ring[a * st.tabu_k + st.rptr[a]] = vid
        st.rptr[a] = (st.rptr[a] + 1) % st.tabu_k


cdef inline bint _msa_in_ring(MsaState st, long long a, long long vid):
    cdef long long i
    for i in range(st.tabu_k):
        if st.ring[a * st.tabu_k + i] == vid:
            return True
    return False


def msa_run(MsaState st, n_steps, alpha, beta, dep_q, pen_q, rho, eps_norm, rng_state):
    """Advance the block search n_steps; returns (metric rows, rng state).

    Per step each ant crosses one non-tabu edge drawn proportionally to
    (1/(max_tau - tau + eps_norm))^alpha * (1/d)^beta over its current
    neighborhood, queueing +dep_q on the crossed edge and -pen_q on every
    edge crossing it.  Queued amounts apply together with evaporation at
    step end: tau <- (1-rho)*tau + delta.  Blocked ants teleport to their
    birth vertex.

    Metric row: [moves, blocked, total_tau, net_delta].
    """
    cdef unsigned long long s = <unsigned long long>(rng_state & _MASK)
    cdef double c_alpha = alpha, c_beta = beta, c_dep = dep_q, c_pen = pen_q
    cdef double c_rho = rho, c_eps = eps_norm
    cdef long long steps = n_steps
    cdef double keep = 1.0 - c_rho
    cdef long long step_i, a, loc, idx, nid, pick, i, e, n_cand
    cdef long long moves, blocked
    cdef double total, acc, u, t, mx, w, total_tau, net_delta
    metrics = []
    cdef long long max_deg = 1, deg
    for a in range(st.n_vertices):
        deg = st.v_indptr[a + 1] - st.v_indptr[a]
        if deg > max_deg:
            max_deg = deg
    cdef long long[::1] cand_n = array.array("q", [0] * max_deg)
    cdef long long[::1] cand_e = array.array("q", [0] * max_deg)
    cdef double[::1] weights = array.array("d", [0.0] * max_deg)

    for step_i in range(steps):
        moves = 0
        blocked = 0
        for a in range(st.n_ants):
            loc = st.pos[a]
            n_cand = 0
            for idx in range(st.v_indptr[loc], st.v_indptr[loc + 1]):
                nid = st.v_nbrs[idx]
                if st.tabu_k > 0 and _msa_in_ring(st, a, nid):
                    continue
                cand_n[n_cand] = nid
                cand_e[n_cand] = st.v_eids[idx]
                n_cand += 1
            if n_cand == 0:
                st.pos[a] = st.home[a]
                if st.tabu_k > 0:
                    for i in range(st.tabu_k):
                        st.ring[a * st.tabu_k + i] = -1
                    st.ring[a * st.tabu_k] = st.home[a]
                    st.rptr[a] = 1 % st.tabu_k
                blocked += 1
                continue
            mx = st.tau[cand_e[0]]
            for i in range(1, n_cand):
                t = st.tau[cand_e[i]]
                if t > mx:
                    mx = t
            total = 0.0
            for i in range(n_cand):
                e = cand_e[i]
                w = c_pow(1.0 / (mx - st.tau[e] + c_eps), c_alpha) * c_pow(1.0 / st.d[e], c_beta)
                weights[i] = w
                total += w
            u = _next_float(&s) * total
            acc = 0.0
            pick = n_cand - 1
            for i in range(n_cand):
                acc += weights[i]
                if u < acc:
                    pick = i
                    break
            st.pos[a] = cand_n[pick]
            _msa_push(st, a, cand_n[pick])
            moves += 1
            e = cand_e[pick]
            st.delta[e] += c_dep
            for idx in range(st.c_indptr[e], st.c_indptr[e + 1]):
                st.delta[st.c_list[idx]] -= c_pen
        total_tau = 0.0
        net_delta = 0.0
        for e in range(st.n_edges):
            net_delta += st.delta[e]
            st.tau[e] = keep * st.tau[e] + st.delta[e]
            st.delta[e] = 0.0
            total_tau += st.tau[e]
        st.step += 1
        metrics.append([float(moves), float(blocked), total_tau, net_delta])
    return metrics, int(s)


def msa_tau(MsaState st):
    return list(st.tau[:st.n_edges])


# -- sense-activation engine --------------------------------------------------


cdef class WsdState:
    cdef long long[::1] indptr, nbrs, eids
    cdef double[::1] tree_ph, node_R, node_V, nest_color, bridge_ph
    cdef long long[::1] is_nest, nest_idx, nest_node, nest_word, w_indptr, w_nests
    cdef long long n_nodes, n_tree_edges, K, W, D
    cdef long long[::1] home, age, alive, pos, order
    cdef double[::1] load
    cdef long long n_order, capacity
    cdef long long lam
    cdef double eps, delta, eta, Q_w, k_sig
    cdef double s_bridge, eps_bridge, alpha_color, fool_frac
    cdef long long spawn_always
    cdef long long cycle


def wsd_pack(indptr, nbrs, eids, tree_ph, node_R, node_V, is_nest, nest_idx,
             nest_node, nest_word, nest_color, w_indptr, w_nests, D,
             lam, eps, delta, eta, Q_w, k_sig, s_bridge, eps_bridge,
             alpha_color, fool_frac, spawn_always):
    """Bundle the tree environment and foraging parameters into a run state.

    node_V and nest_color are flattened row-major [node * D + component].
    Bridges live in a K x K level matrix where -1 marks absence.
    """
    cdef WsdState st = WsdState()
    st.indptr = _q(indptr)
    st.nbrs = _q(nbrs)
    st.eids = _q(eids)
    st.tree_ph = _d(tree_ph)
    st.node_R = _d(node_R)
    st.node_V = _d(node_V)
    st.is_nest = _q(is_nest)
    st.nest_idx = _q(nest_idx)
    st.nest_node = _q(nest_node)
    st.nest_word = _q(nest_word)
    st.nest_color = _d(nest_color)
    st.w_indptr = _q(w_indptr)
    st.w_nests = _q(w_nests)
    st.n_nodes = len(indptr) - 1
    st.n_tree_edges = len(tree_ph)
    st.K = len(nest_node)
    st.W = len(w_indptr) - 1
    st.D = D
    st.bridge_ph = _d([-1.0] * (st.K * st.K))
    st.capacity = st.W * (lam + 1) + 4
    st.home = _q([0] * st.capacity)
    st.load = _d([0.0] * st.capacity)
    st.age = _q([0] * st.capacity)
    st.alive = _q([0] * st.capacity)
    st.pos = _q([0] * st.capacity)
    st.order = _q([0] * st.capacity)
    st.n_order = 0
    st.lam = lam
    st.eps = eps
    st.delta = delta
    st.eta = eta
    st.Q_w = Q_w
    st.k_sig = k_sig
    st.s_bridge = s_bridge
    st.eps_bridge = eps_bridge
    st.alpha_color = alpha_color
    st.fool_frac = fool_frac
    st.spawn_always = 1 if spawn_always else 0
    st.cycle = 0
    return st


cdef inline double _sim_flat(double[::1] va, long long oa, double[::1] vb,
                             long long ob, long long D):
    cdef double dot = 0.0, na = 0.0, nb = 0.0, x, y
    cdef long long j
    for j in range(D):
        x = va[oa + j]
        y = vb[ob + j]
        dot += x * y
        na += x * x
        nb += y * y
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (sqrt(na) * sqrt(nb))


def wsd_run(WsdState st, n_cycles, rng_state):
    """Advance the foraging dynamics n_cycles; returns (metric rows, rng state).

    Cycle phases: nests spawn (one ant per content word, nest drawn by
    sigmoid-of-resource weights), every ant draws its mode and moves once,
    ants age and die at lam returning load plus production cost to the node
    under them, pheromone evaporates, and starved bridges are evicted.

    Metric row: [moves, blocked, total_ph, alive, total_resources,
    bridges, births].
    """
    cdef unsigned long long s = <unsigned long long>(rng_state & _MASK)
    cdef long long cycles = n_cycles
    cdef long long D = st.D
    cdef long long K = st.K
    cdef double keep = 1.0 - st.delta
    cdef long long cyc, w, lo, hi, i, j, pick, sel, slot, oi, node, hk, home_node
    cdef long long idx, nid, kk, kk2, n_cand, e, a, b
    cdef long long births, moves, blocked, alive_n, bridges, n_surv
    cdef double total, acc, u, sig, ph, sim, r, attract, level, give
    cdef double room, t, v, norm, total_ph, total_res
    cdef bint returning
    metrics = []

    cdef long long max_menu = K + 1, menu
    for i in range(st.n_nodes):
        menu = st.indptr[i + 1] - st.indptr[i] + K
        if menu > max_menu:
            max_menu = menu
    cdef long long[::1] cand_n = array.array("q", [0] * max_menu)
    cdef long long[::1] cand_b = array.array("q", [0] * max_menu)
    cdef long long[::1] cand_e = array.array("q", [0] * max_menu)
    cdef double[::1] weights = array.array("d", [0.0] * max_menu)
    cdef long long max_nests = 1
    for w in range(st.W):
        if st.w_indptr[w + 1] - st.w_indptr[w] > max_nests:
            max_nests = st.w_indptr[w + 1] - st.w_indptr[w]
    cdef double[::1] spawn_w = array.array("d", [0.0] * max_nests)

    for cyc in range(cycles):
        # 1: production, one ant per content word
        births = 0
        for w in range(st.W):
            lo = st.w_indptr[w]
            hi = st.w_indptr[w + 1]
            total = 0.0
            for i in range(hi - lo):
                sig = _sigmoid(st.k_sig * st.node_R[st.nest_node[st.w_nests[lo + i]]])
                spawn_w[i] = sig
                total += sig
            u = _next_float(&s) * total
            acc = 0.0
            pick = hi - lo - 1
            for i in range(hi - lo):
                acc += spawn_w[i]
                if u < acc:
                    pick = i
                    break
            sel = st.w_nests[lo + pick]
            if not st.spawn_always:
                sig = _sigmoid(st.k_sig * st.node_R[st.nest_node[sel]])
                if _next_float(&s) >= sig:
                    continue
            slot = 0
            while st.alive[slot]:
                slot += 1
            st.home[slot] = sel
            st.load[slot] = 0.0
            st.age[slot] = 0
            st.alive[slot] = 1
            st.pos[slot] = st.nest_node[sel]
            st.order[st.n_order] = slot
            st.n_order += 1
            st.node_R[st.nest_node[sel]] -= st.eps
            births += 1
        # 2: movement, birth order
        moves = 0
        blocked = 0
        for oi in range(st.n_order):
            slot = st.order[oi]
            returning = _next_float(&s) < st.load[slot]
            node = st.pos[slot]
            hk = st.home[slot]
            home_node = st.nest_node[hk]
            n_cand = 0
            for idx in range(st.indptr[node], st.indptr[node + 1]):
                nid = st.nbrs[idx]
                if not returning and nid == home_node:
                    continue
                cand_n[n_cand] = nid
                cand_b[n_cand] = -1
                cand_e[n_cand] = st.eids[idx]
                n_cand += 1
            if st.is_nest[node]:
                kk = st.nest_idx[node]
                for kk2 in range(K):
                    if st.bridge_ph[kk * K + kk2] >= 0.0:
                        nid = st.nest_node[kk2]
                        if not returning and nid == home_node:
                            continue
                        cand_n[n_cand] = nid
                        cand_b[n_cand] = kk2
                        cand_e[n_cand] = kk * K + kk2
                        n_cand += 1
            if n_cand == 0:
                blocked += 1
                continue
            total = 0.0
            for i in range(n_cand):
                nid = cand_n[i]
                if cand_b[i] < 0:
                    ph = st.tree_ph[cand_e[i]]
                else:
                    ph = st.bridge_ph[cand_e[i]]
                if returning:
                    sim = _sim_flat(st.node_V, nid * D, st.nest_color, hk * D, D)
                    attract = (sim if sim > st.eta else st.eta) * (ph + 1.0)
                else:
                    r = st.node_R[nid]
                    attract = (r if r > st.eta else st.eta) / (ph + 1.0)
                weights[i] = attract
                total += attract
            u = _next_float(&s) * total
            acc = 0.0
            pick = n_cand - 1
            for i in range(n_cand):
                acc += weights[i]
                if u < acc:
                    pick = i
                    break
            nid = cand_n[pick]
            st.pos[slot] = nid
            moves += 1
            if cand_b[pick] < 0:
                st.tree_ph[cand_e[pick]] += st.Q_w
            else:
                kk = st.nest_idx[node]
                kk2 = cand_b[pick]
                level = st.bridge_ph[kk * K + kk2] + st.Q_w
                st.bridge_ph[kk * K + kk2] = level
                st.bridge_ph[kk2 * K + kk] = level
            if not st.is_nest[nid]:
                norm = 0.0
                for j in range(D):
                    v = st.node_V[nid * D + j] + st.alpha_color * st.nest_color[hk * D + j]
                    st.node_V[nid * D + j] = v
                    norm += v * v
                if norm > 0.0:
                    norm = sqrt(norm)
                    for j in range(D):
                        st.node_V[nid * D + j] /= norm
                if not returning and st.node_R[nid] > 0.0:
                    room = 1.0 - st.load[slot]
                    t = st.node_R[nid] if st.node_R[nid] < room else room
                    if t > 0.0:
                        st.load[slot] += t
                        st.node_R[nid] -= t
            else:
                kk2 = st.nest_idx[nid]
                if nid == home_node:
                    st.node_R[nid] += st.load[slot]
                    st.load[slot] = 0.0
                elif st.nest_word[kk2] == st.nest_word[hk]:
                    if st.node_R[nid] > 0.0:
                        room = 1.0 - st.load[slot]
                        t = st.node_R[nid] if st.node_R[nid] < room else room
                        if t > 0.0:
                            st.load[slot] += t
                            st.node_R[nid] -= t
                else:
                    sim = _sim_flat(st.nest_color, kk2 * D, st.nest_color, hk * D, D)
                    if sim >= st.s_bridge:
                        if returning and st.load[slot] > 0.0:
                            give = st.fool_frac * st.load[slot]
                            st.node_R[nid] += give
                            st.load[slot] -= give
                        if st.bridge_ph[hk * K + kk2] < 0.0:
                            st.bridge_ph[hk * K + kk2] = st.Q_w
                            st.bridge_ph[kk2 * K + hk] = st.Q_w
        # 3: aging and death
        n_surv = 0
        for oi in range(st.n_order):
            slot = st.order[oi]
            st.age[slot] += 1
            if st.age[slot] >= st.lam:
                st.node_R[st.pos[slot]] += st.load[slot] + st.eps
                st.alive[slot] = 0
            else:
                st.order[n_surv] = slot
                n_surv += 1
        st.n_order = n_surv
        # 4: evaporation and bridge eviction
        total_ph = 0.0
        for e in range(st.n_tree_edges):
            st.tree_ph[e] *= keep
            total_ph += st.tree_ph[e]
        bridges = 0
        for a in range(K):
            for b in range(a + 1, K):
                level = st.bridge_ph[a * K + b]
                if level >= 0.0:
                    level *= keep
                    if level < st.eps_bridge:
                        st.bridge_ph[a * K + b] = -1.0
                        st.bridge_ph[b * K + a] = -1.0
                    else:
                        st.bridge_ph[a * K + b] = level
                        st.bridge_ph[b * K + a] = level
                        bridges += 1
                        total_ph += level
        # 5: metrics
        alive_n = st.n_order
        total_res = 0.0
        for i in range(st.n_nodes):
            total_res += st.node_R[i]
        for oi in range(st.n_order):
            total_res += st.load[st.order[oi]]
        total_res += alive_n * st.eps
        st.cycle += 1
        metrics.append([
            float(moves), float(blocked), total_ph, float(alive_n),
            total_res, float(bridges), float(births),
        ])
    return metrics, int(s)


def wsd_read(WsdState st):
    """Snapshot of the mutable environment after a run segment."""
    cdef long long a, b, oi
    cdef long long K = st.K
    bridges = []
    for a in range(K):
        for b in range(a + 1, K):
            if st.bridge_ph[a * K + b] >= 0.0:
                bridges.append((int(a), int(b), float(st.bridge_ph[a * K + b])))
    return {
        "node_R": list(st.node_R[:st.n_nodes]),
        "node_V": list(st.node_V[:st.n_nodes * st.D]),
        "tree_ph": list(st.tree_ph[:st.n_tree_edges]),
        "bridges": bridges,
        "alive": int(st.n_order),
        "loads": [float(st.load[st.order[oi]]) for oi in range(st.n_order)],
        "ages": [int(st.age[st.order[oi]]) for oi in range(st.n_order)],
        "homes": [int(st.home[st.order[oi]]) for oi in range(st.n_order)],
        "positions": [int(st.pos[st.order[oi]]) for oi in range(st.n_order)],
        "cycle": int(st.cycle),
    }
