"""Pure-Python kernel backend.

Reference implementation of the three engine step loops.  The compiled
backend mirrors this file operation for operation; every random draw and
every float arithmetic step happens in the same order, which is what makes
runs bit-identical across backends.  Keep the two in sync.

State objects are plain attribute bags over Python lists; the engines treat
them as opaque and read results back through the accessor functions.
"""

from math import exp, sqrt

from ..rng import DetRng

FORWARD = 0
RETURNING = 1


# -- shortest-path engine -----------------------------------------------------


class SpState:
    __slots__ = (
        "indptr", "nbrs", "eids", "tau", "n_vertices", "n_edges",
        "src", "dst", "n_ants", "tabu_k", "walk_cap",
        "mode", "ret_idx", "walk", "walk_eids", "visited", "deposited",
        "step", "first_goal",
    )


def sp_pack(indptr, nbrs, eids, tau, src, dst, n_ants, tabu_k, walk_cap):
    """Bundle graph arrays and fresh forward ants into a run state.

    tabu_k < 0 keeps the whole walk tabu; otherwise only the last tabu_k
    visited vertices are excluded.  walk_cap bounds recorded walk length and
    must be at least the step budget plus one.
    """
    st = SpState()
    st.indptr = list(indptr)
    st.nbrs = list(nbrs)
    st.eids = list(eids)
    st.tau = [float(t) for t in tau]
    st.n_vertices = len(indptr) - 1
    st.n_edges = len(tau)
    st.src = src
    st.dst = dst
    st.n_ants = n_ants
    st.tabu_k = tabu_k
    st.walk_cap = walk_cap
    st.mode = [FORWARD] * n_ants
    st.ret_idx = [0] * n_ants
    st.walk = [[src] for _ in range(n_ants)]
    st.walk_eids = [[-1] for _ in range(n_ants)]
    st.visited = [{src} for _ in range(n_ants)]
    st.deposited = [set() for _ in range(n_ants)]
    st.step = 0
    st.first_goal = -1
    return st


def _sp_reset(st, a):
    st.mode[a] = FORWARD
    st.ret_idx[a] = 0
    st.walk[a] = [st.src]
    st.walk_eids[a] = [-1]
    st.visited[a] = {st.src}
    st.deposited[a] = set()


def _sp_is_tabu(st, a, vid):
    if st.tabu_k < 0:
        return vid in st.visited[a]
    if st.tabu_k == 0:
        return False
    walk = st.walk[a]
    lo = len(walk) - st.tabu_k
    if lo < 0:
        lo = 0
    for i in range(lo, len(walk)):
        if walk[i] == vid:
            return True
    return False


def sp_extract_length(st):
    """Greedy max-pheromone walk length from src to dst; -1 on failure.

    Crosses the heaviest incident edge towards an unvisited vertex each hop
    (ties to the lowest vertex id) with a hop budget of |V|.
    """
    visited = [False] * st.n_vertices
    visited[st.src] = True
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
        visited[best_nid] = True
        cur = best_nid
        if cur == st.dst:
            return hop + 1
    return -1


def sp_run(st, n_steps, rho, Q, q0, floor, rng_state, track_lengths):
    """Advance the path search n_steps; returns (metric rows, rng state).

    Forward ants move by the greedy-or-explore rule and record their walk;
    an ant reaching dst turns around and retraces the walk one edge per step,
    depositing Q on each distinct walk edge, then starts over from src.
    Blocked forward ants teleport home with cleared memory.  Evaporation runs
    once per step after all moves.

    Metric row: [moves, blocked, total_tau, goal_hits, extracted_len,
    deposited].
    """
    rng = DetRng(rng_state)
    metrics = []
    keep = 1.0 - rho
    for _ in range(n_steps):
        moves = 0
        blocked = 0
        goal_hits = 0
        deposited_total = 0.0
        for a in range(st.n_ants):
            if st.mode[a] == FORWARD:
                walk = st.walk[a]
                loc = walk[-1]
                cand_n = []
                cand_e = []
                for idx in range(st.indptr[loc], st.indptr[loc + 1]):
                    nid = st.nbrs[idx]
                    if not _sp_is_tabu(st, a, nid):
                        cand_n.append(nid)
                        cand_e.append(st.eids[idx])
                if not cand_n:
                    _sp_reset(st, a)
                    blocked += 1
                    continue
                if rng.next_float() < q0:
                    pick = 0
                    best_tau = st.tau[cand_e[0]]
                    for i in range(1, len(cand_n)):
                        t = st.tau[cand_e[i]]
                        if t > best_tau or (t == best_tau and cand_n[i] < cand_n[pick]):
                            pick = i
                            best_tau = t
                else:
                    total = 0.0
                    weights = []
                    for e in cand_e:
                        t = st.tau[e]
                        w = (t if t > 0.0 else 0.0) + floor
                        weights.append(w)
                        total += w
                    u = rng.next_float() * total
                    acc = 0.0
                    pick = len(weights) - 1
                    for i, w in enumerate(weights):
                        acc += w
                        if u < acc:
                            pick = i
                            break
                nid = cand_n[pick]
                walk.append(nid)
                st.walk_eids[a].append(cand_e[pick])
                if st.tabu_k < 0:
                    st.visited[a].add(nid)
                moves += 1
                if nid == st.dst:
                    st.mode[a] = RETURNING
                    st.ret_idx[a] = len(walk) - 1
                    goal_hits += 1
                    if st.first_goal < 0:
                        st.first_goal = st.step
            else:
                i = st.ret_idx[a]
                eid = st.walk_eids[a][i]
                st.ret_idx[a] = i - 1
                if eid not in st.deposited[a]:
                    st.tau[eid] += Q
                    st.deposited[a].add(eid)
                    deposited_total += Q
                moves += 1
                if st.ret_idx[a] == 0:
                    _sp_reset(st, a)
        total_tau = 0.0
        tau = st.tau
        for e in range(st.n_edges):
            tau[e] *= keep
            total_tau += tau[e]
        st.step += 1
        extracted = sp_extract_length(st) if track_lengths else -1
        metrics.append([
            float(moves), float(blocked), total_tau,
            float(goal_hits), float(extracted), deposited_total,
        ])
    return metrics, rng.getstate()


def sp_tau(st):
    return list(st.tau)


def sp_info(st):
    return {"step": st.step, "first_goal": st.first_goal}


# -- alignment-block engine ---------------------------------------------------


class MsaState:
    __slots__ = (
        "v_indptr", "v_nbrs", "v_eids", "c_indptr", "c_list",
        "d", "tau", "delta", "n_vertices", "n_edges",
        "n_ants", "tabu_k", "pos", "home", "ring", "rptr", "step",
    )


def msa_pack(v_indptr, v_nbrs, v_eids, c_indptr, c_list, d, tau, positions, tabu_k):
    """Bundle the alignment graph, its conflict table, and placed ants."""
    st = MsaState()
    st.v_indptr = list(v_indptr)
    st.v_nbrs = list(v_nbrs)
    st.v_eids = list(v_eids)
    st.c_indptr = list(c_indptr)
    st.c_list = list(c_list)
    st.d = [float(x) for x in d]
    st.tau = [float(x) for x in tau]
    st.delta = [0.0] * len(tau)
    st.n_vertices = len(v_indptr) - 1
    st.n_edges = len(tau)
    st.n_ants = len(positions)
    st.tabu_k = tabu_k
    st.pos = list(positions)
    st.home = list(positions)
    st.ring = [[-1] * tabu_k for _ in range(st.n_ants)]
    st.rptr = [0] * st.n_ants
    if tabu_k > 0:
        for a, p in enumerate(st.pos):
            st.ring[a][0] = p
            st.rptr[a] = 1 % tabu_k
    st.step = 0
    return st


def _msa_push(st, a, vid):
    if st.tabu_k > 0:
        st.ring[a][st.rptr[a]] = vid
        st.rptr[a] = (st.rptr[a] + 1) % st.tabu_k


def msa_run(st, n_steps, alpha, beta, dep_q, pen_q, rho, eps_norm, rng_state):
    """Advance the block search n_steps; returns (metric rows, rng state).

    Per step each ant crosses one non-tabu edge drawn proportionally to
    (1/(max_tau - tau + eps_norm))^alpha * (1/d)^beta over its current
    neighborhood, queueing +dep_q on the crossed edge and -pen_q on every
    edge crossing it.  Queued amounts apply together with evaporation at
    step end: tau <- (1-rho)*tau + delta.  Blocked ants teleport to their
    birth vertex.

    Metric row: [moves, blocked, total_tau, net_delta].
    """
    rng = DetRng(rng_state)
    metrics = []
    keep = 1.0 - rho
    for _ in range(n_steps):
        moves = 0
        blocked = 0
        for a in range(st.n_ants):
            loc = st.pos[a]
            ring = st.ring[a]
            cand_n = []
            cand_e = []
            for idx in range(st.v_indptr[loc], st.v_indptr[loc + 1]):
                nid = st.v_nbrs[idx]
                if st.tabu_k > 0 and nid in ring:
                    continue
                cand_n.append(nid)
                cand_e.append(st.v_eids[idx])
            if not cand_n:
                st.pos[a] = st.home[a]
                if st.tabu_k > 0:
                    for i in range(st.tabu_k):
                        ring[i] = -1
                    ring[0] = st.home[a]
                    st.rptr[a] = 1 % st.tabu_k
                blocked += 1
                continue
            mx = st.tau[cand_e[0]]
            for i in range(1, len(cand_e)):
                t = st.tau[cand_e[i]]
                if t > mx:
                    mx = t
            total = 0.0
            weights = []
            for e in cand_e:
                w = (1.0 / (mx - st.tau[e] + eps_norm)) ** alpha * (1.0 / st.d[e]) ** beta
                weights.append(w)
                total += w
            u = rng.next_float() * total
            acc = 0.0
            pick = len(weights) - 1
            for i, w in enumerate(weights):
                acc += w
                if u < acc:
                    pick = i
                    break
            st.pos[a] = cand_n[pick]
            _msa_push(st, a, cand_n[pick])
            moves += 1
            e = cand_e[pick]
            st.delta[e] += dep_q
            for idx in range(st.c_indptr[e], st.c_indptr[e + 1]):
                st.delta[st.c_list[idx]] -= pen_q
        total_tau = 0.0
        net_delta = 0.0
        tau = st.tau
        delta = st.delta
        for e in range(st.n_edges):
            net_delta += delta[e]
            tau[e] = keep * tau[e] + delta[e]
            delta[e] = 0.0
            total_tau += tau[e]
        st.step += 1
        metrics.append([float(moves), float(blocked), total_tau, net_delta])
    return metrics, rng.getstate()


def msa_tau(st):
    return list(st.tau)


# -- sense-activation engine --------------------------------------------------


class WsdState:
    __slots__ = (
        "indptr", "nbrs", "eids", "tree_ph",
        "node_R", "node_V", "is_nest", "nest_idx",
        "nest_node", "nest_word", "nest_color",
        "w_indptr", "w_nests", "bridge_ph",
        "n_nodes", "n_tree_edges", "K", "W", "D",
        "home", "load", "age", "alive", "pos", "order", "capacity",
        "lam", "eps", "delta", "eta", "Q_w", "k_sig",
        "s_bridge", "eps_bridge", "alpha_color", "fool_frac", "spawn_always",
        "cycle",
    )


def wsd_pack(indptr, nbrs, eids, tree_ph, node_R, node_V, is_nest, nest_idx,
             nest_node, nest_word, nest_color, w_indptr, w_nests, D,
             lam, eps, delta, eta, Q_w, k_sig, s_bridge, eps_bridge,
             alpha_color, fool_frac, spawn_always):
    """Bundle the tree environment and foraging parameters into a run state.

    node_V and nest_color are flattened row-major [node * D + component].
    Bridges live in a K x K level matrix where -1 marks absence.
    """
    st = WsdState()
    st.indptr = list(indptr)
    st.nbrs = list(nbrs)
    st.eids = list(eids)
    st.tree_ph = [float(x) for x in tree_ph]
    st.node_R = [float(x) for x in node_R]
    st.node_V = [float(x) for x in node_V]
    st.is_nest = list(is_nest)
    st.nest_idx = list(nest_idx)
    st.nest_node = list(nest_node)
    st.nest_word = list(nest_word)
    st.nest_color = [float(x) for x in nest_color]
    st.w_indptr = list(w_indptr)
    st.w_nests = list(w_nests)
    st.n_nodes = len(indptr) - 1
    st.n_tree_edges = len(tree_ph)
    st.K = len(nest_node)
    st.W = len(w_indptr) - 1
    st.D = D
    st.bridge_ph = [-1.0] * (st.K * st.K)
    st.capacity = st.W * (lam + 1) + 4
    st.home = [0] * st.capacity
    st.load = [0.0] * st.capacity
    st.age = [0] * st.capacity
    st.alive = [0] * st.capacity
    st.pos = [0] * st.capacity
    st.order = []
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
    st.spawn_always = spawn_always
    st.cycle = 0
    return st


def _sigmoid(x):
    return 1.0 / (1.0 + exp(-x))


def _sim_flat(va, oa, vb, ob, D):
    dot = 0.0
    na = 0.0
    nb = 0.0
    for j in range(D):
        x = va[oa + j]
        y = vb[ob + j]
        dot += x * y
        na += x * x
        nb += y * y
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (sqrt(na) * sqrt(nb))


def wsd_run(st, n_cycles, rng_state):
    """Advance the foraging dynamics n_cycles; returns (metric rows, rng state).

    Cycle phases: nests spawn (one ant per content word, nest drawn by
    sigmoid-of-resource weights), every ant draws its mode and moves once,
    ants age and die at lam returning load plus production cost to the node
    under them, pheromone evaporates, and starved bridges are evicted.

    Metric row: [moves, blocked, total_ph, alive, total_resources,
    bridges, births].
    """
    rng = DetRng(rng_state)
    metrics = []
    D = st.D
    K = st.K
    keep = 1.0 - st.delta
    for _ in range(n_cycles):
        # 1: production, one ant per content word
        births = 0
        for w in range(st.W):
            lo = st.w_indptr[w]
            hi = st.w_indptr[w + 1]
            total = 0.0
            weights = []
            for i in range(lo, hi):
                s = _sigmoid(st.k_sig * st.node_R[st.nest_node[st.w_nests[i]]])
                weights.append(s)
                total += s
            u = rng.next_float() * total
            acc = 0.0
            pick = hi - lo - 1
            for i, s in enumerate(weights):
                acc += s
                if u < acc:
                    pick = i
                    break
            sel = st.w_nests[lo + pick]
            if not st.spawn_always:
                gate = _sigmoid(st.k_sig * st.node_R[st.nest_node[sel]])
                if rng.next_float() >= gate:
                    continue
            slot = 0
            while st.alive[slot]:
                slot += 1
            st.home[slot] = sel
            st.load[slot] = 0.0
            st.age[slot] = 0
            st.alive[slot] = 1
            st.pos[slot] = st.nest_node[sel]
            st.order.append(slot)
            st.node_R[st.nest_node[sel]] -= st.eps
            births += 1
        # 2: movement, birth order
        moves = 0
        blocked = 0
        for slot in st.order:
            load = st.load[slot]
            returning = rng.next_float() < load
            node = st.pos[slot]
            hk = st.home[slot]
            home_node = st.nest_node[hk]
            cand_n = []
            cand_b = []  # bridge partner ordinal, or -1 for tree edges
            cand_e = []
            for idx in range(st.indptr[node], st.indptr[node + 1]):
                nid = st.nbrs[idx]
                if not returning and nid == home_node:
                    continue
                cand_n.append(nid)
                cand_b.append(-1)
                cand_e.append(st.eids[idx])
            if st.is_nest[node]:
                kk = st.nest_idx[node]
                base = kk * K
                for kk2 in range(K):
                    if st.bridge_ph[base + kk2] >= 0.0:
                        nid = st.nest_node[kk2]
                        if not returning and nid == home_node:
                            continue
                        cand_n.append(nid)
                        cand_b.append(kk2)
                        cand_e.append(base + kk2)
            if not cand_n:
                blocked += 1
                continue
            total = 0.0
            weights = []
            for i in range(len(cand_n)):
                nid = cand_n[i]
                if cand_b[i] < 0:
                    ph = st.tree_ph[cand_e[i]]
                else:
                    ph = st.bridge_ph[cand_e[i]]
                if returning:
                    s = _sim_flat(st.node_V, nid * D, st.nest_color, hk * D, D)
                    a = (s if s > st.eta else st.eta) * (ph + 1.0)
                else:
                    r = st.node_R[nid]
                    a = (r if r > st.eta else st.eta) / (ph + 1.0)
                weights.append(a)
                total += a
            u = rng.next_float() * total
            acc = 0.0
            pick = len(weights) - 1
            for i, w in enumerate(weights):
                acc += w
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
                off = nid * D
                coff = hk * D
                norm = 0.0
                for j in range(D):
                    v = st.node_V[off + j] + st.alpha_color * st.nest_color[coff + j]
                    st.node_V[off + j] = v
                    norm += v * v
                if norm > 0.0:
                    norm = sqrt(norm)
                    for j in range(D):
                        st.node_V[off + j] /= norm
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
                    s = _sim_flat(st.nest_color, kk2 * D, st.nest_color, hk * D, D)
                    if s >= st.s_bridge:
                        if returning and st.load[slot] > 0.0:
                            give = st.fool_frac * st.load[slot]
                            st.node_R[nid] += give
                            st.load[slot] -= give
                        if st.bridge_ph[hk * K + kk2] < 0.0:
                            st.bridge_ph[hk * K + kk2] = st.Q_w
                            st.bridge_ph[kk2 * K + hk] = st.Q_w
        # 3: aging and death
        survivors = []
        for slot in st.order:
            st.age[slot] += 1
            if st.age[slot] >= st.lam:
                st.node_R[st.pos[slot]] += st.load[slot] + st.eps
                st.alive[slot] = 0
            else:
                survivors.append(slot)
        st.order = survivors
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
        alive = len(st.order)
        total_res = 0.0
        for r in st.node_R:
            total_res += r
        for slot in st.order:
            total_res += st.load[slot]
        total_res += alive * st.eps
        st.cycle += 1
        metrics.append([
            float(moves), float(blocked), total_ph, float(alive),
            total_res, float(bridges), float(births),
        ])
    return metrics, rng.getstate()


def wsd_read(st):
    """Snapshot of the mutable environment after a run segment."""
    bridges = []
    K = st.K
    for a in range(K):
        for b in range(a + 1, K):
            if st.bridge_ph[a * K + b] >= 0.0:
                bridges.append((a, b, st.bridge_ph[a * K + b]))
    return {
        "node_R": list(st.node_R),
        "node_V": list(st.node_V),
        "tree_ph": list(st.tree_ph),
        "bridges": bridges,
        "alive": len(st.order),
        "loads": [st.load[s] for s in st.order],
        "ages": [st.age[s] for s in st.order],
        "homes": [st.home[s] for s in st.order],
        "positions": [st.pos[s] for s in st.order],
        "cycle": st.cycle,
    }
