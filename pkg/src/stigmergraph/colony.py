"""Colony mechanics shared by the problem engines.

Ants are nearly stateless walkers: a location, a recorded walk, and a mode.
All coordination happens through pheromone on the environment graph.  The
transition rules here compute explicit probability vectors first and only then
consume random draws, so the same code paths serve simulation, unit testing,
and distribution fuzzing.
"""

from .errors import InvalidParameterError
from .rng import DetRng

FORWARD = 0
RETURNING = 1


class Colony:
    """A population sharing one pheromone color."""

    __slots__ = ("id", "color")

    def __init__(self, cid, color):
        self.id = cid
        self.color = color


class Ant:
    __slots__ = ("id", "color", "nest", "location", "walk", "mode", "return_index", "_visited")

    def __init__(self, aid, nest, color=0):
        self.id = aid
        self.color = color
        self.nest = nest
        self.location = nest
        self.walk = [nest]
        self.mode = FORWARD
        self.return_index = 0
        self._visited = {nest}

    def advance_to(self, vid):
        self.location = vid
        self.walk.append(vid)
        self._visited.add(vid)

    def reset_to_nest(self):
        """Blocked-ant policy: teleport home and forget walk and tabu."""
        self.location = self.nest
        self.walk = [self.nest]
        self.mode = FORWARD
        self.return_index = 0
        self._visited = {self.nest}

    def is_tabu(self, vid, tabu_size):
        """True when vid is excluded by the ant's memory.

        tabu_size=None keeps the whole current walk tabu (full no-revisit);
        an integer k excludes only the k most recently visited vertices.
        """
        if tabu_size is None:
            return vid in self._visited
        if tabu_size == 0:
            return False
        return vid in self.walk[-tabu_size:]


class EngineParams:
    """Validated knobs shared by the pheromone engines."""

    __slots__ = ("rho", "Q", "q0", "gamma", "floor", "tabu_size", "seed")

    def __init__(self, rho=0.03, Q=1.0, q0=0.0, gamma=0.0, floor=1e-6, tabu_size=None, seed=0):
        if not 0.0 <= rho <= 1.0:
            raise InvalidParameterError(f"rho={rho} outside [0, 1]")
        if Q <= 0.0:
            raise InvalidParameterError(f"Q={Q} must be positive")
        if not 0.0 <= q0 <= 1.0:
            raise InvalidParameterError(f"q0={q0} outside [0, 1]")
        if gamma < 0.0:
            raise InvalidParameterError(f"gamma={gamma} must be non-negative")
        if floor <= 0.0:
            raise InvalidParameterError(f"floor={floor} must be positive")
        if tabu_size is not None and (not isinstance(tabu_size, int) or tabu_size < 0):
            raise InvalidParameterError(f"tabu_size={tabu_size!r} must be None or an int >= 0")
        self.rho = rho
        self.Q = Q
        self.q0 = q0
        self.gamma = gamma
        self.floor = floor
        self.tabu_size = tabu_size
        self.seed = seed


class StepReport:
    """Per-step observables; one CSV row."""

    __slots__ = ("step", "ant_moves", "blocked", "totals")

    def __init__(self, step, ant_moves, blocked, totals):
        self.step = step
        self.ant_moves = ant_moves
        self.blocked = blocked
        self.totals = totals  # color id -> total pheromone

    @staticmethod
    def csv_header(g):
        names = ",".join(f"pheromone_{name}" for name in g.colors)
        return f"step,ant_moves,blocked,{names}" if names else "step,ant_moves,blocked"

    def csv_row(self):
        tail = ",".join(repr(self.totals[c]) for c in sorted(self.totals))
        return f"{self.step},{self.ant_moves},{self.blocked},{tail}".rstrip(",")


# -- transition rules ---------------------------------------------------------


def colored_weight(tau_own, tau_other_sum, gamma, floor):
    """Effective attractiveness of an edge for one colony.

    Foreign pheromone repels in proportion to gamma; the clamp keeps weights
    non-negative even when penalties drive raw levels below zero, and the
    uniform floor keeps every transition possible.
    """
    base = tau_own - gamma * tau_other_sum
    return (base if base > 0.0 else 0.0) + floor


def edge_weight(edge, color, gamma, floor):
    own = edge.pheromone.get(color, 0.0)
    other = 0.0
    if gamma != 0.0:
        for c, level in edge.pheromone.items():
            if c != color:
                other += level
    return colored_weight(own, other, gamma, floor)


def normalize(weights):
    """Probability vector from positive weights; sums to 1."""
    total = 0.0
    for w in weights:
        total += w
    return [w / total for w in weights]


def weighted_pick(rng, weights):
    """Draw an index proportionally to weights, consuming one RNG sample."""
    total = 0.0
    for w in weights:
        total += w
    u = rng.next_float() * total
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if u < acc:
            return i
    return len(weights) - 1


def candidate_moves(g, ant, params):
    """Non-tabu (neighbor, edge) pairs in deterministic adjacency order."""
    return [
        (nid, eid)
        for nid, eid in g.neighbors(ant.location)
        if not ant.is_tabu(nid, params.tabu_size)
    ]


def simple_distribution(g, ant, params, candidates=None):
    """Pheromone-proportional transition probabilities over non-tabu moves."""
    if candidates is None:
        candidates = candidate_moves(g, ant, params)
    weights = [
        edge_weight(g.edges[eid], ant.color, params.gamma, params.floor)
        for _, eid in candidates
    ]
    return candidates, (normalize(weights) if weights else [])


def exploit_distribution(g, ant, params, candidates=None):
    """Distribution induced by the q0 rule: greedy mass plus explorer mass."""
    if candidates is None:
        candidates = candidate_moves(g, ant, params)
    if not candidates:
        return candidates, []
    _, probs = simple_distribution(g, ant, params, candidates)
    best = _greedy_index(g, ant, candidates)
    mixed = [(1.0 - params.q0) * p for p in probs]
    mixed[best] += params.q0
    return candidates, mixed


def _greedy_index(g, ant, candidates):
    """Index of the max-pheromone candidate; ties go to the lowest vertex id."""
    best = 0
    best_tau = g.edges[candidates[0][1]].pheromone.get(ant.color, 0.0)
    for i in range(1, len(candidates)):
        tau = g.edges[candidates[i][1]].pheromone.get(ant.color, 0.0)
        if tau > best_tau or (tau == best_tau and candidates[i][0] < candidates[best][0]):
            best = i
            best_tau = tau
    return best


def choose_next_simple(g, ant, rng, params):
    """Pheromone-proportional move choice; exactly one RNG draw.

    Returns (vertex, edge) or None when every neighbor is tabu.
    """
    candidates = candidate_moves(g, ant, params)
    if not candidates:
        return None
    weights = [
        edge_weight(g.edges[eid], ant.color, params.gamma, params.floor)
        for _, eid in candidates
    ]
    return candidates[weighted_pick(rng, weights)]


def choose_next_exploit(g, ant, rng, params):
    """Greedy-or-explore move choice.

    With probability q0 the ant takes the heaviest non-tabu edge outright
    (ties broken by lowest vertex id); otherwise it defers to the
    pheromone-proportional rule.
    """
    candidates = candidate_moves(g, ant, params)
    if not candidates:
        return None
    if rng.next_float() < params.q0:
        return candidates[_greedy_index(g, ant, candidates)]
    weights = [
        edge_weight(g.edges[eid], ant.color, params.gamma, params.floor)
        for _, eid in candidates
    ]
    return candidates[weighted_pick(rng, weights)]


# -- step loop ----------------------------------------------------------------


def _default_advance(g, ant, rng, params):
    choice = choose_next_exploit(g, ant, rng, params)
    if choice is None:
        return "blocked"
    ant.advance_to(choice[0])
    return "moved"


def step_all(g, ants, rng, params, advance=None, blocked_policy=None, evaporate_first=False):
    """Advance every ant once, then evaporate; returns the step's report.

    Ants act strictly in id order and deposits apply immediately, so ants later
    in the order see pheromone laid earlier in the same step.  Evaporation runs
    once per step; evaporate_first applies it before the moves instead of after.
    """
    if advance is None:
        advance = _default_advance
    if blocked_policy is None:
        blocked_policy = Ant.reset_to_nest
    if evaporate_first:
        g.evaporate_all(params.rho)
    moves = 0
    blocked = 0
    for ant in sorted(ants, key=lambda a: a.id):
        outcome = advance(g, ant, rng, params)
        if outcome == "blocked":
            blocked_policy(ant)
            blocked += 1
        else:
            moves += 1
    if not evaporate_first:
        g.evaporate_all(params.rho)
    g.step += 1
    totals = {c: 0.0 for c in range(len(g.colors))}
    if not totals:
        totals = {0: 0.0}
    for edge in g.edges.values():
        for c, level in edge.pheromone.items():
            totals[c] = totals.get(c, 0.0) + level
    return StepReport(g.step, moves, blocked, totals)


def make_rng(params):
    return DetRng(params.seed)
