"""Interaction graph on minimal siphons, its cycles, and the block-ordering check."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from .netio import ReactionNetwork, stoich
from .siphons import SpeciesSet, critical_siphons, minimal_siphons, total_siphon

NET = "net"
TOUCH = "touch"


@dataclass(frozen=True)
class IgmsGraph:
    nodes: Tuple[SpeciesSet, ...]
    edges: Tuple[Tuple[int, int, int], ...]
    edge_rule: str

    def successors(self) -> Dict[int, List[int]]:
        out = {i: [] for i in range(len(self.nodes))}
        for i, j, _ in self.edges:
            if j not in out[i]:
                out[i].append(j)
        for v in out.values():
            v.sort()
        return out

    def to_dict(self, net: ReactionNetwork) -> dict:
        return {
            "nodes": [net.names(W) for W in self.nodes],
            "edges": [{"source": i, "target": j, "reaction": r} for i, j, r in self.edges],
            "edge_rule": self.edge_rule,
        }

    def to_dot(self, net: ReactionNetwork) -> str:
        lines = ["digraph igms {"]
        for k, W in enumerate(self.nodes):
            lines.append(f'  T{k} [label="T{k}: {{{", ".join(net.names(W))}}}"];')
        grouped: Dict[Tuple[int, int], List[int]] = {}
        for i, j, r in self.edges:
            grouped.setdefault((i, j), []).append(r)
        for (i, j), rs in sorted(grouped.items()):
            lines.append(f'  T{i} -> T{j} [label="{",".join(f"R{r}" for r in rs)}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_igms(net: ReactionNetwork, siphons: Optional[Sequence[SpeciesSet]] = None, rule: str = NET) -> IgmsGraph:
    """Edge i -> j with witness r when r consumes from T_i and produces into T_j.

    With ``rule="net"`` production means a positive net stoichiometric change;
    with ``rule="touch"`` it means appearing among the products.
    """
    if rule not in (NET, TOUCH):
        raise ValueError("rule must be 'net' or 'touch'")
    if siphons is None:
        siphons = minimal_siphons(net)
    siphons = [tuple(W) for W in siphons]
    G = stoich(net).gamma
    edges = []
    for r, rx in enumerate(net.reactions):
        reac = {net.index(n) for n, _ in rx.reactants}
        if rule == NET:
            prod = {i for i in range(net.n_species) if G[i, r] > 0}
        else:
            prod = {net.index(n) for n, _ in rx.products}
        for i, Ti in enumerate(siphons):
            if not reac & set(Ti):
                continue
            for j, Tj in enumerate(siphons):
                if i != j and prod & set(Tj):
                    edges.append((i, j, r))
    return IgmsGraph(tuple(siphons), tuple(sorted(set(edges))), rule)


def _canonical(cycle: List[int]) -> Tuple[int, ...]:
    k = cycle.index(min(cycle))
    return tuple(cycle[k:] + cycle[:k])


def cycles(graph: IgmsGraph) -> List[Tuple[int, ...]]:
    """Elementary cycles (Johnson's algorithm), each rotated to start at its smallest node."""
    succ = graph.successors()
    n = len(graph.nodes)
    result = set()
    for start in range(n):
        # subgraph induced by nodes >= start
        adj = {v: [w for w in succ[v] if w >= start] for v in range(start, n)}
        blocked = set()
        bmap: Dict[int, set] = {v: set() for v in adj}
        stack: List[int] = []

        def unblock(u):
            todo = [u]
            while todo:
                x = todo.pop()
                if x in blocked:
                    blocked.discard(x)
                    todo.extend(bmap[x])
                    bmap[x].clear()

        def circuit(v) -> bool:
            closed = False
            stack.append(v)
            blocked.add(v)
            for w in adj[v]:
                if w == start:
                    result.add(_canonical(list(stack)))
                    closed = True
                elif w not in blocked:
                    if circuit(w):
                        closed = True
            if closed:
                unblock(v)
            else:
                for w in adj[v]:
                    bmap[w].add(v)
            stack.pop()
            return closed

        circuit(start)
    return sorted(result, key=lambda c: (len(c), c))


def topo_order(graph: IgmsGraph) -> Optional[List[int]]:
    """Kahn's algorithm, smallest available index first; None if cyclic."""
    succ = graph.successors()
    n = len(graph.nodes)
    indeg = [0] * n
    for v in range(n):
        for w in succ[v]:
            indeg[w] += 1
    ready = sorted(v for v in range(n) if indeg[v] == 0)
    order = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
                ready.sort()
    return order if len(order) == n else None


@dataclass(frozen=True)
class AmsdVerdict:
    siphons: Tuple[SpeciesSet, ...]
    is_partition: bool
    is_acyclic: bool
    topo_order: Optional[Tuple[int, ...]]
    species_order: Optional[Tuple[int, ...]]
    edge_rule: str
    rules_disagree: bool
    touch_is_acyclic: bool

    @property
    def holds(self) -> bool:
        return self.is_partition and self.is_acyclic

    def blocks(self) -> Optional[List[SpeciesSet]]:
        """Siphons in topological order when the partition holds."""
        if not self.is_partition:
            return None
        order = self.topo_order if self.topo_order is not None else range(len(self.siphons))
        return [self.siphons[k] for k in order]

    def to_dict(self, net: ReactionNetwork) -> dict:
        return {
            "siphons": [net.names(W) for W in self.siphons],
            "is_partition": self.is_partition,
            "is_acyclic": self.is_acyclic,
            "topo_order": list(self.topo_order) if self.topo_order is not None else None,
            "species_order": net.names(self.species_order) if self.species_order is not None else None,
            "edge_rule": self.edge_rule,
            "rules_disagree": self.rules_disagree,
            "touch_is_acyclic": self.touch_is_acyclic,
        }


@lru_cache(maxsize=256)
def amsd_check(net: ReactionNetwork, rule: str = NET) -> AmsdVerdict:
    """Check that the critical minimal siphons partition the total siphon with an acyclic graph.

    The graph is built on the critical minimal siphons, whose union is the
    total siphon; non-critical siphons (conserved pools) are left out.
    """
    siphons = critical_siphons(net)
    ts = set(total_siphon(net, minimal_siphons(net)))
    disjoint = all(not set(a) & set(b) for k, a in enumerate(siphons) for b in siphons[k + 1:])
    covered = set().union(*map(set, siphons)) if siphons else set()
    is_partition = disjoint and covered == ts
    g = build_igms(net, siphons, rule)
    other = build_igms(net, siphons, TOUCH if rule == NET else NET)
    order = topo_order(g)
    other_acyclic = topo_order(other) is not None
    species_order = None
    if order is not None and is_partition:
        species_order = tuple(i for k in order for i in siphons[k])
    touch_acyclic = other_acyclic if rule == NET else order is not None
    return AmsdVerdict(
        tuple(siphons),
        is_partition,
        order is not None,
        tuple(order) if order is not None else None,
        species_order,
        rule,
        (order is not None) != other_acyclic,
        touch_acyclic,
    )
