"""Siphons and their certificate-backed structural verdicts.

Every LP here is solved exactly over the rationals (see :mod:`crnkit.lp`), so a
returned certificate can be re-checked with zero tolerance by
:func:`verify_certificate`.
"""
from __future__ import annotations

import itertools
from functools import lru_cache
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .lp import maximize
from .netio import ReactionNetwork, stoich

SpeciesSet = Tuple[int, ...]

CONSERVATION = "conservation"
DRAIN = "drain-flux"
REPLICATE = "replicate-flux"
CORE = "core-flux"


@dataclass(frozen=True)
class Certificate:
    """Exact witness vector for a verdict.

    ``vector`` is indexed by species for ``conservation`` and by reaction
    otherwise.  ``strict`` marks replicate fluxes that also vanish off the set.
    ``reactions`` restricts the columns for core fluxes.
    """

    kind: str
    vector: Tuple[Fraction, ...]
    species: SpeciesSet
    strict: bool = False
    reactions: Tuple[int, ...] = ()

    def to_dict(self, net: ReactionNetwork) -> dict:
        d = {
            "kind": self.kind,
            "set": net.names(self.species),
            "vector": [str(v) for v in self.vector],
            "strict": self.strict,
        }
        if self.reactions:
            d["reactions"] = list(self.reactions)
        return d


@dataclass(frozen=True)
class SiphonReport:
    set: SpeciesSet
    is_minimal: bool
    is_critical: bool
    is_drainable: bool
    is_self_replicable_restricted: bool
    is_self_replicable_strict: bool
    is_autocatalytic: bool
    is_exclusive: bool
    certificates: Tuple[Certificate, ...] = ()

    def to_dict(self, net: ReactionNetwork, with_certificates: bool = True) -> dict:
        d = {
            "set": net.names(self.set),
            "is_minimal": self.is_minimal,
            "is_critical": self.is_critical,
            "is_drainable": self.is_drainable,
            "is_self_replicable_restricted": self.is_self_replicable_restricted,
            "is_self_replicable_strict": self.is_self_replicable_strict,
            "is_autocatalytic": self.is_autocatalytic,
            "is_exclusive": self.is_exclusive,
        }
        if with_certificates:
            d["certificates"] = [c.to_dict(net) for c in self.certificates]
        return d


def _gamma(net: ReactionNetwork) -> np.ndarray:
    return stoich(net).gamma


def input_species(net: ReactionNetwork) -> SpeciesSet:
    """Species produced by a reaction with an empty reactant complex."""
    out = set()
    for rx in net.reactions:
        if not rx.reactants:
            out.update(net.index(n) for n, _ in rx.products)
    return tuple(sorted(out))


def _reactant_idx(net):
    return [frozenset(net.index(n) for n, _ in rx.reactants) for rx in net.reactions]


def _product_idx(net):
    return [frozenset(net.index(n) for n, _ in rx.products) for rx in net.reactions]


def is_siphon(net: ReactionNetwork, W) -> bool:
    """True iff every reaction producing something in W also consumes from W."""
    W = set(net.species_set(W))
    if not W:
        raise ValueError("siphon test needs a nonempty set")
    for reac, prod in zip(_reactant_idx(net), _product_idx(net)):
        if prod & W and not reac & W:
            return False
    return True


def minimal_siphons(net: ReactionNetwork) -> List[SpeciesSet]:
    """All minimal siphons, sorted lexicographically by index tuple.

    Branch and bound: grow a partial set along reactions that violate the
    siphon condition, branching on their reactants.
    """
    return list(_minimal_siphons(net))


@lru_cache(maxsize=256)
def _minimal_siphons(net: ReactionNetwork) -> Tuple[SpeciesSet, ...]:
    reac = _reactant_idx(net)
    prod = _product_idx(net)
    inputs = set(input_species(net))
    found: List[frozenset] = []
    seen = set()

    def violated(W):
        for r in range(len(reac)):
            if prod[r] & W and not reac[r] & W:
                return r
        return None

    def search(W: frozenset):
        if W in seen:
            return
        seen.add(W)
        if any(f <= W for f in found):
            return
        r = violated(W)
        if r is None:
            found[:] = [f for f in found if not W < f]
            found.append(W)
            return
        for s in sorted(reac[r] - inputs):
            search(W | {s})

    for s in range(net.n_species):
        if s not in inputs:
            search(frozenset([s]))
    minimal = [f for f in found if not any(g < f for g in found)]
    return tuple(sorted({tuple(sorted(f)) for f in minimal}))


def is_critical(net: ReactionNetwork, W) -> Tuple[bool, Optional[Certificate]]:
    """Critical iff no nonnegative conservation law is supported inside W."""
    W = net.species_set(W)
    if not W or not is_siphon(net, W):
        raise ValueError("criticality is defined for siphons only")
    G = _gamma(net)
    k = len(W)
    A_eq = [[1] * k]
    b_eq = [1]
    for r in range(net.n_reactions):
        A_eq.append([int(G[i, r]) for i in W])
        b_eq.append(0)
    res = maximize([0] * k, A_eq=A_eq, b_eq=b_eq)
    if res.status != "optimal":
        return True, None
    c = [Fraction(0)] * net.n_species
    for i, v in zip(W, res.x):
        c[i] = v
    return False, Certificate(CONSERVATION, tuple(c), W)


def _flux_lp(G, W, sign, strict, columns=None):
    """max t s.t. v >= 0, sum v = 1, sign*(G v)_i >= t on W, (G v)_i = 0 off W if strict."""
    n, m = G.shape
    cols = list(range(m)) if columns is None else list(columns)
    k = len(cols)
    if k == 0:
        return Fraction(0), None
    # variables: v (k), t (free, last)
    A_ub, b_ub = [], []
    for i in W:
        A_ub.append([-sign * int(G[i, r]) for r in cols] + [1])
        b_ub.append(0)
    A_eq = [[1] * k + [0]]
    b_eq = [1]
    if strict:
        Wset = set(W)
        for i in range(n):
            if i not in Wset:
                A_eq.append([int(G[i, r]) for r in cols] + [0])
                b_eq.append(0)
    res = maximize([0] * k + [1], A_ub, b_ub, A_eq, b_eq, free=[k])
    if res.status == "infeasible":
        return None, None
    if res.status == "unbounded":  # cannot happen with sum v = 1 and nonempty W
        raise RuntimeError("unbounded flux LP")
    v = [Fraction(0)] * m
    for r, val in zip(cols, res.x[:k]):
        v[r] = val
    return res.x[k], tuple(v)


def replicability(net: ReactionNetwork, W, mode: str = "restricted") -> Tuple[bool, Optional[Certificate]]:
    """Whether some flux strictly increases every species of W.

    ``mode="strict"`` additionally requires zero net change outside W.
    """
    if mode not in ("restricted", "strict"):
        raise ValueError("mode must be 'restricted' or 'strict'")
    W = net.species_set(W)
    if not W:
        raise ValueError("empty set")
    t, v = _flux_lp(_gamma(net), W, +1, mode == "strict")
    if t is None or t <= 0:
        return False, None
    return True, Certificate(REPLICATE, v, W, strict=(mode == "strict"))


def drainability(net: ReactionNetwork, W) -> Tuple[bool, Optional[Certificate]]:
    """Whether some flux strictly decreases every species of W."""
    W = net.species_set(W)
    if not W:
        raise ValueError("empty set")
    t, v = _flux_lp(_gamma(net), W, -1, False)
    if t is None or t <= 0:
        return False, None
    return True, Certificate(DRAIN, v, W)


def is_exclusive(net: ReactionNetwork, subnetwork_reactions: Sequence[int], M) -> bool:
    """True iff every listed reaction consumes at least one species of M."""
    M = set(net.species_set(M))
    if not M:
        raise ValueError("empty set")
    reac = _reactant_idx(net)
    for r in subnetwork_reactions:
        if not 0 <= r < net.n_reactions:
            raise IndexError(f"reaction index {r} out of range")
        if not reac[r] & M:
            return False
    return True


def autocatalytic_flux(net: ReactionNetwork, T) -> Optional[Certificate]:
    """A strict replicate flux in which every species of T is consumed.

    For each species one LP looks for a strict flux that runs some reaction
    consuming it; the normalized sum of these fluxes is the certificate.
    """
    T = net.species_set(T)
    G = _gamma(net)
    n, m = G.shape
    reac = _reactant_idx(net)
    Tset = set(T)
    total = [Fraction(0)] * m
    for i in T:
        consumers = [r for r in range(m) if i in reac[r]]
        if not consumers:
            return None
        # (G v)_T >= 1, (G v)_{off T} = 0, sum over consumers of v >= 1, v >= 0
        A_ub = [[-int(G[j, r]) for r in range(m)] for j in T]
        b_ub = [-1] * len(T)
        A_ub.append([-1 if r in consumers else 0 for r in range(m)])
        b_ub.append(-1)
        A_eq = [[int(G[j, r]) for r in range(m)] for j in range(n) if j not in Tset]
        b_eq = [0] * len(A_eq)
        res = maximize([0] * m, A_ub, b_ub, A_eq, b_eq)
        if res.status != "optimal":
            return None
        total = [a + b for a, b in zip(total, res.x)]
    s = sum(total)
    return Certificate(REPLICATE, tuple(v / s for v in total), T, strict=True)


def _exclusive_replicator(net, W, cert) -> bool:
    support = [r for r, v in enumerate(cert.vector) if v != 0]
    return bool(support) and is_exclusive(net, support, W)


def verify_certificate(net: ReactionNetwork, cert: Certificate) -> bool:
    """Re-check a certificate's defining inequalities in exact arithmetic."""
    G = _gamma(net)
    n, m = G.shape
    W = set(cert.species)
    vec = [Fraction(v) for v in cert.vector]
    if any(v < 0 for v in vec) or not any(v != 0 for v in vec):
        return False
    if cert.kind == CONSERVATION:
        if len(vec) != n or any(vec[i] != 0 for i in range(n) if i not in W):
            return False
        return all(sum(vec[i] * int(G[i, r]) for i in range(n)) == 0 for r in range(m))
    if len(vec) != m:
        return False
    cols = cert.reactions if cert.kind == CORE else range(m)
    if cert.kind == CORE and any(vec[r] != 0 for r in range(m) if r not in set(cols)):
        return False
    flux = [sum(int(G[i, r]) * vec[r] for r in cols) for i in range(n)]
    if cert.kind == DRAIN:
        return all(flux[i] < 0 for i in W)
    if cert.kind in (REPLICATE, CORE):
        if not all(flux[i] > 0 for i in W):
            return False
        if cert.strict:
            return all(flux[i] == 0 for i in range(n) if i not in W)
        return True
    return False


def total_siphon(net: ReactionNetwork, siphons: Optional[List[SpeciesSet]] = None) -> SpeciesSet:
    """Union of the minimal critical siphons."""
    if siphons is None:
        return _total_siphon(net)
    return _union_critical(net, siphons)


@lru_cache(maxsize=256)
def _total_siphon(net: ReactionNetwork) -> SpeciesSet:
    return _union_critical(net, minimal_siphons(net))


def _union_critical(net, siphons) -> SpeciesSet:
    out = set()
    for W in siphons:
        if is_critical(net, W)[0]:
            out.update(W)
    return tuple(sorted(out))


def critical_siphons(net: ReactionNetwork, siphons: Optional[List[SpeciesSet]] = None) -> List[SpeciesSet]:
    if siphons is None:
        siphons = minimal_siphons(net)
    return [W for W in siphons if is_critical(net, W)[0]]


def siphon_report(net: ReactionNetwork, W, minimal: Optional[bool] = None) -> SiphonReport:
    W = net.species_set(W)
    if minimal is None:
        minimal = W in minimal_siphons(net)
    certs = []
    crit, c = is_critical(net, W)
    if c is not None:
        certs.append(c)
    drain, c = drainability(net, W)
    if c is not None:
        certs.append(c)
    rep, c_rep = replicability(net, W, "restricted")
    if c_rep is not None:
        certs.append(c_rep)
    strict, c = replicability(net, W, "strict")
    if c is not None:
        certs.append(c)
    auto_cert = autocatalytic_flux(net, W) if strict else None
    if auto_cert is not None:
        certs.append(auto_cert)
    exclusive = c_rep is not None and _exclusive_replicator(net, W, c_rep)
    return SiphonReport(W, minimal, crit, drain, rep, strict, auto_cert is not None, exclusive, tuple(certs))


def siphon_reports(net: ReactionNetwork) -> List[SiphonReport]:
    return [siphon_report(net, W, True) for W in minimal_siphons(net)]


@dataclass(frozen=True)
class CoreSearch:
    cores: Tuple[Tuple[SpeciesSet, Tuple[int, ...], Certificate], ...]
    truncated: bool
    max_core_size: int

    def to_dict(self, net: ReactionNetwork) -> dict:
        return {
            "cores": [
                {"species": net.names(U), "reactions": list(R), "certificate": c.to_dict(net)}
                for U, R, c in self.cores
            ],
            "truncated": self.truncated,
            "max_core_size": self.max_core_size,
        }


def autocatalytic_cores(net: ReactionNetwork, max_core_size: int = 4) -> CoreSearch:
    """Minimal square pairs (U, R_U) whose submatrix admits v >= 0 with A v > 0.

    Candidate reactions for U are those with a positive entry in some row of U;
    a pair is skipped when it contains an already found core.  The search is
    flagged truncated when larger square pairs exist than ``max_core_size``.
    """
    if max_core_size > 12:
        raise ValueError("max_core_size is limited to 12")
    G = _gamma(net)
    n, m = G.shape
    found: List[Tuple[SpeciesSet, Tuple[int, ...], Certificate]] = []
    limit = min(max_core_size, n, m)
    for k in range(1, limit + 1):
        for U in itertools.combinations(range(n), k):
            cand = [r for r in range(m) if any(G[i, r] > 0 for i in U)]
            if len(cand) < k or any(not any(G[i, r] > 0 for r in cand) for i in U):
                continue
            t, _ = _flux_lp(G, U, +1, False, cand)
            if t is None or t <= 0:
                continue
            Uset = set(U)
            for R in itertools.combinations(cand, k):
                if any(not any(G[i, r] > 0 for r in R) for i in U):
                    continue
                Rset = set(R)
                if any(set(U2) <= Uset and set(R2) <= Rset for U2, R2, _ in found):
                    continue
                t, v = _flux_lp(G, U, +1, False, R)
                if t is not None and t > 0:
                    found.append((U, R, Certificate(CORE, v, U, reactions=R)))
    truncated = limit < min(n, m)
    return CoreSearch(tuple(found), truncated, max_core_size)
