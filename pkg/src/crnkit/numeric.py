"""Float evaluation of a network's right-hand side and Jacobian."""
from __future__ import annotations

from functools import lru_cache
from typing import List, Mapping, Tuple

import numpy as np

from .netio import ReactionNetwork, build_rhs
from .polynomial import CompiledPolys, Polynomial


@lru_cache(maxsize=128)
def symbolic_rhs(net: ReactionNetwork) -> Tuple[Polynomial, ...]:
    return tuple(build_rhs(net))


@lru_cache(maxsize=128)
def symbolic_jacobian(net: ReactionNetwork) -> Tuple[Tuple[Polynomial, ...], ...]:
    rhs = symbolic_rhs(net)
    return tuple(tuple(p.diff(s) for s in net.species) for p in rhs)


def check_params(net: ReactionNetwork, params: Mapping[str, float]) -> dict:
    missing = [p for p in net.parameters if p not in params]
    if missing:
        raise KeyError(f"missing parameter values: {', '.join(missing)}")
    return {p: params[p] for p in net.parameters}


def spectral_abscissa(eigs) -> float:
    eigs = np.asarray(eigs)
    return float(np.max(eigs.real)) if eigs.size else float("-inf")


def spectral_radius(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


class NumericModel:
    """Compiled RHS and Jacobian for fixed parameter values.

    Both accept a batch ``(..., n)`` of states.
    """

    def __init__(self, net: ReactionNetwork, params: Mapping[str, float]):
        self.net = net
        self.params = check_params(net, params)
        n = net.n_species
        self.n = n
        self._f = CompiledPolys(symbolic_rhs(net), net.species, self.params)
        flat: List[Polynomial] = [p for row in symbolic_jacobian(net) for p in row]
        self._j = CompiledPolys(flat, net.species, self.params)

    def rhs(self, x: np.ndarray) -> np.ndarray:
        return self._f(x)

    def jac(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self._j(x).reshape(x.shape[:-1] + (self.n, self.n))

    def point(self, x) -> dict:
        d = dict(self.params)
        d.update(zip(self.net.species, map(float, x)))
        return d
