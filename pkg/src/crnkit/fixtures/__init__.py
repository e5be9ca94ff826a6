"""Bundled example networks and default parameter values."""
from __future__ import annotations

from importlib import resources
from typing import Dict, List

from ..netio import ReactionNetwork, parse_network

_SI2V = dict(Lambda=1, mu=1, mu1=1, mu2=1, muv=1, rho=0.5, be1=3, be2=2, bev=1)

DEFAULT_PARAMS: Dict[str, Dict[str, float]] = {
    "sirs": dict(be=2, gi=1, gr=0.5, gs=0.1),
    "ex3": dict(Lambda=4, mu=1, mu1=1, mu2=1.5, mu3=1, be1=1, be2=1, de=0.5, m1=0.5, m2=0.5),
    "ex3-ode": dict(Lambda=2, mus=1, mu1=1, mu2=1.5, mu3=1, be1=1, be2=1, be3=0.5, de=0.5, m1=0.5, m2=0.5),
    "ex4": dict(Lambda=1, mu=1, be1=2, be2=1.5, k1=1, k2=2),
    "si2v": _SI2V,
    "gavish": dict(Lambda=1, mu=0.1, be1=0.3, be2=0.25, si1=0.8, si2=0.8, et1=1.2, et2=1.2,
                   ga1=1, ga2=1, th1=0.5, th2=0.5, th12=0.5),
    "gk": dict(b=2, mu0=1, mu1=1, mu2=1, mu3=1, al1=1.5, al2=1.2, al3=0.4,
               be1=0.2, be2=0.2, ga1=0.3, ga2=0.3, et1=1, et2=1),
    "gk-antisym": dict(b=2.5, mu0=1, mu1=1, mu2=1, mu3=1, al1=1.5, al2=1.2, al3=0.5, et1=2, et2=1),
    "fivecycles": dict(la=2, mu=1, be1=1, be2=0.8, de=0.5, et1=0.3, et2=0.3, mu1=1, mu2=1, mu12=1),
    "threetier": dict(la=4, mu=1, be1=1, be2=1, be3=1, mu1=1, mu2=1, mu3=1),
    "mayleonard": dict(a1=0.5, be=0.5),
    "sdas-ex9": dict(la=2, mu=1, be=1, ro=1, mu1=1, mu2=1),
    "sdas-ex10": dict(la=2, mu=1, be=1, ro12=1, ro21=0.5, mu1=1, mu2=1),
    "sdas-ex11": dict(la=2, mu=1, be1=1, be2=1, be3=1, mu1=1, mu2=1, mu3=1),
    "sdas-ex12": dict(la=2, mu=1, be1=1, be2=1, si=1, mu1=1, mu2=1, mu3=1),
}

NAMES: List[str] = list(DEFAULT_PARAMS)


def source(name: str) -> str:
    if name not in DEFAULT_PARAMS:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(NAMES)}")
    return resources.files(__name__).joinpath(f"{name}.crn").read_text(encoding="utf-8")


def load(name: str) -> ReactionNetwork:
    return parse_network(source(name))


def params(name: str) -> Dict[str, float]:
    source(name)
    return dict(DEFAULT_PARAMS[name])
