"""End-to-end acceptance checks, one test per criterion.

Oracles are independent of the code under test: printed closed forms
substituted directly, brute-force enumeration, or scipy's HiGHS solver.
"""
import itertools
from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import brentq, linprog

from crnkit import fixtures
from crnkit.boundary import find_dfe, invasion_numbers, search_face
from crnkit.dynamics import persistence_diagnostic, scan, simulate
from crnkit.igms import amsd_check, build_igms, cycles
from crnkit.netio import parse_network, stoich
from crnkit.ngm import algorithmic_FV, default_split, jacobian_blocks, ngm_at
from crnkit.numeric import spectral_abscissa
from crnkit.report import boundary_equilibria
from crnkit.siphons import autocatalytic_cores, minimal_siphons, siphon_reports, verify_certificate

criterion = pytest.mark.criterion


def rational_params(net, rng, low=1, high=40, den=10):
    return {p: float(Fraction(int(rng.integers(low, high)), den)) for p in net.parameters}


def rel_close(a, b, rtol):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.all(np.abs(a - b) <= rtol * np.maximum(np.abs(b), 1e-300) + (b == 0) * 1e-300)


def brute_minimal_siphons(net):
    found = []
    for k in range(1, net.n_species + 1):
        for S in itertools.combinations(range(net.n_species), k):
            if any(set(T) <= set(S) for T in found):
                continue
            consumed = [{net.index(s) for s, _ in r.reactants} for r in net.reactions]
            produced = [{net.index(s) for s, _ in r.products} for r in net.reactions]
            if all(not (p & set(S)) or (c & set(S)) for c, p in zip(consumed, produced)):
                found.append(S)
    return sorted(found)


def named(net, sets):
    return {frozenset(net.names(S)) for S in sets}


def without_rates(name, prefixes):
    lines = [ln for ln in fixtures.source(name).splitlines()
             if not any(f"@ {p}*" in ln for p in prefixes)]
    return parse_network("\n".join(lines) + "\n")


# 1 ---------------------------------------------------------------------------

@criterion(1, "SIRS stoichiometric matrix is integer-exact")
def test_criterion_01_sirs_stoichiometry():
    G = stoich(fixtures.load("sirs")).gamma
    assert np.issubdtype(G.dtype, np.integer)
    assert G.tolist() == [[-1, 0, 1, -1], [1, -1, 0, 0], [0, 1, -1, 1]]


# 2 ---------------------------------------------------------------------------

@criterion(2, "minimal siphon lists and brute-force agreement")
def test_criterion_02_minimal_siphons():
    expect = {
        "ex3": [{"I1", "I3"}, {"I2", "I3"}],
        "ex4": [{"I1"}, {"I2"}, {"D", "E"}],
        "gavish": [{"i1", "i21"}, {"i2", "i12"}],
        "gk": [{"I1", "I3"}, {"I2", "I3"}],
        "fivecycles": [{"I1", "I2"}, {"I1", "I12"}, {"I2", "I12"}],
    }
    for name, sets in expect.items():
        net = fixtures.load(name)
        assert named(net, minimal_siphons(net)) == {frozenset(s) for s in sets}, name
    ex4 = fixtures.load("ex4")
    crit = {frozenset(net_names): r.is_critical
            for r in siphon_reports(ex4) for net_names in [ex4.names(r.set)]}
    assert crit == {frozenset({"I1"}): True, frozenset({"I2"}): True, frozenset({"D", "E"}): False}
    zero = without_rates("gk", ["be1", "be2", "ga1", "ga2"])
    assert named(zero, minimal_siphons(zero)) == {frozenset({"I1"}), frozenset({"I2"}), frozenset({"I3"})}
    for name in fixtures.NAMES:
        net = fixtures.load(name)
        assert net.n_species <= 12
        assert sorted(minimal_siphons(net)) == brute_minimal_siphons(net), name


# 3 ---------------------------------------------------------------------------

def ex3_printed(p, y):
    S = y["S"]
    F = np.diag([p["be1"] * S, p["be2"] * S, 0.0])
    V = np.array([[p["mu1"], 0, -p["m1"]], [0, p["mu2"], -p["m2"]], [0, 0, p["mu3"] + p["m1"] + p["m2"]]])
    return F, V, F @ np.linalg.inv(V)


def gavish_printed(p, y):
    s, r1, r2 = y["S"], y["R1"], y["R2"]
    d1, d2 = p["ga1"] + p["mu"], p["ga2"] + p["mu"]
    b1, b2, e1, e2 = p["be1"], p["be2"], p["et1"], p["et2"]
    K = np.array([
        [b1 * s / d1, b1 * e1 * s / d1, 0, 0],
        [b1 * r2 * p["si1"] / d1, b1 * e1 * r2 * p["si1"] / d1, 0, 0],
        [0, 0, b2 * s / d2, b2 * e2 * s / d2],
        [0, 0, b2 * r1 * p["si2"] / d2, b2 * e2 * r1 * p["si2"] / d2],
    ])
    V = np.diag([d1, d1, d2, d2])
    return K @ V, V, K


def gk_printed(p, y):
    s = y["S"]
    F = s * np.array([[p["al1"], 0, p["be1"]], [0, p["al2"], p["be2"]], [0, 0, p["al3"]]])
    V = np.diag([p["mu1"], p["mu2"], p["mu3"]])
    K = np.array([[p["al1"] * s / p["mu1"], 0, p["be1"] * s / p["mu3"]],
                  [0, p["al2"] * s / p["mu2"], p["be2"] * s / p["mu3"]],
                  [0, 0, p["al3"] * s / p["mu3"]]])
    return F, V, K


@criterion(3, "F, V and K match the printed matrices at random rational points")
def test_criterion_03_printed_ngm():
    rng = np.random.default_rng(2024)
    cases = {"ex3": (ex3_printed, ("I1", "I2", "I3")), "gavish": (gavish_printed, ("i1", "i21", "i2", "i12")),
             "gk": (gk_printed, ("I1", "I2", "I3"))}
    for name, (oracle, order) in cases.items():
        net = fixtures.load(name)
        split = default_split(net)
        assert split.x_vars == order
        FV = algorithmic_FV(net, split)
        seen = set()
        while len(seen) < 3:
            p = rational_params(net, rng)
            y = {s: float(Fraction(int(rng.integers(1, 40)), 10)) for s in split.y_vars}
            key = tuple(sorted(p.items())) + tuple(sorted(y.items()))
            if key in seen:
                continue
            seen.add(key)
            point = dict(p, **y, **{x: 0.0 for x in split.x_vars})
            F0, V0, K0 = oracle(p, y)
            F, V = FV.F.evaluate(point), FV.V.evaluate(point)
            K = ngm_at(net, split, point, splitting=FV).K
            for got, want in ((F, F0), (V, V0), (K, K0)):
                np.testing.assert_allclose(got, want, rtol=1e-12, atol=0, err_msg=name)


# 4 ---------------------------------------------------------------------------

@criterion(4, "block triangular K under AMSD; five cycles with block-diagonal K")
def test_criterion_04_block_triangular_ngm():
    rng = np.random.default_rng(7)
    for name in ("threetier", "gavish"):
        net = fixtures.load(name)
        verdict = amsd_check(net)
        assert verdict.holds, name
        split = default_split(net)
        for _ in range(5):
            p = rational_params(net, rng)
            point = dict(p, **find_dfe(net, p).as_dict_of_values(net))
            res = ngm_at(net, split, point)
            owner = {k: b for b, blk in enumerate(res.blocks) for k in blk}
            n = res.K.shape[0]
            supra = [abs(res.K[i, j]) for i in range(n) for j in range(n) if owner[i] < owner[j]]
            assert max(supra, default=0.0) < 1e-12, name
            assert res.is_block_lower_triangular
            assert res.R0 == pytest.approx(max(res.rho_per_block), rel=1e-9)
    net = fixtures.load("fivecycles")
    cyc = cycles(build_igms(net))
    assert len(cyc) == 5 and sorted(len(c) for c in cyc) == [2, 2, 2, 3, 3]
    split = default_split(net)
    for _ in range(5):
        p = rational_params(net, rng)
        point = dict(p, **find_dfe(net, p).as_dict_of_values(net))
        K = ngm_at(net, split, point).K
        assert np.max(np.abs(K - np.diag(np.diag(K)))) < 1e-12


# 5 ---------------------------------------------------------------------------

def si2v_closed_forms(p):
    s0 = p["Lambda"] / (p["mu"] + p["rho"])
    s1 = p["mu1"] / p["be1"]
    R1, R2 = p["be1"] / p["mu1"], p["be2"] / p["mu2"]
    d = R1 - R2
    e0 = [s0, 0.0, 0.0, p["rho"] * s0 / p["muv"]]
    e1 = [s1, (p["mu"] + p["rho"]) * (s0 - s1) / (p["be1"] * s1), 0.0, p["rho"] * s1 / p["muv"]]
    es = [s1,
          p["Lambda"] / p["mu1"] + (p["be2"] * p["muv"] / p["bev"] - p["mu"]) / p["be1"] - p["rho"] / (p["mu1"] * d),
          p["rho"] / (p["mu2"] * d) - p["muv"] / p["bev"],
          p["mu1"] * p["mu2"] * d / (p["be1"] * p["bev"])]
    return e0, e1, es


def gk_antisym_points(p):
    s0 = p["b"] / p["mu0"]
    R = {k: p[f"al{k}"] / p[f"mu{k}"] for k in (1, 2, 3)}
    pts = [[s0, 0, 0, 0]]
    for k in (1, 2, 3):
        s = 1 / R[k]
        x = [s, 0, 0, 0]
        x[k] = p["mu0"] * (s0 - s) / p[f"mu{k}"]
        pts.append(x)
    for k in (1, 2):
        eta = p[f"et{k}"]
        s = s0 * p["mu0"] * eta / (p[f"mu{k}"] * p["mu3"] * (R[k] - R[3]) + eta * p["mu0"])
        x = [s, 0, 0, 0]
        x[k] = p["mu3"] * (1 - R[3] * s) / eta
        x[3] = p[f"mu{k}"] * (R[k] * s - 1) / eta
        pts.append(x)
    return [x for x in pts if min(x) >= 0]


def match_point(found, want, rtol):
    return any(rel_close(f, want, rtol) for f in found)


@criterion(5, "Newton boundary equilibria match the closed forms")
def test_criterion_05_boundary_closed_forms():
    rng = np.random.default_rng(11)
    net = fixtures.load("si2v")
    draws = 0
    while draws < 5:
        p = {k: float(rng.uniform(0.2, 3.0)) for k in net.parameters}
        e0, e1, es = si2v_closed_forms(p)
        if min(e1) < 0 or min(es[:4]) <= 1e-3 or min(v for v in es if v) <= 1e-3:
            continue
        draws += 1
        dfe = find_dfe(net, p)
        assert rel_close(dfe.values, e0, 1e-8) and dfe.residual < 1e-9
        single = [e for e in search_face(net, p, ["I2"]).equilibria if e.value(net, "I1") > 0]
        assert len(single) == 1 and rel_close(single[0].values, e1, 1e-8) and single[0].residual < 1e-9
        inner = [e for e in search_face(net, p, []).equilibria if min(e.values) > 0]
        assert len(inner) == 1 and rel_close(inner[0].values, es, 1e-8) and inner[0].residual < 1e-9

    net = fixtures.load("gavish")
    draws = 0
    while draws < 5:
        p = {k: float(rng.uniform(0.1, 2.0)) for k in net.parameters}
        s0 = p["Lambda"] / p["mu"]
        s1 = (p["ga1"] + p["mu"]) / p["be1"]
        if s0 <= s1 * 1.01:
            continue
        draws += 1
        gt = p["ga1"] / (p["ga1"] + p["th1"] + p["mu"])
        want = dict.fromkeys(net.species, 0.0)
        want.update(S=s1, i1=(1 - gt) * (s0 - s1), R1=gt * (s0 - s1))
        eqs = [e for e in search_face(net, p, ["i2", "i12", "i21", "R2", "R12"]).equilibria
               if e.value(net, "i1") > 0]
        assert len(eqs) == 1 and eqs[0].residual < 1e-9
        assert rel_close(eqs[0].values, [want[s] for s in net.species], 1e-8)

    net = fixtures.load("gk-antisym")
    draws = 0
    while draws < 5:
        p = {k: float(rng.uniform(0.3, 3.0)) for k in net.parameters}
        want = gk_antisym_points(p)
        positives = [v for x in want for v in x if v > 0]
        if len(want) != 6 or min(positives) < 1e-3:
            continue
        draws += 1
        found = boundary_equilibria(net, p)
        assert len(found) == 6
        assert all(e.residual < 1e-9 for e in found)
        assert all(match_point([e.values for e in found], x, 1e-8) for x in want)


# 6 ---------------------------------------------------------------------------

@criterion(6, "invasion numbers match closed forms and reduce to R at the DFE")
def test_criterion_06_invasion_numbers():
    rng = np.random.default_rng(5)
    net = fixtures.load("si2v")
    for _ in range(5):
        p = {k: float(rng.uniform(0.2, 3.0)) for k in net.parameters}
        p["be1"] = max(p["be1"], 2.5 * p["mu1"] * (p["mu"] + p["rho"]) / p["Lambda"])
        _, e1, _ = si2v_closed_forms(p)
        eq = [e for e in search_face(net, p, ["I2"]).equilibria if e.value(net, "I1") > 0][0]
        got = invasion_numbers(net, p, eq)[1]
        want = (p["be2"] * e1[0] + p["bev"] * e1[3]) / p["mu2"]
        assert got == pytest.approx(want, rel=1e-9)
        dfe = find_dfe(net, p)
        nums = invasion_numbers(net, p, dfe)
        s0, v0 = dfe.value(net, "S"), dfe.value(net, "V")
        assert nums[0] == pytest.approx(p["be1"] * s0 / p["mu1"], rel=1e-9)
        assert nums[1] == pytest.approx((p["be2"] * s0 + p["bev"] * v0) / p["mu2"], rel=1e-9)
    net = fixtures.load("gavish")
    done = 0
    while done < 5:
        p = {k: float(rng.uniform(0.1, 2.0)) for k in net.parameters}
        s0 = p["Lambda"] / p["mu"]
        s1 = (p["ga1"] + p["mu"]) / p["be1"]
        if s0 <= 1.01 * s1:
            continue
        done += 1
        gt = p["ga1"] / (p["ga1"] + p["th1"] + p["mu"])
        r1 = gt * (s0 - s1)
        R2 = p["be2"] / (p["ga2"] + p["mu"])
        eq = [e for e in search_face(net, p, ["i2", "i12", "i21", "R2", "R12"]).equilibria
              if e.value(net, "i1") > 0][0]
        got = invasion_numbers(net, p, eq)[1]
        assert got == pytest.approx(R2 * (p["si2"] * p["et2"] * r1 + s1), rel=1e-9)
        dfe = find_dfe(net, p)
        nums = invasion_numbers(net, p, dfe)
        res = ngm_at(net, default_split(net), dict(p, **dfe.as_dict_of_values(net)))
        assert [nums[0], nums[1]] == pytest.approx(list(res.rho_per_block), rel=1e-9)
        assert nums[1] == pytest.approx(R2 * s0, rel=1e-9)


# 7 ---------------------------------------------------------------------------

NGM_FIXTURES = ["ex3", "ex3-ode", "si2v", "gavish", "gk", "gk-antisym", "fivecycles", "threetier",
                "sdas-ex9", "sdas-ex10", "sdas-ex11", "sdas-ex12"]


@criterion(7, "sign(rho(K) - 1) equals sign of the spectral abscissa of Jx")
def test_criterion_07_threshold_property():
    rng = np.random.default_rng(99)
    for name in NGM_FIXTURES:
        net = fixtures.load(name)
        split = default_split(net)
        FV = algorithmic_FV(net, split)
        Jx = jacobian_blocks(net, split).Jx
        used = violations = 0
        while used < 100:
            p = {k: float(np.exp(rng.uniform(np.log(0.1), np.log(10.0)))) for k in net.parameters}
            point = dict(p, **find_dfe(net, p).as_dict_of_values(net))
            R0 = ngm_at(net, split, point, splitting=FV).R0
            if abs(R0 - 1) < 1e-6:
                continue
            used += 1
            a = spectral_abscissa(np.linalg.eigvals(Jx.evaluate(point)))
            violations += int(np.sign(R0 - 1) != np.sign(a))
        assert violations == 0, name


# 8 ---------------------------------------------------------------------------

@criterion(8, "May-Leonard persistence verdicts")
def test_criterion_08_may_leonard():
    net = fixtures.load("mayleonard")
    x0 = [0.3, 0.2, 0.1]
    grid = np.linspace(0.0, 2000.0, 20001)
    sym = simulate(net, {"a1": 0.5, "be": 0.5}, x0, 2000.0, t_eval=grid)
    sym_res = persistence_diagnostic(sym)
    assert sym_res.verdict == "persistent-like"
    assert np.max(np.abs(sym.states[-1] - 0.5)) < 1e-6
    het = simulate(net, {"a1": 0.8, "be": 1.2}, x0, 2000.0, t_eval=grid)
    het_res = persistence_diagnostic(het)
    assert het_res.verdict == "nonpersistent-like", (
        f"a1=0.8, be=1.2 gives {het_res.verdict}: slope {het_res.tail_slope!r}, "
        f"final min {het_res.final_min!r}")


# 9 ---------------------------------------------------------------------------

def si2v_regions(p):
    """Region label from the closed-form reproduction and invasion numbers."""
    L, mu, rho, muv = p["Lambda"], p["mu"], p["rho"], p["muv"]
    b1, b2, bv, m1, m2 = p["be1"], p["be2"], p["bev"], p["mu1"], p["mu2"]
    s0, v0 = L / (mu + rho), rho * L / ((mu + rho) * muv)
    R1, R2 = b1 * s0 / m1, (b2 * s0 + bv * v0) / m2
    t21 = t12 = None
    if R1 > 1:
        s1 = m1 / b1
        t21 = (b2 * s1 + bv * rho * s1 / muv) / m2
    if R2 > 1:
        def g(i):
            s = L / (mu + rho + b2 * i)
            return b2 * s + bv * rho * s / (muv + bv * i) - m2

        i2 = brentq(g, 0.0, 1e6, xtol=1e-15, rtol=1e-14)
        t12 = b1 * L / (mu + rho + b2 * i2) / m1
    quantities = [q for q in (R1, R2, t21, t12) if q is not None]
    labels = []
    if R1 < 1 and R2 < 1:
        labels.append("DFE stable")
    if R1 > 1 and t21 < 1:
        labels.append("E1 stable")
    if R2 > 1 and t12 < 1:
        labels.append("E2 stable")
    if R1 > 1 and R2 > 1 and t21 > 1 and t12 > 1:
        labels.append("E* stable")
    return " + ".join(labels) or "unclassified", min(abs(q - 1) for q in quantities)


@criterion(9, "SI2V scan agrees with the closed-form regions")
def test_criterion_09_scan_consistency():
    net, base = fixtures.load("si2v"), fixtures.params("si2v")
    grid = np.linspace(0.1, 5.0, 20)
    res = scan(net, base, ("be1", grid), ("be2", grid))
    checked = mismatched = 0
    for i, a in enumerate(grid):
        for j, b in enumerate(grid):
            label, margin = si2v_regions(dict(base, be1=a, be2=b))
            if margin < 1e-3:
                continue
            checked += 1
            mismatched += int(res.cells[i][j] != label)
    assert checked > 300
    assert mismatched == 0


# 10 --------------------------------------------------------------------------

def exact_check(G, cert):
    """Independent exact re-check of a certificate's defining inequalities."""
    v = [Fraction(x) for x in cert.vector]
    assert all(x >= 0 for x in v) and any(v)
    W = set(cert.species)
    if cert.kind == "conservation":
        return all(v[i] == 0 for i in range(len(v)) if i not in W) and \
            all(sum(v[i] * int(G[i, r]) for i in range(G.shape[0])) == 0 for r in range(G.shape[1]))
    flux = [sum(int(G[i, r]) * v[r] for r in range(G.shape[1])) for i in range(G.shape[0])]
    if cert.kind == "drain-flux":
        return all(flux[i] < 0 for i in W)
    ok = all(flux[i] > 0 for i in W)
    if cert.strict:
        ok = ok and all(flux[i] == 0 for i in range(G.shape[0]) if i not in W)
    return ok


def highs_flux_positive(G, W, sign, strict):
    n, m = G.shape
    A_ub = [[-sign * G[i, r] for r in range(m)] + [1] for i in W]
    A_eq = [[1] * m + [0]]
    b_eq = [1]
    if strict:
        A_eq += [[G[i, r] for r in range(m)] + [0] for i in range(n) if i not in W]
        b_eq += [0] * (len(A_eq) - 1)
    res = linprog([0] * m + [-1], A_ub=A_ub, b_ub=[0] * len(W), A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0, None)] * m + [(None, 1)], method="highs")
    return res.status == 0 and -res.fun > 1e-9


def highs_conservation(G, W):
    n, m = G.shape
    A_eq = [[1] * len(W)] + [[G[i, r] for i in W] for r in range(m)]
    res = linprog([0] * len(W), A_eq=A_eq, b_eq=[1] + [0] * m, bounds=[(0, None)] * len(W), method="highs")
    return res.status == 0


@criterion(10, "certificates re-verify exactly; drainable or self-replicable dichotomy")
def test_criterion_10_certificates():
    for name in fixtures.NAMES:
        net = fixtures.load(name)
        G = stoich(net).gamma
        for rep in siphon_reports(net):
            kinds = {(c.kind, c.strict) for c in rep.certificates}
            for c in rep.certificates:
                assert verify_certificate(net, c) and exact_check(G, c), (name, c)
            W = rep.set
            assert (not rep.is_critical) == (("conservation", False) in kinds) == highs_conservation(G, W)
            assert rep.is_drainable == (("drain-flux", False) in kinds) == highs_flux_positive(G, W, -1, False)
            assert rep.is_self_replicable_restricted == (("replicate-flux", False) in kinds) \
                == highs_flux_positive(G, W, +1, False)
            assert rep.is_self_replicable_strict == (("replicate-flux", True) in kinds) \
                == highs_flux_positive(G, W, +1, True)
            if rep.is_critical:
                assert rep.is_drainable or rep.is_self_replicable_restricted, (name, W)


# 11 --------------------------------------------------------------------------

@criterion(11, "autocatalytic core verdicts on the SDAS examples")
def test_criterion_11_sdas_cores():
    def infected_cores(name, allowed):
        net = fixtures.load(name)
        search = autocatalytic_cores(net, 4)
        assert not search.truncated
        idx = set(net.species_set(allowed))
        return net, [U for U, _, _ in search.cores if set(U) <= idx]

    net, cores = infected_cores("sdas-ex9", ["I1", "I2"])
    assert cores == []
    # no v >= 0 grows both I1 and I2
    G = stoich(net).gamma
    assert not highs_flux_positive(G, net.species_set(["I1", "I2"]), +1, False)

    net, cores = infected_cores("sdas-ex10", ["I1", "I2"])
    assert len(cores) >= 1

    net, cores = infected_cores("sdas-ex11", ["I1", "I2", "I3"])
    assert sorted(net.names(U) for U in cores) == [["I1"], ["I2"], ["I3"]]
