#!/usr/bin/env python3
"""Independent AC-OPF reference solver used to freeze expected objectives.

Solves the same polar-coordinate formulation with scipy's trust-constr
(an SQP-type method, a different algorithm family from the C++ solver) and
prints per-case optimal objectives and solution bundles.
"""
import json
import sys

import numpy as np
from scipy import sparse
from scipy.optimize import NonlinearConstraint, minimize


def load_case(path):
    with open(path) as f:
        return json.load(f)


def build(case):
    base = case["base_mva"]
    buses = case["buses"]
    gens = [g for g in case["gens"] if g["status"]]
    nb, ng = len(buses), len(gens)
    idx = {b["id"]: i for i, b in enumerate(buses)}
    Y = np.zeros((nb, nb), dtype=complex)
    rated = []
    for br in case["branches"]:
        if not br["status"]:
            continue
        f, t = idx[br["from"]], idx[br["to"]]
        ys = 1.0 / complex(br["r"], br["x"])
        bc = 1j * br["b"] / 2.0
        tau = br["tap"] if br["tap"] != 0 else 1.0
        sh = np.exp(1j * np.deg2rad(br["shift"]))
        ytt = ys + bc
        yff = ytt / tau**2
        yft = -ys / (tau * np.conj(sh))
        ytf = -ys / (tau * sh)
        Y[f, f] += yff
        Y[f, t] += yft
        Y[t, f] += ytf
        Y[t, t] += ytt
        if br["rate_a"] > 0:
            rated.append((f, t, yff, yft, ytf, ytt, br["rate_a"] / base))
    for i, b in enumerate(buses):
        Y[i, i] += complex(b["gs"], b["bs"]) / base
    pd = np.array([b["pd"] for b in buses]) / base
    qd = np.array([b["qd"] for b in buses]) / base
    Cg = np.zeros((nb, ng))
    for g, gen in enumerate(gens):
        Cg[idx[gen["bus"]], g] = 1.0
    ref = next(i for i, b in enumerate(buses) if b["kind"] == "ref")
    return base, buses, gens, nb, ng, Y, pd, qd, Cg, ref, rated


def solve(case):
    base, buses, gens, nb, ng, Y, pd, qd, Cg, ref, rated = build(case)
    nx = 2 * nb + 2 * ng

    def split(x):
        return x[:nb], x[nb:2 * nb], x[2 * nb:2 * nb + ng], x[2 * nb + ng:]

    def cost(x):
        _, _, pg, _ = split(x)
        f = 0.0
        for g, gen in enumerate(gens):
            f += np.polyval(gen["cost"], pg[g] * base)
        return f

    def cost_grad(x):
        _, _, pg, _ = split(x)
        gr = np.zeros(nx)
        for g, gen in enumerate(gens):
            gr[2 * nb + g] = np.polyval(np.polyder(gen["cost"]), pg[g] * base) * base
        return gr

    def sbus(x):
        va, vm, _, _ = split(x)
        V = vm * np.exp(1j * va)
        return V * np.conj(Y @ V)

    def g_eq(x):
        va, vm, pg, qg = split(x)
        S = sbus(x)
        return np.concatenate([
            S.real + pd - Cg @ pg,
            S.imag + qd - Cg @ qg,
            [va[ref] - np.deg2rad(buses[ref]["va0"])],
        ])

    def g_jac(x):
        va, vm, pg, qg = split(x)
        V = vm * np.exp(1j * va)
        Ib = Y @ V
        dV = np.diag(V)
        dI = np.diag(Ib)
        E = np.diag(np.exp(1j * va))
        dS_dva = 1j * dV @ np.conj(dI - Y @ dV)
        dS_dvm = dV @ np.conj(Y @ E) + np.conj(dI) @ E
        J = np.zeros((2 * nb + 1, nx))
        J[:nb, :nb] = dS_dva.real
        J[:nb, nb:2 * nb] = dS_dvm.real
        J[:nb, 2 * nb:2 * nb + ng] = -Cg
        J[nb:2 * nb, :nb] = dS_dva.imag
        J[nb:2 * nb, nb:2 * nb] = dS_dvm.imag
        J[nb:2 * nb, 2 * nb + ng:] = -Cg
        J[2 * nb, ref] = 1.0
        return J

    def h_flow(x):
        va, vm, _, _ = split(x)
        V = vm * np.exp(1j * va)
        out = []
        for f, t, yff, yft, ytf, ytt, rate in rated:
            Sf = V[f] * np.conj(yff * V[f] + yft * V[t])
            St = V[t] * np.conj(ytf * V[f] + ytt * V[t])
            out.append(abs(Sf) ** 2 - rate**2)
            out.append(abs(St) ** 2 - rate**2)
        return np.array(out)

    lb = np.full(nx, -np.inf)
    ub = np.full(nx, np.inf)
    x0 = np.zeros(nx)
    for i, b in enumerate(buses):
        lb[nb + i], ub[nb + i] = b["vm_min"], b["vm_max"]
        x0[i] = np.deg2rad(buses[ref]["va0"])
        x0[nb + i] = 0.5 * (b["vm_min"] + b["vm_max"])
    for g, gen in enumerate(gens):
        lb[2 * nb + g], ub[2 * nb + g] = gen["pmin"] / base, gen["pmax"] / base
        lb[2 * nb + ng + g], ub[2 * nb + ng + g] = gen["qmin"] / base, gen["qmax"] / base
        x0[2 * nb + g] = 0.5 * (lb[2 * nb + g] + ub[2 * nb + g])
        x0[2 * nb + ng + g] = 0.5 * (lb[2 * nb + ng + g] + ub[2 * nb + ng + g])

    cons = [NonlinearConstraint(g_eq, 0, 0, jac=g_jac)]
    if rated:
        cons.append(NonlinearConstraint(h_flow, -np.inf, 0, jac="2-point"))
    res = minimize(cost, x0, jac=cost_grad, bounds=list(zip(lb, ub)),
                   constraints=cons, method="trust-constr",
                   options={"maxiter": 3000, "gtol": 1e-10, "xtol": 1e-12})
    feas = np.max(np.abs(g_eq(res.x)))
    return res, feas


if __name__ == "__main__":
    for path in sys.argv[1:]:
        res, feas = solve(load_case(path))
        print(f"{path}: objective={res.fun:.6f} feas={feas:.3e} "
              f"status={res.status} iters={res.niter}")
