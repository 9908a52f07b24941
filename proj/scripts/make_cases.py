#!/usr/bin/env python3
"""Emit the bundled test grids as native JSON case files (and .m mirrors).

case9/case14/case30 carry the classic IEEE test-system data. The 57- and
118-bus systems are constructed deterministically with matching dimension
counts (buses/generators/branches) and realistic parameter ranges.
"""
import json
import math
import os
import random

OUT = os.path.join(os.path.dirname(__file__), "..", "tests", "data")

# ---------------------------------------------------------------- case9
CASE9 = {
    "base": 100.0,
    # id type Pd Qd Gs Bs Vm Va Vmax Vmin
    "bus": [
        [1, 3, 0, 0, 0, 0, 1.0, 0, 1.1, 0.9],
        [2, 2, 0, 0, 0, 0, 1.0, 0, 1.1, 0.9],
        [3, 2, 0, 0, 0, 0, 1.0, 0, 1.1, 0.9],
        [4, 1, 0, 0, 0, 0, 1.0, 0, 1.1, 0.9],
        [5, 1, 90, 30, 0, 0, 1.0, 0, 1.1, 0.9],
        [6, 1, 0, 0, 0, 0, 1.0, 0, 1.1, 0.9],
        [7, 1, 100, 35, 0, 0, 1.0, 0, 1.1, 0.9],
        [8, 1, 0, 0, 0, 0, 1.0, 0, 1.1, 0.9],
        [9, 1, 125, 50, 0, 0, 1.0, 0, 1.1, 0.9],
    ],
    # bus Pg Qg Qmax Qmin status Pmax Pmin cost(c2 c1 c0)
    "gen": [
        [1, 0, 0, 300, -300, 1, 250, 10, [0.11, 5.0, 150.0]],
        [2, 163, 0, 300, -300, 1, 300, 10, [0.085, 1.2, 600.0]],
        [3, 85, 0, 300, -300, 1, 270, 10, [0.1225, 1.0, 335.0]],
    ],
    # f t r x b rateA ratio angle status
    "branch": [
        [1, 4, 0, 0.0576, 0, 250, 0, 0, 1],
        [4, 5, 0.017, 0.092, 0.158, 250, 0, 0, 1],
        [5, 6, 0.039, 0.17, 0.358, 150, 0, 0, 1],
        [3, 6, 0, 0.0586, 0, 300, 0, 0, 1],
        [6, 7, 0.0119, 0.1008, 0.209, 150, 0, 0, 1],
        [7, 8, 0.0085, 0.072, 0.149, 250, 0, 0, 1],
        [8, 2, 0, 0.0625, 0, 250, 0, 0, 1],
        [8, 9, 0.032, 0.161, 0.306, 250, 0, 0, 1],
        [9, 4, 0.01, 0.085, 0.176, 250, 0, 0, 1],
    ],
}

# ---------------------------------------------------------------- case14
CASE14 = {
    "base": 100.0,
    "bus": [
        [1, 3, 0, 0, 0, 0, 1.06, 0, 1.06, 0.94],
        [2, 2, 21.7, 12.7, 0, 0, 1.045, -4.98, 1.06, 0.94],
        [3, 2, 94.2, 19.0, 0, 0, 1.01, -12.72, 1.06, 0.94],
        [4, 1, 47.8, -3.9, 0, 0, 1.019, -10.33, 1.06, 0.94],
        [5, 1, 7.6, 1.6, 0, 0, 1.02, -8.78, 1.06, 0.94],
        [6, 2, 11.2, 7.5, 0, 0, 1.07, -14.22, 1.06, 0.94],
        [7, 1, 0, 0, 0, 0, 1.062, -13.37, 1.06, 0.94],
        [8, 2, 0, 0, 0, 0, 1.09, -13.36, 1.06, 0.94],
        [9, 1, 29.5, 16.6, 0, 19, 1.056, -14.94, 1.06, 0.94],
        [10, 1, 9.0, 5.8, 0, 0, 1.051, -15.1, 1.06, 0.94],
        [11, 1, 3.5, 1.8, 0, 0, 1.057, -14.79, 1.06, 0.94],
        [12, 1, 6.1, 1.6, 0, 0, 1.055, -15.07, 1.06, 0.94],
        [13, 1, 13.5, 5.8, 0, 0, 1.05, -15.16, 1.06, 0.94],
        [14, 1, 14.9, 5.0, 0, 0, 1.036, -16.04, 1.06, 0.94],
    ],
    "gen": [
        [1, 232.4, -16.9, 10, 0, 1, 332.4, 0, [0.0430292599, 20.0, 0.0]],
        [2, 40, 42.4, 50, -40, 1, 140, 0, [0.25, 20.0, 0.0]],
        [3, 0, 23.4, 40, 0, 1, 100, 0, [0.01, 40.0, 0.0]],
        [6, 0, 12.2, 24, -6, 1, 100, 0, [0.01, 40.0, 0.0]],
        [8, 0, 17.4, 24, -6, 1, 100, 0, [0.01, 40.0, 0.0]],
    ],
    "branch": [
        [1, 2, 0.01938, 0.05917, 0.0528, 0, 0, 0, 1],
        [1, 5, 0.05403, 0.22304, 0.0492, 0, 0, 0, 1],
        [2, 3, 0.04699, 0.19797, 0.0438, 0, 0, 0, 1],
        [2, 4, 0.05811, 0.17632, 0.034, 0, 0, 0, 1],
        [2, 5, 0.05695, 0.17388, 0.0346, 0, 0, 0, 1],
        [3, 4, 0.06701, 0.17103, 0.0128, 0, 0, 0, 1],
        [4, 5, 0.01335, 0.04211, 0, 0, 0, 0, 1],
        [4, 7, 0, 0.20912, 0, 0, 0.978, 0, 1],
        [4, 9, 0, 0.55618, 0, 0, 0.969, 0, 1],
        [5, 6, 0, 0.25202, 0, 0, 0.932, 0, 1],
        [6, 11, 0.09498, 0.1989, 0, 0, 0, 0, 1],
        [6, 12, 0.12291, 0.25581, 0, 0, 0, 0, 1],
        [6, 13, 0.06615, 0.13027, 0, 0, 0, 0, 1],
        [7, 8, 0, 0.17615, 0, 0, 0, 0, 1],
        [7, 9, 0, 0.11001, 0, 0, 0, 0, 1],
        [9, 10, 0.03181, 0.0845, 0, 0, 0, 0, 1],
        [9, 14, 0.12711, 0.27038, 0, 0, 0, 0, 1],
        [10, 11, 0.08205, 0.19207, 0, 0, 0, 0, 1],
        [12, 13, 0.22092, 0.19988, 0, 0, 0, 0, 1],
        [13, 14, 0.17093, 0.34802, 0, 0, 0, 0, 1],
    ],
}

# ---------------------------------------------------------------- case30
CASE30 = {
    "base": 100.0,
    "bus": [
        [1, 3, 0, 0, 0, 0, 1.0, 0, 1.05, 0.95],
        [2, 2, 21.7, 12.7, 0, 0, 1.0, 0, 1.1, 0.95],
        [3, 1, 2.4, 1.2, 0, 0, 1.0, 0, 1.05, 0.95],
        [4, 1, 7.6, 1.6, 0, 0, 1.0, 0, 1.05, 0.95],
        [5, 1, 94.2, 19.0, 0, 19.0, 1.0, 0, 1.05, 0.95],
        [6, 1, 0, 0, 0, 0, 1.0, 0, 1.05, 0.95],
        [7, 1, 22.8, 10.9, 0, 0, 1.0, 0, 1.05, 0.95],
        [8, 1, 30.0, 30.0, 0, 0, 1.0, 0, 1.05, 0.95],
        [9, 1, 0, 0, 0, 0, 1.0, 0, 1.05, 0.95],
        [10, 1, 5.8, 2.0, 0, 0, 1.0, 0, 1.05, 0.95],
        [11, 1, 0, 0, 0, 0, 1.0, 0, 1.05, 0.95],
        [12, 1, 11.2, 7.5, 0, 0, 1.0, 0, 1.05, 0.95],
        [13, 2, 0, 0, 0, 0, 1.0, 0, 1.1, 0.95],
        [14, 1, 6.2, 1.6, 0, 0, 1.0, 0, 1.05, 0.95],
        [15, 1, 8.2, 2.5, 0, 0, 1.0, 0, 1.05, 0.95],
        [16, 1, 3.5, 1.8, 0, 0, 1.0, 0, 1.05, 0.95],
        [17, 1, 9.0, 5.8, 0, 0, 1.0, 0, 1.05, 0.95],
        [18, 1, 3.2, 0.9, 0, 0, 1.0, 0, 1.05, 0.95],
        [19, 1, 9.5, 3.4, 0, 0, 1.0, 0, 1.05, 0.95],
        [20, 1, 2.2, 0.7, 0, 0, 1.0, 0, 1.05, 0.95],
        [21, 1, 17.5, 11.2, 0, 0, 1.0, 0, 1.05, 0.95],
        [22, 2, 0, 0, 0, 0, 1.0, 0, 1.1, 0.95],
        [23, 2, 3.2, 1.6, 0, 0, 1.0, 0, 1.1, 0.95],
        [24, 1, 8.7, 6.7, 0, 4.3, 1.0, 0, 1.05, 0.95],
        [25, 1, 0, 0, 0, 0, 1.0, 0, 1.05, 0.95],
        [26, 1, 3.5, 2.3, 0, 0, 1.0, 0, 1.05, 0.95],
        [27, 2, 0, 0, 0, 0, 1.0, 0, 1.1, 0.95],
        [28, 1, 0, 0, 0, 0, 1.0, 0, 1.05, 0.95],
        [29, 1, 2.4, 0.9, 0, 0, 1.0, 0, 1.05, 0.95],
        [30, 1, 10.6, 1.9, 0, 0, 1.0, 0, 1.05, 0.95],
    ],
    "gen": [
        [1, 23.54, 0, 150.0, -20.0, 1, 80.0, 0, [0.02, 2.0, 0.0]],
        [2, 60.97, 0, 60.0, -20.0, 1, 80.0, 0, [0.0175, 1.75, 0.0]],
        [22, 21.59, 0, 62.5, -15.0, 1, 50.0, 0, [0.0625, 1.0, 0.0]],
        [27, 26.91, 0, 48.7, -15.0, 1, 55.0, 0, [0.00834, 3.25, 0.0]],
        [23, 19.2, 0, 40.0, -10.0, 1, 30.0, 0, [0.025, 3.0, 0.0]],
        [13, 37.0, 0, 44.7, -15.0, 1, 40.0, 0, [0.025, 3.0, 0.0]],
    ],
    "branch": [
        [1, 2, 0.02, 0.06, 0.03, 130, 0, 0, 1],
        [1, 3, 0.05, 0.19, 0.02, 130, 0, 0, 1],
        [2, 4, 0.06, 0.17, 0.02, 65, 0, 0, 1],
        [3, 4, 0.01, 0.04, 0, 130, 0, 0, 1],
        [2, 5, 0.05, 0.2, 0.02, 130, 0, 0, 1],
        [2, 6, 0.06, 0.18, 0.02, 65, 0, 0, 1],
        [4, 6, 0.01, 0.04, 0, 90, 0, 0, 1],
        [5, 7, 0.05, 0.12, 0.01, 70, 0, 0, 1],
        [6, 7, 0.03, 0.08, 0.01, 130, 0, 0, 1],
        [6, 8, 0.01, 0.04, 0, 32, 0, 0, 1],
        [6, 9, 0, 0.21, 0, 65, 0, 0, 1],
        [6, 10, 0, 0.56, 0, 32, 0, 0, 1],
        [9, 11, 0, 0.21, 0, 65, 0, 0, 1],
        [9, 10, 0, 0.11, 0, 65, 0, 0, 1],
        [4, 12, 0, 0.26, 0, 65, 0, 0, 1],
        [12, 13, 0, 0.14, 0, 65, 0, 0, 1],
        [12, 14, 0.12, 0.26, 0, 32, 0, 0, 1],
        [12, 15, 0.07, 0.13, 0, 32, 0, 0, 1],
        [12, 16, 0.09, 0.2, 0, 32, 0, 0, 1],
        [14, 15, 0.22, 0.2, 0, 16, 0, 0, 1],
        [16, 17, 0.08, 0.19, 0, 16, 0, 0, 1],
        [15, 18, 0.11, 0.22, 0, 16, 0, 0, 1],
        [18, 19, 0.06, 0.13, 0, 16, 0, 0, 1],
        [19, 20, 0.03, 0.07, 0, 32, 0, 0, 1],
        [10, 20, 0.09, 0.21, 0, 32, 0, 0, 1],
        [10, 17, 0.03, 0.08, 0, 32, 0, 0, 1],
        [10, 21, 0.03, 0.07, 0, 32, 0, 0, 1],
        [10, 22, 0.07, 0.15, 0, 32, 0, 0, 1],
        [21, 22, 0.01, 0.02, 0, 32, 0, 0, 1],
        [15, 23, 0.1, 0.2, 0, 16, 0, 0, 1],
        [22, 24, 0.12, 0.18, 0, 16, 0, 0, 1],
        [23, 24, 0.13, 0.27, 0, 16, 0, 0, 1],
        [24, 25, 0.19, 0.33, 0, 16, 0, 0, 1],
        [25, 26, 0.25, 0.38, 0, 16, 0, 0, 1],
        [25, 27, 0.11, 0.21, 0, 16, 0, 0, 1],
        [28, 27, 0, 0.4, 0, 65, 0, 0, 1],
        [27, 29, 0.22, 0.42, 0, 16, 0, 0, 1],
        [27, 30, 0.32, 0.6, 0, 16, 0, 0, 1],
        [29, 30, 0.24, 0.45, 0, 16, 0, 0, 1],
        [8, 28, 0.06, 0.2, 0.02, 32, 0, 0, 1],
        [6, 28, 0.02, 0.06, 0.01, 32, 0, 0, 1],
    ],
}


def synth_case(n_bus, n_branch, gen_buses, seed, load_frac=0.6, load_scale=1.0):
    """Deterministic meshed test system with realistic parameter ranges."""
    rng = random.Random(seed)
    bus = []
    total_load = 0.0
    load_buses = set()
    candidates = [b for b in range(1, n_bus + 1) if b not in gen_buses]
    rng.shuffle(candidates)
    for b in candidates[: int(load_frac * n_bus)]:
        load_buses.add(b)
    for b in range(1, n_bus + 1):
        pd = qd = 0.0
        if b in load_buses:
            pd = round(rng.uniform(10, 60) * load_scale, 1)
            qd = round(pd * rng.uniform(0.15, 0.45), 1)
            total_load += pd
        kind = 3 if b == gen_buses[0] else (2 if b in gen_buses else 1)
        bus.append([b, kind, pd, qd, 0, 0, 1.0, 0, 1.06, 0.94])
    gen = []
    cap = total_load * 1.9 / len(gen_buses)
    for g in gen_buses:
        pmax = round(cap * rng.uniform(0.7, 1.3), 1)
        qmax = round(pmax * 0.6, 1)
        c2 = round(rng.uniform(0.01, 0.2), 4)
        c1 = round(rng.uniform(5, 40), 2)
        gen.append([g, 0, 0, qmax, -qmax, 1, pmax, 0, [c2, c1, 0.0]])
    # Ring backbone plus random chords keeps the network connected and meshed.
    edges = set()
    branch = []

    def add_edge(f, t):
        if f == t or (f, t) in edges or (t, f) in edges:
            return False
        edges.add((f, t))
        x = round(rng.uniform(0.03, 0.25), 4)
        r = round(x * rng.uniform(0.1, 0.35), 4)
        bb = round(rng.uniform(0, 0.04), 4)
        branch.append([f, t, r, x, bb, 0, 0, 0, 1])
        return True

    for b in range(1, n_bus):
        add_edge(b, b + 1)
    add_edge(n_bus, 1)
    while len(branch) < n_branch:
        f = rng.randint(1, n_bus)
        t = rng.randint(1, n_bus)
        if abs(f - t) > 1:
            add_edge(f, t)
    return {"base": 100.0, "bus": bus, "gen": gen, "branch": branch}


def to_json(case):
    kinds = {1: "pq", 2: "pv", 3: "ref"}
    j = {"base_mva": case["base"], "buses": [], "gens": [], "branches": []}
    for b in case["bus"]:
        j["buses"].append({
            "id": b[0], "kind": kinds[b[1]], "pd": b[2], "qd": b[3],
            "gs": b[4], "bs": b[5], "vm_min": b[9], "vm_max": b[8],
            "vm0": b[6], "va0": b[7],
        })
    for g in case["gen"]:
        j["gens"].append({
            "bus": g[0], "pmin": g[7], "pmax": g[6], "qmin": g[4],
            "qmax": g[3], "pg0": g[1], "qg0": g[2], "status": g[5],
            "cost": g[8],
        })
    for br in case["branch"]:
        j["branches"].append({
            "from": br[0], "to": br[1], "r": br[2], "x": br[3], "b": br[4],
            "tap": br[6], "shift": br[7], "rate_a": br[5], "status": br[8],
        })
    return j


def to_m(case, name):
    lines = [f"function mpc = {name}", "mpc.version = '2';",
             f"mpc.baseMVA = {case['base']};", "mpc.bus = ["]
    for b in case["bus"]:
        lines.append(f"\t{b[0]}\t{b[1]}\t{b[2]}\t{b[3]}\t{b[4]}\t{b[5]}\t1"
                     f"\t{b[6]}\t{b[7]}\t345\t1\t{b[8]}\t{b[9]};")
    lines.append("];")
    lines.append("mpc.gen = [")
    for g in case["gen"]:
        lines.append(f"\t{g[0]}\t{g[1]}\t{g[2]}\t{g[3]}\t{g[4]}\t1\t100"
                     f"\t{g[5]}\t{g[6]}\t{g[7]}\t0\t0\t0\t0\t0\t0\t0\t0\t0\t0\t0;")
    lines.append("];")
    lines.append("mpc.branch = [")
    for br in case["branch"]:
        lines.append(f"\t{br[0]}\t{br[1]}\t{br[2]}\t{br[3]}\t{br[4]}\t{br[5]}"
                     f"\t{br[5]}\t{br[5]}\t{br[6]}\t{br[7]}\t{br[8]}\t-360\t360;")
    lines.append("];")
    lines.append("mpc.gencost = [")
    for g in case["gen"]:
        c = g[8]
        lines.append("\t2\t0\t0\t" + str(len(c)) + "\t" + "\t".join(str(v) for v in c) + ";")
    lines.append("];")
    return "\n".join(lines) + "\n"


def main():
    os.makedirs(OUT, exist_ok=True)
    case57 = synth_case(57, 80, [1, 3, 8, 12, 25, 40, 51], seed=5701)
    case118 = synth_case(118, 186,
                         [1, 4, 6, 8, 10, 12, 15, 18, 19, 24, 25, 26, 27, 31,
                          32, 34, 36, 40, 42, 46, 49, 54, 55, 56, 59, 61, 62,
                          65, 66, 69, 70, 72, 73, 74, 76, 77, 80, 85, 87, 89,
                          90, 91, 92, 99, 100, 103, 104, 105, 107, 110, 111,
                          112, 113, 116],
                         seed=11801, load_frac=0.5)
    for name, case in [("case9", CASE9), ("case14", CASE14), ("case30", CASE30),
                       ("case57", case57), ("case118", case118)]:
        with open(os.path.join(OUT, name + ".json"), "w") as f:
            json.dump(to_json(case), f, indent=1)
            f.write("\n")
        with open(os.path.join(OUT, name + ".m"), "w") as f:
            f.write(to_m(case, name))
    print("wrote case files to", OUT)


if __name__ == "__main__":
    main()
