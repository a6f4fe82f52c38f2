"""Writes ieee13.json from the published IEEE 13-node test feeder data.

Per-unit base: 5 MVA per phase, 4.16 kV line-to-line. Loads are modelled as
wye constant power at their bus, the distributed load sits at node 670, the
switch is a 10 ft segment of configuration 601, and the in-line transformer
is a diagonal series impedance. Capacitors are constant admittance shunts.
"""
import json
import math

MILE = 5280.0
S_BASE = 5e6
Z_BASE = (4160 / math.sqrt(3)) ** 2 / S_BASE

CONFIGS = {
    "601": {"aa": (0.3465, 1.0179), "ab": (0.1560, 0.5017), "ac": (0.1580, 0.4236),
            "bb": (0.3375, 1.0478), "bc": (0.1535, 0.3849), "cc": (0.3414, 1.0348)},
    "602": {"aa": (0.7526, 1.1814), "ab": (0.1580, 0.4236), "ac": (0.1560, 0.5017),
            "bb": (0.7475, 1.1983), "bc": (0.1535, 0.3849), "cc": (0.7436, 1.2112)},
    "603": {"bb": (1.3294, 1.3471), "bc": (0.2066, 0.4591), "cc": (1.3238, 1.3569)},
    "604": {"aa": (1.3238, 1.3569), "ac": (0.2066, 0.4591), "cc": (1.3294, 1.3471)},
    "605": {"cc": (1.3292, 1.3475)},
    "606": {"aa": (0.7982, 0.4463), "ab": (0.3192, 0.0328), "ac": (0.2849, -0.0143),
            "bb": (0.7891, 0.4041), "bc": (0.3192, 0.0328), "cc": (0.7982, 0.4463)},
    "607": {"aa": (1.3425, 0.5124)},
}

PHASES = {
    "650": "abc", "rg60": "abc", "632": "abc", "633": "abc", "634": "abc",
    "645": "bc", "646": "bc", "670": "abc", "671": "abc", "680": "abc",
    "684": "ac", "611": "c", "652": "a", "692": "abc", "675": "abc",
}

SEGMENTS = [
    ("rg60", "632", "601", 2000), ("632", "670", "601", 667), ("670", "671", "601", 1333),
    ("632", "633", "602", 500), ("632", "645", "603", 500), ("645", "646", "603", 300),
    ("671", "680", "601", 1000), ("671", "684", "604", 300), ("684", "611", "605", 300),
    ("684", "652", "607", 800), ("671", "692", "601", 10), ("692", "675", "606", 500),
]

# kW, kvar per phase
LOADS = {
    "634": {"a": (160, 110), "b": (120, 90), "c": (120, 90)},
    "645": {"b": (170, 125)},
    "646": {"b": (230, 132)},
    "652": {"a": (128, 86)},
    "671": {"a": (385, 220), "b": (385, 220), "c": (385, 220)},
    "675": {"a": (485, 190), "b": (68, 60), "c": (290, 212)},
    "692": {"c": (170, 151)},
    "611": {"c": (170, 80)},
    "670": {"a": (17, 10), "b": (66, 38), "c": (117, 68)},
}

# kvar per phase
CAPACITORS = {"675": {"a": 200, "b": 200, "c": 200}, "611": {"c": 100}}


def common(f, t):
    return "".join(p for p in "abc" if p in PHASES[f] and p in PHASES[t])


def z_rows(cfg, feet, phases):
    d = CONFIGS[cfg]
    rows = []
    for p in phases:
        row = []
        for q in phases:
            r, x = d["".join(sorted(p + q))]
            row.append([r * feet / MILE / Z_BASE, x * feet / MILE / Z_BASE])
        rows.append(row)
    return rows


def main():
    buses = []
    for bid, ph in PHASES.items():
        b = {"id": bid, "phases": ph}
        if bid == "650":
            b["slack"] = True
        if bid in LOADS:
            b["load"] = {"phases": ph, "values": [
                [LOADS[bid].get(p, (0, 0))[0] * 1e3 / S_BASE, LOADS[bid].get(p, (0, 0))[1] * 1e3 / S_BASE]
                for p in ph]}
        if bid in CAPACITORS:
            cp = "".join(p for p in "abc" if p in CAPACITORS[bid])
            b["shunt"] = {"phases": cp, "rows": [
                [[0.0, CAPACITORS[bid][p] * 1e3 / S_BASE] if p == q else [0.0, 0.0] for q in cp] for p in cp]}
        buses.append(b)

    lines = [{"from": f, "to": t, "z": {"phases": common(f, t), "rows": z_rows(c, ft, common(f, t))}}
             for f, t, c, ft in SEGMENTS]
    # 500 kVA, 4.16/0.48 kV, z = 1.1 + j2 percent on its own base
    zt = [0.011 * S_BASE / 500e3, 0.02 * S_BASE / 500e3]
    lines.append({"from": "633", "to": "634", "z": {"phases": "abc", "rows": [
        [zt if i == j else [0.0, 0.0] for j in range(3)] for i in range(3)]}})

    a = [math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3)]
    feeder = {
        "format": 1,
        "name": "ieee13",
        "slack_voltage": {"phases": "abc", "values": [[1.0, 0.0], [a[0], -a[1]], [a[0], a[1]]]},
        "buses": buses,
        "lines": lines,
        "svrs": [{"id": "reg1", "from": "650", "to": "rg60", "kind": "B", "phases": "abc"}],
        "defaults": {"vmin": 0.93, "vmax": 1.1, "verify_vmin": 0.9, "verify_vmax": 1.1},
    }
    with open("ieee13.json", "w") as f:
        json.dump(feeder, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()
