"""Built-in scenarios: a 5-bus toy, a seeded toy generator, and a modified
123-bus feeder with added switches, DGs, and a 14-line damage event.

Everything goes through `parse_scenario`, so the fixtures double as schema
exercises.
"""

from __future__ import annotations

import random

from .netmodel import Scenario, parse_scenario

_Z_SMALL = [[[0.0008, 0.0016], [0.0001, 0.0002], [0.0001, 0.0002]],
            [[0.0001, 0.0002], [0.0008, 0.0016], [0.0001, 0.0002]],
            [[0.0001, 0.0002], [0.0001, 0.0002], [0.0008, 0.0016]]]

PHASE_A = [True, False, False]
PHASE_B = [False, True, False]
PHASE_C = [False, False, True]
ABC = [True, True, True]


def toy_scenario() -> Scenario:
    """Five buses on phase A, one damaged line, one loop with a tie switch."""
    doc = {
        "network": {
            "buses": [
                {"id": "S", "phases": PHASE_A, "is_substation": True},
                {"id": "B1", "phases": PHASE_A,
                 "demand_p": [20, 0, 0], "demand_q": [10, 0, 0]},
                {"id": "B2", "phases": PHASE_A,
                 "demand_p": [20, 0, 0], "demand_q": [10, 0, 0]},
                {"id": "B3", "phases": PHASE_A,
                 "demand_p": [20, 0, 0], "demand_q": [10, 0, 0],
                 "priority": 10.0, "is_critical": True},
                {"id": "B4", "phases": PHASE_A,
                 "demand_p": [20, 0, 0], "demand_q": [10, 0, 0],
                 "dg_p_max": [60, 0, 0], "dg_q_max": [40, 0, 0]},
            ],
            "lines": [
                {"id": "CB", "from": "S", "to": "B1", "phases": PHASE_A,
                 "kind": "substation-breaker"},
                {"id": "L1", "from": "B1", "to": "B2", "phases": PHASE_A,
                 "z": _Z_SMALL},
                {"id": "L2", "from": "B2", "to": "B3", "phases": PHASE_A,
                 "z": _Z_SMALL},
                {"id": "SW", "from": "B3", "to": "B4", "phases": PHASE_A,
                 "kind": "switch"},
                {"id": "L3", "from": "B2", "to": "B4", "phases": PHASE_A,
                 "z": _Z_SMALL},
            ],
        },
        "damage": [
            {"line": "L2", "repair_hours": 1.5, "tree_hours": 1.0,
             "resources": {"kit": 1}},
        ],
        "crews": [
            {"id": "c1", "kind": "line", "depot": "D", "capacity": 10.0},
            {"id": "t1", "kind": "tree", "depot": "D"},
        ],
        "depots": [{"id": "D", "stock": {"kit": 2}}],
        "travel": {
            "nodes": ["L2", "D"],
            "hours": [[0, 0.5], [0.5, 0]],
        },
        "params": {
            "dt_hours": 1.0,
            "horizon_steps": 6,
            "clpu_lag_steps": 1,
            "carry_weights": {"kit": 1.0},
        },
    }
    return parse_scenario(doc)


def random_toy(seed: int, max_damage: int = 3) -> Scenario:
    """Small single-phase feeder with a randomized damage/crew/travel setup.

    Sized so exhaustive route enumeration stays cheap: at most `max_damage`
    damaged lines and two line crews.
    """
    rng = random.Random(seed)
    n = rng.randint(4, 6)  # buses past the substation
    buses = [{"id": "S", "phases": PHASE_A, "is_substation": True}]
    for i in range(1, n + 1):
        buses.append({
            "id": f"b{i}", "phases": PHASE_A,
            "demand_p": [round(rng.uniform(10, 40), 1), 0, 0],
            "demand_q": [round(rng.uniform(5, 15), 1), 0, 0],
            "priority": rng.choice([1.0, 1.0, 5.0]),
        })
    if rng.random() < 0.5:
        buses[-1]["dg_p_max"] = [80, 0, 0]
        buses[-1]["dg_q_max"] = [50, 0, 0]
    lines = [{"id": "CB", "from": "S", "to": "b1", "phases": PHASE_A,
              "kind": "substation-breaker"}]
    plain = []
    for i in range(1, n):
        lid = f"l{i}"
        lines.append({"id": lid, "from": f"b{i}", "to": f"b{i + 1}",
                      "phases": PHASE_A, "z": _Z_SMALL})
        plain.append(lid)
    has_tie = rng.random() < 0.5 and n >= 4
    if has_tie:
        lines.append({"id": "tie", "from": "b2", "to": f"b{n}",
                      "phases": PHASE_A, "kind": "switch"})

    k = rng.randint(1, min(max_damage, len(plain)))
    damaged = rng.sample(plain, k)
    damaged.sort()
    damage = []
    any_tree = False
    for lid in damaged:
        rec = {"line": lid,
               "repair_hours": round(rng.uniform(0.5, 2.0), 2),
               "resources": {"kit": rng.randint(0, 2)}}
        if rng.random() < 0.3:
            rec["tree_hours"] = round(rng.uniform(0.25, 1.0), 2)
            any_tree = True
        damage.append(rec)

    crews = [
        {"id": "c1", "kind": "line", "depot": "D", "capacity": 10.0},
        {"id": "c2", "kind": "line", "depot": "D", "capacity": 10.0},
    ]
    if any_tree:
        crews.append({"id": "t1", "kind": "tree", "depot": "D"})

    nodes = damaged + ["D"]
    m = len(nodes)
    hours = [[0.0] * m for _ in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            h = round(rng.uniform(0.2, 0.8), 2)
            hours[i][j] = hours[j][i] = h

    doc = {
        "network": {"buses": buses, "lines": lines},
        "damage": damage,
        "crews": crews,
        "depots": [{"id": "D", "stock": {"kit": 8}}],
        "travel": {"nodes": nodes, "hours": hours},
        "params": {
            "dt_hours": 1.0,
            "horizon_steps": 0,  # derived
            "clpu_lag_steps": rng.choice([1, 2]),
            "carry_weights": {"kit": 1.0},
        },
    }
    return parse_scenario(doc)


# -- modified 123-bus feeder ------------------------------------------------

# trunk and lateral connectivity; ids are "from-to"
_EDGES = [
    ("149", "1"), ("1", "2"), ("1", "3"), ("1", "7"), ("3", "4"),
    ("3", "5"), ("5", "6"), ("7", "8"), ("8", "12"), ("8", "9"),
    ("8", "13"), ("9", "14"), ("14", "10"), ("14", "11"), ("13", "34"),
    ("13", "18"), ("34", "15"), ("15", "16"), ("15", "17"), ("18", "19"),
    ("18", "21"), ("18", "163"), ("19", "20"), ("21", "22"), ("21", "23"),
    ("23", "24"), ("23", "25"), ("25", "26"), ("25", "168"), ("26", "27"),
    ("26", "31"), ("27", "33"), ("28", "29"), ("29", "30"), ("30", "250"),
    ("31", "32"), ("35", "36"), ("35", "40"), ("36", "37"), ("36", "38"),
    ("38", "39"), ("40", "41"), ("40", "42"), ("42", "43"), ("42", "165"),
    ("44", "45"), ("44", "47"), ("45", "46"), ("47", "48"), ("47", "49"),
    ("49", "50"), ("50", "51"), ("52", "53"), ("53", "54"), ("53", "151"),
    ("54", "55"), ("54", "57"), ("55", "56"), ("57", "58"), ("57", "169"),
    ("58", "59"), ("60", "61"), ("60", "62"), ("62", "63"), ("63", "64"),
    ("64", "65"), ("65", "66"), ("67", "68"), ("67", "72"), ("67", "174"),
    ("68", "69"), ("69", "70"), ("70", "71"), ("72", "73"), ("72", "76"),
    ("73", "74"), ("74", "75"), ("76", "86"), ("76", "172"),
    ("77", "78"), ("78", "79"), ("78", "80"), ("80", "81"), ("81", "82"), ("81", "84"),
    ("82", "83"), ("84", "85"), ("86", "87"), ("87", "88"), ("87", "89"),
    ("89", "90"), ("89", "91"), ("91", "92"), ("91", "93"), ("93", "94"),
    ("93", "95"), ("95", "96"), ("97", "98"), ("98", "99"), ("99", "100"),
    ("100", "450"), ("101", "102"), ("101", "105"), ("102", "103"),
    ("103", "104"), ("105", "106"), ("105", "108"), ("106", "107"),
    ("108", "109"), ("108", "300"), ("109", "110"), ("110", "111"),
    ("110", "112"), ("112", "113"), ("113", "114"),
    ("135", "35"), ("152", "52"), ("160", "67"), ("197", "101"),
]

# operable switches: (id, from, to); the last two are normally open ties
_SWITCHES = [
    ("13-152", "13", "152"), ("18-135", "18", "135"),
    ("60-160", "60", "160"), ("97-197", "97", "197"),
    ("28-168", "168", "28"), ("44-165", "165", "44"),
    ("60-169", "169", "60"), ("77-172", "172", "77"),
    ("97-174", "174", "97"), ("151-300", "151", "300"),
    ("54-94", "54", "94"),
]
_NORMALLY_OPEN = ("151-300", "54-94")

# single-phase laterals; everything else is three-phase
_BUS_PHASE = {
    "2": PHASE_A, "4": PHASE_C, "5": PHASE_C, "6": PHASE_C, "9": PHASE_A,
    "10": PHASE_A, "11": PHASE_A, "12": PHASE_B, "14": PHASE_A,
    "34": PHASE_C, "15": PHASE_C, "16": PHASE_C, "17": PHASE_C,
    "19": PHASE_C, "20": PHASE_C, "22": PHASE_B, "24": PHASE_C,
    "31": PHASE_C, "32": PHASE_C, "33": PHASE_C, "37": PHASE_A,
    "38": PHASE_B, "39": PHASE_B, "41": PHASE_C, "43": PHASE_B,
    "45": PHASE_A, "46": PHASE_A, "56": PHASE_B, "59": PHASE_A,
    "163": PHASE_B, "68": PHASE_A, "69": PHASE_A, "70": PHASE_A,
    "71": PHASE_A, "79": PHASE_A, "83": PHASE_C, "84": PHASE_C,
    "85": PHASE_C, "88": PHASE_A, "90": PHASE_B, "92": PHASE_C,
    "102": PHASE_C, "103": PHASE_C, "104": PHASE_C, "107": PHASE_A,
    "111": PHASE_A,
}

# junction / switchgear buses that carry no load
_NO_LOAD = {"150", "149", "151", "152", "135", "160", "165", "168", "169",
            "172", "174", "197", "300", "250", "450", "8", "13", "18", "21",
            "23", "25", "26", "40", "44", "54", "57", "61", "67", "72",
            "78", "81", "89", "91", "97", "110"}

_CRITICAL = ("30", "48", "49", "53", "65", "76")
_DG_BUSES = ("30", "35", "47", "52", "64", "87", "108")

# damaged line -> (resources A..F, repair hours, tree hours or None)
_DAMAGE_TABLE = {
    "7-8": ({"A": 1, "B": 2, "D": 1}, 2.5, None),
    "15-17": ({"A": 1, "B": 2, "C": 1, "D": 1}, 1.25, 1.0),
    "18-19": ({"A": 1, "B": 2, "C": 1, "D": 1}, 0.5, None),
    "27-33": ({"A": 1, "B": 2, "C": 1, "D": 1}, 2.25, None),
    "38-39": ({"A": 1, "B": 2, "C": 1, "D": 1}, 1.0, 0.75),
    "54-57": ({"B": 2, "D": 1, "E": 2}, 0.75, None),
    "58-59": ({"A": 1, "B": 2, "C": 1, "D": 1}, 0.5, None),
    "18-163": ({"B": 2, "D": 1, "F": 2}, 1.75, None),
    "67-72": ({"B": 2, "D": 1}, 4.0, 1.25),
    "76-86": ({"A": 1, "B": 2, "C": 1, "D": 1}, 6.0, 2.0),
    "91-93": ({"B": 2, "D": 1, "E": 2}, 1.5, None),
    "93-95": ({"A": 1, "B": 2, "C": 1, "D": 1}, 2.75, None),
    "105-106": ({"A": 1, "B": 2, "C": 1, "D": 1}, 1.75, 1.0),
    "113-114": ({"A": 1, "B": 2, "C": 1, "D": 1}, 0.75, 0.5),
}

_CARRY_WEIGHTS = {"A": 3.0, "B": 2.5, "C": 2.0, "D": 1.0, "E": 4.0, "F": 1.0}

_DEPOT_BUS = {"DP1": "1", "DP2": "60", "DP3": "108"}


def _feeder_edges():
    edges = [(f"{a}-{b}", a, b, "plain") for a, b in _EDGES]
    edges.append(("150-149", "150", "149", "substation-breaker"))
    for lid, a, b in _SWITCHES:
        edges.append((lid, a, b, "switch"))
    return edges


def ieee123_scenario(horizon: int = 16) -> Scenario:
    edges = _feeder_edges()
    bus_ids = sorted({b for _, a, b, _ in edges} | {a for _, a, b, _ in edges},
                     key=lambda s: (len(s), s))
    buses = []
    for bid in bus_ids:
        phases = _BUS_PHASE.get(bid, ABC)
        nph = sum(phases)
        raw = {"id": bid, "phases": phases}
        if bid == "150":
            raw["is_substation"] = True
        if bid not in _NO_LOAD:
            per_ph = 30.0 if nph == 1 else 12.0
            raw["demand_p"] = [per_ph if p else 0 for p in phases]
            raw["demand_q"] = [per_ph / 2 if p else 0 for p in phases]
        if bid in _CRITICAL:
            raw["is_critical"] = True
            raw["priority"] = 10.0
        if bid in _DG_BUSES:
            raw["dg_p_max"] = [100.0 if p else 0 for p in phases]
            raw["dg_q_max"] = [83.3 if p else 0 for p in phases]
        buses.append(raw)

    phase_of = {b["id"]: b["phases"] for b in buses}
    lines = []
    for lid, a, b, kind in edges:
        ph = [pa and pb for pa, pb in zip(phase_of[a], phase_of[b])]
        raw = {"id": lid, "from": a, "to": b, "phases": ph, "kind": kind}
        if kind == "plain":
            raw["z"] = _Z_SMALL
        lines.append(raw)

    damage = []
    for lid, (res, fix, tree) in _DAMAGE_TABLE.items():
        rec = {"line": lid, "repair_hours": fix,
               "resources": {k: float(v) for k, v in res.items()}}
        if tree is not None:
            rec["tree_hours"] = tree
        damage.append(rec)

    crews = []
    for i, depot in enumerate(["DP1", "DP1", "DP2", "DP2", "DP3", "DP3"]):
        crews.append({"id": f"lc{i + 1}", "kind": "line", "depot": depot,
                      "capacity": 30.0})
    for i, depot in enumerate(["DP1", "DP2", "DP2", "DP3"]):
        crews.append({"id": f"tc{i + 1}", "kind": "tree", "depot": depot})

    hop = _hop_distances(edges)
    nodes = sorted(_DAMAGE_TABLE) + list(_DEPOT_BUS)
    anchor = {lid: lid.split("-")[0] for lid in _DAMAGE_TABLE}
    anchor.update(_DEPOT_BUS)
    m = len(nodes)
    hours = [[0.0] * m for _ in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            h = round(0.1 + 0.03 * hop[anchor[nodes[i]]][anchor[nodes[j]]], 2)
            hours[i][j] = hours[j][i] = h

    stock = {"A": 6.0, "B": 12.0, "C": 4.0, "D": 6.0, "E": 2.0, "F": 2.0}
    doc = {
        "network": {"buses": buses, "lines": lines},
        "damage": damage,
        "crews": crews,
        "depots": [{"id": d, "stock": dict(stock)} for d in _DEPOT_BUS],
        "travel": {"nodes": nodes, "hours": hours},
        "params": {
            "dt_hours": 1.0,
            "horizon_steps": horizon,
            "clpu_lag_steps": 2,
            "carry_weights": dict(_CARRY_WEIGHTS),
            "initial_open_switches": list(_NORMALLY_OPEN),
        },
    }
    return parse_scenario(doc)


def _hop_distances(edges):
    adj: dict[str, list[str]] = {}
    for _, a, b, _ in edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    dist = {}
    for src in adj:
        d = {src: 0}
        queue = [src]
        while queue:
            nxt = []
            for node in queue:
                for nbr in adj[node]:
                    if nbr not in d:
                        d[nbr] = d[node] + 1
                        nxt.append(nbr)
            queue = nxt
        dist[src] = d
    return dist
