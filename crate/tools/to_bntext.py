#!/usr/bin/env python3
"""Convert a discrete BIF file or a Gaussian pgmpy/bnlearn JSON file to bn-text.

    python3 tools/to_bntext.py alarm.bif ALARM > alarm.bn
    python3 tools/to_bntext.py ecoli70.json ECOLI70 > ecoli70.bn

BIF input must list every parent configuration explicitly or use `table`.
Rows that do not sum to exactly one are rescaled.
JSON input follows the pgmpy layout: nodes, arcs, and per-node cpds with
coefficients (including "(Intercept)"), variance and parents.
"""

import itertools
import json
import math
import re
import sys


def parse_bif(text):
    variables = {}
    order = []
    for m in re.finditer(r"variable\s+(\S+)\s*\{\s*type\s+discrete\s*\[\s*\d+\s*\]\s*\{([^}]*)\}", text):
        name = m.group(1)
        variables[name] = [s.strip() for s in m.group(2).split(",")]
        order.append(name)
    cpts = {}
    for m in re.finditer(r"probability\s*\(\s*([^)|]+?)\s*(?:\|\s*([^)]*))?\)\s*\{([^}]*)\}", text):
        child = m.group(1).strip()
        parents = [p.strip() for p in m.group(2).split(",")] if m.group(2) else []
        body = m.group(3)
        rows = {}
        table = re.search(r"table\s+([^;]*);", body)
        if table:
            rows[()] = [float(v) for v in table.group(1).split(",")]
        for r in re.finditer(r"\(([^)]*)\)\s*([^;]*);", body):
            key = tuple(s.strip() for s in r.group(1).split(","))
            rows[key] = [float(v) for v in r.group(2).split(",")]
        cpts[child] = (parents, rows)
    return order, variables, cpts


def discrete(path, name):
    order, levels, cpts = parse_bif(open(path).read())
    out = [f"network {name}", "type discrete"]
    for v in order:
        out.append(" ".join(["node", v] + levels[v]))
    for v in order:
        out.append(" ".join(["parents", v] + cpts[v][0]))
    for v in order:
        parents, rows = cpts[v]
        # row-major over parent configurations, last parent fastest
        values = []
        for c in itertools.product(*[levels[p] for p in parents]):
            row = rows[c]
            # published tables are rounded to a few digits; renormalise
            total = math.fsum(row)
            values.extend(x / total for x in row)
        out.append(" ".join(["cpt", v] + [repr(x) for x in values]))
    return out


def gaussian(path, name):
    spec = json.load(open(path))
    out = [f"network {name}", "type gaussian"]
    for v in spec["nodes"]:
        out.append(f"node {v}")
    for v in spec["nodes"]:
        out.append(" ".join(["parents", v] + spec["cpds"][v]["parents"]))
    for v in spec["nodes"]:
        cpd = spec["cpds"][v]
        coefs = cpd["coefficients"]
        betas = [coefs[p][0] for p in cpd["parents"]]
        sd = math.sqrt(cpd["variance"][0])
        out.append(" ".join(["coef", v] + [repr(x) for x in [coefs["(Intercept)"][0]] + betas + [sd]]))
    return out


if __name__ == "__main__":
    src, name = sys.argv[1], sys.argv[2]
    lines = gaussian(src, name) if src.endswith(".json") else discrete(src, name)
    print("\n".join(lines))
