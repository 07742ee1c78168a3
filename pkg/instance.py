"""
Instantiemodel, bestandsformaat en Watts-Strogatz-generator.

Tekstformaat (regelgeoriënteerd, ids 0-gebaseerd):

    glcip <n> <m> <alpha> <gamma>
    node <id> <h_i> <|P_i|> <p_1> <w_1> ... <p_k> <w_k>
    arc <src> <dst> <d>

Lege regels en regels die met '#' beginnen worden overgeslagen.
Een bestand met extensie .json bevat hetzelfde schema als JSON.
"""
from __future__ import annotations

import os, json, math, logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Optional

import numpy as np
import networkx as nx

from gamma_lift import as_fraction, floor_power

log = logging.getLogger(__name__)

COST_EXPONENT = Fraction(9, 10)
SEED_LIMIT = 2 ** 64


# ---------- Fouten ----------
class InstanceParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"regel {line}")
        if field:
            where.append(f"veld '{field}'")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class InstanceValidationError(ValueError):
    pass


class GeneratorParamsError(ValueError):
    pass


# ---------- Instantie ----------
@dataclass(frozen=True)
class Instance:
    node_count: int
    arcs: tuple                 # (bron, doel, d)
    thresholds: tuple
    incentives: tuple           # per knoop oplopend, begint met 0
    costs: tuple                # per knoop, parallel aan incentives
    alpha: Fraction = Fraction(1)
    gamma: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple((int(s), int(t), int(d)) for s, t, d in self.arcs))
        object.__setattr__(self, "thresholds", tuple(int(h) for h in self.thresholds))
        object.__setattr__(self, "incentives", tuple(tuple(int(p) for p in ps) for ps in self.incentives))
        object.__setattr__(self, "costs", tuple(tuple(int(w) for w in ws) for ws in self.costs))
        object.__setattr__(self, "alpha", as_fraction(self.alpha))
        object.__setattr__(self, "gamma", as_fraction(self.gamma))
        self._validate()

    def _validate(self):
        n = self.node_count
        if not isinstance(n, int) or n < 1:
            raise InstanceValidationError(f"node_count moet een positief geheel getal zijn, niet {n!r}")
        if not (0 < self.alpha <= 1):
            raise InstanceValidationError(f"alpha moet in (0,1] liggen, niet {self.alpha}")
        if self.gamma <= 0:
            raise InstanceValidationError(f"gamma moet positief zijn, niet {self.gamma}")
        if len(self.thresholds) != n or len(self.incentives) != n or len(self.costs) != n:
            raise InstanceValidationError("thresholds/incentives/costs moeten precies één item per knoop hebben")
        seen = set()
        for s, t, d in self.arcs:
            if not (0 <= s < n and 0 <= t < n):
                raise InstanceValidationError(f"boog ({s},{t}) verwijst naar een onbekende knoop")
            if s == t:
                raise InstanceValidationError(f"zelflus op knoop {s}")
            if (s, t) in seen:
                raise InstanceValidationError(f"dubbele boog ({s},{t})")
            if d < 1:
                raise InstanceValidationError(f"boog ({s},{t}) heeft niet-positieve invloed {d}")
            seen.add((s, t))
        for i in range(n):
            if self.thresholds[i] < 1:
                raise InstanceValidationError(f"knoop {i}: drempel h moet >= 1 zijn, niet {self.thresholds[i]}")
            ps, ws = self.incentives[i], self.costs[i]
            if not ps or ps[0] != 0:
                raise InstanceValidationError(f"knoop {i}: incentivelijst moet met 0 beginnen")
            if len(ws) != len(ps):
                raise InstanceValidationError(f"knoop {i}: aantal kosten wijkt af van aantal incentives")
            if ws[0] != 0:
                raise InstanceValidationError(f"knoop {i}: kosten van incentive 0 moeten 0 zijn")
            if any(b <= a for a, b in zip(ps, ps[1:])):
                raise InstanceValidationError(f"knoop {i}: incentives niet strikt stijgend")
            if any(w < 0 for w in ws) or any(b < a for a, b in zip(ws, ws[1:])):
                raise InstanceValidationError(f"knoop {i}: kosten moeten niet-negatief en niet-dalend zijn")

    # ---------- Afgeleide adjacency ----------
    @cached_property
    def in_neighbors(self) -> tuple:
        """Per knoop i: ((j, d_ji), ...) oplopend in j."""
        lists = [[] for _ in range(self.node_count)]
        for s, t, d in self.arcs:
            lists[t].append((s, d))
        return tuple(tuple(sorted(l)) for l in lists)

    @cached_property
    def out_neighbors(self) -> tuple:
        lists = [[] for _ in range(self.node_count)]
        for s, t, d in self.arcs:
            lists[s].append((t, d))
        return tuple(tuple(sorted(l)) for l in lists)

    @cached_property
    def arc_weight(self) -> dict:
        return {(s, t): d for s, t, d in self.arcs}

    @cached_property
    def in_weight(self) -> tuple:
        """D_i: totale binnenkomende invloed."""
        return tuple(sum(d for _, d in nb) for nb in self.in_neighbors)

    @cached_property
    def _positions(self) -> tuple:
        return tuple({p: k for k, p in enumerate(ps)} for ps in self.incentives)

    def incentive_position(self, i: int, p: int) -> int:
        try:
            return self._positions[i][p]
        except KeyError:
            raise KeyError(f"incentive {p} hoort niet bij menu van knoop {i}") from None

    def cost_of(self, i: int, p: int) -> int:
        return self.costs[i][self.incentive_position(i, p)]

    @property
    def arc_count(self) -> int:
        return len(self.arcs)


def coverage_target(inst: Instance) -> int:
    """ceil(alpha * |V|), exact met breuken."""
    return math.ceil(inst.alpha * inst.node_count)


# ---------- Generator ----------
@dataclass(frozen=True)
class GeneratorParams:
    n: int
    k: int
    beta: float
    seed: int
    weight_range: tuple = (1, 10)
    alpha: Fraction = Fraction(1)
    gamma: Fraction = Fraction(1)

    def check(self):
        if self.n < 1:
            raise GeneratorParamsError(f"n moet positief zijn, niet {self.n}")
        if self.k < 0 or self.k % 2:
            raise GeneratorParamsError(f"k moet even en niet-negatief zijn, niet {self.k}")
        if self.k >= self.n:
            raise GeneratorParamsError(f"k ({self.k}) moet kleiner zijn dan n ({self.n})")
        if not (0.0 <= float(self.beta) <= 1.0):
            raise GeneratorParamsError(f"beta moet in [0,1] liggen, niet {self.beta}")
        if not (0 <= int(self.seed) < SEED_LIMIT):
            raise GeneratorParamsError("seed moet een 64-bits unsigned integer zijn")
        lo, hi = self.weight_range
        if lo < 1 or hi < lo:
            raise GeneratorParamsError(f"ongeldig gewichtsinterval {self.weight_range}")
        a, g = as_fraction(self.alpha), as_fraction(self.gamma)
        if not (0 < a <= 1):
            raise GeneratorParamsError(f"alpha moet in (0,1] liggen, niet {self.alpha}")
        if g <= 0:
            raise GeneratorParamsError(f"gamma moet positief zijn, niet {self.gamma}")


def incentive_menu(h_max: int) -> tuple:
    """{0, ceil(h/4), ceil(h/2), ceil(3h/4), h}, ontdubbeld voor kleine h."""
    points = [0] + [math.ceil(Fraction(q, 4) * h_max) for q in (1, 2, 3, 4)]
    return tuple(sorted(set(points)))


def incentive_cost(p: int) -> int:
    """floor(p^0.9), exact."""
    return floor_power(p, COST_EXPONENT)


def generate_instance(params: GeneratorParams) -> Instance:
    params.check()
    n, k = params.n, params.k
    graph = nx.watts_strogatz_graph(n, k, float(params.beta), seed=int(params.seed))
    rng = np.random.default_rng(int(params.seed))
    lo, hi = params.weight_range

    arcs = []
    for u, v in sorted(tuple(sorted(e)) for e in graph.edges()):
        arcs.append((u, v, int(rng.integers(lo, hi + 1))))
        arcs.append((v, u, int(rng.integers(lo, hi + 1))))
    arcs.sort(key=lambda a: (a[0], a[1]))

    incoming = [0] * n
    for _, t, d in arcs:
        incoming[t] += d
    thresholds = [int(rng.integers(1, max(1, incoming[i] // 2) + 1)) for i in range(n)]

    menu = incentive_menu(max(thresholds))
    costs = tuple(incentive_cost(p) for p in menu)
    inst = Instance(
        node_count=n,
        arcs=tuple(arcs),
        thresholds=tuple(thresholds),
        incentives=tuple(menu for _ in range(n)),
        costs=tuple(costs for _ in range(n)),
        alpha=as_fraction(params.alpha),
        gamma=as_fraction(params.gamma),
    )
    log.debug("instantie gegenereerd: n=%d m=%d seed=%d", n, len(arcs), params.seed)
    return inst


# ---------- Opslaan / laden ----------
def format_fraction(value: Fraction) -> str:
    """Decimaal als dat exact kan (0.5, 1.1), anders a/b."""
    value = as_fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2; twos += 1
    while den % 5 == 0:
        den //= 5; fives += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    digits = max(twos, fives)
    scaled = value * 10 ** digits
    sign = "-" if scaled < 0 else ""
    whole, frac = divmod(abs(scaled.numerator), 10 ** digits)
    return f"{sign}{whole}.{str(frac).rjust(digits, '0')}"


def _parse_fraction(token: str, line: int, name: str) -> Fraction:
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise InstanceParseError(f"geen rationaal getal: {token!r}", line, name) from None


def _parse_int(token: str, line: int, name: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise InstanceParseError(f"geen geheel getal: {token!r}", line, name) from None


def dumps_text(inst: Instance) -> str:
    lines = [f"glcip {inst.node_count} {inst.arc_count} {format_fraction(inst.alpha)} {format_fraction(inst.gamma)}"]
    for i in range(inst.node_count):
        pairs = " ".join(f"{p} {w}" for p, w in zip(inst.incentives[i], inst.costs[i]))
        lines.append(f"node {i} {inst.thresholds[i]} {len(inst.incentives[i])} {pairs}")
    for s, t, d in inst.arcs:
        lines.append(f"arc {s} {t} {d}")
    return "\n".join(lines) + "\n"


def loads_text(text: str) -> Instance:
    header = None
    nodes: dict = {}
    arcs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        kind = tok[0]
        if header is None:
            if kind != "glcip" or len(tok) != 5:
                raise InstanceParseError("verwacht kopregel 'glcip <n> <m> <alpha> <gamma>'", lineno, "header")
            header = (
                _parse_int(tok[1], lineno, "n"),
                _parse_int(tok[2], lineno, "m"),
                _parse_fraction(tok[3], lineno, "alpha"),
                _parse_fraction(tok[4], lineno, "gamma"),
            )
            continue
        if kind == "node":
            if len(tok) < 4:
                raise InstanceParseError("node-regel te kort", lineno, "node")
            nid = _parse_int(tok[1], lineno, "id")
            h = _parse_int(tok[2], lineno, "h")
            count = _parse_int(tok[3], lineno, "|P|")
            if len(tok) != 4 + 2 * count:
                raise InstanceParseError(f"verwacht {count} paren (p, w)", lineno, "incentives")
            ps = [_parse_int(tok[4 + 2 * q], lineno, "p") for q in range(count)]
            ws = [_parse_int(tok[5 + 2 * q], lineno, "w") for q in range(count)]
            if nid in nodes:
                raise InstanceParseError(f"knoop {nid} dubbel gedefinieerd", lineno, "id")
            nodes[nid] = (h, ps, ws)
        elif kind == "arc":
            if len(tok) != 4:
                raise InstanceParseError("verwacht 'arc <src> <dst> <d>'", lineno, "arc")
            arcs.append((_parse_int(tok[1], lineno, "src"), _parse_int(tok[2], lineno, "dst"),
                         _parse_int(tok[3], lineno, "d")))
        else:
            raise InstanceParseError(f"onbekend regeltype {kind!r}", lineno, "type")
    if header is None:
        raise InstanceParseError("leeg bestand", None, "header")
    n, m, alpha, gamma = header
    if sorted(nodes) != list(range(n)):
        raise InstanceParseError(f"verwacht node-regels voor ids 0..{n - 1}", None, "node")
    if len(arcs) != m:
        raise InstanceParseError(f"kopregel noemt {m} bogen, gevonden {len(arcs)}", None, "m")
    return Instance(
        node_count=n,
        arcs=tuple(arcs),
        thresholds=tuple(nodes[i][0] for i in range(n)),
        incentives=tuple(tuple(nodes[i][1]) for i in range(n)),
        costs=tuple(tuple(nodes[i][2]) for i in range(n)),
        alpha=alpha,
        gamma=gamma,
    )


def to_dict(inst: Instance) -> dict:
    return {
        "format": "glcip",
        "n": inst.node_count,
        "alpha": format_fraction(inst.alpha),
        "gamma": format_fraction(inst.gamma),
        "nodes": [
            {"id": i, "h": inst.thresholds[i], "incentives": list(inst.incentives[i]), "costs": list(inst.costs[i])}
            for i in range(inst.node_count)
        ],
        "arcs": [list(a) for a in inst.arcs],
    }


def from_dict(data: dict) -> Instance:
    if data.get("format") != "glcip":
        raise InstanceParseError("JSON mist 'format': 'glcip'", None, "format")
    try:
        n = int(data["n"])
        nodes = sorted(data["nodes"], key=lambda d: int(d["id"]))
        if [int(d["id"]) for d in nodes] != list(range(n)):
            raise InstanceParseError(f"verwacht nodes met ids 0..{n - 1}", None, "nodes")
        return Instance(
            node_count=n,
            arcs=tuple(tuple(a) for a in data.get("arcs", [])),
            thresholds=tuple(int(d["h"]) for d in nodes),
            incentives=tuple(tuple(d["incentives"]) for d in nodes),
            costs=tuple(tuple(d["costs"]) for d in nodes),
            alpha=Fraction(str(data.get("alpha", "1"))),
            gamma=Fraction(str(data.get("gamma", "1"))),
        )
    except (KeyError, TypeError) as e:
        raise InstanceParseError(f"JSON-veld ontbreekt of is ongeldig: {e}", None, str(e)) from None


def save_instance(inst: Instance, path: str):
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        if path.lower().endswith(".json"):
            json.dump(to_dict(inst), f, indent=1)
            f.write("\n")
        else:
            f.write(dumps_text(inst))


def load_instance(path: str) -> Instance:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    if path.lower().endswith(".json"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise InstanceParseError(f"ongeldige JSON: {e.msg}", e.lineno, None) from None
        return from_dict(data)
    return loads_text(text)
