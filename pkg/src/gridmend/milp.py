"""Solver-agnostic MILP container, LP-text export/import, and solution checking.

The variable/constraint storage is deliberately flat (parallel lists plus an
index dict) so that building the full feeder model stays cheap: a model with a
few hundred thousand coefficients must build and serialize in seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

CONTINUOUS = "continuous"
BINARY = "binary"

LE = "<="
EQ = "="
GE = ">="

_SENSES = (LE, EQ, GE)

INF = math.inf


class MilpError(Exception):
    pass


class LpParseError(MilpError):
    """Grammar error in LP or solution text; carries line/column context."""

    def __init__(self, msg, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", col {column})" if column is not None else ")")
        super().__init__(msg + loc)
        self.line = line
        self.column = column


def _fmt(v: float) -> str:
    # 12 significant digits; big-M constraints are sensitive to rounding.
    if v == int(v) and abs(v) < 1e15:
        return repr(int(v))
    return repr(float(f"{v:.12g}"))


class MilpModel:
    """Linear minimization model: variables, linear constraints, objective.

    Variables are addressed by index internally and by unique name externally.
    Binary variables are always bounded to [0, 1].
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.var_names: list[str] = []
        self.var_kinds: list[str] = []
        self.var_lb: list[float] = []
        self.var_ub: list[float] = []
        self._var_index: dict[str, int] = {}
        # constraints: parallel lists of (name, [(var_idx, coef)], sense, rhs)
        self.con_names: list[str] = []
        self.con_terms: list[list[tuple[int, float]]] = []
        self.con_senses: list[str] = []
        self.con_rhs: list[float] = []
        self._con_names_set: set[str] = set()
        self.obj: dict[int, float] = {}
        self.obj_constant: float = 0.0
        self.warm_start: dict[str, float] = {}

    # -- building ----------------------------------------------------------

    def add_var(self, name: str, kind: str = CONTINUOUS, lb: float = 0.0,
                ub: float = INF) -> int:
        if name in self._var_index:
            raise MilpError(f"duplicate variable name: {name}")
        if kind == BINARY:
            # keep tighter (e.g. fixed) bounds so they survive an LP round trip
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        elif kind != CONTINUOUS:
            raise MilpError(f"unknown variable kind: {kind}")
        if lb > ub:
            raise MilpError(f"variable {name}: lb {lb} > ub {ub}")
        idx = len(self.var_names)
        self.var_names.append(name)
        self.var_kinds.append(kind)
        self.var_lb.append(float(lb))
        self.var_ub.append(float(ub))
        self._var_index[name] = idx
        return idx

    def var_index(self, name: str) -> int:
        return self._var_index[name]

    def has_var(self, name: str) -> bool:
        return name in self._var_index

    def fix_var(self, idx: int, value: float) -> None:
        self.var_lb[idx] = float(value)
        self.var_ub[idx] = float(value)

    def add_con(self, name: str, terms: list[tuple[int, float]], sense: str,
                rhs: float) -> int:
        if name in self._con_names_set:
            raise MilpError(f"duplicate constraint name: {name}")
        if sense not in _SENSES:
            raise MilpError(f"unknown constraint sense: {sense}")
        merged: dict[int, float] = {}
        nvars = len(self.var_names)
        for idx, coef in terms:
            if idx < 0 or idx >= nvars:
                raise MilpError(f"constraint {name}: unknown variable index {idx}")
            merged[idx] = merged.get(idx, 0.0) + float(coef)
        canon = sorted((i, c) for i, c in merged.items() if c != 0.0)
        row = len(self.con_names)
        self.con_names.append(name)
        self.con_terms.append(canon)
        self.con_senses.append(sense)
        self.con_rhs.append(float(rhs))
        self._con_names_set.add(name)
        return row

    def set_objective(self, terms: dict[int, float], constant: float = 0.0) -> None:
        self.obj = {i: float(c) for i, c in terms.items() if c != 0.0}
        self.obj_constant = float(constant)

    def add_obj_term(self, idx: int, coef: float) -> None:
        c = self.obj.get(idx, 0.0) + float(coef)
        if c == 0.0:
            self.obj.pop(idx, None)
        else:
            self.obj[idx] = c

    @property
    def num_vars(self) -> int:
        return len(self.var_names)

    @property
    def num_cons(self) -> int:
        return len(self.con_names)

    def binary_indices(self) -> list[int]:
        return [i for i, k in enumerate(self.var_kinds) if k == BINARY]


@dataclass
class Assignment:
    """A valued point for a model, as returned by a solver."""

    values: dict[str, float]
    objective: float
    status: str  # optimal | feasible | infeasible | time-limit | error

    def value(self, name: str) -> float:
        return self.values.get(name, 0.0)


@dataclass
class EvalReport:
    objective: float
    violations: list[tuple[str, float]] = field(default_factory=list)

    @property
    def max_violation(self) -> float:
        return max((abs(v) for _, v in self.violations), default=0.0)

    @property
    def feasible(self) -> bool:
        return not self.violations


def evaluate(model: MilpModel, assignment: Assignment,
             tolerance: float = 1e-6) -> EvalReport:
    """Recompute the objective and list constraint/bound violations.

    Violations are signed slack beyond ``tolerance``; bounds and integrality
    of binaries are checked alongside the linear rows.
    """
    vals = [assignment.value(n) for n in model.var_names]
    obj = model.obj_constant
    for i, c in model.obj.items():
        obj += c * vals[i]
    violations = []
    for i, name in enumerate(model.var_names):
        v = vals[i]
        if v < model.var_lb[i] - tolerance:
            violations.append((f"lb:{name}", model.var_lb[i] - v))
        elif v > model.var_ub[i] + tolerance:
            violations.append((f"ub:{name}", v - model.var_ub[i]))
        if model.var_kinds[i] == BINARY and abs(v - round(v)) > tolerance:
            violations.append((f"int:{name}", abs(v - round(v))))
    for row in range(model.num_cons):
        lhs = 0.0
        for idx, coef in model.con_terms[row]:
            lhs += coef * vals[idx]
        rhs = model.con_rhs[row]
        sense = model.con_senses[row]
        if sense == LE and lhs > rhs + tolerance:
            violations.append((model.con_names[row], lhs - rhs))
        elif sense == GE and lhs < rhs - tolerance:
            violations.append((model.con_names[row], rhs - lhs))
        elif sense == EQ and abs(lhs - rhs) > tolerance:
            violations.append((model.con_names[row], lhs - rhs))
    return EvalReport(objective=obj, violations=violations)


# -- LP text format ---------------------------------------------------------
#
# minimize
#  obj: + 2 x + 3.5 y + 7
# subject to
#  c1: + 1 x - 1 y <= 4
# bounds
#  0 <= x <= 10
#  y free
# binaries
#  b1 b2
# end
#
# Every variable appears in the bounds section in declaration order, so the
# round trip preserves variable ordering exactly.


def export_lp(model: MilpModel) -> str:
    out = ["minimize"]
    parts = [" obj:"]
    for i in sorted(model.obj):
        c = model.obj[i]
        sign = "+" if c >= 0 else "-"
        parts.append(f" {sign} {_fmt(abs(c))} {model.var_names[i]}")
    if model.obj_constant != 0.0 or not model.obj:
        sign = "+" if model.obj_constant >= 0 else "-"
        parts.append(f" {sign} {_fmt(abs(model.obj_constant))}")
    out.append("".join(parts))
    out.append("subject to")
    for row in range(model.num_cons):
        parts = [f" {model.con_names[row]}:"]
        for idx, coef in model.con_terms[row]:
            sign = "+" if coef >= 0 else "-"
            parts.append(f" {sign} {_fmt(abs(coef))} {model.var_names[idx]}")
        if not model.con_terms[row]:
            parts.append(" + 0")
        parts.append(f" {model.con_senses[row]} {_fmt(model.con_rhs[row])}")
        out.append("".join(parts))
    out.append("bounds")
    for i, name in enumerate(model.var_names):
        lb, ub = model.var_lb[i], model.var_ub[i]
        if lb == -INF and ub == INF:
            out.append(f" {name} free")
        elif ub == INF:
            out.append(f" {_fmt(lb)} <= {name}")
        elif lb == -INF:
            out.append(f" {name} <= {_fmt(ub)}")
        else:
            out.append(f" {_fmt(lb)} <= {name} <= {_fmt(ub)}")
    bins = model.binary_indices()
    if bins:
        out.append("binaries")
        for i in bins:
            out.append(f" {model.var_names[i]}")
    out.append("end")
    return "\n".join(out) + "\n"


def _parse_terms(tokens: list[str], lineno: int) -> tuple[list[tuple[str, float]], float]:
    """Parse '+ c name - c name + c' token runs -> (terms, constant)."""
    terms = []
    constant = 0.0
    i = 0
    while i < len(tokens):
        sign = tokens[i]
        if sign not in ("+", "-"):
            raise LpParseError(f"expected sign, got {sign!r}", lineno, i)
        try:
            coef = float(tokens[i + 1])
        except (IndexError, ValueError):
            raise LpParseError("expected coefficient after sign", lineno, i + 1)
        if sign == "-":
            coef = -coef
        if i + 2 < len(tokens) and tokens[i + 2] not in ("+", "-"):
            terms.append((tokens[i + 2], coef))
            i += 3
        else:
            constant += coef
            i += 2
    return terms, constant


def parse_lp(text: str) -> MilpModel:
    """Parse canonical LP text back into a model (inverse of export_lp)."""
    model = MilpModel()
    section = None
    obj_terms: list[tuple[str, float]] = []
    cons: list[tuple[str, list[tuple[str, float]], str, float, int]] = []
    bounds: list[tuple[str, float, float]] = []
    binaries: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        low = line.lower()
        if low in ("minimize", "subject to", "bounds", "binaries", "end"):
            section = low
            continue
        tokens = line.split()
        if section == "minimize":
            if not tokens[0].endswith(":"):
                raise LpParseError("objective must start with 'obj:'", lineno, 0)
            obj_terms, model.obj_constant = _parse_terms(tokens[1:], lineno)
        elif section == "subject to":
            if not tokens[0].endswith(":"):
                raise LpParseError("constraint must start with 'name:'", lineno, 0)
            name = tokens[0][:-1]
            sense_pos = None
            for j, tok in enumerate(tokens):
                if tok in _SENSES:
                    sense_pos = j
                    break
            if sense_pos is None or sense_pos != len(tokens) - 2:
                raise LpParseError("constraint needs trailing 'sense rhs'", lineno)
            terms, const = _parse_terms(tokens[1:sense_pos], lineno)
            try:
                rhs = float(tokens[-1])
            except ValueError:
                raise LpParseError(f"bad rhs {tokens[-1]!r}", lineno, len(tokens) - 1)
            cons.append((name, terms, tokens[sense_pos], rhs - const, lineno))
        elif section == "bounds":
            if len(tokens) == 2 and tokens[1] == "free":
                bounds.append((tokens[0], -INF, INF))
            elif len(tokens) == 3 and tokens[1] == "<=":
                # 'lb <= name' or 'name <= ub'
                try:
                    lb = float(tokens[0])
                    bounds.append((tokens[2], lb, INF))
                except ValueError:
                    try:
                        ub = float(tokens[2])
                    except ValueError:
                        raise LpParseError("bad bound line", lineno)
                    bounds.append((tokens[0], -INF, ub))
            elif len(tokens) == 5 and tokens[1] == "<=" and tokens[3] == "<=":
                try:
                    bounds.append((tokens[2], float(tokens[0]), float(tokens[4])))
                except ValueError:
                    raise LpParseError("bad bound line", lineno)
            else:
                raise LpParseError("bad bound line", lineno)
        elif section == "binaries":
            binaries.extend(tokens)
        elif section == "end":
            raise LpParseError("content after 'end'", lineno)
        else:
            raise LpParseError("content before 'minimize' header", lineno)
    binary_set = set(binaries)
    for name, lb, ub in bounds:
        kind = BINARY if name in binary_set else CONTINUOUS
        model.add_var(name, kind, lb, ub)
    for name in binaries:
        if not model.has_var(name):
            raise LpParseError(f"binary {name} missing from bounds section")
    obj = {}
    for name, coef in obj_terms:
        if not model.has_var(name):
            raise LpParseError(f"objective references unknown variable {name}")
        obj[model.var_index(name)] = obj.get(model.var_index(name), 0.0) + coef
    model.obj = {i: c for i, c in obj.items() if c != 0.0}
    for name, terms, sense, rhs, lineno in cons:
        idx_terms = []
        for vname, coef in terms:
            if not model.has_var(vname):
                raise LpParseError(f"constraint {name} references unknown "
                                   f"variable {vname}", lineno)
            idx_terms.append((model.var_index(vname), coef))
        model.add_con(name, idx_terms, sense, rhs)
    return model


# -- solution file format ---------------------------------------------------
# line 1: status <word>
# line 2: obj <float>
# then:   <name> <value> pairs, one per line; missing variables default to 0.


def export_solution(assignment: Assignment) -> str:
    out = [f"status {assignment.status}", f"obj {_fmt(assignment.objective)}"]
    for name in sorted(assignment.values):
        out.append(f"{name} {_fmt(assignment.values[name])}")
    return "\n".join(out) + "\n"


def parse_solution(text: str, model: MilpModel) -> Assignment:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("status "):
        raise LpParseError("solution must start with 'status <word>'", 1)
    status = lines[0].split(None, 1)[1]
    if status in ("infeasible", "time-limit", "error") and len(lines) == 1:
        return Assignment(values={}, objective=INF, status=status)
    if len(lines) < 2 or not lines[1].startswith("obj "):
        raise LpParseError("solution line 2 must be 'obj <float>'", 2)
    try:
        obj = float(lines[1].split(None, 1)[1])
    except ValueError:
        raise LpParseError("unparseable objective value", 2)
    values = {name: 0.0 for name in model.var_names}
    for lineno, line in enumerate(lines[2:], start=3):
        parts = line.split()
        if len(parts) != 2:
            raise LpParseError("expected '<name> <value>'", lineno)
        name, sval = parts
        if name not in values:
            raise LpParseError(f"unknown variable name {name}", lineno)
        try:
            values[name] = float(sval)
        except ValueError:
            raise LpParseError(f"unparseable value {sval!r}", lineno)
    return Assignment(values=values, objective=obj, status=status)
