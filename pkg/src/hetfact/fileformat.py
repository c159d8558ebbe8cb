"""Reading and writing ``.net`` network documents.

A document is a JSON object::

    {
      "format_version": "1.0",
      "variables": [{"name": "a", "frame": ["no", "yes"]}, ...],
      "nodes": [
        {"variable": "a", "parents": [], "spec": {"kind": "cpt", "table": [0.4, 0.6]}},
        {"variable": "e1", "parents": ["a", "b"],
         "spec": {"kind": "noisy", "op": "or",
                  "contributions": [[...], [...]], "leak": [...]}}
      ]
    }

Variables are numbered in declaration order, and every flat table is laid
out in that order with the last variable varying fastest.  For a CPT of
``y`` with parent ``x``, where ``x`` is declared before ``y``::

    table = [P(y=0|x=0), P(y=1|x=0), P(y=0|x=1), P(y=1|x=1)]

If ``y`` were declared first the same table would read
``[P(y=0|x=0), P(y=0|x=1), P(y=1|x=0), P(y=1|x=1)]``.  Contribution tables
follow the same rule over ``{variable, parent}``.  ``op`` is a builtin
operator name or ``{"table": [[...], ...]}``.  The optional ``leak`` is a
table over the node variable alone.  Names may not end with the deputy
suffix ``'``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .factor import (
    BUILTIN_OPS,
    BaseCombinationOperator,
    FactorError,
    Variable,
    builtin_op,
    make_factor,
    validate_base_op,
)
from .network import (
    DEPUTY_SUFFIX,
    BayesianNetwork,
    FullCPT,
    NetworkError,
    Node,
    NoisyCPT,
    check_node,
)

FORMAT_VERSION = "1.0"


@dataclass
class Finding:
    location: str
    message: str

    def __str__(self):
        return f"{self.location}: {self.message}"


class DocumentError(ValueError):
    """A document failed to parse or validate; ``syntax`` marks JSON-level failures."""

    def __init__(self, findings: list[Finding], syntax: bool = False):
        self.findings = findings
        self.syntax = syntax
        super().__init__("\n".join(str(f) for f in findings))


def _flat_table(value, where, findings) -> list[float] | None:
    if not isinstance(value, list) or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in value
    ):
        findings.append(Finding(where, "expected a flat list of numbers"))
        return None
    return [float(x) for x in value]


def _operator(value, var: Variable, where, findings) -> BaseCombinationOperator | None:
    if isinstance(value, str):
        try:
            return builtin_op(value, var.frame_size)
        except FactorError as exc:
            findings.append(Finding(where, str(exc)))
            return None
    if isinstance(value, dict) and isinstance(value.get("table"), list):
        try:
            op = BaseCombinationOperator(var.frame_size, value["table"])
        except (FactorError, TypeError, ValueError) as exc:
            findings.append(Finding(where, f"bad operator table: {exc}"))
            return None
        report = validate_base_op(op)
        for problem in report.describe():
            findings.append(Finding(where, problem))
        return op if report.ok else None
    findings.append(Finding(where, f"operator must be one of {BUILTIN_OPS} or {{'table': ...}}"))
    return None


def _node(raw, i, variables, findings) -> Node | None:
    where = f"nodes[{i}]"
    if not isinstance(raw, dict):
        findings.append(Finding(where, "expected an object"))
        return None
    name = raw.get("variable")
    if name not in variables:
        findings.append(Finding(f"{where}.variable", f"unknown variable {name!r}"))
        return None
    var = variables[name]
    parent_names = raw.get("parents", [])
    if not isinstance(parent_names, list):
        findings.append(Finding(f"{where}.parents", "expected a list of names"))
        return None
    parents = []
    for j, p in enumerate(parent_names):
        if p not in variables:
            findings.append(Finding(f"{where}.parents[{j}]", f"unknown variable {p!r}"))
            return None
        parents.append(variables[p])
    spec_raw = raw.get("spec")
    if not isinstance(spec_raw, dict) or spec_raw.get("kind") not in ("cpt", "noisy"):
        findings.append(Finding(f"{where}.spec", "expected {'kind': 'cpt' | 'noisy', ...}"))
        return None
    before = len(findings)
    try:
        if spec_raw["kind"] == "cpt":
            table = _flat_table(spec_raw.get("table"), f"{where}.spec.table", findings)
            if table is None:
                return None
            spec = FullCPT(make_factor(sorted([var] + parents), table))
        else:
            op = _operator(spec_raw.get("op"), var, f"{where}.spec.op", findings)
            tables = spec_raw.get("contributions")
            if not isinstance(tables, list) or len(tables) != len(parents):
                findings.append(Finding(f"{where}.spec.contributions",
                                        "expected one table per parent"))
                return None
            contributions = []
            for j, (p, t) in enumerate(zip(parents, tables)):
                loc = f"{where}.spec.contributions[{j}]"
                t = _flat_table(t, loc, findings)
                if t is not None:
                    try:
                        contributions.append(make_factor(sorted([var, p]), t))
                    except FactorError as exc:
                        findings.append(Finding(loc, str(exc)))
            leak = None
            if spec_raw.get("leak") is not None:
                t = _flat_table(spec_raw["leak"], f"{where}.spec.leak", findings)
                if t is not None:
                    try:
                        leak = make_factor([var], t)
                    except FactorError as exc:
                        findings.append(Finding(f"{where}.spec.leak", str(exc)))
            if len(findings) > before or op is None:
                return None
            spec = NoisyCPT(op, tuple(contributions), leak)
        node = Node(var, tuple(parents), spec)
        check_node(node)
    except (FactorError, NetworkError) as exc:
        findings.append(Finding(where, str(exc)))
        return None
    return node


def check_document(text: str) -> tuple[BayesianNetwork | None, list[Finding], bool]:
    """Parse and validate, collecting every finding instead of stopping at the first.

    Returns ``(network or None, findings, syntax_error)``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        return None, [Finding(f"line {exc.lineno} column {exc.colno}", exc.msg)], True
    findings: list[Finding] = []
    if not isinstance(doc, dict):
        return None, [Finding("$", "document must be a JSON object")], False
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        findings.append(Finding("format_version", f"unsupported version {version!r}"))
    raw_vars = doc.get("variables")
    if not isinstance(raw_vars, list):
        return None, findings + [Finding("variables", "expected a list")], False
    variables: dict[str, Variable] = {}
    labels: dict[str, tuple[str, ...]] = {}
    for i, rv in enumerate(raw_vars):
        where = f"variables[{i}]"
        if not isinstance(rv, dict) or not isinstance(rv.get("name"), str):
            findings.append(Finding(where, "expected {'name': str, 'frame': [labels]}"))
            continue
        name, frame = rv["name"], rv.get("frame")
        if name.endswith(DEPUTY_SUFFIX) or not name:
            findings.append(Finding(f"{where}.name", f"invalid name {name!r} (reserved suffix)"))
            continue
        if name in variables:
            findings.append(Finding(f"{where}.name", f"duplicate variable {name!r}"))
            continue
        if not isinstance(frame, list) or len(frame) < 2 or len(set(map(str, frame))) != len(frame):
            findings.append(Finding(f"{where}.frame", "expected at least two distinct labels"))
            continue
        variables[name] = Variable(i, name, len(frame))
        labels[name] = tuple(str(x) for x in frame)
    raw_nodes = doc.get("nodes")
    if not isinstance(raw_nodes, list):
        return None, findings + [Finding("nodes", "expected a list")], False
    nodes = []
    defined = set()
    for i, rn in enumerate(raw_nodes):
        node = _node(rn, i, variables, findings)
        if node is not None:
            if node.variable.name in defined:
                findings.append(Finding(f"nodes[{i}]", f"{node.variable.name!r} defined twice"))
                continue
            defined.add(node.variable.name)
            nodes.append(node)
    for name in variables:
        if name not in defined and not any(
            isinstance(rn, dict) and rn.get("variable") == name for rn in raw_nodes
        ):
            findings.append(Finding("nodes", f"variable {name!r} has no node"))
    if findings:
        return None, findings, False
    try:
        nodes.sort(key=lambda n: n.variable.id)
        net = BayesianNetwork(tuple(nodes), labels)
    except (NetworkError, FactorError) as exc:
        return None, [Finding("nodes", str(exc))], False
    return net, [], False


def parse_network(text: str) -> BayesianNetwork:
    net, findings, syntax = check_document(text)
    if findings:
        raise DocumentError(findings, syntax)
    return net


def load_network(path) -> BayesianNetwork:
    with open(path, encoding="utf-8") as fh:
        return parse_network(fh.read())


def dump_network(net: BayesianNetwork) -> str:
    """Canonical serialization; parsing the result gives back an equal network."""
    variables = sorted(net.variables)
    if [v.id for v in variables] != list(range(len(variables))):
        raise NetworkError("only networks with ids 0..n-1 can be serialized")
    doc = {
        "format_version": FORMAT_VERSION,
        "variables": [
            {"name": v.name,
             "frame": list(net.labels.get(v.name, [str(i) for i in range(v.frame_size)]))}
            for v in variables
        ],
        "nodes": [],
    }
    for node in sorted(net.nodes, key=lambda n: n.variable.id):
        entry = {"variable": node.variable.name, "parents": [p.name for p in node.parents]}
        if isinstance(node.spec, FullCPT):
            entry["spec"] = {"kind": "cpt", "table": node.spec.factor.flat}
        else:
            op = node.spec.op
            spec = {
                "kind": "noisy",
                "op": op.kind if op.kind else {"table": [list(r) for r in op.table]},
                "contributions": [f.flat for f in node.spec.contributions],
            }
            if node.spec.leak is not None:
                spec["leak"] = node.spec.leak.flat
            entry["spec"] = spec
        doc["nodes"].append(entry)
    return json.dumps(doc, indent=2) + "\n"
