"""Grid data model and case-file parsing.

A case file is a single JSON document with top-level keys ``base_mva``,
``buses``, ``branches`` and ``generators``.  All electrical quantities are
stored in per-unit on the system base after parsing; generator parameters
given on the machine base (h, d, xd_p) are rescaled at parse time so no
downstream code ever sees mixed bases.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import CaseError

BUS_KINDS = ("slack", "pv", "pq")


@dataclass(frozen=True)
class Bus:
    """Network bus.

    Attributes:
        id: unique integer identifier
        kind: one of "slack", "pv", "pq"
        p_load, q_load: demand in pu on the system base
        g_shunt, b_shunt: shunt conductance / susceptance in pu
        v_set: voltage setpoint magnitude, meaningful for slack/pv buses
    """

    id: int
    kind: str
    p_load: float = 0.0
    q_load: float = 0.0
    g_shunt: float = 0.0
    b_shunt: float = 0.0
    v_set: float = 1.0


@dataclass(frozen=True)
class Branch:
    """Series branch (line or transformer) between two buses.

    r, x are the series impedance in pu; b_ch is the *total* line charging
    susceptance (half is lumped at each end).
    """

    from_bus: int
    to_bus: int
    x: float
    r: float = 0.0
    b_ch: float = 0.0
    status: bool = True


@dataclass(frozen=True)
class Generator:
    """Synchronous generator attached to a bus.

    After parsing, h (inertia constant, s), d (damping, pu) and xd_p
    (transient reactance, pu) are on the *system* base.  mva_base records
    the machine rating the file used, so serialization can convert back.
    d may be None when the case file does not provide a damping value.
    """

    bus: int
    h: float
    xd_p: float
    p_gen: float = 0.0
    d: float | None = None
    mva_base: float = 0.0


@dataclass(frozen=True)
class NetworkCase:
    """Static grid description: buses, branches, generators at one MVA base."""

    base_mva: float
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    generators: tuple[Generator, ...]

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def n_gen(self) -> int:
        return len(self.generators)


@dataclass(frozen=True)
class Violation:
    """One broken case invariant; violations are data, not exceptions."""

    entity: str
    rule: str
    detail: str = ""

    def __str__(self):
        msg = f"{self.entity}: {self.rule}"
        return f"{msg} ({self.detail})" if self.detail else msg


def bus_positions(case: NetworkCase) -> dict[int, int]:
    """Map bus id -> row index in the case's bus ordering."""
    return {bus.id: i for i, bus in enumerate(case.buses)}


def bus_ids(case: NetworkCase) -> tuple[int, ...]:
    return tuple(bus.id for bus in case.buses)


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise CaseError(f"{where}: missing required field '{key}'")
    return obj[key]


def _number(obj: dict, key: str, where: str, default=None):
    if key not in obj:
        if default is None:
            raise CaseError(f"{where}: missing required field '{key}'")
        return float(default)
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise CaseError(f"{where}: field '{key}' must be a number, got {val!r}")
    return float(val)


def parse_case(text: str) -> NetworkCase:
    """Parse a JSON case file into a NetworkCase.

    Generator machine-base quantities are converted to the system base here:
    h and d scale by mva_base/base_mva, xd_p by base_mva/mva_base.

    Raises CaseError on syntax errors, missing sections, duplicate bus ids
    and dangling branch endpoints.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(raw, dict):
        raise CaseError("case file must contain a JSON object at top level")

    for section in ("base_mva", "buses", "branches", "generators"):
        if section not in raw:
            raise CaseError(f"missing required section '{section}'")

    base_mva = raw["base_mva"]
    if not isinstance(base_mva, (int, float)) or base_mva <= 0:
        raise CaseError(f"base_mva must be a positive number, got {base_mva!r}")
    base_mva = float(base_mva)

    buses = []
    seen_ids: set[int] = set()
    for k, entry in enumerate(raw["buses"]):
        where = f"buses[{k}]"
        bid = _require(entry, "id", where)
        if not isinstance(bid, int) or isinstance(bid, bool):
            raise CaseError(f"{where}: bus id must be an integer, got {bid!r}")
        if bid in seen_ids:
            raise CaseError(f"{where}: duplicate bus id {bid}")
        seen_ids.add(bid)
        kind = _require(entry, "kind", where)
        if kind not in BUS_KINDS:
            raise CaseError(
                f"{where}: kind must be one of {BUS_KINDS}, got {kind!r}"
            )
        buses.append(
            Bus(
                id=bid,
                kind=kind,
                p_load=_number(entry, "p_load", where, 0.0),
                q_load=_number(entry, "q_load", where, 0.0),
                g_shunt=_number(entry, "g_shunt", where, 0.0),
                b_shunt=_number(entry, "b_shunt", where, 0.0),
                v_set=_number(entry, "v_set", where, 1.0),
            )
        )

    branches = []
    for k, entry in enumerate(raw["branches"]):
        where = f"branches[{k}]"
        fb = _require(entry, "from_bus", where)
        tb = _require(entry, "to_bus", where)
        for end, name in ((fb, "from_bus"), (tb, "to_bus")):
            if end not in seen_ids:
                raise CaseError(
                    f"{where}: {name} references nonexistent bus {end}"
                )
        if fb == tb:
            raise CaseError(f"{where}: from_bus and to_bus are both {fb}")
        status = entry.get("status", True)
        if isinstance(status, (int, bool)):
            status = bool(status)
        else:
            raise CaseError(f"{where}: status must be boolean or 0/1")
        branches.append(
            Branch(
                from_bus=fb,
                to_bus=tb,
                r=_number(entry, "r", where, 0.0),
                x=_number(entry, "x", where),
                b_ch=_number(entry, "b_ch", where, 0.0),
                status=status,
            )
        )

    generators = []
    for k, entry in enumerate(raw["generators"]):
        where = f"generators[{k}]"
        gbus = _require(entry, "bus", where)
        if gbus not in seen_ids:
            raise CaseError(f"{where}: bus references nonexistent bus {gbus}")
        mva = _number(entry, "mva_base", where, base_mva)
        if mva <= 0:
            raise CaseError(f"{where}: mva_base must be positive, got {mva}")
        to_sys = mva / base_mva
        d_raw = entry.get("d")
        if d_raw is not None and (isinstance(d_raw, bool) or not isinstance(d_raw, (int, float))):
            raise CaseError(f"{where}: field 'd' must be a number or omitted")
        generators.append(
            Generator(
                bus=gbus,
                p_gen=_number(entry, "p_gen", where, 0.0),
                h=_number(entry, "h", where) * to_sys,
                d=None if d_raw is None else float(d_raw) * to_sys,
                xd_p=_number(entry, "xd_p", where) / to_sys,
                mva_base=mva,
            )
        )

    return NetworkCase(
        base_mva=base_mva,
        buses=tuple(buses),
        branches=tuple(branches),
        generators=tuple(generators),
    )


def serialize_case(case: NetworkCase) -> str:
    """Inverse of parse_case: emits machine-base generator quantities."""
    doc = {
        "base_mva": case.base_mva,
        "buses": [
            {
                "id": b.id,
                "kind": b.kind,
                "p_load": b.p_load,
                "q_load": b.q_load,
                "g_shunt": b.g_shunt,
                "b_shunt": b.b_shunt,
                "v_set": b.v_set,
            }
            for b in case.buses
        ],
        "branches": [
            {
                "from_bus": br.from_bus,
                "to_bus": br.to_bus,
                "r": br.r,
                "x": br.x,
                "b_ch": br.b_ch,
                "status": br.status,
            }
            for br in case.branches
        ],
        "generators": [],
    }
    for g in case.generators:
        to_sys = g.mva_base / case.base_mva
        entry = {
            "bus": g.bus,
            "p_gen": g.p_gen,
            "h": g.h / to_sys,
            "xd_p": g.xd_p * to_sys,
            "mva_base": g.mva_base,
        }
        if g.d is not None:
            entry["d"] = g.d / to_sys
        doc["generators"].append(entry)
    return json.dumps(doc, indent=2)


def load_case(path) -> NetworkCase:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_case(fh.read())


def connected_components(case: NetworkCase) -> list[list[int]]:
    """Partition bus ids by reachability over in-service branches.

    Components are listed in order of their lowest-index bus; bus ids within
    a component are sorted.
    """
    adjacency: dict[int, list[int]] = {bus.id: [] for bus in case.buses}
    for br in case.branches:
        if br.status:
            adjacency[br.from_bus].append(br.to_bus)
            adjacency[br.to_bus].append(br.from_bus)

    seen: set[int] = set()
    components = []
    for bus in case.buses:
        if bus.id in seen:
            continue
        stack = [bus.id]
        group = []
        seen.add(bus.id)
        while stack:
            node = stack.pop()
            group.append(node)
            for nb in adjacency[node]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        components.append(sorted(group))
    return components


def validate_case(case: NetworkCase) -> list[Violation]:
    """Check all case invariants; returns an empty list iff the case is usable
    for analysis.  Never raises: violations are returned as data."""
    violations = []
    positions: dict[int, int] = {}
    for bus in case.buses:
        if bus.id in positions:
            violations.append(Violation(f"bus {bus.id}", "duplicate-id"))
        positions[bus.id] = 1
        if bus.kind not in BUS_KINDS:
            violations.append(
                Violation(f"bus {bus.id}", "invalid-kind", repr(bus.kind))
            )
        for name, val in (("p_load", bus.p_load), ("q_load", bus.q_load)):
            if not math.isfinite(val):
                violations.append(
                    Violation(f"bus {bus.id}", f"non-finite-{name}")
                )
        if bus.kind in ("slack", "pv") and not (
            math.isfinite(bus.v_set) and bus.v_set > 0
        ):
            violations.append(
                Violation(f"bus {bus.id}", "invalid-v-set", str(bus.v_set))
            )

    slack_ids = [b.id for b in case.buses if b.kind == "slack"]
    if not slack_ids:
        violations.append(Violation("case", "missing-slack"))
    elif len(slack_ids) > 1:
        violations.append(
            Violation("case", "duplicate-slack", f"buses {slack_ids}")
        )

    for k, br in enumerate(case.branches):
        entity = f"branch {br.from_bus}-{br.to_bus}[{k}]"
        if br.from_bus not in positions or br.to_bus not in positions:
            violations.append(Violation(entity, "dangling-endpoint"))
            continue
        if br.from_bus == br.to_bus:
            violations.append(Violation(entity, "self-loop"))
        if not math.isfinite(br.x) or br.x == 0.0:
            violations.append(Violation(entity, "zero-reactance", str(br.x)))

    if not case.generators:
        violations.append(Violation("case", "no-generators"))
    kind_of = {b.id: b.kind for b in case.buses}
    for k, g in enumerate(case.generators):
        entity = f"generator[{k}] at bus {g.bus}"
        if g.bus not in kind_of:
            violations.append(Violation(entity, "dangling-bus"))
            continue
        if kind_of[g.bus] == "pq":
            violations.append(Violation(entity, "generator-on-pq-bus"))
        if not (math.isfinite(g.h) and g.h > 0):
            violations.append(Violation(entity, "non-positive-inertia", str(g.h)))
        if not (math.isfinite(g.xd_p) and g.xd_p > 0):
            violations.append(
                Violation(entity, "non-positive-transient-reactance", str(g.xd_p))
            )

    if not any(v.rule == "dangling-endpoint" for v in violations):
        components = connected_components(case)
        if len(components) > 1:
            sizes = ", ".join(str(len(c)) for c in components)
            violations.append(
                Violation("case", "disconnected-graph", f"component sizes {sizes}")
            )

    return violations
