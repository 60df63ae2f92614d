"""Scenario configuration: loading and validation.

A scenario is a JSON object; see docs/report.md for the full schema.  Every
validation failure raises :class:`ConfigError` carrying the dotted path of the
offending field.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..crypto.policy import parse_policy
from ..errors import ConfigError, InvalidTopology, NameConventionViolation, PolicySyntaxError
from ..naming import check_prefix
from ..netsim import TopologySpec, build_topology
from ..wire import Name

SCHEMES = ("nac", "nac-abe")
ACTIONS = ("produce", "consume", "rotate", "compromise", "reencrypt", "link", "issue", "publish-policy",
           "clear-caches")
ROLES = ("managers", "authorities", "encryptors", "decryptors")


@dataclass
class EntityConfig:
    id: str
    role: str
    node: str
    fields: dict[str, Any]


@dataclass
class ScenarioConfig:
    name: str
    scheme: str
    seed: int
    topology: TopologySpec
    entities: dict[str, EntityConfig]
    policies: list[dict]
    script: list[dict]
    retry: dict = field(default_factory=dict)
    abe: dict = field(default_factory=dict)
    provision: bool = False
    source: dict = field(default_factory=dict)

    def by_role(self, role: str) -> list[EntityConfig]:
        return [e for e in self.entities.values() if e.role == role]


def _require(doc: dict, key: str, path: str, kind=None):
    if not isinstance(doc, dict) or key not in doc:
        raise ConfigError("missing field", f"{path}.{key}" if path else key)
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(f"expected {getattr(kind, '__name__', kind)}", f"{path}.{key}" if path else key)
    return value


def _prefix(value, path: str) -> Name:
    if not isinstance(value, str) or not value.startswith("/"):
        raise ConfigError("expected a name URI starting with '/'", path)
    try:
        return check_prefix(value)
    except NameConventionViolation as err:
        raise ConfigError(str(err), path) from None


def _load_topology(value, base_dir: Path, path: str) -> TopologySpec:
    if isinstance(value, str):
        file = (base_dir / value) if not os.path.isabs(value) else Path(value)
        try:
            value = json.loads(file.read_text())
        except OSError as err:
            raise ConfigError(f"cannot read topology file: {err.strerror}", path) from None
        except json.JSONDecodeError as err:
            raise ConfigError(f"topology file is not JSON: {err.msg}", path) from None
    try:
        spec = TopologySpec.from_dict(value)
    except InvalidTopology as err:
        raise ConfigError(str(err), path) from None
    if not spec.nodes:
        raise ConfigError("topology declares no nodes", f"{path}.nodes")
    try:
        build_topology(spec, trace=False)
    except (InvalidTopology, NameConventionViolation, ValueError, TypeError) as err:
        raise ConfigError(str(err), path) from None
    return spec


_ENTITY_FIELDS = {
    "managers": {"prefix": "name"},
    "authorities": {"prefix": "name"},
    "encryptors": {"prefix": "name", "manager": "entity", "granularity": "name"},
    "decryptors": {"prefix": "name"},
}


def parse_scenario(doc: Any, base_dir: str | Path = ".") -> ScenarioConfig:
    """Validate a decoded scenario document."""
    if not isinstance(doc, dict):
        raise ConfigError("scenario must be a JSON object", "$")
    base_dir = Path(base_dir)
    scheme = doc.get("scheme", "nac")
    if scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}", "scheme")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a non-negative integer", "seed")
    topology = _load_topology(_require(doc, "topology", ""), base_dir, "topology")
    nodes = {n.get("id") for n in topology.nodes}

    entities: dict[str, EntityConfig] = {}
    raw_entities = _require(doc, "entities", "", dict)
    for role, items in raw_entities.items():
        if role not in ROLES:
            raise ConfigError(f"unknown role {role!r}", f"entities.{role}")
        if not isinstance(items, list):
            raise ConfigError("expected a list", f"entities.{role}")
        for i, item in enumerate(items):
            path = f"entities.{role}[{i}]"
            ident = _require(item, "id", path, str)
            if ident in entities:
                raise ConfigError(f"duplicate entity id {ident!r}", f"{path}.id")
            node = _require(item, "node", path, str)
            if node not in nodes:
                raise ConfigError(f"undeclared node {node!r}", f"{path}.node")
            for key, kind in _ENTITY_FIELDS[role].items():
                value = _require(item, key, path)
                if kind == "name":
                    _prefix(value, f"{path}.{key}")
            entities[ident] = EntityConfig(ident, role, node, dict(item))

    def entity(ident, role: str, path: str) -> EntityConfig:
        e = entities.get(ident)
        if e is None or e.role != role:
            raise ConfigError(f"undeclared {role[:-1]} {ident!r}", path)
        return e

    for e in entities.values():
        if e.role == "encryptors":
            entity(e.fields["manager"], "managers", f"entities.encryptors[{e.id}].manager")
        if e.role == "decryptors" and scheme == "nac-abe":
            entity(e.fields.get("authority"), "authorities", f"entities.decryptors[{e.id}].authority")
            attrs = e.fields.get("attributes", [])
            if not isinstance(attrs, list) or not all(isinstance(a, str) and a for a in attrs):
                raise ConfigError("attributes must be a list of strings", f"entities.decryptors[{e.id}].attributes")
    if scheme == "nac-abe":
        if len(entities_of(entities, "authorities")) < 1:
            raise ConfigError("nac-abe scenarios need an attribute authority", "entities.authorities")
        for e in entities_of(entities, "managers"):
            entity(e.fields.get("authority"), "authorities", f"entities.managers[{e.id}].authority")

    policies = doc.get("policies", [])
    if not isinstance(policies, list):
        raise ConfigError("expected a list", "policies")
    for i, pol in enumerate(policies):
        path = f"policies[{i}]"
        entity(_require(pol, "manager", path), "managers", f"{path}.manager")
        _prefix(_require(pol, "granularity", path), f"{path}.granularity")
        if scheme == "nac":
            for j, d in enumerate(_require(pol, "authorized", path, list)):
                entity(d, "decryptors", f"{path}.authorized[{j}]")
        else:
            _check_policy(_require(pol, "policy", path, str), f"{path}.policy")

    script = doc.get("script", [])
    if not isinstance(script, list):
        raise ConfigError("expected a list", "script")
    last = 0
    for i, act in enumerate(script):
        path = f"script[{i}]"
        at = _require(act, "at", path, int)
        if at < last:
            raise ConfigError("script times must be nondecreasing", f"{path}.at")
        last = at
        kind = _require(act, "action", path, str)
        if kind not in ACTIONS:
            raise ConfigError(f"unknown action {kind!r}", f"{path}.action")
        _check_action(act, kind, path, entity, nodes, scheme)

    abe = doc.get("abe", {})
    if not isinstance(abe, dict):
        raise ConfigError("expected an object", "abe")
    windows = abe.get("windows")
    if windows is not None:
        labels = _require(windows, "labels", "abe.windows", list)
        if not labels or not all(isinstance(x, str) and x for x in labels):
            raise ConfigError("labels must be non-empty strings", "abe.windows.labels")
        if _require(windows, "duration_ms", "abe.windows", int) <= 0:
            raise ConfigError("must be positive", "abe.windows.duration_ms")
    retry = doc.get("retry", {})
    if not isinstance(retry, dict):
        raise ConfigError("expected an object", "retry")
    for key in retry:
        if key not in ("retries", "lifetime_ms", "factor") or not isinstance(retry[key], int) or retry[key] < 0:
            raise ConfigError("expected a non-negative integer retry setting", f"retry.{key}")

    return ScenarioConfig(
        name=str(doc.get("name", "scenario")), scheme=scheme, seed=seed, topology=topology, entities=entities,
        policies=policies, script=script, retry=retry, abe=abe, provision=bool(doc.get("provision", False)),
        source=doc,
    )


def entities_of(entities: dict[str, EntityConfig], role: str) -> list[EntityConfig]:
    return [e for e in entities.values() if e.role == role]


def _check_policy(text: str, path: str) -> None:
    try:
        parse_policy(text)
    except PolicySyntaxError as err:
        raise ConfigError(str(err), path) from None


def _check_action(act: dict, kind: str, path: str, entity, nodes: set, scheme: str) -> None:
    if kind == "produce":
        entity(_require(act, "entity", path), "encryptors", f"{path}.entity")
        _prefix(_require(act, "name", path), f"{path}.name")
        if ("content" in act) == ("size" in act):
            raise ConfigError("give exactly one of content or size", path)
        if "size" in act and (not isinstance(act["size"], int) or act["size"] < 0):
            raise ConfigError("must be a non-negative integer", f"{path}.size")
        if "content" in act and not isinstance(act["content"], str):
            raise ConfigError("expected a string", f"{path}.content")
    elif kind == "consume":
        entity(_require(act, "entity", path), "decryptors", f"{path}.entity")
        _prefix(_require(act, "name", path), f"{path}.name")
    elif kind in ("rotate", "compromise", "reencrypt"):
        if scheme != "nac":
            raise ConfigError(f"{kind} applies to the nac scheme only", f"{path}.action")
        entity(_require(act, "entity", path), "managers", f"{path}.entity")
        if kind == "compromise":
            entity(_require(act, "decryptor", path), "decryptors", f"{path}.decryptor")
        else:
            _prefix(_require(act, "granularity", path), f"{path}.granularity")
        if kind == "reencrypt":
            for j, e in enumerate(act.get("encryptors", [])):
                entity(e, "encryptors", f"{path}.encryptors[{j}]")
    elif kind == "link":
        for end in ("a", "b"):
            if _require(act, end, path, str) not in nodes:
                raise ConfigError("undeclared node", f"{path}.{end}")
        if _require(act, "state", path, str) not in ("up", "down"):
            raise ConfigError("state must be 'up' or 'down'", f"{path}.state")
    elif kind == "issue":
        if scheme != "nac-abe":
            raise ConfigError("issue applies to the nac-abe scheme only", f"{path}.action")
        entity(_require(act, "entity", path), "authorities", f"{path}.entity")
        entity(_require(act, "decryptor", path), "decryptors", f"{path}.decryptor")
    elif kind == "publish-policy":
        if scheme != "nac-abe":
            raise ConfigError("publish-policy applies to the nac-abe scheme only", f"{path}.action")
        entity(_require(act, "entity", path), "managers", f"{path}.entity")
        _prefix(_require(act, "granularity", path), f"{path}.granularity")
        _check_policy(_require(act, "policy", path, str), f"{path}.policy")


def load_scenario(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as err:
        raise ConfigError(f"cannot read scenario: {err.strerror}", str(path)) from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"not valid JSON: {err.msg} (line {err.lineno})", str(path)) from None
    return parse_scenario(doc, path.parent)
