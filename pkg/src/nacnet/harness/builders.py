"""Generated scenarios: full-authorization scaling runs and the packet-size setup."""

from __future__ import annotations

from dataclasses import dataclass

from .config import parse_scenario
from .report import KEY_PURPOSES, ScenarioReport, count_key_names, interests_by_purpose
from .runner import run_scenario

SIZE_DATA_NAME = "/producer/dataset1/example/data1"
SIZE_GRANULARITY = "/producer/dataset1/example"
SIZE_POLICY = "( attr1 and attr2 ) or attr3"
SIZE_CONTENT_BYTES = 128
SIZE_ATTRIBUTES = tuple(f"attr{i}" for i in range(1, 11))


@dataclass(frozen=True)
class ScaleParams:
    """n decryptors, m granularities, a attributes, x content Data packets."""

    n: int
    m: int
    a: int = 1
    x: int | None = None

    def __post_init__(self):
        if self.x is None:
            object.__setattr__(self, "x", self.m)
        if min(self.n, self.m, self.a, self.x) < 0:
            raise ValueError("scale parameters must be non-negative")
        if self.a < 1:
            raise ValueError("at least one attribute is needed")


def _star(extra_nodes: list[dict]) -> dict:
    nodes = [{"id": "manager", "prefixes": ["/manager", "/authority"]}, {"id": "hub"}] + extra_nodes
    links = [{"a": "hub", "b": n["id"], "delay_ms": 5} for n in nodes if n["id"] != "hub"]
    return {"nodes": nodes, "links": links, "auto_routes": True}


def scale_config(scheme: str, params: ScaleParams, provider: str = "simulated", seed: int = 0) -> dict:
    """Scenario document in which every decryptor is authorized for every granularity."""
    abe = scheme == "nac-abe"
    grans = [f"/producer/g{i}" for i in range(params.m)]
    attrs = [f"attr{i}" for i in range(1, params.a + 1)]
    entities: dict = {
        "managers": [{"id": "manager", "node": "manager", "prefix": "/manager"}],
        "encryptors": [{"id": f"enc{i}", "node": "producer", "prefix": g, "manager": "manager", "granularity": g}
                       for i, g in enumerate(grans)],
        "decryptors": [{"id": f"dec{j}", "node": "consumers", "prefix": f"/consumer/c{j}"} for j in range(params.n)],
    }
    if abe:
        entities["authorities"] = [{"id": "authority", "node": "manager", "prefix": "/authority"}]
        entities["managers"][0]["authority"] = "authority"
        for d in entities["decryptors"]:
            d.update(authority="authority", attributes=attrs)
        policies = [{"manager": "manager", "granularity": g, "policy": " AND ".join(attrs)} for g in grans]
    else:
        policies = [{"manager": "manager", "granularity": g, "authorized": [d["id"] for d in entities["decryptors"]]}
                    for g in grans]
    script = []
    names = []
    for k in range(params.x if params.m else 0):
        i = k % params.m
        name = f"{grans[i]}/data{k}"
        names.append(name)
        script.append({"at": 0, "action": "produce", "entity": f"enc{i}", "name": name, "size": 128})
    # one content per second so a decryptor never races itself for the same key
    for k, name in enumerate(names):
        for d in entities["decryptors"]:
            script.append({"at": 1000 * (k + 1), "action": "consume", "entity": d["id"], "name": name})
    doc = {"name": f"scale-{scheme}-n{params.n}-m{params.m}-a{params.a}-x{params.x}", "scheme": scheme,
           "seed": seed, "topology": _star([{"id": "producer", "prefixes": ["/producer"]}, {"id": "consumers"}]),
           "entities": entities, "policies": policies, "script": script, "provision": abe}
    if abe:
        doc["abe"] = {"provider": provider}
    return doc


def predicted_counts(scheme: str, params: ScaleParams) -> dict[str, int]:
    with_content = min(params.m, params.x)
    counts = {"kek": params.m, "content": params.x if params.m else 0, "ck": with_content}
    if scheme == "nac":
        counts["kdk"] = params.m * params.n
    else:
        counts["attribute-key"] = params.n
    return counts


def predicted_ops(scheme: str, params: ScaleParams) -> dict[str, dict[str, int]]:
    """Exact crypto-op counts implied by the protocol for a scale scenario."""
    cold = min(params.m, params.x)  # distinct CKs each decryptor must unwrap
    if scheme == "nac":
        return {
            "manager": {"keygen_asym": params.m, "rsa_encrypt": params.m * params.n},
            "decryptors": {"rsa_decrypt": 2 * params.n * cold},
        }
    return {
        "authority": {"abe_setup": 1, "abe_keygen": params.n, "rsa_encrypt": params.n},
        "decryptors": {"rsa_decrypt": params.n, "abe_decrypt": params.n * cold},
    }


def _measured_ops(report: ScenarioReport, scheme: str) -> dict[str, dict[str, int]]:
    ops = report.crypto_ops
    dec = [v for k, v in ops.items() if k.startswith("dec")]
    if scheme == "nac":
        mgr = ops.get("manager", {})
        return {
            "manager": {"keygen_asym": mgr.get("keygen_asym", 0), "rsa_encrypt": mgr.get("rsa_encrypt", 0)},
            "decryptors": {"rsa_decrypt": sum(d["rsa_decrypt"] for d in dec)},
        }
    auth = ops.get("authority", {})
    return {
        "authority": {k: auth.get(k, 0) for k in ("abe_setup", "abe_keygen", "rsa_encrypt")},
        "decryptors": {"rsa_decrypt": sum(d["rsa_decrypt"] for d in dec),
                       "abe_decrypt": sum(d["abe_decrypt"] for d in dec)},
    }


def report_scaling(scheme: str, params: ScaleParams, provider: str = "simulated", seed: int = 0) -> dict:
    """Run the full-authorization scenario and compare published key Data with the predicted counts."""
    report = run_scenario(parse_scenario(scale_config(scheme, params, provider, seed)))
    predicted = predicted_counts(scheme, params)
    measured = {k: report.count(k) for k in predicted}
    failures = sum(1 for o in report.outcomes if o["result"] != "ok")
    return {
        "scheme": scheme, "n": params.n, "m": params.m, "a": params.a, "x": params.x,
        "predicted": predicted, "measured": measured, "match": predicted == measured,
        "predicted_ops": predicted_ops(scheme, params), "measured_ops": _measured_ops(report, scheme),
        "failed_actions": failures, "trace_digest": report.trace_digest,
    }


_BINDING_FIELDS = ("prefix", "manager", "granularity", "authority")


def config_bindings(doc: dict) -> dict[str, list[int]]:
    """Manually configured name bindings per entity, grouped by role."""
    out: dict[str, list[int]] = {}
    for role, items in doc.get("entities", {}).items():
        out[role] = [sum(1 for f in _BINDING_FIELDS if f in item) for item in items]
    return out


def report_config_burden(scheme: str, params: ScaleParams) -> dict:
    """Per-role configuration counts for ``params`` next to a one-of-everything baseline."""
    doc = scale_config(scheme, params)
    base = scale_config(scheme, ScaleParams(1, 1, params.a, 1))
    per_role = {role: sorted(set(v)) for role, v in config_bindings(doc).items() if v}
    baseline = {role: sorted(set(v)) for role, v in config_bindings(base).items() if v}
    return {
        "scheme": scheme, "n": params.n, "m": params.m, "x": params.x,
        "per_role": per_role, "baseline": baseline,
        "constant": all(per_role[r] == baseline.get(r) for r in per_role),
        "key_names_in_config": count_key_names(doc),
    }


def packet_size_config(scheme: str, provider: str = "bsw07", seed: int = 0) -> dict:
    """The reference setup: 128-byte content under a fixed name, granularity and policy."""
    abe = scheme == "nac-abe"
    entities: dict = {
        "managers": [{"id": "manager", "node": "manager", "prefix": "/manager"}],
        "encryptors": [{"id": "producer", "node": "producer", "prefix": "/producer", "manager": "manager",
                        "granularity": SIZE_GRANULARITY}],
        "decryptors": [{"id": "consumer", "node": "consumers", "prefix": "/consumer"}],
    }
    if abe:
        entities["authorities"] = [{"id": "authority", "node": "manager", "prefix": "/authority"}]
        entities["managers"][0]["authority"] = "authority"
        entities["decryptors"][0].update(authority="authority", attributes=list(SIZE_ATTRIBUTES))
        policies = [{"manager": "manager", "granularity": SIZE_GRANULARITY, "policy": SIZE_POLICY}]
    else:
        policies = [{"manager": "manager", "granularity": SIZE_GRANULARITY, "authorized": ["consumer"]}]
    doc = {
        "name": f"packet-sizes-{scheme}", "scheme": scheme, "seed": seed,
        "topology": _star([{"id": "producer", "prefixes": ["/producer"]}, {"id": "consumers"}]),
        "entities": entities, "policies": policies,
        "script": [
            {"at": 0, "action": "produce", "entity": "producer", "name": SIZE_DATA_NAME, "size": SIZE_CONTENT_BYTES},
            {"at": 1000, "action": "consume", "entity": "consumer", "name": SIZE_DATA_NAME},
        ],
    }
    if abe:
        doc["abe"] = {"provider": provider}
    return doc


def key_interest_summary(report: ScenarioReport) -> dict[str, int]:
    counts = interests_by_purpose(report)
    return {p: counts[p] for p in KEY_PURPOSES if counts[p]}
