"""Scenario reports and their renderings (JSON, text table, CSV)."""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Any

from ..naming import classify
from ..wire import encode_packet

PACKET_TYPES = ("content", "ck", "kek", "kdk", "attribute-key", "notify")
TYPE_LABELS = {
    "content": "Content Data",
    "ck": "CK Data",
    "kek": "KEK Data",
    "kdk": "KDK Data",
    "attribute-key": "Attribute-key Data",
    "notify": "Notification Data",
}
SIGNATURE_TYPE_LABEL = "SHA256ECDSA"
KEY_PURPOSES = ("kek-discovery", "kek-from-notice", "ck", "kdk", "attribute-key", "notify-poll")
# name fragments that can only come from a key name
KEY_NAME_MARKERS = ("/KEK/", "/KDK/", "/CK/", "/ENCRYPTED-BY/", "/KEY/", "/ATTRIBUTE/")


@dataclass
class ScenarioReport:
    scenario: str
    scheme: str
    seed: int
    packets: list[dict]
    packet_types: dict[str, dict]
    links: dict[str, dict]
    crypto_ops: dict[str, dict[str, int]]
    outcomes: list[dict]
    produced: dict[str, str]
    interests: dict[str, list]
    stats: dict[str, int]
    finished_at: int
    trace_digest: str
    config_key_names: int
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario, "scheme": self.scheme, "seed": self.seed, "packets": self.packets,
            "packet_types": self.packet_types, "links": self.links, "crypto_ops": self.crypto_ops,
            "outcomes": self.outcomes, "produced": self.produced, "interests": self.interests,
            "stats": self.stats, "finished_at": self.finished_at, "trace_digest": self.trace_digest,
            "config_key_names": self.config_key_names, **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def count(self, packet_type: str) -> int:
        return self.packet_types.get(packet_type, {}).get("count", 0)

    def outcome_summary(self) -> list[dict]:
        return [{"index": o["index"], "action": o["action"], "entity": o["entity"], "name": o["name"],
                 "result": o["result"]} for o in self.outcomes]


def count_key_names(doc: Any) -> int:
    """Number of strings inside ``doc`` that look like key names."""
    if isinstance(doc, str):
        return int(any(m in doc + "/" for m in KEY_NAME_MARKERS))
    if isinstance(doc, dict):
        return sum(count_key_names(k) + count_key_names(v) for k, v in doc.items())
    if isinstance(doc, list):
        return sum(count_key_names(v) for v in doc)
    return 0


def build_report(scenario) -> ScenarioReport:
    net = scenario.net
    packets = []
    types: dict[str, dict] = {}
    for node, data in net.published:
        kind = classify(data.name)
        size = len(encode_packet(data))
        packets.append({"node": node, "type": kind, "name": data.name.to_uri(), "size": size})
        slot = types.setdefault(kind, {"count": 0, "bytes": 0})
        slot["count"] += 1
        slot["bytes"] += size
    links = {}
    for link in net.links:
        row = {}
        for sender in (link.a, link.b):
            receiver = link.other(sender)
            for kind in ("interest", "data"):
                key = f"{sender}->{receiver}:{kind}"
                row[key] = {"tx": link.tx[(sender, kind)], "bytes": link.tx_bytes[(sender, kind)],
                            "delivered": link.delivered[(sender, kind)], "dropped": link.dropped[(sender, kind)]}
        links[link.label] = row
    interests = {}
    for ident, ent in scenario.entities.items():
        if ent.interest_log:
            interests[ident] = [list(x) for x in ent.interest_log]
    return ScenarioReport(
        scenario=scenario.cfg.name, scheme=scenario.cfg.scheme, seed=scenario.seed, packets=packets,
        packet_types=dict(sorted(types.items())), links=links, crypto_ops=scenario.counter.snapshot(),
        outcomes=list(scenario.outcomes), produced=dict(sorted(scenario.produced.items())), interests=interests,
        stats=dict(sorted(net.stats.items())), finished_at=net.now, trace_digest=net.trace_digest(),
        config_key_names=count_key_names(scenario.cfg.source),
    )


def report_packet_sizes(report: ScenarioReport) -> list[dict]:
    """One row per packet type seen: the first instance's name and encoded size."""
    rows: dict[str, dict] = {}
    for p in report.packets:
        if p["type"] not in rows:
            rows[p["type"]] = {"packet": TYPE_LABELS.get(p["type"], p["type"]), "type": p["type"],
                               "name": p["name"], "size": p["size"], "signature_type": SIGNATURE_TYPE_LABEL}
    order = {t: i for i, t in enumerate(PACKET_TYPES)}
    return sorted(rows.values(), key=lambda r: order.get(r["type"], len(order)))


def key_interest_count(report: ScenarioReport) -> int:
    return sum(1 for log in report.interests.values() for _, purpose in log if purpose in KEY_PURPOSES)


def interests_by_purpose(report: ScenarioReport) -> Counter:
    return Counter(purpose for log in report.interests.values() for _, purpose in log)


# ------------------------------------------------------------ rendering

def format_table(rows: list[dict], columns: list[str] | None = None) -> str:
    if not rows:
        return "(no rows)\n"
    columns = columns or list(rows[0])
    cells = [[str(r.get(c, "")) for c in columns] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(columns)]
    line = "  ".join(c.ljust(w) for c, w in zip(columns, widths))
    out = [line, "  ".join("-" * w for w in widths)]
    out += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(x.rstrip() for x in out) + "\n"


def to_csv(rows: list[dict], columns: list[str] | None = None) -> str:
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=columns or list(rows[0]), extrasaction="ignore",
                                lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buf.getvalue()


def link_rows(report: ScenarioReport) -> list[dict]:
    rows = []
    for label, row in report.links.items():
        for direction, c in row.items():
            rows.append({"link": label, "direction": direction, **c})
    return rows


def crypto_rows(report: ScenarioReport) -> list[dict]:
    return [{"entity": ent, **ops} for ent, ops in report.crypto_ops.items()]


def render_text(report: ScenarioReport) -> str:
    parts = [f"scenario {report.scenario} (scheme {report.scheme}, seed {report.seed})\n"]
    parts.append("\nOutcomes\n" + format_table(report.outcome_summary()))
    counts = [{"type": t, **v} for t, v in report.packet_types.items()]
    parts.append("\nPublished Data\n" + format_table(counts))
    parts.append("\nPacket sizes\n" + format_table(report_packet_sizes(report),
                                                  ["packet", "size", "signature_type", "name"]))
    parts.append(f"\ntrace digest {report.trace_digest}\n")
    return "".join(parts)
