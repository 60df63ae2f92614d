"""Deterministic discrete-event simulation of a small NDN network.

Each node runs a forwarder with a static FIB (longest-prefix match), a PIT
that aggregates identical Interests from different downstream faces, an LRU
content store honouring Data freshness, and an unbounded repo for Data that
applications publish explicitly.  Links carry encoded packet bytes, so taps
can observe or mutate traffic in flight.

Applications are written as generator "processes" that ``yield`` an
:class:`Express` (resumed with the Data, or with :class:`InterestTimeout` /
:class:`NoRoute` thrown in) or a :class:`Sleep`.
"""

from __future__ import annotations

import enum
import hashlib
import heapq
import json
from collections import Counter, OrderedDict
from dataclasses import dataclass, field
from typing import Any, Callable, Generator

from .errors import InvalidTopology, MalformedPacket, NacError
from .rng import DeterministicRng
from .wire import DataPacket, InterestPacket, Name, decode_packet, encode_packet

DEFAULT_CS_CAPACITY = 1024


class InterestTimeout(NacError):
    pass


class NoRoute(NacError):
    pass


class LinkState(enum.Enum):
    UP = "up"
    DOWN = "down"


@dataclass
class Link:
    a: str
    b: str
    delay: int
    state: LinkState = LinkState.UP
    generation: int = 0
    taps: list = field(default_factory=list)
    # (sender, kind) -> count; kind is "interest" or "data"
    tx: Counter = field(default_factory=Counter)
    tx_bytes: Counter = field(default_factory=Counter)
    delivered: Counter = field(default_factory=Counter)
    dropped: Counter = field(default_factory=Counter)

    def __post_init__(self):
        if self.delay <= 0:
            raise InvalidTopology(f"link {self.a}-{self.b}: delay must be > 0")

    @property
    def label(self) -> str:
        return f"{self.a}--{self.b}"

    def other(self, node: str) -> str:
        return self.b if node == self.a else self.a


@dataclass
class _CsEntry:
    data: DataPacket
    expires_at: int
    seq: int


class ContentStore:
    """Bounded LRU cache of Data; stale entries (past freshness) never match."""

    def __init__(self, capacity: int = DEFAULT_CS_CAPACITY):
        self.capacity = capacity
        self._entries: OrderedDict[Name, _CsEntry] = OrderedDict()
        self._seq = 0

    def __len__(self) -> int:
        return len(self._entries)

    def insert(self, data: DataPacket, now: int) -> None:
        if self.capacity <= 0:
            return
        self._seq += 1
        self._entries.pop(data.name, None)
        self._entries[data.name] = _CsEntry(data, now + data.freshness_period, self._seq)
        while len(self._entries) > self.capacity:
            self._entries.popitem(last=False)

    def lookup(self, interest: InterestPacket, now: int) -> DataPacket | None:
        if not interest.can_be_prefix:
            entry = self._entries.get(interest.name)
            best = entry if entry is not None and entry.expires_at > now else None
        else:
            best = None
            for name, entry in self._entries.items():
                if entry.expires_at > now and interest.name.is_prefix_of(name):
                    if best is None or entry.seq > best.seq:
                        best = entry
        if best is None:
            return None
        self._entries.move_to_end(best.data.name)
        return best.data

    def clear(self) -> None:
        self._entries.clear()


class Repo:
    """Unbounded named storage; republishing a name replaces it, newest wins on prefix match."""

    def __init__(self):
        self._entries: dict[Name, tuple[DataPacket, int]] = {}
        self._seq = 0

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return (d for d, _ in self._entries.values())

    def put(self, data: DataPacket) -> None:
        self._seq += 1
        self._entries.pop(data.name, None)
        self._entries[data.name] = (data, self._seq)

    def lookup(self, interest: InterestPacket) -> DataPacket | None:
        if not interest.can_be_prefix:
            hit = self._entries.get(interest.name)
            return hit[0] if hit else None
        best = None
        for name, (data, seq) in self._entries.items():
            if interest.name.is_prefix_of(name) and (best is None or seq > best[1]):
                best = (data, seq)
        return best[0] if best else None


@dataclass
class _PitEntry:
    in_records: dict = field(default_factory=dict)  # face -> expiry
    nonces: set = field(default_factory=set)


@dataclass(frozen=True)
class AppFace:
    pending_id: int


class Node:
    def __init__(self, label: str, cs_capacity: int = DEFAULT_CS_CAPACITY):
        self.label = label
        self.cs = ContentStore(cs_capacity)
        self.repo = Repo()
        self.fib: list[tuple[Name, str]] = []
        self.pit: dict[tuple[Name, bool], _PitEntry] = {}
        self.producers: list[tuple[Name, Callable[[InterestPacket], DataPacket | None]]] = []
        self.faces: dict[str, Link] = {}

    def add_route(self, prefix: Name, next_hop: str) -> None:
        self.fib.append((Name(prefix), next_hop))

    def lookup_fib(self, name: Name) -> str | None:
        best: tuple[int, str] | None = None
        for prefix, hop in self.fib:
            if prefix.is_prefix_of(name) and (best is None or len(prefix) > best[0]):
                best = (len(prefix), hop)
        return best[1] if best else None


# ------------------------------------------------------------- processes

@dataclass(frozen=True)
class Express:
    node: str
    interest: InterestPacket


@dataclass(frozen=True)
class Sleep:
    ms: int


class Process:
    def __init__(self, net: "Network", gen: Generator, name: str = ""):
        self.net = net
        self.gen = gen
        self.name = name
        self.done = False
        self.value: Any = None
        self.error: BaseException | None = None

    def _step(self, value=None, exc: BaseException | None = None) -> None:
        try:
            cmd = self.gen.throw(exc) if exc is not None else self.gen.send(value)
        except StopIteration as stop:
            self.done, self.value = True, stop.value
            return
        except Exception as err:  # recorded, surfaced by result()
            self.done, self.error = True, err
            return
        if isinstance(cmd, Express):
            self.net.express_interest(cmd.node, cmd.interest, self._resume)
        elif isinstance(cmd, Sleep):
            self.net.schedule(cmd.ms, self._step)
        else:
            self._step(exc=TypeError(f"process yielded unsupported command {cmd!r}"))

    def _resume(self, result) -> None:
        if isinstance(result, BaseException):
            self._step(exc=result)
        else:
            self._step(result)

    def result(self):
        if not self.done:
            raise RuntimeError(f"process {self.name!r} has not finished")
        if self.error is not None:
            raise self.error
        return self.value


# ------------------------------------------------------------- network

class Network:
    """A single-threaded event loop over nodes and links."""

    def __init__(self, seed: int = 0, trace: bool = True):
        self.now = 0
        self.rng = DeterministicRng(seed).fork("network")
        self.nodes: dict[str, Node] = {}
        self.links: list[Link] = []
        self._queue: list = []
        self._seq = 0
        self._pending: dict[int, Callable] = {}
        self._next_pending = 0
        self.trace_enabled = trace
        self.trace: list[tuple] = []
        self.stats: Counter = Counter()
        # node -> Counter of Interest names arriving from a link
        self.interest_arrivals: dict[str, list[tuple[int, str]]] = {}
        self.published: list[tuple[str, DataPacket]] = []

    # --- construction
    def add_node(self, label: str, cs_capacity: int = DEFAULT_CS_CAPACITY) -> Node:
        if label in self.nodes:
            raise InvalidTopology(f"duplicate node label {label!r}")
        node = Node(label, cs_capacity)
        self.nodes[label] = node
        self.interest_arrivals[label] = []
        return node

    def add_link(self, a: str, b: str, delay: int) -> Link:
        for end in (a, b):
            if end not in self.nodes:
                raise InvalidTopology(f"link references undeclared node {end!r}")
        if a == b or b in self.nodes[a].faces:
            raise InvalidTopology(f"invalid or duplicate link {a}-{b}")
        link = Link(a, b, delay)
        self.links.append(link)
        self.nodes[a].faces[b] = link
        self.nodes[b].faces[a] = link
        return link

    def add_route(self, node: str, prefix: Name | str, next_hop: str) -> None:
        if next_hop not in self.nodes[node].faces:
            raise InvalidTopology(f"route at {node!r} via non-neighbour {next_hop!r}")
        self.nodes[node].add_route(Name(prefix), next_hop)

    def link(self, a: str, b: str) -> Link:
        try:
            return self.nodes[a].faces[b]
        except KeyError:
            raise KeyError(f"no link {a}-{b}") from None

    # --- event loop
    def schedule(self, delay: int, fn: Callable, *args) -> None:
        self._seq += 1
        heapq.heappush(self._queue, (self.now + delay, self._seq, fn, args))

    def schedule_at(self, at: int, fn: Callable, *args) -> None:
        self.schedule(max(0, at - self.now), fn, *args)

    def _pop(self) -> None:
        t, _, fn, args = heapq.heappop(self._queue)
        self.now = t
        fn(*args)

    def advance(self, until: int) -> None:
        if until < self.now:
            raise ValueError("cannot advance backwards")
        while self._queue and self._queue[0][0] <= until:
            self._pop()
        self.now = until

    def run_until_idle(self) -> None:
        while self._queue:
            self._pop()

    def spawn(self, gen: Generator, name: str = "") -> Process:
        proc = Process(self, gen, name)
        self.schedule(0, proc._step)
        return proc

    def run(self, gen: Generator, name: str = ""):
        """Spawn ``gen`` and process events until it finishes; returns its result."""
        proc = self.spawn(gen, name)
        while not proc.done and self._queue:
            self._pop()
        return proc.result()

    # --- tracing
    def _log(self, event: str, node: str, peer: str, pkt, size: int) -> None:
        kind = "interest" if isinstance(pkt, InterestPacket) else "data"
        self.stats[f"{event}:{kind}"] += 1
        if self.trace_enabled:
            self.trace.append((self.now, event, node, peer, kind, pkt.name.to_uri(), size))

    def trace_bytes(self) -> bytes:
        return "\n".join(json.dumps(list(e), separators=(",", ":")) for e in self.trace).encode()

    def trace_digest(self) -> str:
        return hashlib.sha256(self.trace_bytes()).hexdigest()

    # --- application API
    def make_interest(self, name: Name, can_be_prefix: bool = False, lifetime: int = 4000) -> InterestPacket:
        return InterestPacket(Name(name), can_be_prefix, lifetime, self.rng.getrandbits(32))

    def express_interest(self, node: str, interest: InterestPacket, handler: Callable) -> int:
        if node not in self.nodes:
            raise KeyError(f"unknown node {node!r}")
        self._next_pending += 1
        pid = self._next_pending
        self._pending[pid] = handler
        self.stats["app-interest"] += 1
        self._log("express", node, "app", interest, len(encode_packet(interest)))
        self.schedule(interest.lifetime, self._app_timeout, pid, interest)
        self._on_interest(self.nodes[node], interest, AppFace(pid))
        return pid

    def _app_timeout(self, pid: int, interest: InterestPacket) -> None:
        handler = self._pending.pop(pid, None)
        if handler is not None:
            self.stats["app-timeout"] += 1
            handler(InterestTimeout(interest.name.to_uri()))

    def _deliver_app(self, pid: int, result) -> None:
        handler = self._pending.pop(pid, None)
        if handler is not None:
            self.schedule(0, handler, result)

    def publish(self, node: str, data: DataPacket) -> None:
        self.nodes[node].repo.put(data)
        self.published.append((node, data))
        self._log("publish", node, "app", data, len(encode_packet(data)))

    def register_producer(self, node: str, prefix: Name, callback: Callable[[InterestPacket], DataPacket | None]) -> None:
        """Serve Interests under ``prefix`` at ``node`` by calling ``callback`` (None means no answer)."""
        self.nodes[node].producers.append((Name(prefix), callback))

    def set_link_state(self, link: Link | tuple[str, str], state: LinkState | str) -> None:
        if not isinstance(link, Link):
            link = self.link(*link)
        state = LinkState(state)
        if state is link.state:
            return
        if state is LinkState.DOWN:
            link.generation += 1  # invalidates everything in flight
        link.state = state
        if self.trace_enabled:
            self.trace.append((self.now, "link-" + state.value, link.a, link.b, "", "", 0))

    def clear_caches(self) -> None:
        for node in self.nodes.values():
            node.cs.clear()
            node.pit.clear()

    # --- forwarding
    def _on_interest(self, node: Node, interest: InterestPacket, face) -> None:
        data = node.cs.lookup(interest, self.now)
        if data is not None:
            self.stats[f"cs-hit:{node.label}"] += 1
            self._send_data(node, face, data)
            return
        data = node.repo.lookup(interest)
        if data is not None:
            self.stats[f"repo-hit:{node.label}"] += 1
            self._send_data(node, face, data)
            return
        for prefix, callback in node.producers:
            if prefix.is_prefix_of(interest.name):
                data = callback(interest)
                if data is not None:
                    self.published.append((node.label, data))
                    self._log("produce", node.label, "app", data, len(encode_packet(data)))
                    node.cs.insert(data, self.now)
                    self._send_data(node, face, data)
                else:
                    # a declining producer stays silent; the consumer times out
                    self._log("unanswered", node.label, "app", interest, 0)
                return

        key = (interest.name, interest.can_be_prefix)
        entry = node.pit.get(key)
        if entry is not None:
            entry.in_records = {f: exp for f, exp in entry.in_records.items() if exp > self.now}
            if not entry.in_records:
                entry = None
                del node.pit[key]
        if entry is not None:
            if interest.nonce in entry.nonces:
                self._log("drop-loop", node.label, _face_label(face), interest, 0)
                return
            retransmission = face in entry.in_records
            entry.in_records[face] = self.now + interest.lifetime
            entry.nonces.add(interest.nonce)
            if not retransmission:
                self.stats["pit-aggregate"] += 1
                self._log("aggregate", node.label, _face_label(face), interest, 0)
                return
        else:
            entry = _PitEntry({face: self.now + interest.lifetime}, {interest.nonce})
            node.pit[key] = entry

        hop = node.lookup_fib(interest.name)
        if hop is None or hop == face:
            del entry.in_records[face]
            if not entry.in_records:
                node.pit.pop(key, None)
            self._log("no-route", node.label, _face_label(face), interest, 0)
            if isinstance(face, AppFace):
                self._deliver_app(face.pending_id, NoRoute(interest.name.to_uri()))
            return
        self._transmit(node, hop, interest)

    def _send_data(self, node: Node, face, data: DataPacket) -> None:
        if isinstance(face, AppFace):
            self._log("deliver", node.label, "app", data, len(encode_packet(data)))
            self._deliver_app(face.pending_id, data)
        else:
            self._transmit(node, face, data)

    def _transmit(self, node: Node, neighbour: str, pkt) -> None:
        link = node.faces[neighbour]
        wire = encode_packet(pkt)
        kind = "interest" if isinstance(pkt, InterestPacket) else "data"
        link.tx[(node.label, kind)] += 1
        link.tx_bytes[(node.label, kind)] += len(wire)
        self._log("tx", node.label, neighbour, pkt, len(wire))
        if link.state is LinkState.DOWN:
            link.dropped[(node.label, kind)] += 1
            self._log("drop-down", node.label, neighbour, pkt, len(wire))
            return
        for tap in link.taps:
            wire = tap(link, node.label, wire)
            if wire is None:
                link.dropped[(node.label, kind)] += 1
                return
        self.schedule(link.delay, self._arrive, link, link.generation, node.label, neighbour, kind, wire)

    def _arrive(self, link: Link, generation: int, sender: str, receiver: str, kind: str, wire: bytes) -> None:
        if link.generation != generation or link.state is LinkState.DOWN:
            link.dropped[(sender, kind)] += 1
            if self.trace_enabled:
                self.trace.append((self.now, "drop-inflight", receiver, sender, kind, "", len(wire)))
            return
        link.delivered[(sender, kind)] += 1
        try:
            pkt = decode_packet(wire)
        except MalformedPacket:
            self.stats["malformed"] += 1
            if self.trace_enabled:
                self.trace.append((self.now, "drop-malformed", receiver, sender, kind, "", len(wire)))
            return
        node = self.nodes[receiver]
        self._log("rx", receiver, sender, pkt, len(wire))
        if isinstance(pkt, InterestPacket):
            self.interest_arrivals[receiver].append((self.now, pkt.name.to_uri()))
            self._on_interest(node, pkt, sender)
        else:
            self._on_data(node, pkt, sender)

    def _on_data(self, node: Node, data: DataPacket, from_face: str) -> None:
        keys = [(data.name, False)] + [(data.name[:k], True) for k in range(len(data.name) + 1)]
        matched = [k for k in keys if k in node.pit]
        if not matched:
            self._log("drop-unsolicited", node.label, from_face, data, 0)
            return
        node.cs.insert(data, self.now)
        sent: set = set()
        for key in matched:
            entry = node.pit.pop(key)
            for face, expiry in entry.in_records.items():
                if expiry > self.now and face != from_face and face not in sent:
                    sent.add(face)
                    self._send_data(node, face, data)


def _face_label(face) -> str:
    return f"app#{face.pending_id}" if isinstance(face, AppFace) else face


# ------------------------------------------------------------- topology

@dataclass
class TopologySpec:
    nodes: list[dict]
    links: list[dict]
    routes: list[dict] = field(default_factory=list)
    auto_routes: bool = False

    @classmethod
    def from_dict(cls, doc: dict) -> "TopologySpec":
        if not isinstance(doc, dict):
            raise InvalidTopology("topology must be a JSON object")
        return cls(
            nodes=list(doc.get("nodes", [])),
            links=list(doc.get("links", [])),
            routes=list(doc.get("routes", [])),
            auto_routes=bool(doc.get("auto_routes", False)),
        )


def load_topology(path) -> TopologySpec:
    with open(path) as fh:
        return TopologySpec.from_dict(json.load(fh))


def _shortest_next_hops(net: Network, target: str) -> dict[str, str]:
    """For every node, the neighbour on a least-delay path to ``target`` (ties by label)."""
    dist = {target: 0}
    hop: dict[str, str] = {}
    heap = [(0, target)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v in sorted(net.nodes[u].faces):
            nd = d + net.nodes[u].faces[v].delay
            if nd < dist.get(v, float("inf")):
                dist[v] = nd
                hop[v] = u
                heapq.heappush(heap, (nd, v))
    return hop


def build_topology(spec: TopologySpec | dict, seed: int = 0, trace: bool = True) -> Network:
    if isinstance(spec, dict):
        spec = TopologySpec.from_dict(spec)
    if not spec.nodes:
        raise InvalidTopology("topology has no nodes")
    net = Network(seed=seed, trace=trace)
    for n in spec.nodes:
        if "id" not in n:
            raise InvalidTopology("node without id")
        net.add_node(n["id"], int(n.get("cs_capacity", DEFAULT_CS_CAPACITY)))
    for l in spec.links:
        try:
            net.add_link(l["a"], l["b"], int(l.get("delay_ms", 10)))
        except KeyError as err:
            raise InvalidTopology(f"link missing field {err}") from None
    for r in spec.routes:
        if r.get("node") not in net.nodes or r.get("next_hop") not in net.nodes:
            raise InvalidTopology(f"route references undeclared node: {r}")
        net.add_route(r["node"], Name(r["prefix"]), r["next_hop"])
    if spec.auto_routes:
        for n in spec.nodes:
            prefixes = n.get("prefixes", [])
            if not prefixes:
                continue
            hops = _shortest_next_hops(net, n["id"])
            for label in net.nodes:
                if label in hops:
                    for p in prefixes:
                        net.add_route(label, Name(p), hops[label])
    return net
