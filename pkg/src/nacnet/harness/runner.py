"""Builds the entities of a scenario on a simulated network and plays its script."""

from __future__ import annotations

import hashlib

from ..app import CryptoOpCounter, RetryPolicy, TrustStore
from ..crypto.rsa import generate_rsa_keypair
from ..errors import NacError, NameConventionViolation
from ..nac import AccessManager, Decryptor, Encryptor
from ..nacabe import AbeAccessManager, AbeDecryptor, AbeEncryptor, AttributeAuthority, WindowSchedule
from ..netsim import LinkState, build_topology
from ..rng import DeterministicRng
from ..wire import IdentityKeyPair, Name
from .config import ScenarioConfig
from .report import ScenarioReport, build_report


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class Scenario:
    """A scenario instantiated on a fresh network; call :meth:`run` once."""

    def __init__(self, cfg: ScenarioConfig, seed: int | None = None, trace: bool = True):
        self.cfg = cfg
        self.seed = cfg.seed if seed is None else seed
        self.net = build_topology(cfg.topology, seed=self.seed, trace=trace)
        self.rng = DeterministicRng(self.seed).fork("entities")
        self.trust = TrustStore()
        self.counter = CryptoOpCounter()
        self.retry = RetryPolicy(
            retries=cfg.retry.get("retries", 3),
            lifetime=cfg.retry.get("lifetime_ms", 4000),
            factor=cfg.retry.get("factor", 2),
        )
        windows = cfg.abe.get("windows")
        self.schedule = (WindowSchedule(tuple(windows["labels"]), windows["duration_ms"], windows.get("start_ms", 0))
                         if windows else None)
        self.entities: dict = {}
        self.outcomes: list[dict | None] = [None] * len(cfg.script)
        self.produced: dict[str, str] = {}
        self._build()

    # -- construction
    def _common(self, ident: str, node: str, prefix: str) -> dict:
        identity = IdentityKeyPair.generate(Name(prefix), self.rng.fork(f"identity:{ident}"))
        return dict(net=self.net, node=node, identity=identity, trust=self.trust,
                    rng=self.rng.fork(f"entity:{ident}"), ops=self.counter.for_entity(ident),
                    retry=self.retry, label=ident)

    def _build(self) -> None:
        cfg, abe = self.cfg, self.cfg.scheme == "nac-abe"
        for e in cfg.by_role("authorities"):
            self.entities[e.id] = AttributeAuthority(
                **self._common(e.id, e.node, e.fields["prefix"]), prefix=e.fields["prefix"],
                provider=e.fields.get("provider", cfg.abe.get("provider", "simulated")), schedule=self.schedule)
        for e in cfg.by_role("managers"):
            kw = self._common(e.id, e.node, e.fields["prefix"])
            if abe:
                params = self.entities[e.fields["authority"]].params
                self.entities[e.id] = AbeAccessManager(**kw, prefix=e.fields["prefix"], params=params,
                                                       schedule=self.schedule)
            else:
                self.entities[e.id] = AccessManager(**kw, prefix=e.fields["prefix"])
        for e in cfg.by_role("encryptors"):
            mgr = self.entities[e.fields["manager"]]
            cls = AbeEncryptor if abe else Encryptor
            self.entities[e.id] = cls(
                **self._common(e.id, e.node, e.fields["prefix"]), producer_prefix=e.fields["prefix"],
                manager_prefix=mgr.prefix, granularity=e.fields["granularity"],
                embed_ck=bool(e.fields.get("embed_ck", False)))
        for e in cfg.by_role("decryptors"):
            kw = self._common(e.id, e.node, e.fields["prefix"])
            key_rng = self.rng.fork(f"encryption-key:{e.id}")
            key_pair = generate_rsa_keypair(key_rng, ops=kw["ops"])
            key_id = key_rng.hex_id()
            if abe:
                auth = self.entities[e.fields["authority"]]
                dec = AbeDecryptor(**kw, prefix=e.fields["prefix"], encryption_key=key_pair, encryption_key_id=key_id,
                                   authority_prefix=auth.prefix, attribute_hints=e.fields.get("attributes", ()))
                auth.grant(dec.credential, e.fields.get("attributes", ()))
            else:
                dec = Decryptor(**kw, prefix=e.fields["prefix"], encryption_key=key_pair, encryption_key_id=key_id)
            self.entities[e.id] = dec

    def _setup_policies(self) -> None:
        for pol in self.cfg.policies:
            mgr = self.entities[pol["manager"]]
            if self.cfg.scheme == "nac":
                mgr.define_policy(pol["granularity"], [self.entities[d].credential for d in pol["authorized"]])
            else:
                mgr.publish_policy_kek(pol["granularity"], pol["policy"])
        if self.cfg.scheme == "nac-abe" and self.cfg.provision:
            for e in self.cfg.by_role("decryptors"):
                if e.fields.get("attributes"):
                    self.entities[e.fields["authority"]].issue(e.fields["prefix"])

    # -- script
    def _record(self, i: int, result: str, detail: str = "", digest: str | None = None, **extra) -> None:
        act = self.cfg.script[i]
        row = {"index": i, "at": act["at"], "action": act["action"], "entity": act.get("entity", ""),
               "name": act.get("name", act.get("granularity", "")), "result": result, "detail": detail,
               "sha256": digest, "finished_at": self.net.now}
        row.update(extra)
        self.outcomes[i] = row

    def _guard(self, i: int, gen, on_ok):
        try:
            value = yield from gen
        except NacError as err:
            self._record(i, type(err).__name__, str(err))
            return
        on_ok(value)

    def _produce_plaintext(self, i: int, act: dict) -> bytes:
        if "content" in act:
            return act["content"].encode()
        return self.rng.fork(f"content:{i}").bytes(act["size"])

    def _start(self, i: int) -> None:
        act = self.cfg.script[i]
        kind = act["action"]
        ent = self.entities.get(act.get("entity"))
        try:
            if kind == "produce":
                name = Name(act["name"])
                if not ent.producer_prefix.is_prefix_of(name):
                    raise NameConventionViolation(f"{name} is not under {ent.producer_prefix}")
                plaintext = self._produce_plaintext(i, act)

                def done(packets, name=name, plaintext=plaintext):
                    self.produced[name.to_uri()] = sha256_hex(plaintext)
                    self._record(i, "ok", digest=sha256_hex(plaintext),
                                 published=[p.name.to_uri() for p in packets])

                self.net.spawn(self._guard(i, ent.produce(name[len(ent.producer_prefix):], plaintext), done))
            elif kind == "consume":
                self.net.spawn(self._guard(i, ent.consume(act["name"]),
                                           lambda pt: self._record(i, "ok", digest=sha256_hex(pt))))
            elif kind == "rotate":
                ent.rotate(act["granularity"])
                self._record(i, "ok")
            elif kind == "compromise":
                ent.report_compromised(self.entities[act["decryptor"]].prefix)
                self._record(i, "ok")
            elif kind == "reencrypt":
                encs = [self.entities[e] for e in act.get("encryptors", [])]
                procs = ent.trigger_reencrypt(act["granularity"], encs)
                self._record(i, "ok", notified=len(procs))
            elif kind == "link":
                self.net.set_link_state((act["a"], act["b"]), LinkState(act["state"]))
                self._record(i, "ok")
            elif kind == "issue":
                data = ent.issue(self.entities[act["decryptor"]].prefix)
                self._record(i, "ok", published=[data.name.to_uri()])
            elif kind == "publish-policy":
                data = ent.publish_policy_kek(act["granularity"], act["policy"])
                self._record(i, "ok", published=[data.name.to_uri()])
            elif kind == "clear-caches":
                self.net.clear_caches()
                self._record(i, "ok")
        except NacError as err:
            self._record(i, type(err).__name__, str(err))

    def run(self) -> ScenarioReport:
        self._setup_policies()
        for i, act in enumerate(self.cfg.script):
            self.net.schedule_at(act["at"], self._start, i)
        self.net.run_until_idle()
        for i, row in enumerate(self.outcomes):
            if row is None:
                self._record(i, "Unfinished")
        return build_report(self)


def run_scenario(cfg: ScenarioConfig, seed: int | None = None) -> ScenarioReport:
    """Run ``cfg`` to completion; entity failures become recorded outcomes."""
    return Scenario(cfg, seed).run()
