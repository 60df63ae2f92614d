import itertools
import json

import pytest

from nacnet.errors import (
    DuplicateGranularity, InvalidState, KekUnavailable, NameConventionViolation, NotAuthorized, SignatureInvalid,
    UnknownGranularity,
)
from nacnet.harness import bundled_path
from nacnet.nac import AccessManager, Decryptor, Encryptor
from nacnet.naming import CkDataName, KdkDataName, KekName, classify
from nacnet.payloads import ContentPayload
from nacnet.wire import Name
from conftest import LINE, World

HOUR = 3_600_000


def decryptor(w, node, prefix):
    return w.make(Decryptor, node, prefix, prefix=prefix, encryption_key=w.rsa(prefix), encryption_key_id="k1")


def manager(w, node="mgr", prefix="/mgr"):
    return w.make(AccessManager, node, prefix, prefix=prefix)


def encryptor(w, prefix, gran, node="prod", mgr="/mgr", **kw):
    return w.make(Encryptor, node, prefix, tag=gran, producer_prefix=prefix, manager_prefix=mgr, granularity=gran, **kw)


def outcome(w, gen):
    try:
        return w.net.run(gen)
    except (NotAuthorized, KekUnavailable, SignatureInvalid) as err:
        return type(err).__name__


# ------------------------------------------------------------ manager

def test_define_policy_publishes_kek_and_one_kdk_per_decryptor(world):
    mgr = manager(world)
    decs = [decryptor(world, "cons", f"/cons/d{i}") for i in range(3)]
    packets = mgr.define_policy("/prod", [d.credential for d in decs])
    assert [classify(p.name) for p in packets] == ["kek", "kdk", "kdk", "kdk"]
    assert packets[0].content == mgr.policies[Name("/prod")].kek_kdk.public_key  # KEK in plaintext
    owners = {KdkDataName.parse(p.name).decryptor_prefix for p in packets[1:]}
    assert owners == {d.prefix for d in decs}


def test_zero_decryptors_publishes_kek_only(world):
    assert [classify(p.name) for p in manager(world).define_policy("/prod", [])] == ["kek"]


def test_policy_errors(world):
    mgr = manager(world)
    mgr.define_policy("/prod", [])
    with pytest.raises(DuplicateGranularity):
        mgr.define_policy("/prod", [])
    with pytest.raises(NameConventionViolation):
        mgr.define_policy("/prod/KEK/x", [])
    with pytest.raises(UnknownGranularity):
        mgr.rotate("/other")
    with pytest.raises(InvalidState):
        mgr.trigger_reencrypt("/prod")


def test_rotate_without_produce_publishes_second_kek(world):
    mgr = manager(world)
    mgr.define_policy("/prod", [])
    mgr.rotate("/prod")
    keks = [d for _, d in world.net.published if classify(d.name) == "kek"]
    assert len(keks) == 2 and keks[0].name != keks[1].name
    assert mgr.policies[Name("/prod")].epoch == 1


# ------------------------------------------------------------ battlefield walk-through

@pytest.fixture
def field():
    w = World(json.loads((bundled_path("battlefield").parent / "battlefield-topology.json").read_text()))
    mgr = manager(w, "commandCenter", "/military/manager")
    sensor = encryptor(w, "/military/air/aircraftA", "/military/air/aircraftA", node="aircraftA",
                       mgr="/military/manager")
    soldier1 = decryptor(w, "squadA", "/military/squadA/soldier1")
    squad_b = decryptor(w, "squadB", "/military/squadB/soldier1")
    mgr.define_policy("/military/air/aircraftA", [soldier1.credential])
    return w, mgr, sensor, soldier1, squad_b


def test_produce_publishes_content_and_ck(field):
    w, _, sensor, _, _ = field
    packets = w.net.run(sensor.produce("/info", b"two vehicles north"))
    assert [classify(p.name) for p in packets] == ["content", "ck"]
    assert packets[0].name == Name("/military/air/aircraftA/info")
    ck = CkDataName.parse(packets[1].name)
    assert ck.ck.producer_prefix == Name("/military/air/aircraftA")
    assert ck.kek.manager_prefix == Name("/military/manager")
    assert ck.kek.granularity == Name("/military/air/aircraftA")
    assert packets[1].name.to_uri().startswith("/military/air/aircraftA/CK/")
    assert "/ENCRYPTED-BY/military/manager/NAC/military/air/aircraftA/KEK/" in packets[1].name.to_uri()


def test_second_produce_sends_no_kek_interest(field):
    w, _, sensor, _, _ = field
    w.net.run(sensor.produce("/info/1", b"a"))
    before = len(sensor.interest_log)
    packets = w.net.run(sensor.produce("/info/2", b"b"))
    assert len(sensor.interest_log) == before == 1
    assert [classify(p.name) for p in packets] == ["content"]  # CK reused


def test_authorized_consume_trace(field):
    w, _, sensor, soldier1, _ = field
    w.net.run(sensor.produce("/info", b"two vehicles north"))
    assert w.net.run(soldier1.consume("/military/air/aircraftA/info")) == b"two vehicles north"
    assert [p for _, p in soldier1.interest_log] == ["content", "ck", "kdk"]


def test_warm_cache_needs_only_content(field):
    w, _, sensor, soldier1, _ = field
    w.net.run(sensor.produce("/info/1", b"first"))
    w.net.run(sensor.produce("/info/2", b"second"))
    w.net.run(soldier1.consume("/military/air/aircraftA/info/1"))
    soldier1.interest_log.clear()
    assert w.net.run(soldier1.consume("/military/air/aircraftA/info/2")) == b"second"
    assert [p for _, p in soldier1.interest_log] == ["content"]


def test_unauthorized_squad_b(field):
    w, _, sensor, _, squad_b = field
    w.net.run(sensor.produce("/info", b"secret"))
    with pytest.raises(NotAuthorized):
        w.net.run(squad_b.consume("/military/air/aircraftA/info"))


def test_fail_closed_when_isolated(field):
    w, _, sensor, _, _ = field
    for link in w.net.links:
        w.net.set_link_state(link, "down")
    before = len(w.net.published)
    with pytest.raises(KekUnavailable):
        w.net.run(sensor.produce("/info", b"must not leak"))
    assert len(w.net.published) == before
    assert not sensor.retained


def test_content_outside_granularity_refused(world):
    enc = encryptor(world, "/prod", "/prod/a")
    with pytest.raises(NameConventionViolation):
        enc.content_name("/b/x")


def test_embedded_ck_single_packet(world):
    mgr = manager(world)
    dec = decryptor(world, "cons", "/cons/d")
    mgr.define_policy("/prod", [dec.credential])
    enc = encryptor(world, "/prod", "/prod", embed_ck=True)
    packets = world.net.run(enc.produce("/x", b"one packet"))
    assert [classify(p.name) for p in packets] == ["content"]
    payload = ContentPayload.decode(packets[0].content)
    assert payload.encrypted_ck is not None and KekName.parse(payload.kek_name)
    assert world.net.run(dec.consume("/prod/x")) == b"one packet"
    assert [p for _, p in dec.interest_log] == ["content", "kdk"]


def test_forged_content_signature_aborts_chain(world):
    from nacnet.wire import IdentityKeyPair, sign_data
    mgr = manager(world)
    dec = decryptor(world, "cons", "/cons/d")
    mgr.define_policy("/prod", [dec.credential])
    enc = encryptor(world, "/prod", "/prod")
    good = world.net.run(enc.produce("/x", b"data"))[0]
    rogue = IdentityKeyPair.generate(Name("/prod"), world.rng.fork("rogue"))
    forged = sign_data(Name("/prod/y"), good.content, 10_000, rogue)
    world.net.publish("prod", forged)
    with pytest.raises(SignatureInvalid):
        world.net.run(dec.consume("/prod/y"))
    assert dec.ck_plain_cache == {} and dec.kdk_cache == {}


def test_fine_granularity_north_south():
    w = World({**LINE, "nodes": [{"id": "mgr", "prefixes": ["/mgr"]}, {"id": "gw"},
                                 {"id": "prod", "prefixes": ["/military/air/aircraft1"]}, {"id": "cons"}]})
    mgr = manager(w)
    dec = decryptor(w, "cons", "/cons/d")
    mgr.define_policy("/military/air/aircraft1/north", [dec.credential])
    mgr.define_policy("/military/air/aircraft1/south", [])
    north = encryptor(w, "/military/air/aircraft1", "/military/air/aircraft1/north")
    south = encryptor(w, "/military/air/aircraft1", "/military/air/aircraft1/south")
    w.net.run(north.produce("/north/t1", b"n"))
    w.net.run(south.produce("/south/t1", b"s"))
    assert w.net.run(dec.consume("/military/air/aircraft1/north/t1")) == b"n"
    with pytest.raises(NotAuthorized):
        w.net.run(dec.consume("/military/air/aircraft1/south/t1"))


# ------------------------------------------------------------ rotation

def _rotation_world():
    w = World(LINE)
    mgr = manager(w)
    good, bad, late = (decryptor(w, "cons", f"/cons/{n}") for n in ("good", "bad", "late"))
    mgr.define_policy("/prod", [good.credential, bad.credential, late.credential])
    enc = encryptor(w, "/prod", "/prod")
    w.net.run(enc.produce("/old", b"before rotation"))
    w.net.run(bad.consume("/prod/old"))
    return w, mgr, enc, good, bad, late


def test_rotation_transparent_and_revocation():
    w, mgr, enc, good, bad, late = _rotation_world()
    old_kek = enc.kek_cache[0]
    mgr.report_compromised("/cons/bad")
    mgr.rotate("/prod")
    w.net.advance(w.net.now + HOUR + 1)  # let the encryptor's KEK cache lapse
    w.net.run(enc.produce("/new", b"after rotation"))
    assert enc.kek_cache[0].key_id != old_kek.key_id
    assert w.net.run(good.consume("/prod/new")) == b"after rotation"
    assert w.net.run(late.consume("/prod/new")) == b"after rotation"
    assert outcome(w, bad.consume("/prod/new")) == "NotAuthorized"
    # access to what was already published is not withdrawn
    assert w.net.run(bad.consume("/prod/old")) == b"before rotation"
    w.net.clear_caches()
    bad.ck_plain_cache.clear()
    assert w.net.run(bad.consume("/prod/old")) == b"before rotation"


def test_reencrypt_notification():
    w, mgr, enc, good, bad, _ = _rotation_world()
    old_kek = enc.kek_cache[0]
    mgr.report_compromised("/cons/bad")
    mgr.rotate("/prod")
    procs = mgr.trigger_reencrypt("/prod", [enc])
    w.net.run_until_idle()
    republished = procs[0].result()
    assert [classify(p.name) for p in republished] == ["content", "ck"]
    assert enc.kek_cache[0].key_id != old_kek.key_id
    assert CkDataName.parse(republished[1].name).kek == enc.kek_cache[0]
    w.net.clear_caches()
    bad.ck_plain_cache.clear()
    bad.kdk_cache.clear()
    assert outcome(w, bad.consume("/prod/old")) == "NotAuthorized"
    assert w.net.run(good.consume("/prod/old")) == b"before rotation"
    # a second poll at the same epoch does nothing
    assert w.net.run(enc.poll_notifications()) == []


def test_next_produce_after_trigger_uses_new_key_id():
    w, mgr, enc, *_ = _rotation_world()
    mgr.rotate("/prod")
    mgr.trigger_reencrypt("/prod", [enc])
    w.net.run_until_idle()
    packets = w.net.run(enc.produce("/later", b"x"))
    ck_name = ContentPayload.decode(packets[0].content).ck_name
    ck_data = [d for _, d in w.net.published if classify(d.name) == "ck" and ck_name.is_prefix_of(d.name)]
    assert len(ck_data) == 1
    live = mgr.policies[Name("/prod")].kek_kdk.kek_name
    assert CkDataName.parse(ck_data[0].name).kek == live


# ------------------------------------------------------------ exhaustive

def test_soundness_and_completeness_exhaustive():
    """Every (decryptor, granularity, epoch) triple for n=5, m=3, two epochs.

    Plaintext is returned exactly when the decryptor was authorized for that
    granularity at the content's epoch.
    """
    n, m = 5, 3
    w = World({**LINE, "nodes": [{"id": "mgr", "prefixes": ["/mgr"]}, {"id": "gw"},
                                 {"id": "prod", "prefixes": ["/prod"]}, {"id": "cons"}]})
    mgr = manager(w)
    decs = [decryptor(w, "cons", f"/cons/d{j}") for j in range(n)]
    grans = [f"/prod/g{i}" for i in range(m)]
    # a fixed authorization matrix covering empty, partial and full rows
    auth = {(i, j): (i + j) % 3 != 0 or (i == 2) for i in range(m) for j in range(n)}
    auth[(0, 4)] = False
    for i, g in enumerate(grans):
        mgr.define_policy(g, [decs[j].credential for j in range(n) if auth[(i, j)]])
    encs = [encryptor(w, g, g) for g in grans]
    compromised = 1
    mgr.report_compromised(decs[compromised].prefix)

    authorized_at = {}
    for epoch in range(2):
        if epoch:
            for g in grans:
                mgr.rotate(g)
            w.net.advance(w.net.now + HOUR + 1)
        for i, enc in enumerate(encs):
            w.net.run(enc.produce(f"/e{epoch}", f"g{i} epoch {epoch}".encode()))
            for j in range(n):
                authorized_at[(j, i, epoch)] = auth[(i, j)] and not (epoch and j == compromised)

    for (j, i, epoch), allowed in sorted(authorized_at.items()):
        w.net.clear_caches()
        decs[j].ck_plain_cache.clear()
        decs[j].kdk_cache.clear()
        got = outcome(w, decs[j].consume(f"/prod/g{i}/e{epoch}"))
        if allowed:
            assert got == f"g{i} epoch {epoch}".encode(), (j, i, epoch)
        else:
            assert got == "NotAuthorized", (j, i, epoch)
    assert len(authorized_at) == n * m * 2


def test_no_plaintext_or_key_ever_published(field):
    w, mgr, sensor, soldier1, squad_b = field
    secret = b"coordinates 48.8584 N 2.2945 E"
    w.net.run(sensor.produce("/info", secret))
    mgr.rotate("/military/air/aircraftA")
    w.net.run(soldier1.consume("/military/air/aircraftA/info"))
    blobs = [d.content for _, d in w.net.published]
    kdks = [e.kek_kdk.private_key for e in mgr.policies.values()] + [
        p.private_key for e in mgr.policies.values() for p in e.history]
    cks = [ck.key_bytes for ck in soldier1.ck_plain_cache.values()]
    for blob in blobs:
        assert secret not in blob
        assert not any(k[:64] in blob for k in kdks)
        assert not any(c in blob for c in cks)


def test_key_interests_derive_from_config_and_packets(field):
    """Every key Interest name is built from configured prefixes or names seen in earlier packets."""
    w, _, sensor, soldier1, _ = field
    w.net.run(sensor.produce("/info", b"x"))
    w.net.run(soldier1.consume("/military/air/aircraftA/info"))
    seen = {d.name.to_uri() for _, d in w.net.published}
    (kek_uri, _), = sensor.interest_log
    assert kek_uri == "/military/manager/NAC/military/air/aircraftA/KEK"
    (content, _), (ck, _), (kdk, _) = soldier1.interest_log
    assert any(s.startswith(ck) for s in seen)
    kek_in_ck = CkDataName.parse(next(Name(s) for s in seen if s.startswith(ck + "/"))).kek
    assert Name(kdk) == KdkDataName(kek_in_ck.to_kdk(), soldier1.prefix, b"k1").name


@pytest.mark.parametrize("n", [1, 2, 3])
def test_kdk_count_per_granularity(n):
    w = World(LINE)
    mgr = manager(w)
    decs = [decryptor(w, "cons", f"/cons/d{j}") for j in range(n)]
    packets = list(itertools.chain.from_iterable(
        mgr.define_policy(f"/prod/g{i}", [d.credential for d in decs]) for i in range(2)))
    assert sum(classify(p.name) == "kdk" for p in packets) == 2 * n
