"""The nine acceptance criteria, one test each.

Every test records a single ``CRITERION n: PASS|FAIL`` line; the lines are
printed as they are produced and again in the terminal summary.
"""

import copy
import json
import random
import time

import pytest

from nacnet.crypto.abe import abe_decrypt, abe_encrypt, abe_keygen, abe_setup
from nacnet.crypto.policy import parse_policy, satisfies
from nacnet.errors import PolicyNotSatisfied
from nacnet.harness import BUNDLED, Scenario, bundled_path, load_scenario, parse_scenario, run_scenario
from nacnet.harness.adversary import run_tamper_trials
from nacnet.harness.builders import ScaleParams, packet_size_config, report_scaling, scale_config
from nacnet.harness.report import KEY_NAME_MARKERS, count_key_names, report_packet_sizes
from nacnet.naming import CkDataName, KekName, classify, kek_interest_name, kek_to_kdk_data_name
from nacnet.payloads import ContentPayload
from nacnet.rng import DeterministicRng
from nacnet.wire import Name
from policy_oracle import ATTRS, all_subsets, oracle, random_policy

RESULTS: dict[int, str] = {}


def verdict(n: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def consume_results(report) -> dict:
    return {(o["entity"], o["name"]): o for o in report.outcomes if o["action"] == "consume"}


# 1 -----------------------------------------------------------------------

def test_criterion_1_end_to_end_authorization():
    t0 = time.perf_counter()
    cfg = load_scenario(bundled_path("battlefield"))
    report = run_scenario(cfg)
    elapsed = time.perf_counter() - t0
    authorized = {(d, pol["granularity"]) for pol in cfg.policies for d in pol["authorized"]}
    units = [e.id for e in cfg.by_role("decryptors")]
    contents = [a["name"] for a in cfg.script if a["action"] == "produce"]
    rows = consume_results(report)
    wrong = []
    for unit in units:
        for name in contents:
            row = rows[(unit, name)]
            allowed = any((unit, g) in authorized and Name(g).is_prefix_of(Name(name)) for _, g in authorized)
            expected_ok = row["result"] == "ok" and row["sha256"] == report.produced[name]
            if allowed != expected_ok or (not allowed and row["result"] != "NotAuthorized"):
                wrong.append((unit, name, row["result"]))
    pairings = len(units) * len(contents)
    verdict(1, not wrong and pairings == len(rows) and elapsed < 5.0,
            f"{pairings} unit/content pairings, {len(wrong)} wrong, {elapsed:.2f}s (< 5s)")


# 2 -----------------------------------------------------------------------

def test_criterion_2_intermittent_connectivity():
    cfg = load_scenario(bundled_path("outage"))
    scenario = Scenario(cfg)
    report = scenario.run()
    up_at = max(a["at"] for a in cfg.script if a["action"] == "link" and a["state"] == "up")
    producer = next(e.node for e in cfg.by_role("encryptors"))
    late = [x for x in scenario.net.interest_arrivals[producer] if x[0] >= up_at]
    results = [o["result"] for o in report.outcomes if o["action"] == "consume"]
    hits = report.stats.get("cs-hit:aircraftGw", 0)
    verdict(2, results == ["ok"] and late == [] and hits >= 1,
            f"consume {results}, gateway cache hits {hits}, Interests at producer after t={up_at}: {len(late)}")


# 3 -----------------------------------------------------------------------

def test_criterion_3_scaling_counts():
    t0 = time.perf_counter()
    params = ScaleParams(10, 5, 4)
    nac = report_scaling("nac", params, provider="simulated")
    abe = report_scaling("nac-abe", params, provider="simulated")
    elapsed = time.perf_counter() - t0
    kdk, issued = nac["measured"]["kdk"], abe["measured"]["attribute-key"]
    verdict(3, kdk == 50 and issued == 10 and nac["match"] and abe["match"] and elapsed < 30.0,
            f"NAC KDK Data {kdk} (want 50), NAC-ABE issued-key Data {issued} (want 10), {elapsed:.2f}s (< 30s)")


# 4 -----------------------------------------------------------------------

def test_criterion_4_policy_engine_vs_truth_table():
    rng = random.Random(2024)
    texts = [random_policy(rng, rng.randint(1, 6)) for _ in range(220)]
    drng = DeterministicRng(4)
    params, master = abe_setup(drng, "simulated")
    subsets = list(all_subsets())
    keys = {s: abe_keygen(params, master, s, drng) for s in subsets if s}
    checks = disagreements = 0
    for text in texts:
        policy = parse_policy(text)
        env = abe_encrypt(params, policy, b"content-key", drng)
        for held in subsets:
            expected = oracle(text, held)
            checks += 1
            disagreements += satisfies(held, policy) != expected
            if held:
                try:
                    ok = abe_decrypt(keys[held], env) == b"content-key"
                except PolicyNotSatisfied:
                    ok = False
                checks += 1
                disagreements += ok != expected
    verdict(4, disagreements == 0 and len(texts) >= 200,
            f"{len(texts)} policies x {len(subsets)} subsets over {len(ATTRS)} attributes, "
            f"{checks} checks, {disagreements} disagreements")


# 5 -----------------------------------------------------------------------

HOUR = 3_600_000


def revocation_doc() -> dict:
    doc = json.loads(bundled_path("battlefield").read_text())
    doc["name"] = "revocation"
    doc["policies"] = [p for p in doc["policies"] if p["granularity"] == "/military/air/aircraftA"]
    users = ["squadA-soldier1", "squadA-soldier2"]
    t_new = HOUR + 100_000
    script = [{"at": 0, "action": "produce", "entity": "aircraftA-sensor",
               "name": "/military/air/aircraftA/old", "content": "report before rotation"}]
    script += [{"at": 2000, "action": "consume", "entity": u, "name": "/military/air/aircraftA/old"} for u in users]
    script += [{"at": 3000, "action": "compromise", "entity": "command", "decryptor": "squadA-soldier2"},
               {"at": 3000, "action": "rotate", "entity": "command", "granularity": "/military/air/aircraftA"},
               {"at": t_new, "action": "produce", "entity": "aircraftA-sensor",
                "name": "/military/air/aircraftA/new", "content": "report after rotation"}]
    script += [{"at": t_new + 10_000, "action": "consume", "entity": u, "name": "/military/air/aircraftA/new"}
               for u in users]
    script += [{"at": t_new + 200_000, "action": "consume", "entity": u, "name": "/military/air/aircraftA/old"}
               for u in users]
    script += [{"at": t_new + 400_000, "action": "reencrypt", "entity": "command",
                "granularity": "/military/air/aircraftA", "encryptors": ["aircraftA-sensor"]},
               {"at": t_new + 500_000, "action": "clear-caches"}]
    script += [{"at": t_new + 510_000, "action": "consume", "entity": u, "name": "/military/air/aircraftA/old"}
               for u in users]
    doc["script"] = script
    return doc


def test_criterion_5_revocation_semantics():
    report = run_scenario(parse_scenario(revocation_doc(), bundled_path("battlefield").parent))
    marks = {o["action"]: o["index"] for o in report.outcomes if o["action"] in ("rotate", "reencrypt")}
    consumes = [o for o in report.outcomes if o["action"] == "consume"]
    old_reads = [o for o in consumes if o["name"].endswith("/old")]
    post_rotation = {(o["entity"], o["result"]) for o in consumes if o["name"].endswith("/new")}
    cached_old = {(o["entity"], o["result"]) for o in old_reads if marks["rotate"] < o["index"] < marks["reencrypt"]}
    reencrypted = {(o["entity"], o["result"]) for o in old_reads if o["index"] > marks["reencrypt"]}
    want_post = {("squadA-soldier1", "ok"), ("squadA-soldier2", "NotAuthorized")}
    want_cached = {("squadA-soldier1", "ok"), ("squadA-soldier2", "ok")}
    want_reenc = {("squadA-soldier1", "ok"), ("squadA-soldier2", "NotAuthorized")}
    verdict(5, post_rotation == want_post and cached_old == want_cached and reencrypted == want_reenc,
            f"post-rotation {sorted(post_rotation)}; pre-rotation {sorted(cached_old)}; "
            f"re-encrypted {sorted(reencrypted)}")


# 6 -----------------------------------------------------------------------

def test_criterion_6_tamper_detection():
    cfg = load_scenario(bundled_path("battlefield"))
    result = run_tamper_trials(cfg, "squadA-soldier1", ("squadGw", "squadA"), trials=500, seed=6)
    verdict(6, result.trials == 500 and result.detected == 500 and result.wrong_plaintext == 0
            and result.not_fired == 0,
            f"{result.trials} mutations of KDK/CK/content Data: {dict(result.outcomes)}, "
            f"wrong plaintext {result.wrong_plaintext}")


# 7 -----------------------------------------------------------------------

def test_criterion_7_packet_size_report():
    def tables():
        out = {}
        for scheme in ("nac", "nac-abe"):
            report = run_scenario(parse_scenario(packet_size_config(scheme, provider="bsw07", seed=0)))
            out[scheme] = report_packet_sizes(report)
        return json.dumps(out, sort_keys=True)

    first, second = tables(), tables()
    doc = json.loads(first)
    types = {s: [r["type"] for r in rows] for s, rows in doc.items()}
    sizes = [r["size"] for rows in doc.values() for r in rows]
    ok = (first == second and types["nac"] == ["content", "ck", "kek", "kdk"]
          and types["nac-abe"] == ["content", "ck", "kek", "attribute-key"]
          and all(64 <= s <= 8800 for s in sizes)
          and doc["nac"][0]["name"] == "/producer/dataset1/example/data1")
    verdict(7, ok, "rows " + "; ".join(f"{s}: " + ", ".join(f"{r['type']}={r['size']}B" for r in rows)
                                       for s, rows in doc.items()) + f"; identical JSON across runs: {first == second}")


# 8 -----------------------------------------------------------------------

def test_criterion_8_determinism():
    diffs = []
    docs = {name: load_scenario(bundled_path(name)) for name in BUNDLED}
    docs["scale"] = parse_scenario(scale_config("nac-abe", ScaleParams(3, 2, 2)))
    for name, cfg in docs.items():
        a, b = Scenario(cfg), Scenario(cfg)
        ra, rb = a.run(), b.run()
        if a.net.trace_bytes() != b.net.trace_bytes() or ra.to_json() != rb.to_json():
            diffs.append(name)
    verdict(8, not diffs, f"{len(docs)} scenarios run twice, differing: {diffs or 'none'}")


# 9 -----------------------------------------------------------------------

def _derivations(scenario) -> list[str]:
    """Key Interests whose names cannot be traced to configuration or earlier packets."""
    cfg = scenario.cfg
    published = [d for _, d in scenario.net.published]
    ck_names = set()
    keks_seen = set()
    for d in published:
        kind = classify(d.name)
        if kind == "content":
            payload = ContentPayload.decode(d.content)
            ck_names.add(payload.ck_name)
            if payload.kek_name is not None:
                keks_seen.add(KekName.parse(payload.kek_name))
        elif kind == "ck":
            keks_seen.add(CkDataName.parse(d.name).kek)
    bad = []
    for ent_id, ent in scenario.entities.items():
        e_cfg = cfg.entities[ent_id]
        for uri, purpose in ent.interest_log:
            name = Name(uri)
            if purpose == "kek-discovery":
                mgr = cfg.entities[e_cfg.fields["manager"]].fields["prefix"]
                ok = name == kek_interest_name(mgr, e_cfg.fields["granularity"])
            elif purpose == "ck":
                ok = name in ck_names
            elif purpose == "kdk":
                ok = any(kek_to_kdk_data_name(k, ent.prefix, ent.encryption_key_id).name == name for k in keks_seen)
            elif purpose == "attribute-key":
                auth = cfg.entities[e_cfg.fields["authority"]].fields["prefix"]
                ok = Name(auth).is_prefix_of(name) and name[-1] == ent.encryption_key_id
            else:
                ok = purpose in ("content", "notify-poll", "kek-from-notice")
            if not ok:
                bad.append(f"{ent_id}:{purpose}:{uri}")
    return bad


def test_criterion_9_zero_manual_key_configuration():
    files = [bundled_path("battlefield"), bundled_path("outage"),
             bundled_path("battlefield").parent / "battlefield-topology.json"]
    static = 0
    for path in files:
        text = path.read_text()
        static += count_key_names(json.loads(text)) + sum(text.count(m) for m in KEY_NAME_MARKERS)
    generated = [scale_config(s, ScaleParams(10, 5, 4)) for s in ("nac", "nac-abe")]
    static += sum(count_key_names(copy.deepcopy(doc)) for doc in generated)

    runtime_bad, key_interests = [], 0
    cfgs = [load_scenario(p) for p in files[:2]] + [parse_scenario(d) for d in generated]
    for cfg in cfgs:
        scenario = Scenario(cfg, trace=False)
        scenario.run()
        runtime_bad += _derivations(scenario)
        key_interests += sum(1 for e in scenario.entities.values() for _, p in e.interest_log if p != "content")
    verdict(9, static == 0 and not runtime_bad and key_interests > 0,
            f"key names in configs: {static}; {key_interests} key Interests, underivable: {len(runtime_bad)}")


@pytest.fixture(autouse=True, scope="module")
def _summary():
    yield
    for n in sorted(RESULTS):
        print(RESULTS[n])
