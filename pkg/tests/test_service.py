import dataclasses
import json
import time

import pytest
from fastapi.testclient import TestClient

from scoreloop.gateway import EchoLabelsProvider
from scoreloop.service import create_app


@pytest.fixture
def client(workspace):
    workspace.make_split("rules", test_fraction=0.2, seed=3)
    workspace.make_split("engineering", test_fraction=0.2, seed=3)
    return TestClient(create_app(workspace)), workspace


def wait_for_run(api, run_id, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        doc = api.get(f"/runs/{run_id}").json()
        status = doc.get("status")
        if status == "complete":
            return doc
        if status == "failed":
            raise AssertionError(f"job failed: {doc}")
        time.sleep(0.02)
    raise AssertionError("run did not finish in time")


def test_fresh_workspace_lists_no_runs(bare_workspace):
    api = TestClient(create_app(bare_workspace))
    resp = api.get("/runs")
    assert resp.status_code == 200
    assert resp.json() == []


def test_catalog_endpoints(client):
    api, ws = client
    rubrics = api.get("/rubrics").json()
    assert {r["id"] for r in rubrics} == {"rules", "debugging", "engineering"}
    assessments = api.get("/assessments").json()
    assert {a["id"] for a in assessments} == {"rules", "debugging", "engineering"}
    configs = api.get("/configs").json()
    assert set(configs) == {"rules", "debugging", "engineering"}
    assert all(len(v) == 2 for v in configs.values())
    assert api.get("/api-schema").status_code == 200


def test_rendered_prompt_endpoint(client):
    api, ws = client
    config_hash = ws.config_history("rules")[-1]
    resp = api.get(f"/configs/{config_hash}/prompt")
    assert resp.status_code == 200
    assert resp.text == ws.assemble(ws.load_config(config_hash)).full_text


def test_unknown_run_is_404(client):
    api, _ = client
    resp = api.get("/runs/ghost")
    assert resp.status_code == 404
    assert resp.json()["code"] in ("RunNotFound", "NotFound")


def test_async_run_matches_direct_execution(client):
    api, ws = client
    config_hash = ws.config_history("rules")[-1]
    resp = api.post(
        "/runs",
        json={"config": config_hash, "split": "test", "provider": "echo",
              "request_id": "req-run-1"},
    )
    assert resp.status_code == 202
    run_id = resp.json()["job"]
    doc = wait_for_run(api, run_id)
    assert doc["status"] == "complete"

    # the same scoring done synchronously yields the same content
    rs = ws.responses("rules")
    provider = EchoLabelsProvider(ws.rubric("rules"), {r.id: r for r in rs.responses})
    direct = ws.execute(ws.load_config(config_hash), "test", provider, run_id="direct-1")

    def strip(lines):
        out = []
        for line in sorted(lines, key=lambda d: d["response_id"]):
            line = dict(line)
            line["result"] = {k: v for k, v in line["result"].items() if k != "raw"}
            out.append(line)
        return out

    from scoreloop.runner import result_to_line

    assert strip(doc["results"]) == strip([result_to_line(r) for r in direct.results])


def test_run_detail_and_metrics_endpoints(client):
    api, ws = client
    config_hash = ws.config_history("rules")[-1]
    run_id = api.post(
        "/runs", json={"config": config_hash, "split": "test", "provider": "echo"}
    ).json()["job"]
    wait_for_run(api, run_id)

    listed = api.get("/runs").json()
    assert any(m["run_id"] == run_id for m in listed)

    doc = api.get(f"/runs/{run_id}").json()
    rid = doc["results"][0]["response_id"]
    result = api.get(f"/runs/{run_id}/results/{rid}").json()
    assert result["response_id"] == rid
    assert "parts" in result and result["result"]["scores"]

    metrics = api.get(f"/runs/{run_id}/metrics").json()
    assert metrics["total_score_qwk"] == 1.0
    assert all(c["qwk"] == 1.0 for c in metrics["criteria"])

    trends = api.get(f"/runs/{run_id}/trends").json()
    assert trends["overall"]["label"] == "balanced"

    candidates = api.get(f"/runs/{run_id}/candidates").json()
    assert candidates["candidates"] == []


def test_irr_flow_with_gate_and_withholding(client):
    api, ws = client
    created = api.post(
        "/irr/sessions",
        json={"assessment": "rules", "fraction": 0.2, "seed": 5,
              "raters": ["ann", "bo"], "request_id": "req-irr-1"},
    )
    assert created.status_code == 200
    session = created.json()
    sid = session["session_id"]
    sample = session["rounds"][0]["sample"]
    assert len(sample) == 8  # 40 responses, fraction 0.2

    # retry with the same request id does not open a second session
    again = api.post(
        "/irr/sessions",
        json={"assessment": "rules", "fraction": 0.2, "seed": 5,
              "raters": ["ann", "bo"], "request_id": "req-irr-1"},
    )
    assert again.json()["session_id"] == sid
    assert len(api.get("/irr/sessions").json()) == 1

    labels = {
        r["id"]: dict(r["human_scores"])
        for r in (json.loads(line) for line in ws.responses_path("rules").read_text().splitlines())
    }
    ann = {rid: labels[rid] for rid in sample}
    bo = {rid: dict(labels[rid]) for rid in sample}
    bo[sample[0]]["R1"] = 1 - bo[sample[0]]["R1"]  # one engineered disagreement

    api.post(f"/irr/sessions/{sid}/scores", json={"rater": "ann", "scores": ann})
    scored = api.post(f"/irr/sessions/{sid}/scores", json={"rater": "bo", "scores": bo})
    gate = scored.json()["gate"]
    assert gate["consensus"] is True  # 1 disagreement out of 72 pooled decisions
    assert gate["kappa"] >= 0.70

    # consensus committed the sampled ids to the withheld set
    assert set(sample) <= set(ws.withheld("rules"))
    train, test = ws.make_split("rules", test_fraction=0.2, seed=3)
    assert not (set(sample) & set(test))

    resolved = api.post(
        f"/irr/sessions/{sid}/resolutions",
        json={"response": sample[0], "criterion": "R1",
              "value": labels[sample[0]]["R1"],
              "note": "rater bo misread the first rule",
              "guideline": "Read every rule before scoring the first one."},
    )
    body = resolved.json()
    assert body["resolutions"][0]["criterion"] == "R1"
    assert "sticking_point" in body
    assert "Read every rule before scoring the first one." in ws.rubric("rules").guidelines

    missing = api.post(
        f"/irr/sessions/{sid}/resolutions",
        json={"response": sample[0], "criterion": "R1", "value": 1},
    )
    assert missing.status_code == 404
    assert missing.json()["code"] == "NoSuchDisagreement"


def make_skew_base(ws):
    """A rules config whose few-shot set has no corrective chains for R2/R5,
    plus a provider that systematically overscores those criteria."""
    final = ws.latest_config("rules")
    base = dataclasses.replace(
        final, exemplar_ids=("rules-ex1", "rules-ex2", "rules-ex3")
    )
    base_hash = ws.save_config(base)
    providers = ws.root / "providers.yaml"
    providers.write_text(
        providers.read_text()
        + "skew:\n  type: faulty\n  error_rate: 0\n  seed: 5\n  overscore: [R2, R5]\n"
    )
    return base_hash


def test_promotion_flow_over_http(client):
    api, ws = client
    base_hash = make_skew_base(ws)
    run_id = api.post(
        "/runs",
        json={"config": base_hash, "split": "validation", "provider": "skew",
              "allow_unbalanced": True},
    ).json()["job"]
    wait_for_run(api, run_id)

    trends = api.get(f"/runs/{run_id}/trends").json()
    assert trends["overall"]["label"] == "overscoring"
    candidates = api.get(f"/runs/{run_id}/candidates").json()["candidates"]
    assert candidates
    top = candidates[0]
    response_doc = api.get(f"/runs/{run_id}/results/{top['response']}").json()
    answer = response_doc["parts"]["Answer"]

    chains = {
        cid: {
            "citation": answer[:24],
            "text": (
                f"The student says '{answer[:24]}' but never explicitly sets the "
                f"value this criterion requires. Based on the rubric, the student "
                f"earned a score of 0."
            ),
        }
        for cid in top["erring"]
    }
    promoted = api.post(
        "/exemplars/promote",
        json={"run": run_id, "response": top["response"], "chains": chains,
              "request_id": "req-promote-1"},
    )
    assert promoted.status_code == 200
    body = promoted.json()
    assert body["exemplar"].startswith("rules-al-")
    new_hash = body["config"]
    assert new_hash in ws.config_history("rules")

    # the idempotent retry returns the same promotion instead of a 409
    retry = api.post(
        "/exemplars/promote",
        json={"run": run_id, "response": top["response"], "chains": chains,
              "request_id": "req-promote-1"},
    )
    assert retry.status_code == 200
    assert retry.json() == body

    # a second promotion for the same run violates the single-instance rule
    second = api.post(
        "/exemplars/promote",
        json={"run": run_id, "response": top["response"], "chains": chains},
    )
    assert second.status_code == 409
    assert second.json()["code"] == "IterationQuotaExceeded"

    # rerun with the promoted config: the skew provider honors the corrective
    # chains, so the designated criteria lose their false positives
    rerun_id = api.post(
        "/runs",
        json={"config": new_hash, "split": "validation", "provider": "skew",
              "allow_unbalanced": True},
    ).json()["job"]
    wait_for_run(api, rerun_id)
    before = api.get(f"/runs/{run_id}/trends").json()["criteria"]
    after = api.get(f"/runs/{rerun_id}/trends").json()["criteria"]
    for cid in top["erring"]:
        assert after[cid]["fp"] < before[cid]["fp"]
