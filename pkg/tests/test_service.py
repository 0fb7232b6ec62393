import json
import time
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from moco.service import create_app

DATA = Path(__file__).parent / "data"

SMALL = {"generations": 8, "mu": 10, "seed": 4}


@pytest.fixture
def client(tmp_path):
    app = create_app(DATA, tmp_path / "runs")
    with TestClient(app) as c:
        yield c


def wait_done(client, job_id, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        state = client.get(f"/jobs/{job_id}").json()
        if state["state"] in ("done", "failed"):
            return state
        time.sleep(0.05)
    raise TimeoutError("job did not finish")


def submit(client, **overrides):
    body = {"dataset": "credit", "row": 0, "target": "0.5:1", "config": dict(SMALL)}
    body.update(overrides)
    resp = client.post("/jobs", json=body)
    assert resp.status_code == 202, resp.text
    return resp.json()["job"]


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json()["status"] == "ok"


def test_dataset_listing(client):
    listing = client.get("/datasets").json()
    ids = {d["id"] for d in listing}
    assert ids == {"credit", "clinic"}
    credit = next(d for d in listing if d["id"] == "credit")
    assert credit["rows"] == 522
    assert len(credit["features"]) == 9


def test_dataset_row(client):
    row = client.get("/datasets/credit/rows/0").json()
    assert row["values"]["duration"] == 48
    assert 0.0 <= row["prediction"] <= 1.0
    assert client.get("/datasets/credit/rows/99999").status_code == 404


def test_unknown_dataset_404(client):
    assert client.get("/datasets/nope/rows/0").status_code == 404
    resp = client.post("/jobs", json={"dataset": "nope", "row": 0, "target": "auto"})
    assert resp.status_code == 404
    assert set(resp.json()) == {"code", "message"}


def test_submit_and_fetch_pareto(client):
    job = submit(client)
    state = wait_done(client, job)
    assert state["state"] == "done"
    payload = client.get(f"/jobs/{job}/pareto").json()
    assert payload["x_star"]["values"]["duration"] == 48
    assert len(payload["counterfactuals"]) <= 10
    assert payload["hv_trace"] == sorted(payload["hv_trace"])
    hv = client.get(f"/jobs/{job}/hv").json()
    assert hv["hv_trace"] == payload["hv_trace"]


def test_pareto_before_done_is_409(client):
    job = submit(client, config={"generations": 60, "mu": 20, "seed": 1})
    resp = client.get(f"/jobs/{job}/pareto")
    assert resp.status_code in (409, 200)  # tiny race: job may already be done
    if resp.status_code == 409:
        assert resp.json()["code"] == 409
    wait_done(client, job)


def test_unknown_job_404(client):
    assert client.get("/jobs/job-999999").status_code == 404
    assert client.get("/jobs/job-999999/pareto").status_code == 404


def test_same_seed_jobs_equal_payloads(client):
    job1 = submit(client)
    job2 = submit(client)
    wait_done(client, job1)
    wait_done(client, job2)
    p1 = client.get(f"/jobs/{job1}/pareto").json()
    p2 = client.get(f"/jobs/{job2}/pareto").json()
    assert p1 == p2


def test_pareto_all_flag_superset(client):
    job = submit(client)
    wait_done(client, job)
    default = client.get(f"/jobs/{job}/pareto").json()
    everything = client.get(f"/jobs/{job}/pareto", params={"all": "true"}).json()
    assert len(everything["counterfactuals"]) >= len(default["counterfactuals"])
    shown = {json.dumps(cf, sort_keys=True) for cf in default["counterfactuals"]}
    full = {json.dumps(cf, sort_keys=True) for cf in everything["counterfactuals"]}
    assert shown <= full


def test_payload_o3_matches_recomputation(client):
    job = submit(client)
    wait_done(client, job)
    payload = client.get(f"/jobs/{job}/pareto").json()
    star = payload["x_star"]["values"]
    kinds = {f["name"]: f["kind"] for f in payload["features"]}
    for cf in payload["counterfactuals"]:
        changed = 0
        for name, value in cf["values"].items():
            if kinds[name] in ("numerical", "integer"):
                a, b = float(value), float(star[name])
                if abs(a - b) > 1e-12 * max(abs(a), abs(b)):
                    changed += 1
            elif value != star[name]:
                changed += 1
        assert changed == cf["objectives"]["o3"]


def test_frozen_features_constant_in_payload(client):
    job = submit(client, freeze=["age", "sex"])
    wait_done(client, job)
    payload = client.get(f"/jobs/{job}/pareto", params={"all": "true"}).json()
    star = payload["x_star"]["values"]
    for cf in payload["counterfactuals"]:
        assert cf["values"]["age"] == star["age"]
        assert cf["values"]["sex"] == star["sex"]


def test_inline_point_submission(client):
    point = {
        "age": 30, "sex": "female", "job": 1, "housing": "rent", "savings": "little",
        "checking": "little", "amount": 4000.0, "duration": 36, "purpose": "car",
    }
    resp = client.post(
        "/jobs",
        json={"dataset": "credit", "point": point, "target": "0.5:1", "config": dict(SMALL)},
    )
    assert resp.status_code == 202
    job = resp.json()["job"]
    assert wait_done(client, job)["state"] == "done"
    payload = client.get(f"/jobs/{job}/pareto").json()
    assert payload["x_star"]["values"]["duration"] == 36
    assert payload["x_star"]["row"] is None


def test_job_results_immutable(client):
    job = submit(client)
    wait_done(client, job)
    first = client.get(f"/jobs/{job}/pareto").text
    second = client.get(f"/jobs/{job}/pareto").text
    assert first == second


def test_surface_for_job(client):
    job = submit(client)
    wait_done(client, job)
    resp = client.post(
        "/surface",
        json={"job": job, "feature_a": "duration", "feature_b": "amount", "resolution": 20},
    )
    assert resp.status_code == 200, resp.text
    surface = resp.json()
    assert len(surface["grid"]) == 20
    assert len(surface["grid"][0]) == 20
    assert sum(surface["histograms"]["a"]["counts"]) == 521
    assert sum(surface["histograms"]["b"]["counts"]) == 521
    star = surface["x_star"]
    assert star["a"] == 48
    # counterfactual markers change only the plotted features
    payload = client.get(f"/jobs/{job}/pareto").json()
    assert len(surface["counterfactuals"]) <= len(payload["counterfactuals"])


def test_surface_rejects_categorical(client):
    resp = client.post(
        "/surface",
        json={"dataset": "credit", "row": 0, "feature_a": "housing", "feature_b": "amount", "resolution": 10},
    )
    assert resp.status_code == 400
    assert resp.json()["code"] == 400


def test_surface_resolution_bounds(client):
    resp = client.post(
        "/surface",
        json={"dataset": "credit", "row": 0, "feature_a": "duration", "feature_b": "amount", "resolution": 500},
    )
    assert resp.status_code == 400


def test_surface_constant_region_flat(client):
    resp = client.post(
        "/surface",
        json={"dataset": "clinic", "row": 0, "feature_a": "pres", "feature_b": "skin", "resolution": 5},
    )
    # clinic linear model has small but nonzero coefficients; grid must vary smoothly
    assert resp.status_code == 200
    grid = resp.json()["grid"]
    assert len(grid) == 5


def test_invalid_body_returns_400(client):
    resp = client.post("/jobs", json={"dataset": "credit"})
    assert resp.status_code == 400
    resp = client.post("/jobs", json={"dataset": "credit", "row": 0, "target": "auto", "freeze": ["nope"]})
    assert resp.status_code == 400


def test_restart_recovers_results(tmp_path):
    runs = tmp_path / "runs"
    app = create_app(DATA, runs)
    with TestClient(app) as client:
        job = submit(client)
        wait_done(client, job)
        payload = client.get(f"/jobs/{job}/pareto").json()
    app2 = create_app(DATA, runs)
    with TestClient(app2) as client2:
        recovered = client2.get(f"/jobs/{job}/pareto")
        assert recovered.status_code == 200
        assert recovered.json() == payload
