import io
import sys
import threading
import time

import pytest
from fastapi.testclient import TestClient

from paraspace.service import create_app

SINE_CMD = [sys.executable, "-m", "paraspace.workers.sine"]

SINE_VARIABLES = [
    {"name": "phi", "role": "factor", "default": 0.0},
    {"name": "f", "role": "factor", "default": 1.0},
    {"name": "a", "role": "factor", "default": 1.0},
    {"name": "solution", "role": "response"},
]

BOX = {"type": "and", "children": [
    {"type": "interval", "var": "a", "lo": 0.0, "hi": 1.0},
    {"type": "interval", "var": "f", "lo": 0.5, "hi": 2.0},
]}


@pytest.fixture
def client(tmp_path):
    app = create_app(tmp_path / "home")
    with TestClient(app) as tc:
        yield tc


def wait_job(client, job_id, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        doc = client.get(f"/v1/jobs/{job_id}").json()
        if doc["state"] in ("done", "failed"):
            return doc
        time.sleep(0.02)
    raise TimeoutError(job_id)


def make_project(client, nodes=()):
    payload = {"name": "svc", "variables": SINE_VARIABLES, "nodes": list(nodes)}
    response = client.post("/v1/projects", json=payload)
    assert response.status_code == 200
    return response.json()["id"]


def test_health(client):
    assert client.get("/v1/health").json() == {"status": "ok"}


def test_create_then_get_project(client):
    pid = make_project(client)
    doc = client.get(f"/v1/projects/{pid}").json()
    assert doc["id"] == pid
    assert doc["row_count"] == 0
    assert [v["name"] for v in doc["variables"]] == ["phi", "f", "a", "solution"]
    assert client.get("/v1/projects/nope").status_code == 404


def test_create_project_with_groups(client):
    payload = {"name": "grouped", "variables": SINE_VARIABLES,
               "groups": [{"name": "inputs", "members": ["phi", "f", "a"]}]}
    doc = client.post("/v1/projects", json=payload).json()
    assert doc["groups"] == [{"name": "inputs", "members": ["phi", "f", "a"]}]
    bad = dict(payload, groups=[{"name": "bad", "members": ["ghost"]}])
    assert client.post("/v1/projects", json=bad).status_code == 422


def test_unknown_job_404(client):
    assert client.get("/v1/jobs/job-999").status_code == 404


def test_sample_job_appends_rows(client):
    pid = make_project(client)
    response = client.post(f"/v1/projects/{pid}/sample",
                           json={"region": BOX, "count": 100, "seed": 5})
    job = wait_job(client, response.json()["id"])
    assert job["state"] == "done"
    assert job["progress"] == {"done": 100, "total": 100}
    assert len(job["result"]["row_ids"]) == 100
    doc = client.get(f"/v1/projects/{pid}").json()
    assert doc["row_count"] == 100
    rows = client.get(f"/v1/projects/{pid}/rows").json()["rows"]
    assert all(0.0 <= r["values"]["a"] <= 1.0 for r in rows)
    assert all(r["status"] == "pending" for r in rows)


def test_rows_filtered_by_region_and_label(client):
    pid = make_project(client)
    job = client.post(f"/v1/projects/{pid}/sample",
                      json={"region": BOX, "count": 50, "seed": 1}).json()
    wait_job(client, job["id"])
    region = '{"type": "interval", "var": "a", "lo": 0.0, "hi": 0.5}'
    rows = client.get(f"/v1/projects/{pid}/rows",
                      params={"region": region}).json()["rows"]
    assert rows and all(r["values"]["a"] <= 0.5 for r in rows)
    ids = [r["id"] for r in rows]
    updated = client.post(f"/v1/projects/{pid}/labels",
                          json={"rows": ids, "column": "cluster",
                                "label": "low"}).json()
    assert updated == {"updated": len(ids)}
    labeled = client.get(f"/v1/projects/{pid}/rows",
                         params={"label_column": "cluster",
                                 "label": "low"}).json()["rows"]
    assert sorted(r["id"] for r in labeled) == sorted(ids)


def test_named_regions_round_trip(client):
    pid = make_project(client)
    saved = client.post(f"/v1/projects/{pid}/regions",
                        json={"name": "roi", "region": BOX})
    assert saved.json() == {"saved": "roi"}
    doc = client.get(f"/v1/projects/{pid}/regions/roi").json()
    assert doc["region"]["type"] == "and"
    # sampling can reference the saved region by name
    job = client.post(f"/v1/projects/{pid}/sample",
                      json={"region": "roi", "count": 5, "seed": 2}).json()
    assert wait_job(client, job["id"])["state"] == "done"
    assert client.get(f"/v1/projects/{pid}/regions/ghost").status_code == 404


def test_run_and_embed_and_detail(client):
    pid = make_project(client, nodes=[{"name": "sine", "command": SINE_CMD}])
    job = client.post(f"/v1/projects/{pid}/sample",
                      json={"region": BOX, "count": 12, "seed": 3}).json()
    wait_job(client, job["id"])

    job = client.post(f"/v1/projects/{pid}/runs", json={"workers": 2}).json()
    done = wait_job(client, job["id"])
    assert done["state"] == "done"
    assert done["progress"]["done"] == 12
    rows = client.get(f"/v1/projects/{pid}/rows").json()["rows"]
    assert all(r["status"] == "computed" for r in rows)
    assert all(len(r["values"]["solution"]) == 101 for r in rows)

    job = client.post(f"/v1/projects/{pid}/embeddings",
                      json={"columns": ["solution"], "kernel": "gaussian",
                            "normalization": ["sphere"]}).json()
    done = wait_job(client, job["id"])
    assert done["state"] == "done"
    assert done["result"]["rows"] == 12
    rows = client.get(f"/v1/projects/{pid}/rows").json()["rows"]
    assert all("embed_x" in r["values"] and "embed_y" in r["values"] for r in rows)

    detail = client.get(f"/v1/projects/{pid}/detail/{rows[0]['id']}/wave")
    assert detail.status_code == 200
    assert detail.headers["content-type"] == "image/png"
    assert detail.content[:4] == b"\x89PNG"
    assert client.get(f"/v1/projects/{pid}/detail/999/wave").status_code == 404


def test_run_without_node_409(client):
    pid = make_project(client)
    assert client.post(f"/v1/projects/{pid}/runs", json={}).status_code == 409


def test_shutdown_closes_detail_clients(tmp_path):
    app = create_app(tmp_path / "home")
    with TestClient(app) as tc:
        pid = make_project(tc, nodes=[{"name": "sine", "command": SINE_CMD}])
        job = tc.post(f"/v1/projects/{pid}/sample",
                      json={"region": BOX, "count": 1, "seed": 0}).json()
        wait_job(tc, job["id"])
        job = tc.post(f"/v1/projects/{pid}/runs", json={}).json()
        wait_job(tc, job["id"])
        row = tc.get(f"/v1/projects/{pid}/rows").json()["rows"][0]
        assert tc.get(f"/v1/projects/{pid}/detail/{row['id']}/wave").status_code == 200
        state = app.state.service
        assert state.clients  # the detail worker is live
        process = next(iter(state.clients.values())).channel.process
    assert state.clients == {}  # closed by the shutdown hook
    assert process.poll() is not None


def test_bad_region_422(client):
    pid = make_project(client)
    response = client.post(f"/v1/projects/{pid}/sample",
                           json={"region": {"type": "warp"}, "count": 1})
    assert response.status_code == 422


def test_restart_reproduces_state(tmp_path):
    home = tmp_path / "home"
    with TestClient(create_app(home)) as tc:
        pid = make_project(tc)
        job = tc.post(f"/v1/projects/{pid}/sample",
                      json={"region": BOX, "count": 20, "seed": 9}).json()
        wait_job(tc, job["id"])
        tc.post(f"/v1/projects/{pid}/regions", json={"name": "roi", "region": BOX})
        before_project = tc.get(f"/v1/projects/{pid}").json()
        before_rows = tc.get(f"/v1/projects/{pid}/rows").json()

    with TestClient(create_app(home)) as tc2:  # fresh process state
        assert tc2.get(f"/v1/projects/{pid}").json() == before_project
        assert tc2.get(f"/v1/projects/{pid}/rows").json() == before_rows
        assert tc2.get(f"/v1/projects/{pid}/regions/roi").json()["region"] == BOX


def test_concurrent_sample_jobs_never_interleave(client):
    pid = make_project(client)
    first = client.post(f"/v1/projects/{pid}/sample",
                        json={"region": BOX, "count": 300, "seed": 1}).json()
    second = client.post(f"/v1/projects/{pid}/sample",
                         json={"region": BOX, "count": 300, "seed": 2}).json()
    ids_a = wait_job(client, first["id"])["result"]["row_ids"]
    ids_b = wait_job(client, second["id"])["result"]["row_ids"]
    assert not set(ids_a) & set(ids_b)
    # single-writer: each job's ids are one contiguous block
    assert ids_a == list(range(ids_a[0], ids_a[0] + 300))
    assert ids_b == list(range(ids_b[0], ids_b[0] + 300))
    assert sorted(ids_a + ids_b) == list(range(600))
