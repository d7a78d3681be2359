"""HTTP service tests via the in-process test client."""

import pytest
from fastapi.testclient import TestClient

from sas.pool_io import pool_to_bytes
from sas.sampler import SelectionConfig, run_selection, selection_to_doc
from sas.scoring import score_pool
from sas.service import app, store
from sas.synth import SyntheticSpec, generate_pool


@pytest.fixture
def client():
    store.pools.clear()
    store.tables.clear()
    return TestClient(app)


@pytest.fixture
def pool():
    return generate_pool(
        SyntheticSpec(dim=8, n_classes=3, per_class=12, concentration=4.0, seed=31)
    )


@pytest.fixture
def pool_id(client, pool):
    response = client.post(
        "/pools",
        content=pool_to_bytes(pool),
        headers={"content-type": "application/octet-stream"},
    )
    assert response.status_code == 200
    return response.json()["pool_id"]


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "ok"


def test_upload_returns_summary_and_is_idempotent(client, pool, pool_id):
    doc = client.get(f"/pools/{pool_id}").json()
    assert doc["dim"] == 8
    assert doc["n_images"] == 36
    assert {c["name"]: c["count"] for c in doc["classes"]} == pool.class_histogram()
    again = client.post("/pools", content=pool_to_bytes(pool))
    assert again.json()["pool_id"] == pool_id
    assert len(client.get("/pools").json()["pools"]) == 1


def test_upload_bad_bytes_is_400(client):
    response = client.post("/pools", content=b"SASXgarbage")
    assert response.status_code == 400
    body = response.json()
    assert body["error"] == "PoolFormatError"
    assert "bad magic" in body["detail"]


def test_unknown_pool_is_404(client):
    assert client.get("/pools/deadbeef").status_code == 404
    assert client.post("/pools/deadbeef/selections", json={"ipc": 1}).status_code == 404


def test_synth_endpoint(client):
    response = client.post(
        "/pools/synth",
        json={"dim": 6, "classes": 2, "per_class": 4, "kappa": 2.0, "seed": 3},
    )
    assert response.status_code == 200
    assert response.json()["n_images"] == 8


def test_scores_endpoint(client, pool, pool_id):
    response = client.get(f"/pools/{pool_id}/scores")
    assert response.status_code == 200
    rows = response.json()["rows"]
    assert len(rows) == pool.n_images
    assert rows[0]["image_id"] == pool.image_ids[0]
    assert rows[0]["mixed"] is None

    with_mixed = client.get(f"/pools/{pool_id}/scores", params={"lambda": 0.1})
    assert with_mixed.json()["rows"][0]["mixed"] is not None

    bad = client.get(f"/pools/{pool_id}/scores", params={"lambda": -1})
    assert bad.status_code == 400


def test_selection_endpoint_matches_library(client, pool, pool_id):
    response = client.post(
        f"/pools/{pool_id}/selections",
        json={"ipc": 4, "ratio": 0.5, "selector": "sas"},
    )
    assert response.status_code == 200
    expected = selection_to_doc(
        run_selection(pool, score_pool(pool), SelectionConfig(ipc=4))
    )
    assert response.json() == expected


def test_selection_endpoint_accepts_cli_selector_name(client, pool_id):
    response = client.post(
        f"/pools/{pool_id}/selections", json={"ipc": 2, "selector": "margin"}
    )
    assert response.status_code == 200
    assert response.json()["config"]["selector"] == "margin_only"


def test_selection_endpoint_validates_config(client, pool_id):
    response = client.post(f"/pools/{pool_id}/selections", json={"ipc": 0})
    assert response.status_code == 400
    assert "ipc" in response.json()["detail"]


def test_report_endpoint(client, pool, pool_id):
    selection = client.post(
        f"/pools/{pool_id}/selections", json={"ipc": 3, "selector": "sas"}
    ).json()
    response = client.post(f"/pools/{pool_id}/report", json=selection)
    assert response.status_code == 200
    doc = response.json()
    assert doc["overall"]["n_selected"] == 9
    assert len(doc["classes"]) == 3


def test_sweep_endpoint(client, pool, pool_id):
    response = client.post(
        f"/pools/{pool_id}/sweep",
        json={"grid": [
            {"ipc": 2, "selector": "sas"},
            {"ipc": 2, "selector": "mixed", "lambda": 0.05},
        ]},
    )
    assert response.status_code == 200
    rows = response.json()["rows"]
    assert len(rows) == 2 * 4
    assert all(row["status"] == "ok" for row in rows)


def test_delete_pool(client, pool_id):
    assert client.delete(f"/pools/{pool_id}").status_code == 200
    assert client.get(f"/pools/{pool_id}").status_code == 404
