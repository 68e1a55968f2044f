"""HTTP surface over the CLI commands."""

import pytest
from fastapi.testclient import TestClient

from api.app import app


@pytest.fixture
def client():
    with TestClient(app) as client:
        yield client


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"


def test_builtins_are_listed_by_kind(client):
    body = client.get("/v1/builtins").json()
    assert "qx-coperad" in body["coperad"]
    assert "coaction-cogebra" in body["cogebra"]


def test_bar_endpoint(client):
    response = client.post("/v1/constructions/bar", json={"input": "builtin:unit-operad", "max_weight": 3})
    assert response.status_code == 200
    body = response.json()
    assert body["success"] is True
    assert body["command"] == "bar"
    assert body["result"]["degree_dims"]["4"] == 4


def test_embedded_payload(client):
    payload = {
        "kind": "complex",
        "basis": [{"key": "a", "degree": 1}, {"key": "b", "degree": 0}],
        "differential": {"a": {"b": "1"}},
    }
    response = client.post("/v1/verifications/homology", json={"input": payload})
    assert response.status_code == 200
    assert response.json()["result"]["homology"] == {}


def test_unknown_builtin_is_unprocessable(client):
    response = client.post("/v1/constructions/bar", json={"input": "builtin:nothing"})
    assert response.status_code == 422
    assert "MalformedInputError" in response.json()["detail"]


def test_failed_validation_is_a_conflict(client):
    payload = {
        "kind": "complex",
        "basis": [{"key": "c", "degree": 2}, {"key": "a", "degree": 1}, {"key": "b", "degree": 0}],
        "differential": {"c": {"a": "1"}, "a": {"b": "1"}},
    }
    response = client.post("/v1/verifications/validate", json={"input": payload})
    assert response.status_code == 409
    assert response.json()["detail"]["report"]["passed"] is False
