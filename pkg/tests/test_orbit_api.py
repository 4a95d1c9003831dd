import pytest
from fastapi.testclient import TestClient

import orbit_matching
from orbit_api import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_root(client):
    res = client.get("/")
    assert res.status_code == 200
    assert res.json()["version"].startswith("orbitgap")


def test_entropy(client):
    res = client.post("/api/entropy", json={"pA": 0.05, "pB": 0.95})
    assert res.status_code == 200
    body = res.json()
    assert body["h2_qu"] == pytest.approx(0.144010, rel=1e-5)
    assert body["exponent"] == pytest.approx(6.94395, rel=1e-5)
    assert body["regime"] == "quenched"


@pytest.mark.parametrize("payload", [{"pA": 1.0, "pB": 0.5}, {"pA": 0.5}, {"pA": "x", "pB": 0.5}])
def test_entropy_rejects_bad_parameters(client, payload):
    res = client.post("/api/entropy", json=payload)
    assert res.status_code == 400
    assert "error" in res.json()


def test_phase_diagram(client):
    res = client.get("/api/phase-diagram", params={"resolution": 16})
    assert res.status_code == 200
    body = res.json()
    assert body["columns"][-1] == "regime"
    assert len(body["rows"]) == 256


def test_phase_diagram_limits(client):
    assert client.get("/api/phase-diagram", params={"resolution": 512}).status_code == 400
    # below the grid floor: DomainError handler
    assert client.get("/api/phase-diagram", params={"resolution": 4}).status_code == 400


def test_diag_boundary(client):
    body = client.get("/api/diag-boundary").json()
    assert body["c_minus"] == pytest.approx(0.178203, abs=1e-5)
    assert body["c_plus"] == pytest.approx(1.0 - body["c_minus"], abs=1e-8)


def test_lcs_upload(client):
    files = {"x": ("x.txt", b"00101\n"), "y": ("y.txt", b"10100\n")}
    res = client.post("/api/lcs", files=files, data={"constraint": "all"})
    assert res.status_code == 200
    body = res.json()
    assert body["m"] == 3
    assert body["n"] == 5


def test_lcs_diagonal(client):
    files = {"x": ("x.txt", b"0110"), "y": ("y.txt", b"1110")}
    body = client.post("/api/lcs", files=files, data={"constraint": "diag"}).json()
    assert body["m"] == 3
    assert body["witness"] == [1, 1]
    assert body["truncated"] is True


def test_lcs_errors(client):
    files = {"x": ("x.txt", b"0101"), "y": ("y.txt", b"0101")}
    assert client.post("/api/lcs", files=files, data={"constraint": "nope"}).status_code == 400
    res = client.post("/api/lcs", files=files, data={"constraint": "offband", "alpha": 3})
    assert res.status_code == 400
    empty = {"x": ("x.txt", b""), "y": ("y.txt", b"01")}
    assert client.post("/api/lcs", files=empty).status_code == 400


@pytest.mark.parametrize("constraint", ["band", "offband"])
def test_lcs_negative_alpha(client, constraint):
    files = {"x": ("x.txt", b"0101"), "y": ("y.txt", b"0101")}
    res = client.post("/api/lcs", files=files, data={"constraint": constraint, "alpha": -1})
    assert res.status_code == 400
    assert "error" in res.json()


def test_lcs_missing_witness(client, monkeypatch):
    monkeypatch.setattr(orbit_matching, "_rect_witness", lambda *args: None)
    files = {"x": ("x.txt", b"0110"), "y": ("y.txt", b"0110")}
    res = client.post("/api/lcs", files=files, data={"constraint": "all"})
    assert res.status_code == 500
    assert "witness" in res.json()["error"]
