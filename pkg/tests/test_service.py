"""HTTP service endpoints."""

import math

import pytest
from fastapi.testclient import TestClient

from atomlat.collective import collective_energies
from atomlat.core_model import K_A
from atomlat.service import app

client = TestClient(app)


def test_health():
    assert client.get("/health").json() == {"status": "ok"}


def test_collective_single():
    r = client.post("/collective", json={"a": 0.6})
    assert r.status_code == 200
    ce = collective_energies((0.0, 0.0), 0.0, 0.6)
    body = r.json()
    assert body["shift"] == pytest.approx(ce.delta)
    assert body["width"] == pytest.approx(ce.gamma)


def test_collective_dual():
    r = client.post("/collective", json={"a": 0.6, "L": 0.45})
    body = r.json()
    assert {"shift_even", "width_even", "shift_odd", "width_odd"} <= body.keys()
    # even/odd widths sum to twice the single-array width
    ce = collective_energies((0.0, 0.0), 0.0, 0.6)
    assert body["width_even"] + body["width_odd"] == pytest.approx(2.0 * ce.gamma)


def test_transmission_on_resonance():
    ce = collective_energies((0.0, 0.0), 0.0, 0.6)
    r = client.post("/transmission", json={"a": 0.6, "delta": ce.delta})
    body = r.json()
    assert body["R"] == pytest.approx(1.0, abs=1e-12)
    assert body["T"] + body["R"] == pytest.approx(1.0, abs=1e-12)


def test_delay_single_resonance():
    ce = collective_energies((0.0, 0.0), 0.0, 0.6)
    r = client.post("/delay", json={"a": 0.6, "delta": ce.delta})
    assert r.json()["tau"] == pytest.approx(1.0 / ce.gamma)


def test_validation_errors():
    assert client.post("/collective", json={"a": 1.5}).status_code == 422
    assert client.post("/collective", json={"a": 0.6, "L": -1.0}).status_code == 422
    assert client.post("/delay", json={"a": 0.6}).status_code == 422  # missing delta


def test_domain_error_mapped_to_422():
    # a spacing whose Bragg channel sits on the light cone cannot be evaluated
    r = client.post("/transmission", json={"a": 1.0, "delta": 0.0})
    assert r.status_code == 422
    assert "detail" in r.json()


def test_g2_point():
    ce = collective_energies((0.0, 0.0), 0.0, 0.6)
    r = client.post(
        "/g2-analytic", json={"a": 0.6, "delta": ce.delta, "w0": 1.5, "t": 0.0}
    )
    assert r.status_code == 200
    g2 = r.json()["g2"]
    assert 0.0 <= g2 < 1.0  # reflected light on resonance antibunches
