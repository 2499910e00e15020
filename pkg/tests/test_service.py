"""HTTP surface: request validation, status codes, payload shapes."""

import math

import pytest

IDEAL2 = {"kind": "affine", "A": [[1.0, 0.0], [0.0, 1.0]]}
MODEL3 = {
    "kind": "affine",
    "A": [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
    "b": [0.3, -0.2, 0.1],
}
REGION1 = {
    "generators": [[1.0, 2.0], [-1.0, 2.0]],
    "lower": {"kind": "affine", "A": [[0.0]]},
    "upper": {"kind": "affine", "A": [[1.0], [-1.0]]},
}


def test_geom_at_ideal_origin(client):
    r = client.post("/geom/at", json={"model": IDEAL2, "point": [0.0, 0.0]})
    assert r.status_code == 200
    doc = r.json()
    assert doc["det_g"] == pytest.approx(1.5)
    assert doc["S"] == pytest.approx(math.log(2.0))
    assert doc["gauss_curvature"] == pytest.approx(0.0, abs=1e-14)
    assert len(doc["g"]) == 2 and len(doc["g"][0]) == 2


def test_geom_at_rejects_bad_model(client):
    r = client.post("/geom/at", json={"model": {"kind": "nope"}, "point": [0.0]})
    assert r.status_code == 400
    assert "error" in r.json()


def test_geom_at_rejects_wrong_point_length(client):
    r = client.post("/geom/at", json={"model": IDEAL2, "point": [0.0]})
    assert r.status_code == 400


def test_request_validation_is_strict(client):
    r = client.post("/geom/at", json={"model": IDEAL2})
    assert r.status_code == 422
    r = client.post("/geom/at", json={"model": IDEAL2, "point": [0, 0], "zzz": 1})
    assert r.status_code == 422


def test_deform_report_roundtrip(client):
    body = {
        "model": MODEL3,
        "point": [0.4, -0.7],
        "deformation": {"delta_f": [0.5, -0.2, 0.1]},
    }
    r = client.post("/deform/report", json=body)
    assert r.status_code == 200
    doc = r.json()
    assert doc["classification"] in {"increasing", "decreasing", "reversible"}
    assert len(doc["delta_w"]) == 3
    assert doc["as_printed"] is False
    body["as_printed"] = True
    r2 = client.post("/deform/report", json=body)
    assert r2.json()["as_printed"] is True


def test_deform_report_shift_form(client):
    body = {
        "model": MODEL3,
        "point": [0.4, -0.7],
        "deformation": {"shift": {"v": [1.0, 0.0], "tau": 0.25}},
    }
    r = client.post("/deform/report", json=body)
    assert r.status_code == 200


def test_deform_report_bad_deformation(client):
    body = {"model": MODEL3, "point": [0.4, -0.7], "deformation": {"delta_f": []}}
    assert client.post("/deform/report", json=body).status_code == 400


def test_replicator_run_payload(client):
    body = {"model": MODEL3, "point": [0.4, -0.7], "steps": 5}
    r = client.post("/replicator/run", json=body)
    assert r.status_code == 200
    doc = r.json()
    assert len(doc["weights"]) == 6
    assert len(doc["entropies"]) == 6
    assert doc["shift"] > 0.0
    for row in doc["weights"]:
        assert sum(row) == pytest.approx(1.0, abs=1e-10)


def test_replicator_run_shift_forms(client):
    body = {"model": MODEL3, "point": [0.4, -0.7], "steps": 2, "shift": 4.0}
    assert client.post("/replicator/run", json=body).json()["shift"] == 4.0
    body["shift"] = "auto"
    assert client.post("/replicator/run", json=body).status_code == 200
    body["shift"] = "sideways"
    assert client.post("/replicator/run", json=body).status_code == 400
    body = {"model": MODEL3, "point": [0.4, -0.7], "steps": 0}
    assert client.post("/replicator/run", json=body).status_code == 400
    body["steps"] = -1
    assert client.post("/replicator/run", json=body).status_code == 422


def test_potential_verify_passes(client):
    r = client.post("/potential/verify", json={"m": 3, "seed": 7})
    assert r.status_code == 200
    doc = r.json()
    assert doc["passed"] is True
    assert doc["pde_residual"] <= 1e-9
    assert doc["path_residual"] <= 1e-9
    assert doc["round_trip_residual"] <= 1e-10
    assert doc["jacobian_residual"] <= 1e-10
    assert doc["m"] == 3 and doc["seed"] == 7
    assert client.post("/potential/verify", json={"m": 1, "seed": 0}).status_code == 422


def test_sweep_s2_rows(client):
    r = client.post("/sweep/s2", json={"c_min": 0.5, "c_max": 1.0, "steps": 3})
    assert r.status_code == 200
    rows = r.json()["rows"]
    assert [row["c"] for row in rows] == pytest.approx([0.5, 0.75, 1.0])
    for row in rows:
        assert row["quadrature"] == pytest.approx(row["closed"], abs=1e-6)
    assert client.post("/sweep/s2", json={"c_min": 2.0, "c_max": 1.0, "steps": 2}).status_code == 400
    assert client.post("/sweep/s2", json={"c_min": -1.0, "c_max": 1.0, "steps": 2}).status_code == 400


def test_sweep_s2_ratio_none_near_asymptote_root(client):
    # the linear asymptote crosses zero near c = 0.822; the ratio is omitted there
    c_star = 0.8221083405766183
    r = client.post("/sweep/s2", json={"c_min": c_star, "c_max": c_star, "steps": 1})
    row = r.json()["rows"][0]
    assert row["ratio"] is None
    r = client.post("/sweep/s2", json={"c_min": 2.0, "c_max": 2.0, "steps": 1})
    assert r.json()["rows"][0]["ratio"] is not None


def test_volume_check_route(client):
    body = {"region": REGION1, "samples": 20_000, "seed": 5}
    r = client.post("/volume/check", json=body)
    assert r.status_code == 200
    doc = r.json()
    assert abs(doc["delta_S"] - doc["volume_times"]) <= 3.0 * doc["mc_sigma"]
    assert doc["seed"] == 5
    bad = {"region": {"generators": REGION1["generators"]}, "samples": 1000, "seed": 0}
    assert client.post("/volume/check", json=bad).status_code == 400
    assert client.post("/volume/check", json={"region": REGION1, "samples": 10, "seed": 0}).status_code == 422


def test_verify_all_deterministic(client):
    r1 = client.post("/verify/all", json={"seed": 123})
    r2 = client.post("/verify/all", json={"seed": 123})
    assert r1.status_code == 200
    doc1, doc2 = r1.json(), r2.json()
    assert doc1 == doc2
    assert doc1["passed"] is True
    assert doc1["seed"] == 123
    names = [c["name"] for c in doc1["checks"]]
    assert len(names) == len(set(names))
    assert all(c["passed"] for c in doc1["checks"])
