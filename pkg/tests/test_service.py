"""HTTP service: endpoints, determinism, guidance, error mapping."""

import base64

import numpy as np
import pytest
from fastapi.testclient import TestClient

from genmatte.config import config_from_dict
from genmatte.engine import MattingEngine
from genmatte.imgio import encode_png_bytes, load_image
from genmatte.service import create_app


def _b64_image(img, bit_depth=8):
    return base64.b64encode(encode_png_bytes(img, bit_depth=bit_depth)).decode()


@pytest.fixture(scope="module")
def threshold_client():
    cfg = config_from_dict({"denoiser": {"kind": "procedural",
                                         "target": "luminance_threshold"}})
    return TestClient(create_app(MattingEngine(cfg)))


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(MattingEngine()))


class TestBasicEndpoints:
    def test_health_before_any_inference(self):
        fresh = TestClient(create_app(MattingEngine()))
        r = fresh.get("/v1/health")
        assert r.status_code == 200
        assert r.json()["status"] == "ok"

    def test_config_endpoint(self, client):
        r = client.get("/v1/config")
        assert r.status_code == 200
        body = r.json()
        assert body["codec"]["f"] == 8
        assert body["sampler"]["steps"] == 10


class TestMatte:
    def _image(self):
        rng = np.random.default_rng(3)
        return rng.uniform(0.05, 0.95, (3, 32, 48))

    def test_deterministic_alpha_payload(self, client):
        req = {"image": _b64_image(self._image()), "seed": 11}
        a = client.post("/v1/matte", json=req)
        b = client.post("/v1/matte", json=req)
        assert a.status_code == b.status_code == 200
        assert a.json()["alpha"] == b.json()["alpha"]
        assert a.json()["latent_f"] == 8
        assert a.json()["timing_ms"] >= 0

    def test_alpha_matches_oracle_target(self, client):
        from genmatte.denoiser import TARGET_FUNCTIONS

        img = self._image()
        r = client.post("/v1/matte", json={"image": _b64_image(img)})
        assert r.status_code == 200
        alpha = load_image(base64.b64decode(r.json()["alpha"]))
        target = TARGET_FUNCTIONS["luminance_softstep"](img)
        # input went through 8-bit quantization before the oracle saw it
        q = np.round(img * 255) / 255
        target_q = TARGET_FUNCTIONS["luminance_softstep"](q)
        assert np.abs(alpha - target_q).max() < 1e-3
        assert np.abs(alpha - target).max() < 0.05

    def test_trimap_known_regions_honored(self, threshold_client):
        # luminance step image; trimap consistent with the oracle target:
        # known 0 on the left, known 1 on the right, unknown near the seam
        h, w = 32, 48
        img = np.full((3, h, w), 0.2)
        img[:, :, 24:] = 0.8
        trimap = np.full((1, h, w), 0.5)
        trimap[0, :, :12] = 0.0
        trimap[0, :, 36:] = 1.0
        r = threshold_client.post("/v1/matte", json={
            "image": _b64_image(img),
            "guidance": {"trimap": _b64_image(trimap, bit_depth=8)},
            "hr": True,
        })
        assert r.status_code == 200, r.text
        alpha = load_image(base64.b64decode(r.json()["alpha"]))
        known0 = trimap[0] == 0.0
        known1 = trimap[0] == 1.0
        assert np.abs(alpha[0][known0]).max() < 1e-3
        assert np.abs(alpha[0][known1] - 1.0).max() < 1e-3

    def test_diagnostics_payload(self, client):
        r = client.post("/v1/matte", json={"image": _b64_image(self._image()),
                                           "hr": True, "diagnostics": True,
                                           "seeds": 3})
        assert r.status_code == 200
        body = r.json()
        assert "boxes" in body
        assert "uncertainty" in body

    def test_scribble_guidance_accepted(self, client):
        doc = {"strokes": [{"label": 1, "radius": 2, "points": [[4, 4], [20, 4]]},
                           {"label": 0, "radius": 2, "points": [[4, 28], [20, 28]]}]}
        r = client.post("/v1/matte", json={"image": _b64_image(self._image()),
                                           "guidance": {"scribbles": doc}})
        assert r.status_code == 200, r.text


class TestErrors:
    def test_malformed_json_400(self, client):
        r = client.post("/v1/matte", content=b"{nope",
                        headers={"content-type": "application/json"})
        assert r.status_code == 400

    def test_missing_image_400(self, client):
        assert client.post("/v1/matte", json={}).status_code == 400

    def test_bad_base64_400(self, client):
        assert client.post("/v1/matte", json={"image": "!!!"}).status_code == 400

    def test_conflicting_guidance_400(self, client):
        img = _b64_image(np.full((1, 16, 16), 0.5))
        r = client.post("/v1/matte", json={
            "image": img,
            "guidance": {"trimap": img, "mask": img},
        })
        assert r.status_code == 400

    def test_unknown_field_400(self, client):
        r = client.post("/v1/matte", json={"image": _b64_image(np.zeros((1, 16, 16))),
                                           "magic": True})
        assert r.status_code == 400

    def test_invalid_trimap_values_422(self, client):
        img = np.full((3, 16, 16), 0.5)
        bad_trimap = np.full((1, 16, 16), 0.3)
        r = client.post("/v1/matte", json={
            "image": _b64_image(img),
            "guidance": {"trimap": _b64_image(bad_trimap)},
        })
        assert r.status_code == 422

    def test_oversize_413(self):
        tiny = TestClient(create_app(MattingEngine(), max_request_bytes=64))
        r = tiny.post("/v1/matte", json={"image": _b64_image(np.zeros((1, 16, 16)))})
        assert r.status_code == 413

    def test_statelessness_interleaved_requests(self, client):
        img_a = np.full((3, 16, 16), 0.25)
        img_b = np.full((3, 16, 16), 0.75)
        first = client.post("/v1/matte", json={"image": _b64_image(img_a), "seed": 1})
        client.post("/v1/matte", json={"image": _b64_image(img_b), "seed": 2})
        again = client.post("/v1/matte", json={"image": _b64_image(img_a), "seed": 1})
        assert first.json()["alpha"] == again.json()["alpha"]
