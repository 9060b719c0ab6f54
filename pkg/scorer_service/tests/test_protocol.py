import jsonschema
import pytest

from scorer_service.app import create_app

SCORE_RESPONSE_SCHEMA = {
    "type": "object",
    "required": ["scores"],
    "properties": {
        "scores": {
            "type": "array",
            "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        }
    },
}

VERDICT_RESPONSE_SCHEMA = {
    "type": "object",
    "required": ["verdicts"],
    "properties": {
        "verdicts": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["label", "probs"],
                "properties": {
                    "label": {"enum": ["SUPPORTED", "REFUTED", "NOT_ENOUGH_INFO"]},
                    "probs": {
                        "type": "array",
                        "minItems": 3,
                        "maxItems": 3,
                        "items": {"type": "number", "minimum": 0, "maximum": 1},
                    },
                },
            },
        }
    },
}


def score(client, pairs):
    return client.post("/score_evidence", json={"pairs": pairs})


def classify(client, items):
    return client.post("/classify_verdict", json={"items": items})


class TestScoreEvidence:
    def test_empty_pairs(self, client):
        resp = score(client, [])
        assert resp.status_code == 200
        assert resp.json() == {"scores": []}

    def test_response_schema_and_open_interval(self, client):
        pairs = [
            {"claim": f"polar bears are in decline {i}", "sentence": "sea ice loss is real"}
            for i in range(10)
        ]
        resp = score(client, pairs)
        assert resp.status_code == 200
        payload = resp.json()
        jsonschema.validate(payload, SCORE_RESPONSE_SCHEMA)
        assert len(payload["scores"]) == 10
        assert all(0.0 < s < 1.0 for s in payload["scores"])

    def test_repeated_pair_identical_scores(self, client):
        pair = {"claim": "ocean temperatures are rising", "sentence": "the ocean is warming"}
        resp = score(client, [pair, pair])
        scores = resp.json()["scores"]
        assert scores[0] == scores[1]

    def test_deterministic_across_requests(self, client):
        pairs = [{"claim": "solar panels make electricity", "sentence": "panels convert sunlight"}]
        first = score(client, pairs).json()
        second = score(client, pairs).json()
        assert first == second

    def test_malformed_body_is_400(self, client):
        resp = client.post("/score_evidence", json={"pairs": [{"claim": "x"}]})
        assert resp.status_code == 400
        resp = client.post(
            "/score_evidence",
            content=b"not json",
            headers={"Content-Type": "application/json"},
        )
        assert resp.status_code == 400

    def test_oversize_batch_is_413(self, client, service_config):
        pairs = [
            {"claim": "c", "sentence": f"s{i}"}
            for i in range(service_config.max_batch + 1)
        ]
        assert score(client, pairs).status_code == 413

    def test_full_batch_is_one_forward_pass(self, client, app):
        scorer = app.state.evidence_scorer
        calls = 0
        original = scorer.model.forward

        def counting_forward(*args, **kwargs):
            nonlocal calls
            calls += 1
            return original(*args, **kwargs)

        scorer.model.forward = counting_forward
        try:
            pairs = [{"claim": "c", "sentence": f"s{i}"} for i in range(64)]
            assert score(client, pairs).status_code == 200
        finally:
            scorer.model.forward = original
        assert calls == 1

    def test_long_evidence_truncated_claim_survives(self, client):
        resp = score(
            client,
            [{"claim": "polar bears", "sentence": "ice " * 5000}],
        )
        assert resp.status_code == 200
        assert 0.0 < resp.json()["scores"][0] < 1.0


class TestClassifyVerdict:
    def test_empty_items(self, client):
        resp = classify(client, [])
        assert resp.status_code == 200
        assert resp.json() == {"verdicts": []}

    def test_schema_probs_sum_and_argmax(self, client):
        items = [
            {"claim": "the city council approved the budget", "evidence": ["the vote passed"]},
            {"claim": "honey never spoils", "evidence": []},
            {"claim": "vaccines cause autism", "evidence": ["vaccines are not linked to autism", "studies agree"]},
        ]
        resp = classify(client, items)
        assert resp.status_code == 200
        payload = resp.json()
        jsonschema.validate(payload, VERDICT_RESPONSE_SCHEMA)
        order = ["SUPPORTED", "REFUTED", "NOT_ENOUGH_INFO"]
        for verdict in payload["verdicts"]:
            assert abs(sum(verdict["probs"]) - 1.0) <= 1e-6
            best = max(range(3), key=lambda i: (verdict["probs"][i], -i))
            assert verdict["label"] == order[best]

    def test_same_item_twice_identical(self, client):
        item = {"claim": "goldfish have a long memory", "evidence": ["they remember for months"]}
        verdicts = classify(client, [item, item]).json()["verdicts"]
        assert verdicts[0] == verdicts[1]

    def test_malformed_is_400(self, client):
        resp = client.post("/classify_verdict", json={"items": [{"claim": 3}]})
        assert resp.status_code == 400

    def test_oversize_is_413(self, client, service_config):
        items = [
            {"claim": f"c{i}", "evidence": []}
            for i in range(service_config.max_batch + 1)
        ]
        assert classify(client, items).status_code == 413

    def test_one_forward_per_model_per_batch(self, client, app):
        classifier = app.state.verdict_classifier
        calls = 0
        original = classifier.model.forward

        def counting_forward(*args, **kwargs):
            nonlocal calls
            calls += 1
            return original(*args, **kwargs)

        classifier.model.forward = counting_forward
        try:
            items = [{"claim": f"c{i}", "evidence": ["e"]} for i in range(64)]
            assert classify(client, items).status_code == 200
        finally:
            classifier.model.forward = original
        assert calls == 1


class TestLifecycle:
    def test_info_endpoint(self, client, service_config):
        payload = client.get("/info").json()
        assert payload["max_batch"] == service_config.max_batch
        assert payload["max_sequence_length"] == service_config.max_sequence_length
        assert payload["models"]["evidence"] == service_config.evidence_model
        assert payload["verdict_label_order"] == ["SUPPORTED", "REFUTED", "NOT_ENOUGH_INFO"]
        assert "version" in payload

    def test_not_ready_is_503(self, service_config):
        from fastapi.testclient import TestClient

        bare = create_app(service_config, load_models=False)
        with TestClient(bare) as client:
            resp = client.post("/score_evidence", json={"pairs": []})
            assert resp.status_code == 503
            resp = client.post("/classify_verdict", json={"items": []})
            assert resp.status_code == 503

    def test_unloadable_model_refuses_to_start(self, service_config, tmp_path):
        from scorer_service.config import ServiceConfig
        from scorer_service.models import ModelLoadError

        broken = ServiceConfig(
            evidence_model=str(tmp_path / "missing"),
            verdict_model=service_config.verdict_model,
        )
        with pytest.raises(ModelLoadError):
            create_app(broken)
