import json

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from frost2ffpe.errors import ConfigurationError, EvaluationError
from frost2ffpe.evaluation.kappa import RatingMatrix, fleiss_kappa
from frost2ffpe.evaluation.turing import ReaderResponse, turing_scores
from frost2ffpe.survey import SessionStore, create_app, deck_build, load_deck


@pytest.fixture
def patch_dirs(tmp_path, rng):
    ffpe = tmp_path / "ffpe"
    ai = tmp_path / "ai"
    ffpe.mkdir()
    ai.mkdir()
    for d, tag in ((ffpe, "f"), (ai, "a")):
        for i in range(8):
            pixels = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
            Image.fromarray(pixels).save(d / f"{tag}{i}.png")
    return ffpe, ai


def test_deck_build_counts_and_determinism(tmp_path, patch_dirs):
    ffpe, ai = patch_dirs
    out1 = tmp_path / "deck1.json"
    out2 = tmp_path / "deck2.json"
    doc1 = deck_build(ffpe, ai, n_per_class=5, seed=42, out_path=out1)
    doc2 = deck_build(ffpe, ai, n_per_class=5, seed=42, out_path=out2)
    assert len(doc1["items"]) == 10
    labels = [i["true_source"] for i in doc1["items"]]
    assert labels.count("real_ffpe") == labels.count("ai_ffpe") == 5
    assert [i["image"] for i in doc1["items"]] == [i["image"] for i in doc2["items"]]
    different = deck_build(ffpe, ai, n_per_class=5, seed=43, out_path=tmp_path / "deck3.json")
    assert [i["image"] for i in different["items"]] != [i["image"] for i in doc1["items"]]


def test_deck_build_insufficient_patches(tmp_path, patch_dirs):
    ffpe, ai = patch_dirs
    with pytest.raises(ConfigurationError) as exc:
        deck_build(ffpe, ai, n_per_class=20, seed=1, out_path=tmp_path / "d.json")
    assert "8" in str(exc.value)


@pytest.fixture
def deck_path(tmp_path, patch_dirs):
    ffpe, ai = patch_dirs
    path = tmp_path / "deck.json"
    deck_build(ffpe, ai, n_per_class=5, seed=7, out_path=path)
    return path


@pytest.fixture
def client(deck_path, tmp_path):
    app = create_app(deck_path, tmp_path / "responses")
    return TestClient(app)


def test_session_lifecycle_and_export(client, deck_path):
    deck = load_deck(deck_path)
    started = client.post("/api/sessions", json={"rater_id": "dr-a"})
    assert started.status_code == 200
    sid = started.json()["session_id"]
    assert started.json()["cursor"] == 0

    meta = client.get("/api/deck").json()
    assert meta["n_items"] == 10
    for index, item in enumerate(meta["items"]):
        image = client.get(f"/api/items/{item['item_id']}/image")
        assert image.status_code == 200
        judged = "real_ffpe" if index % 2 == 0 else "ai_ffpe"
        reply = client.post(
            f"/api/sessions/{sid}/responses",
            json={"item_id": item["item_id"], "judged_source": judged},
        )
        assert reply.status_code == 200
        assert reply.json()["cursor"] == index + 1

    export = client.get(f"/api/sessions/{sid}/export")
    assert export.status_code == 200
    responses = [ReaderResponse.from_dict(d) for d in export.json()]
    assert len(responses) == 10
    labels = [r.true_source for r in responses]
    assert labels.count("real_ffpe") == labels.count("ai_ffpe") == 5
    stamps = [r.timestamp for r in responses]
    assert stamps == sorted(stamps)
    # the export feeds the evaluation pipeline directly
    scores = turing_scores(responses)
    assert scores.n_responses == 10


def test_empty_rater_rejected(client):
    reply = client.post("/api/sessions", json={"rater_id": "  "})
    assert reply.status_code == 400


def test_two_raters_same_order(client):
    a = client.post("/api/sessions", json={"rater_id": "a"}).json()["session_id"]
    b = client.post("/api/sessions", json={"rater_id": "b"}).json()["session_id"]
    assert a != b
    meta = client.get("/api/deck").json()
    # the deck endpoint is session-independent: everyone sees the same order
    assert [i["item_id"] for i in meta["items"]] == [f"item_{n:03d}" for n in range(10)]


def test_out_of_order_and_duplicate_rejected(client):
    sid = client.post("/api/sessions", json={"rater_id": "c"}).json()["session_id"]
    items = client.get("/api/deck").json()["items"]
    wrong = client.post(
        f"/api/sessions/{sid}/responses",
        json={"item_id": items[1]["item_id"], "judged_source": "real_ffpe"},
    )
    assert wrong.status_code == 409
    ok = client.post(
        f"/api/sessions/{sid}/responses",
        json={"item_id": items[0]["item_id"], "judged_source": "real_ffpe"},
    )
    assert ok.status_code == 200
    dup = client.post(
        f"/api/sessions/{sid}/responses",
        json={"item_id": items[0]["item_id"], "judged_source": "ai_ffpe"},
    )
    assert dup.status_code == 409
    assert client.get(f"/api/sessions/{sid}").json()["cursor"] == 1


def test_export_requires_completion(client):
    sid = client.post("/api/sessions", json={"rater_id": "d"}).json()["session_id"]
    reply = client.get(f"/api/sessions/{sid}/export")
    assert reply.status_code == 409
    assert "10" in reply.json()["detail"]


def test_blinding_no_pre_completion_payload_contains_true_source(client):
    sid = client.post("/api/sessions", json={"rater_id": "e"}).json()["session_id"]
    items = client.get("/api/deck").json()["items"]
    payloads = [
        client.get("/api/deck").content,
        client.get(f"/api/sessions/{sid}").content,
        client.get(f"/api/items/{items[0]['item_id']}/image").content,
        client.post(
            f"/api/sessions/{sid}/responses",
            json={"item_id": items[0]["item_id"], "judged_source": "ai_ffpe"},
        ).content,
        client.get(f"/api/sessions/{sid}/export").content,  # 409, still must not leak
    ]
    for payload in payloads:
        assert b"true_source" not in payload


def test_refresh_resumes_cursor(deck_path, tmp_path):
    responses_dir = tmp_path / "responses"
    app = create_app(deck_path, responses_dir)
    client = TestClient(app)
    sid = client.post("/api/sessions", json={"rater_id": "f"}).json()["session_id"]
    items = client.get("/api/deck").json()["items"]
    for item in items[:4]:
        client.post(
            f"/api/sessions/{sid}/responses",
            json={"item_id": item["item_id"], "judged_source": "real_ffpe"},
        )
    # a fresh app over the same store (server restart / browser refresh)
    client2 = TestClient(create_app(deck_path, responses_dir))
    state = client2.get(f"/api/sessions/{sid}").json()
    assert state["cursor"] == 4
    assert not state["complete"]


def test_session_store_rejects_malformed_ids(deck_path, tmp_path):
    store = SessionStore(tmp_path / "responses", load_deck(deck_path))
    with pytest.raises(EvaluationError):
        store.state("../escape")


def test_static_frontend_served_when_built(deck_path, tmp_path):
    from pathlib import Path

    dist = Path(__file__).resolve().parents[1] / "frontend" / "dist"
    if not (dist / "index.html").is_file():
        pytest.skip("frontend not built")
    client = TestClient(create_app(deck_path, tmp_path / "responses", static_dir=dist))
    index = client.get("/")
    assert index.status_code == 200
    assert b'id="app"' in index.content
    module = client.get("/js/main.js")
    assert module.status_code == 200
    assert b"bootstrap" in module.content
    # API routes take precedence over the static mount
    assert client.get("/api/deck").status_code == 200


def test_full_deck_export_feeds_kappa(client):
    sids = []
    for rater in ("r1", "r2"):
        sid = client.post("/api/sessions", json={"rater_id": rater}).json()["session_id"]
        for item in client.get("/api/deck").json()["items"]:
            client.post(
                f"/api/sessions/{sid}/responses",
                json={"item_id": item["item_id"], "judged_source": "real_ffpe"},
            )
        sids.append(sid)
    responses = []
    for sid in sids:
        responses += [ReaderResponse.from_dict(d) for d in client.get(f"/api/sessions/{sid}/export").json()]
    result = fleiss_kappa(RatingMatrix.from_responses(responses))
    assert result.undefined  # everyone picked one category
