"""Visual Turing test backend: deck construction and the response server.

The deck file is the server-side artifact and carries true labels; every
rater-facing payload is stripped of `true_source` until the session is
complete. Responses are appended to a per-session log and fsynced before
the next item is revealed, so a browser refresh resumes mid-session.
"""

from __future__ import annotations

import json
import os
import random
import re
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from pydantic import BaseModel

from .errors import ConfigurationError, EvaluationError
from .evaluation.turing import SOURCES, ReaderResponse

DECK_SCHEMA = "frost2ffpe-deck-v1"


class SessionRequest(BaseModel):
    rater_id: str


class JudgmentRequest(BaseModel):
    item_id: str
    judged_source: str


@dataclass
class Deck:
    seed: int
    n_per_class: int
    items: list[dict]  # {"item_id", "image", "true_source"} in display order
    base_dir: Path

    def __len__(self) -> int:
        return len(self.items)

    def item_index(self, item_id: str) -> int:
        for i, item in enumerate(self.items):
            if item["item_id"] == item_id:
                return i
        raise EvaluationError(f"unknown item {item_id!r}")

    def image_path(self, item_id: str) -> Path:
        item = self.items[self.item_index(item_id)]
        path = Path(item["image"])
        return path if path.is_absolute() else self.base_dir / path

    def public_items(self) -> list[dict]:
        """Rater-facing listing: no true_source, ever."""
        return [{"item_id": item["item_id"], "index": i} for i, item in enumerate(self.items)]


def deck_build(
    ffpe_dir: str | Path,
    ai_ffpe_dir: str | Path,
    n_per_class: int,
    seed: int,
    out_path: str | Path,
) -> dict:
    """Assemble a shuffled deck of n real and n synthesized patches.

    Sampling and the display order are both driven by the explicit seed, so
    the same invocation reproduces the same deck byte-for-byte.
    """
    if n_per_class < 1:
        raise ConfigurationError(f"n_per_class must be >= 1, got {n_per_class}")
    pools = {}
    for label, directory in (("real_ffpe", Path(ffpe_dir)), ("ai_ffpe", Path(ai_ffpe_dir))):
        if not directory.is_dir():
            raise ConfigurationError(f"{label} directory not found: {directory}")
        files = sorted(p for p in directory.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg"))
        if len(files) < n_per_class:
            raise ConfigurationError(
                f"{label} directory {directory} holds {len(files)} patches, need {n_per_class}"
            )
        pools[label] = files

    rng = random.Random(seed)
    chosen: list[tuple[str, Path]] = []
    for label in SOURCES:
        chosen += [(label, p) for p in rng.sample(pools[label], n_per_class)]
    rng.shuffle(chosen)

    out_path = Path(out_path)
    items = []
    for i, (label, path) in enumerate(chosen):
        items.append(
            {
                "item_id": f"item_{i:03d}",
                "image": os.path.relpath(path.resolve(), out_path.resolve().parent),
                "true_source": label,
            }
        )
    doc = {"schema": DECK_SCHEMA, "seed": seed, "n_per_class": n_per_class, "items": items}
    out_path.write_text(json.dumps(doc, indent=2) + "\n")
    return doc


def load_deck(path: str | Path) -> Deck:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"deck file not found: {path}")
    doc = json.loads(path.read_text())
    if doc.get("schema") != DECK_SCHEMA:
        raise ConfigurationError(f"unsupported deck schema {doc.get('schema')!r}")
    items = doc["items"]
    for item in items:
        if item["true_source"] not in SOURCES:
            raise ConfigurationError(f"bad true_source in deck: {item['true_source']!r}")
    return Deck(
        seed=int(doc["seed"]),
        n_per_class=int(doc["n_per_class"]),
        items=items,
        base_dir=path.parent,
    )


# ---- session persistence ----------------------------------------------------


def _utcnow_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


class SessionStore:
    """Append-only JSONL session logs under `root/sessions/`."""

    def __init__(self, root: str | Path, deck: Deck) -> None:
        self.root = Path(root) / "sessions"
        self.root.mkdir(parents=True, exist_ok=True)
        self.deck = deck
        self._lock = threading.Lock()

    def _path(self, session_id: str) -> Path:
        if not re.fullmatch(r"[A-Za-z0-9_.-]+", session_id):
            raise EvaluationError(f"malformed session id {session_id!r}")
        return self.root / f"{session_id}.jsonl"

    def _append(self, session_id: str, event: dict) -> None:
        with open(self._path(session_id), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def create(self, rater_id: str) -> dict:
        rater_id = rater_id.strip()
        if not rater_id:
            raise EvaluationError("rater_id must be non-empty")
        slug = re.sub(r"[^A-Za-z0-9_-]+", "-", rater_id)[:32]
        with self._lock:
            n = len(list(self.root.glob("*.jsonl")))
            session_id = f"s{n:04d}-{slug}"
            self._append(
                session_id,
                {"event": "start", "rater_id": rater_id, "timestamp": _utcnow_iso()},
            )
        return self.state(session_id)

    def _read(self, session_id: str) -> tuple[str, list[dict]]:
        path = self._path(session_id)
        if not path.is_file():
            raise EvaluationError(f"unknown session {session_id!r}")
        rater_id = ""
        responses: list[dict] = []
        for line in path.read_text().splitlines():
            event = json.loads(line)
            if event["event"] == "start":
                rater_id = event["rater_id"]
            elif event["event"] == "response":
                responses.append(event)
        return rater_id, responses

    def state(self, session_id: str) -> dict:
        rater_id, responses = self._read(session_id)
        cursor = len(responses)
        return {
            "session_id": session_id,
            "rater_id": rater_id,
            "cursor": cursor,
            "n_items": len(self.deck),
            "complete": cursor >= len(self.deck),
        }

    def submit(self, session_id: str, item_id: str, judged_source: str) -> dict:
        if judged_source not in SOURCES:
            raise EvaluationError(f"judged_source must be one of {SOURCES}, got {judged_source!r}")
        with self._lock:
            rater_id, responses = self._read(session_id)
            cursor = len(responses)
            if cursor >= len(self.deck):
                raise EvaluationError("session already complete")
            expected = self.deck.items[cursor]["item_id"]
            if item_id != expected:
                raise EvaluationError(
                    f"out-of-order submission: expected item {expected!r} at cursor {cursor}, got {item_id!r}"
                )
            if any(r["item_id"] == item_id for r in responses):
                raise EvaluationError(f"duplicate submission for item {item_id!r}")
            now = _utcnow_iso()
            if responses and responses[-1]["timestamp"] > now:
                now = responses[-1]["timestamp"]
            self._append(
                session_id,
                {"event": "response", "item_id": item_id, "judged_source": judged_source, "timestamp": now},
            )
        return self.state(session_id)

    def export(self, session_id: str) -> list[dict]:
        """Completed sessions only; re-attaches true_source from the deck."""
        rater_id, responses = self._read(session_id)
        remaining = len(self.deck) - len(responses)
        if remaining > 0:
            raise EvaluationError(f"session incomplete: {remaining} items remaining")
        out = []
        for event in responses:
            idx = self.deck.item_index(event["item_id"])
            out.append(
                ReaderResponse(
                    rater_id=rater_id,
                    item_id=event["item_id"],
                    true_source=self.deck.items[idx]["true_source"],
                    judged_source=event["judged_source"],
                    timestamp=event["timestamp"],
                ).to_dict()
            )
        return out


# ---- HTTP app ----------------------------------------------------------------


def create_app(deck_path: str | Path, responses_dir: str | Path, static_dir: str | Path | None = None):
    """Build the survey FastAPI app around one deck and one response store."""
    from fastapi import FastAPI, HTTPException
    from fastapi.responses import FileResponse, JSONResponse

    deck = load_deck(deck_path)
    store = SessionStore(responses_dir, deck)
    app = FastAPI(title="frost2ffpe survey", docs_url=None, redoc_url=None)

    @app.get("/api/deck")
    def deck_meta() -> dict:
        return {"schema": DECK_SCHEMA, "n_items": len(deck), "items": deck.public_items()}

    @app.get("/api/items/{item_id}/image")
    def item_image(item_id: str):
        try:
            path = deck.image_path(item_id)
        except EvaluationError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        if not path.is_file():
            raise HTTPException(status_code=404, detail=f"image missing for {item_id}")
        return FileResponse(path)

    @app.post("/api/sessions")
    def create_session(body: SessionRequest) -> dict:
        try:
            return store.create(body.rater_id)
        except EvaluationError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.get("/api/sessions/{session_id}")
    def session_state(session_id: str) -> dict:
        try:
            return store.state(session_id)
        except EvaluationError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.post("/api/sessions/{session_id}/responses")
    def submit(session_id: str, body: JudgmentRequest) -> dict:
        try:
            return store.submit(session_id, body.item_id, body.judged_source)
        except EvaluationError as exc:
            status = 404 if "unknown session" in str(exc) else 409
            raise HTTPException(status_code=status, detail=str(exc))

    @app.get("/api/sessions/{session_id}/export")
    def export(session_id: str):
        try:
            return JSONResponse(store.export(session_id))
        except EvaluationError as exc:
            status = 404 if "unknown session" in str(exc) else 409
            raise HTTPException(status_code=status, detail=str(exc))

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="static")

    return app


__all__ = ["DECK_SCHEMA", "Deck", "SessionStore", "create_app", "deck_build", "load_deck"]
