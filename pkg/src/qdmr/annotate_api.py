"""HTTP service backing the annotation workspace.

Three surfaces: a per-question closed lexicon, live validation of a step list
(lexicon violations, operator labels, and a graph preview; side-effect free),
and append-only annotation persistence with a round-robin question queue.
Review tags are written through a separate reviewer endpoint guarded by a
shared-secret header; the store itself is a flat JSON-lines file, one record
per line, with an explicit schema version on every payload.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, Header, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from qdmr.core import (
    Qdmr,
    QdmrError,
    QdmrMode,
    Question,
    build_lexicon,
    check_lexicon,
    load_function_words,
    parse_step,
)
from qdmr.graph import graph_document, to_graph
from qdmr.opident import OpidentError, identify_operator

SCHEMA_VERSION = 1

REVIEW_TAGS = ("Correct", "Granular", "Incorrect")


class LexiconRequest(BaseModel):
    question_text: str


class ValidateRequest(BaseModel):
    question_text: str
    steps: list[str]
    mode: str = "standard"


class AnnotationRequest(BaseModel):
    question_id: str
    question_text: str
    steps: list[str]
    annotator_id: str
    mode: str = "standard"


class ReviewRequest(BaseModel):
    review_tag: str


def _mode_of(name: str) -> QdmrMode:
    try:
        return QdmrMode.HIGH_LEVEL if name.lower() in ("high", "high_level") else QdmrMode(name.lower())
    except ValueError:
        raise HTTPException(status_code=400, detail=f"unknown mode {name!r}")


@dataclass
class AnnotationStore:
    """Append-only JSON-lines persistence with a single-writer lock."""

    path: str
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    _next_id: int = 1
    annotated_questions: set = field(default_factory=set)

    def __post_init__(self):
        try:
            with open(self.path, encoding="utf-8") as f:
                for line in f:
                    if not line.strip():
                        continue
                    record = json.loads(line)
                    if record.get("kind") == "annotation":
                        self._next_id = max(self._next_id, record["id"] + 1)
                        self.annotated_questions.add(record["question_id"])
        except FileNotFoundError:
            pass

    def append_annotation(self, payload: dict) -> int:
        with self._lock:
            record_id = self._next_id
            self._next_id += 1
            record = {"kind": "annotation", "id": record_id, **payload}
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(json.dumps(record) + "\n")
            self.annotated_questions.add(payload["question_id"])
            return record_id

    def append_review(self, annotation_id: int, review_tag: str) -> None:
        with self._lock:
            record = {
                "kind": "review",
                "annotation_id": annotation_id,
                "review_tag": review_tag,
                "schema_version": SCHEMA_VERSION,
            }
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(json.dumps(record) + "\n")

    def has_annotation(self, annotation_id: int) -> bool:
        with self._lock:
            return 1 <= annotation_id < self._next_id


def _validate_steps(question_text: str, steps: list[str], mode: QdmrMode, n_max: int, function_words):
    """Shared core of /validate and /annotations: violations, operator
    labels, graph document, and hard errors."""
    lexicon = build_lexicon(Question(id="live", text=question_text), n_max, function_words)
    violations: list[list[dict]] = []
    operators: list[str | None] = []
    errors: list[str] = []
    parsed_steps: list[QdmrStep] = []
    for i, text in enumerate(steps, start=1):
        try:
            step = parse_step(text, i)
        except QdmrError as err:
            errors.append(f"step {i}: {err}")
            violations.append([])
            operators.append(None)
            parsed_steps.append(None)  # type: ignore[arg-type]
            continue
        violations.append(
            [{"token": v.token, "position": v.position} for v in check_lexicon(step, lexicon)]
        )
        try:
            operators.append(identify_operator(step, mode).op.value)
        except OpidentError as err:
            operators.append(None)
            errors.append(f"step {i}: {err}")
        parsed_steps.append(step)

    graph_doc = None
    if not errors and parsed_steps and all(s is not None for s in parsed_steps):
        try:
            d = Qdmr(steps=tuple(parsed_steps), mode=mode)
            graph_doc = graph_document(to_graph(d))
        except QdmrError as err:
            errors.append(str(err))
    return violations, operators, graph_doc, errors


def create_app(
    questions: list[Question] | None = None,
    store_path: str = "annotations.jsonl",
    max_steps: int = 20,
    reviewer_secret: str | None = None,
    function_words: tuple[str, ...] | None = None,
    allow_origins: tuple[str, ...] = ("*",),
) -> FastAPI:
    app = FastAPI(title="decomposition annotation service")
    # The browser workspace is served from its own origin.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(allow_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    words = function_words or load_function_words()
    store = AnnotationStore(path=store_path)
    queue = list(questions or [])

    @app.post("/lexicon")
    def lexicon(request: LexiconRequest):
        if not request.question_text.strip():
            raise HTTPException(status_code=400, detail="question_text is empty")
        lex = build_lexicon(
            Question(id="live", text=request.question_text), max_steps, words
        )
        return {
            "schema_version": SCHEMA_VERSION,
            "tokens": sorted(lex.question_words),
            "function_words": list(lex.function_words),
            "refs": sorted(lex.ref_tokens, key=lambda r: int(r[1:])),
        }

    @app.post("/validate")
    def validate(request: ValidateRequest):
        mode = _mode_of(request.mode)
        violations, operators, graph_doc, errors = _validate_steps(
            request.question_text, request.steps, mode, max_steps, words
        )
        return {
            "schema_version": SCHEMA_VERSION,
            "violations": violations,
            "operators": operators,
            "graph": graph_doc,
            "errors": errors,
        }

    @app.post("/annotations")
    def annotate(request: AnnotationRequest):
        mode = _mode_of(request.mode)
        violations, operators, graph_doc, errors = _validate_steps(
            request.question_text, request.steps, mode, max_steps, words
        )
        flat_violations = [v for step in violations for v in step]
        if errors or flat_violations:
            raise HTTPException(
                status_code=409,
                detail={"errors": errors, "violations": flat_violations},
            )
        record_id = store.append_annotation(
            {
                "schema_version": SCHEMA_VERSION,
                "question_id": request.question_id,
                "question_text": request.question_text,
                "steps": request.steps,
                "operators": operators,
                "graph": graph_doc,
                "annotator_id": request.annotator_id,
                "mode": mode.value,
                "timestamp": time.time(),
                "review_tag": None,
            }
        )
        return {"schema_version": SCHEMA_VERSION, "id": record_id}

    @app.get("/questions")
    def next_question(split: str | None = None):
        for question in queue:
            if split and (question.split is None or question.split.value != split):
                continue
            if question.id in store.annotated_questions:
                continue
            return {
                "schema_version": SCHEMA_VERSION,
                "id": question.id,
                "text": question.text,
            }
        raise HTTPException(status_code=404, detail="no unannotated questions left")

    @app.post("/annotations/{annotation_id}/review")
    def review(
        annotation_id: int,
        request: ReviewRequest,
        x_reviewer_secret: str | None = Header(default=None),
    ):
        if reviewer_secret is None or x_reviewer_secret != reviewer_secret:
            raise HTTPException(status_code=403, detail="bad reviewer secret")
        if request.review_tag not in REVIEW_TAGS:
            raise HTTPException(
                status_code=400, detail=f"review_tag must be one of {REVIEW_TAGS}"
            )
        if not store.has_annotation(annotation_id):
            raise HTTPException(status_code=404, detail="unknown annotation id")
        store.append_review(annotation_id, request.review_tag)
        return {"schema_version": SCHEMA_VERSION, "annotation_id": annotation_id}

    return app
