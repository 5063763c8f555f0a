"""Field-level comparison of extracted documents against ground truth."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .export import record_to_dict
from .grammar import GrammarRegistry, default_registry
from .pipeline import DocumentResult
from .records import LIVER_CHECKBOXES, assign_checkboxes


@dataclass
class FieldScore:
    matched: int = 0
    total: int = 0
    mismatches: list[str] = field(default_factory=list)

    @property
    def accuracy(self) -> float:
        return self.matched / self.total if self.total else 1.0

    def add(self, other: FieldScore) -> None:
        self.matched += other.matched
        self.total += other.total
        self.mismatches.extend(other.mismatches)


def extracted_tables(result: DocumentResult) -> dict[str, list[dict]]:
    return {name: [record_to_dict(r, schema) for r in rows] for name, (schema, rows) in result.tables.items()}


def score_document(result: DocumentResult, truth: dict) -> FieldScore:
    """Count exact matches of every ground-truth cell plus the document metadata."""
    score = FieldScore()
    got = extracted_tables(result)
    doc = truth.get("document", result.source)
    for table, rows in truth["tables"].items():
        out_rows = got.get(table, [])
        if len(out_rows) != len(rows):
            score.mismatches.append(f"{doc}/{table}: {len(out_rows)} rows, expected {len(rows)}")
        for i, expected in enumerate(rows):
            actual = out_rows[i] if i < len(out_rows) else {}
            for column, value in expected.items():
                score.total += 1
                if column in actual and actual[column] == value and type(actual[column]) is type(value):
                    score.matched += 1
                else:
                    score.mismatches.append(f"{doc}/{table}[{i}].{column}: {actual.get(column)!r} != {value!r}")
    meta = truth.get("meta", {})
    exported = record_to_dict(result.meta)
    for key in ("generated_at", "version_note"):
        if key in meta:
            score.total += 1
            if exported.get(key) == meta[key]:
                score.matched += 1
            else:
                score.mismatches.append(f"{doc}/meta.{key}: {exported.get(key)!r} != {meta[key]!r}")
    return score


def checkbox_verdicts(result: DocumentResult, registry: GrammarRegistry | None = None) -> dict[tuple[int, str], bool]:
    """Checkbox states as bound to fields: liver boxes by order, the heparin box by anchor."""
    registry = registry or default_registry()
    out = {}
    for page in result.pages:
        if page.form_id == "liver_data" and len(page.checkboxes) == len(LIVER_CHECKBOXES):
            out.update({(page.index, name): obs.checked for name, obs in zip(LIVER_CHECKBOXES, page.checkboxes)})
        elif page.form_id == "pre_operative_management" and page.checkboxes:
            anchors = registry.get("pre_operative_management").anchors
            for name, obs in assign_checkboxes(page.checkboxes, anchors).items():
                out[(page.index, name)] = obs.checked
    return out


def score_checkboxes(result: DocumentResult, truth: dict, registry: GrammarRegistry | None = None) -> FieldScore:
    score = FieldScore()
    got = checkbox_verdicts(result, registry)
    for box in truth.get("checkboxes", []):
        key = (box["page"], box["field"])
        score.total += 1
        if got.get(key) == box["checked"]:
            score.matched += 1
        else:
            score.mismatches.append(f"{truth.get('document')}: page {key[0]} {key[1]} -> {got.get(key)!r}")
    return score


def load_truth(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
