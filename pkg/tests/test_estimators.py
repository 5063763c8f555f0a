from __future__ import annotations

import random

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from formextract.checkbox import Component, classify_checkbox
from formextract.estimators import (
    CHECKED,
    NOT_A_CHECKBOX,
    UNCHECKED,
    CheckboxClassifier,
    FormParser,
    LayoutTextExtractor,
    component_features,
)
from formextract.synth import apply_perturbations, build_document, document_bytes
from formextract.synth.forms import expected_lines


def test_extractor_matches_intended_grid():
    doc = build_document("referral_worksheet", 4)
    (pages,) = LayoutTextExtractor().fit_transform([document_bytes(doc)])
    assert pages == [expected_lines(p) for p in doc.pages]


def test_extractor_params_clone():
    est = clone(LayoutTextExtractor(col_pitch=5.0))
    assert est.get_params() == {"col_pitch": 5.0, "row_pitch": 12.0}


def alt_label_pages(n: int) -> list[list[str]]:
    pages = []
    for seed in range(n):
        doc = build_document("liver_data", seed)
        if seed % 2:
            doc = apply_perturbations(doc, {"AltLabels"}, random.Random(seed))
        pages.extend(expected_lines(p) for p in doc.pages)
    return pages


def test_form_parser_refines_on_fit():
    pages = alt_label_pages(10)
    unrefined = FormParser(refine=False).fit(pages)
    assert unrefined.score(pages) == pytest.approx(0.5)
    refined = FormParser().fit(pages)
    assert refined.score(pages) == 1.0
    assert refined.n_pages_seen_ == 10
    assert refined.reports_["liver_data"].parse_rate == pytest.approx(0.5)


def test_form_parser_predict_unknown_page():
    parser = FormParser().fit([])
    assert parser.predict([["nothing to see"]]) == [(None, None)]
    assert parser.score([["nothing to see"]]) == 0.0


def test_form_parser_requires_fit():
    with pytest.raises(NotFittedError):
        FormParser().predict([[]])


def test_component_features_shape():
    comps = [Component(1, (0, 0, 79, 79), 6000, (40, 40)), Component(2, (0, 0, 9, 19), 10, (5, 10))]
    assert component_features(comps).tolist() == [[80, 80, 6000], [10, 20, 10]]
    assert component_features([]).shape == (0, 3)


@pytest.mark.parametrize("dpi", [150, 300])
def test_classifier_agrees_with_classify_checkbox(dpi):
    rng = random.Random(dpi)
    comps = []
    for i in range(300):
        w, h = rng.randint(10, 150) * dpi // 300, rng.randint(10, 150) * dpi // 300
        comps.append(Component(i, (0, 0, w - 1, h - 1), rng.randint(0, w * h), (w / 2, h / 2)))
    got = CheckboxClassifier(dpi=dpi).fit(np.empty((0, 3))).predict(component_features(comps))
    want = []
    for c in comps:
        obs = classify_checkbox(c, dpi)
        want.append(NOT_A_CHECKBOX if obs is None else CHECKED if obs.checked else UNCHECKED)
    assert got.tolist() == want


def test_classifier_classes_and_errors():
    clf = CheckboxClassifier().fit(np.empty((0, 3)))
    assert clf.classes_.tolist() == [-1, 0, 1]
    assert clf.threshold_ == 2500
    with pytest.raises(ValueError):
        clf.predict(np.zeros((2, 2)))
    with pytest.raises(NotFittedError):
        CheckboxClassifier().predict(np.zeros((1, 3)))
