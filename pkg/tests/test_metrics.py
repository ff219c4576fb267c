import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wastesort import (
    CLASS_NAMES,
    EmptyMatrix,
    LabelOutOfRange,
    LengthMismatch,
    accuracy,
    confusion,
    format_report,
    precision_recall_f1,
    report,
    report_from_csv,
    report_to_csv,
    confusion_to_csv,
)

from _oracles import oracle_accuracy, oracle_confusion, oracle_macro_f1, oracle_prf

labels_strategy = st.lists(st.integers(0, 5), min_size=1, max_size=400)


@settings(max_examples=100, deadline=None)
@given(data=st.data())
def test_matches_brute_force_oracle(data):
    y_true = data.draw(labels_strategy)
    y_pred = data.draw(st.lists(st.integers(0, 5), min_size=len(y_true), max_size=len(y_true)))

    cm = confusion(y_true, y_pred)
    assert cm.counts.tolist() == oracle_confusion(y_true, y_pred)
    assert abs(accuracy(cm) - oracle_accuracy(y_true, y_pred)) <= 1e-12

    rep = report(cm)
    for k in range(6):
        p, r, f1 = precision_recall_f1(cm, k)
        op, orc, of1 = oracle_prf(y_true, y_pred, k)
        assert abs(p - op) <= 1e-12 and abs(r - orc) <= 1e-12 and abs(f1 - of1) <= 1e-12
        assert (rep.per_class[k].precision, rep.per_class[k].recall, rep.per_class[k].f1) == (p, r, f1)
    assert abs(rep.macro_f1 - oracle_macro_f1(y_true, y_pred)) <= 1e-12


def test_hand_computed_example():
    # true: 2 cardboard + 1 glass; predicted: one cardboard mistaken for glass
    cm = confusion([0, 0, 1], [0, 1, 1])
    assert accuracy(cm) == pytest.approx(2 / 3)
    p0, r0, f0 = precision_recall_f1(cm, 0)
    assert (p0, r0) == (1.0, 0.5) and f0 == pytest.approx(2 / 3)
    p1, r1, f1 = precision_recall_f1(cm, 1)
    assert (p1, r1) == (0.5, 1.0) and f1 == pytest.approx(2 / 3)


def test_perfect_predictions():
    y = [0, 1, 2, 3, 4, 5] * 3
    rep = report(confusion(y, y))
    assert rep.accuracy == 1.0 and rep.macro_f1 == 1.0
    assert all(m.precision == m.recall == m.f1 == 1.0 for m in rep.per_class)


def test_zero_denominator_conventions():
    # class 5 never predicted -> precision 0; class 4 never true -> recall 0
    cm = confusion([5, 5, 0], [0, 0, 0])
    p5, r5, f5 = precision_recall_f1(cm, 5)
    assert (p5, r5, f5) == (0.0, 0.0, 0.0)
    p4, r4, f4 = precision_recall_f1(cm, 4)
    assert (p4, r4, f4) == (0.0, 0.0, 0.0)


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        confusion([0, 1], [0])


def test_empty_inputs():
    with pytest.raises((EmptyMatrix, LengthMismatch, ValueError)):
        accuracy(confusion([], []))


@pytest.mark.parametrize("bad", [[6], [-1], [1.5], [2.00001]])
def test_out_of_range_labels(bad):
    with pytest.raises(LabelOutOfRange):
        confusion(bad, [0] * len(bad))
    with pytest.raises(LabelOutOfRange):
        confusion([0] * len(bad), bad)


def test_report_csv_round_trip():
    rng = np.random.default_rng(5)
    y_true = rng.integers(0, 6, 200).tolist()
    y_pred = rng.integers(0, 6, 200).tolist()
    rep = report(confusion(y_true, y_pred))

    text = report_to_csv(rep)
    lines = text.strip().splitlines()
    assert lines[0] == "class,precision,recall,f1"
    assert [line.split(",")[0] for line in lines[1:7]] == list(CLASS_NAMES)
    assert lines[7].startswith("accuracy,") and lines[8].startswith("macro_f1,")

    back = report_from_csv(text)
    assert back.accuracy == rep.accuracy and back.macro_f1 == rep.macro_f1
    for a, b in zip(back.per_class, rep.per_class):
        assert (a.precision, a.recall, a.f1) == (b.precision, b.recall, b.f1)


def test_confusion_csv_shape():
    cm = confusion([0, 1, 2], [0, 1, 3])
    text = confusion_to_csv(cm)
    lines = text.strip().splitlines()
    assert len(lines) == 7  # header + six class rows
    assert lines[0].split(",")[1:] == list(CLASS_NAMES)


def test_format_report_is_readable():
    rep = report(confusion([0, 1, 2], [0, 1, 2]))
    text = format_report(rep)
    for name in CLASS_NAMES:
        assert name in text
    assert "accuracy" in text and "macro" in text
