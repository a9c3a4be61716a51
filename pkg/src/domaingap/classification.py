"""Per-class error rates from classifier prediction files and
relative-change comparisons between training regimes."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path


class Split(enum.Enum):
    CIS = "cis"
    TRANS_PLUS = "trans+"


_SPLIT_TOKENS = {
    "cis": Split.CIS,
    "trans+": Split.TRANS_PLUS,
    "trans_plus": Split.TRANS_PLUS,
    "transplus": Split.TRANS_PLUS,
}


@dataclass(frozen=True)
class PredictionRecord:
    image_id: str
    true_label: str
    predicted_label: str
    split: Split


@dataclass(frozen=True)
class ErrorReport:
    per_class_error: dict[str, float]
    macro_error_excluding: dict[str, float]  # mean error over the other classes
    micro_error_excluding: dict[str, float]  # pooled error over the other classes
    support: dict[str, int]


@dataclass(frozen=True)
class RunComparison:
    class_label: str
    baseline_error: float
    variant_error: float
    relative_decrease_pct: float  # (e_base - e_var) / e_base * 100
    absolute_decrease: float  # e_base - e_var, in error-rate points
    other_classes_delta_macro: float  # variant - baseline, macro mean
    other_classes_delta_micro: float


class PredictionFormatError(ValueError):
    pass


def load_predictions(path: str | Path) -> list[PredictionRecord]:
    """Read a prediction CSV with header image_id,true_label,predicted_label,split."""
    required = ["image_id", "true_label", "predicted_label", "split"]
    records: list[PredictionRecord] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(required).issubset(reader.fieldnames):
            raise PredictionFormatError(
                f"{path}: expected columns {required}, got {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            missing = [c for c in required if not (row.get(c) or "").strip()]
            if missing:
                raise PredictionFormatError(
                    f"{path}:{lineno}: missing value for {', '.join(missing)}")
            token = row["split"].strip().lower()
            if token not in _SPLIT_TOKENS:
                raise PredictionFormatError(
                    f"{path}:{lineno}: unknown split {row['split']!r}")
            records.append(PredictionRecord(
                image_id=row["image_id"].strip(),
                true_label=row["true_label"].strip(),
                predicted_label=row["predicted_label"].strip(),
                split=_SPLIT_TOKENS[token]))
    return records


def error_rates(preds: list[PredictionRecord], split: Split) -> ErrorReport:
    """Top-1 per-class error rates for one split, plus leave-one-out
    aggregates over the remaining classes (both macro and micro)."""
    subset = [p for p in preds if p.split is split]
    if not subset:
        raise ValueError(f"no predictions in split {split.value}")
    total: dict[str, int] = {}
    wrong: dict[str, int] = {}
    for p in subset:
        total[p.true_label] = total.get(p.true_label, 0) + 1
        if p.predicted_label != p.true_label:
            wrong[p.true_label] = wrong.get(p.true_label, 0) + 1
    per_class = {c: wrong.get(c, 0) / total[c] for c in total}
    macro_excl = {}
    micro_excl = {}
    for c in total:
        others = [k for k in total if k != c]
        if others:
            macro_excl[c] = sum(per_class[k] for k in others) / len(others)
            micro_excl[c] = (sum(wrong.get(k, 0) for k in others)
                             / sum(total[k] for k in others))
        else:
            macro_excl[c] = 0.0
            micro_excl[c] = 0.0
    return ErrorReport(per_class_error=per_class,
                       macro_error_excluding=macro_excl,
                       micro_error_excluding=micro_excl,
                       support=dict(total))


def compare_runs(baseline: ErrorReport, variant: ErrorReport,
                 class_label: str) -> RunComparison:
    """Relative error decrease for one class between two training regimes,
    plus the drift in the other classes' average error."""
    for report, name in ((baseline, "baseline"), (variant, "variant")):
        if class_label not in report.per_class_error:
            raise ValueError(f"class {class_label!r} absent from {name} report")
    e_base = baseline.per_class_error[class_label]
    e_var = variant.per_class_error[class_label]
    if e_base == 0.0:
        raise ValueError("relative change undefined: baseline error is 0")
    return RunComparison(
        class_label=class_label,
        baseline_error=e_base,
        variant_error=e_var,
        relative_decrease_pct=(e_base - e_var) / e_base * 100.0,
        absolute_decrease=e_base - e_var,
        other_classes_delta_macro=(variant.macro_error_excluding[class_label]
                                   - baseline.macro_error_excluding[class_label]),
        other_classes_delta_micro=(variant.micro_error_excluding[class_label]
                                   - baseline.micro_error_excluding[class_label]),
    )
