"""Dataset ingestion and report serialization."""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

from . import effects
from .data import Dataset, EffectEstimate
from .engine import AnalysisReport, Summary
from .errors import DataError, DomainError
from .uisd import UisdEstimate

__all__ = [
    "MEASURES",
    "load_dataset",
    "rows_to_dataset",
    "derive_estimate",
    "emit_report",
    "report_from_json",
]

# required columns per measure; label and any optional columns may follow
MEASURES: dict[str, tuple[str, ...]] = {
    "md": ("mean1", "sd1", "n1", "mean2", "sd2", "n2"),
    "smd": ("mean1", "sd1", "n1", "mean2", "sd2", "n2"),
    "logor": ("events_t", "total_t", "events_c", "total_c"),
    "logodds": ("events", "total"),
    "logratio-ci": ("point", "lower", "upper"),
    "fisherz": ("r", "n"),
    "precomputed": ("y", "sigma"),
}

_INT_COLUMNS = {"n1", "n2", "n", "events", "total", "events_t", "total_t", "events_c", "total_c"}


def _cell(row: dict, column: str, index: int, kind: type = float):
    raw = row.get(column)
    if raw is None or str(raw).strip() == "":
        raise DataError(f"row {index}: missing value for column {column!r}")
    text = str(raw).strip()
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"row {index}: non-numeric value {text!r} in column {column!r}") from None
    if kind is int:
        if value != int(value):
            raise DataError(f"row {index}: column {column!r} must be an integer, got {text!r}")
        return int(value)
    return value


def derive_estimate(measure: str, row: dict, index: int) -> EffectEstimate:
    """Turn one raw record into an (estimate, standard error) pair."""
    label = str(row.get("label", "") or "")
    get = lambda col: _cell(row, col, index, int if col in _INT_COLUMNS else float)
    try:
        if measure in ("md", "smd"):
            g = effects.TwoGroupContinuous(
                get("mean1"), get("sd1"), get("n1"), get("mean2"), get("sd2"), get("n2")
            )
            return (effects.mean_difference if measure == "md" else effects.smd_hedges_g)(g, label)
        if measure == "logor":
            t = effects.TwoByTwoTable(get("events_t"), get("total_t"), get("events_c"), get("total_c"))
            return effects.log_or(t, label)
        if measure == "logodds":
            return effects.log_odds(effects.ProportionCount(get("events"), get("total")), label)
        if measure == "logratio-ci":
            level = _cell(row, "level", index) if str(row.get("level", "")).strip() else 0.95
            n = get("n") if str(row.get("n", "")).strip() else None
            r = effects.RatioWithCI(get("point"), get("lower"), get("upper"), level)
            return effects.log_ratio_from_ci(r, label, n)
        if measure == "fisherz":
            return effects.fisher_z(effects.CorrelationCount(get("r"), get("n")), label)
        if measure == "precomputed":
            n = get("n") if str(row.get("n", "")).strip() else None
            return EffectEstimate(get("y"), get("sigma"), n, label)
    except DomainError as exc:
        raise DataError(f"row {index}: {exc}") from exc
    raise DataError(f"unknown measure {measure!r}; known: {', '.join(MEASURES)}")


def rows_to_dataset(rows: list[dict], measure: str) -> Dataset:
    if measure not in MEASURES:
        raise DataError(f"unknown measure {measure!r}; known: {', '.join(MEASURES)}")
    if not rows:
        raise DataError("input contains no data rows")
    missing = [c for c in MEASURES[measure] if c not in rows[0]]
    if missing:
        raise DataError(f"missing column(s) for measure {measure!r}: {', '.join(missing)}")
    return Dataset(derive_estimate(measure, row, i + 1) for i, row in enumerate(rows))


def load_dataset(path: str | Path, measure: str, fmt: str | None = None) -> Dataset:
    """Read a CSV or JSON study file and derive the analysis inputs.

    CSV files need a header row; JSON files hold a list of flat objects
    with the same keys.  Row order is preserved.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    if fmt is None:
        fmt = "json" if path.suffix.lower() == ".json" else "csv"
    text = path.read_text(encoding="utf-8")
    if fmt == "csv":
        reader = csv.DictReader(_io.StringIO(text))
        rows = [dict(r) for r in reader]
    elif fmt == "json":
        try:
            rows = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(rows, list) or not all(isinstance(r, dict) for r in rows):
            raise DataError(f"{path}: expected a JSON list of objects")
    else:
        raise DataError(f"unknown format {fmt!r}; use csv or json")
    return rows_to_dataset(rows, measure)


# -- report serialization ----------------------------------------------------


def _summary_dict(s: Summary) -> dict:
    return {
        "median": s.median,
        "lo": s.lo,
        "hi": s.hi,
        "level": s.level,
        "kind": s.kind,
        "sd": s.sd,
    }


def _summary_from_dict(d: dict) -> Summary:
    return Summary(d["median"], d["lo"], d["hi"], d["level"], d["kind"], d["sd"])


def emit_report(report: AnalysisReport, fmt: str = "text") -> str:
    """Serialize a report as text (2 decimals), JSON (full precision) or CSV."""
    if fmt == "text":
        lines = [
            f"tau  {report.tau.median:.2f}  [{report.tau.lo:.2f}, {report.tau.hi:.2f}]",
            f"mu  {report.mu.median:.2f}  [{report.mu.lo:.2f}, {report.mu.hi:.2f}]",
            f"prediction  {report.prediction.median:.2f}  "
            f"[{report.prediction.lo:.2f}, {report.prediction.hi:.2f}]",
        ]
        for label, s in zip(report.labels, report.shrinkage):
            lines.append(f"theta[{label}]  {s.median:.2f}  [{s.lo:.2f}, {s.hi:.2f}]")
        if report.uisd is not None:
            lines.append(f"uisd  {report.uisd.value:.3f}  ({report.uisd.basis})")
        return "\n".join(lines) + "\n"

    if fmt == "json":
        payload = {
            "schema": 1,
            "level": report.level,
            "tau": _summary_dict(report.tau),
            "mu": _summary_dict(report.mu),
            "prediction": _summary_dict(report.prediction),
            "shrinkage": [
                {"label": label, **_summary_dict(s)}
                for label, s in zip(report.labels, report.shrinkage)
            ],
            "map_tau": report.map_tau,
            "uisd": None
            if report.uisd is None
            else {"value": report.uisd.value, "basis": report.uisd.basis, "source": report.uisd.source},
        }
        return json.dumps(payload, indent=2) + "\n"

    if fmt == "csv":
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["parameter", "label", "median", "lo", "hi", "level", "kind", "sd"])

        def row(name, label, s: Summary):
            writer.writerow([name, label, repr(s.median), repr(s.lo), repr(s.hi), s.level, s.kind, "" if s.sd is None else repr(s.sd)])

        row("tau", "", report.tau)
        row("mu", "", report.mu)
        row("prediction", "", report.prediction)
        for label, s in zip(report.labels, report.shrinkage):
            row("theta", label, s)
        return buf.getvalue()

    raise DataError(f"unknown report format {fmt!r}; use text, json or csv")


def report_from_json(text: str) -> AnalysisReport:
    """Reconstruct a report emitted by :func:`emit_report` with ``fmt="json"``."""
    payload = json.loads(text)
    if payload.get("schema") != 1:
        raise DataError(f"unsupported report schema {payload.get('schema')!r}")
    uisd = payload["uisd"]
    return AnalysisReport(
        tau=_summary_from_dict(payload["tau"]),
        mu=_summary_from_dict(payload["mu"]),
        shrinkage=tuple(_summary_from_dict(d) for d in payload["shrinkage"]),
        prediction=_summary_from_dict(payload["prediction"]),
        map_tau=payload["map_tau"],
        uisd=None if uisd is None else UisdEstimate(uisd["value"], uisd["basis"], uisd["source"]),
        labels=tuple(d["label"] for d in payload["shrinkage"]),
        level=payload["level"],
    )
