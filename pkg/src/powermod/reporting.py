"""Flat-table rendering of evaluation reports.

Turns a report.json into CSV tables: per-model mean errors, per-model CDF
series, and (given a second report) a with/without-filter comparison.
"""

from __future__ import annotations

import csv
from pathlib import Path

SCOPES = ("known", "unknown", "all")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def render_report(report: dict, out_dir: str | Path, compare: dict | None = None) -> list[Path]:
    """Write mean-error and CDF tables; returns the created paths.

    ``compare`` is an unfiltered-run report; when given, a side-by-side
    mean/deviation table is emitted as well.
    """
    out = Path(out_dir)
    written: list[Path] = []

    rows = []
    for model in report["model_kinds"]:
        for scope in SCOPES:
            cell = report["cells"][model][scope]
            rows.append(
                [
                    model,
                    scope,
                    cell["mean_ape"],
                    cell["std_across_folds"],
                    cell["mean_signed_pct"],
                    cell["mean_abs_watts"],
                    cell["n_vectors"],
                    cell["n_excluded"],
                ]
            )
    path = out / "mean_errors.csv"
    _write_csv(
        path,
        [
            "model",
            "scope",
            "mean_ape_pct",
            "std_across_folds",
            "mean_signed_pct",
            "mean_abs_watts",
            "n_vectors",
            "n_excluded",
        ],
        rows,
    )
    written.append(path)

    for model in report["model_kinds"]:
        for scope in SCOPES:
            cell = report["cells"][model][scope]
            path = out / f"cdf_{model}_{scope}.csv"
            _write_csv(
                path,
                ["error_pct", "fraction"],
                [[t, f] for t, f in cell["cdf"]],
            )
            written.append(path)

    if compare is not None:
        rows = []
        shared = [m for m in report["model_kinds"] if m in compare["model_kinds"]]
        for model in shared:
            for scope in SCOPES:
                filt = report["cells"][model][scope]
                nofl = compare["cells"][model][scope]
                rows.append(
                    [
                        model,
                        scope,
                        nofl["mean_ape"],
                        nofl["std_across_folds"],
                        filt["mean_ape"],
                        filt["std_across_folds"],
                    ]
                )
        path = out / "filter_effect.csv"
        _write_csv(
            path,
            [
                "model",
                "scope",
                "no_filter_mean_ape",
                "no_filter_std",
                "filtered_mean_ape",
                "filtered_std",
            ],
            rows,
        )
        written.append(path)
    return written
