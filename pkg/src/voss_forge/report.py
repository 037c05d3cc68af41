"""Merged verification reports: summary tables and residual figures."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .geomkit import VerificationReport

COLUMNS = ("check", "max", "rms", "tol", "pass")


def load_report(path) -> VerificationReport:
    """Read a report JSON file; malformed content raises ``ValueError``."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read report {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ValueError(f"report {path} is not a JSON object")
    return VerificationReport.from_dict(data)


def merge_reports(reports) -> VerificationReport:
    out = VerificationReport()
    for rep in reports:
        out = out.merge(rep)
    return out


def summary_rows(report: VerificationReport) -> list[tuple]:
    return [
        (name, c["max"], c["rms"], c["tol"], "pass" if c["pass"] else "FAIL")
        for name, c in sorted(report.checks.items())
    ]


def summary_table(report: VerificationReport) -> str:
    """Fixed-width plain-text table, one row per check, sorted by name."""
    rows = [COLUMNS] + [(n, f"{m:.3e}", f"{r:.3e}", f"{t:.1e}", p) for n, m, r, t, p in summary_rows(report)]
    widths = [max(len(str(row[i])) for row in rows) for i in range(len(COLUMNS))]
    lines = ["  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    verdict = "PASS" if report.passed else "FAIL"
    lines.append(f"{verdict}: {sum(c['pass'] for c in report.checks.values())}/{len(report.checks)} checks within tolerance")
    return "\n".join(lines) + "\n"


def summary_tsv(report: VerificationReport) -> str:
    lines = ["\t".join(COLUMNS)]
    for n, m, r, t, p in summary_rows(report):
        lines.append(f"{n}\t{m!r}\t{r!r}\t{t!r}\t{p}")
    return "\n".join(lines) + "\n"


def residual_figure(report: VerificationReport, path) -> None:
    """Bar chart of ``log10(max / tol)`` per check; bars left of zero pass."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = summary_rows(report)
    names = [r[0] for r in rows]
    ratio = [math.log10(max(r[1], 1e-300) / r[3]) if r[3] > 0 else 0.0 for r in rows]
    ratio = np.clip(ratio, -20, 20)
    fig, ax = plt.subplots(figsize=(7, 0.3 * len(rows) + 1.2))
    colors = ["tab:green" if r[4] == "pass" else "tab:red" for r in rows]
    ax.barh(range(len(rows)), ratio, color=colors)
    ax.axvline(0.0, color="k", lw=0.8)
    ax.set_yticks(range(len(rows)))
    ax.set_yticklabels(names, fontsize=7)
    ax.invert_yaxis()
    ax.set_xlabel("log10(max residual / tolerance)")
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)


def export_report(reports, out) -> dict[str, Path]:
    """Merge ``reports`` and write ``<out>.json``, ``<out>.tsv`` and ``<out>.png``.

    ``out`` may carry a ``.json`` suffix; the siblings share its stem.
    """
    merged = merge_reports(reports)
    out = Path(out)
    stem = out.with_suffix("") if out.suffix == ".json" else out
    paths = {
        "json": stem.with_suffix(".json"),
        "tsv": stem.with_suffix(".tsv"),
        "png": stem.with_suffix(".png"),
    }
    paths["json"].write_text(merged.to_json() + "\n")
    paths["tsv"].write_text(summary_tsv(merged))
    residual_figure(merged, paths["png"])
    return paths
