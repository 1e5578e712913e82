"""Report emission: JSON + CSV artifacts and the MSE-vs-n figure.

The CSV is the machine interface (stable 10-significant-digit formatting,
LF line endings, rows sorted by method then sample size); the figure is a
convenience rendering of the same numbers.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

from .simulate import SimReport

__all__ = ["write_report", "render_mse_figure", "report_to_dict"]


def _fmt(v: float) -> str:
    return f"{v:.10g}"


def report_to_dict(report: SimReport) -> dict:
    cfg = dataclasses.asdict(report.config)
    cfg["methods"] = [dataclasses.asdict(m) if dataclasses.is_dataclass(m) else m
                      for m in report.config.methods]
    return {
        "config": cfg,
        "generator": report.generator,
        "wall_time_s": report.wall_time_s,
        "results": [dataclasses.asdict(r) for r in report.results],
    }


def write_report(report: SimReport, out_dir: str | Path, figure: bool = True) -> list[Path]:
    """Write report.json, mse.csv and (optionally) mse.png into out_dir."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []

        json_path = out / "report.json"
        json_path.write_text(json.dumps(report_to_dict(report), indent=2) + "\n",
                             encoding="utf-8")
        written.append(json_path)

        csv_path = out / "mse.csv"
        rows = sorted(report.results, key=lambda r: (r.method, r.n))
        with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("method,n,mse,std_error,failures\n")
            for r in rows:
                fh.write(f"{r.method},{r.n},{_fmt(r.mse)},{_fmt(r.std_error)},"
                         f"{r.failures}\n")
        written.append(csv_path)

        if figure and report.results:
            written.append(render_mse_figure(report, out / "mse.png"))
        return written
    except OSError as exc:
        raise OSError(f"cannot write report into {out}: {exc}") from exc


def render_mse_figure(report: SimReport, path: str | Path) -> Path:
    """Render the MSE curves of every method against sample size."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    by_method: dict[str, list] = {}
    for r in report.results:
        by_method.setdefault(r.method, []).append(r)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for method, rows in sorted(by_method.items()):
        rows = sorted(rows, key=lambda r: r.n)
        ax.plot([r.n for r in rows], [r.mse for r in rows],
                marker="o", label=method)
    ax.set_xlabel("sample size n")
    ax.set_ylabel("MSE")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
