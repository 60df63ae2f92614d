"""Matplotlib figures for scenario and scaling reports, plus CSV files written next to them."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .report import ScenarioReport, crypto_rows, link_rows, report_packet_sizes, to_csv  # noqa: E402

_STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
}
# keep PNG bytes independent of the matplotlib version
_META = {"Software": None}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def plot_packet_sizes(rows: list[dict], path: Path, title: str = "Encoded Data packet sizes") -> Path:
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6, 3.2))
        labels = [r["packet"] for r in rows]
        sizes = [r["size"] for r in rows]
        bars = ax.bar(labels, sizes, color="#4c72b0")
        ax.bar_label(bars, fontsize=8)
        ax.set_ylabel("bytes")
        ax.set_title(title)
        return _save(fig, path)


def plot_link_load(report: ScenarioReport, path: Path) -> Path:
    rows = link_rows(report)
    per_link: dict[str, list[int]] = {}
    for r in rows:
        slot = per_link.setdefault(r["link"], [0, 0])
        slot[0 if r["direction"].endswith(":interest") else 1] += r["tx"]
    labels = list(per_link)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(7, 0.35 * len(labels) + 1.2))
        y = range(len(labels))
        interests = [per_link[k][0] for k in labels]
        data = [per_link[k][1] for k in labels]
        ax.barh(y, interests, color="#dd8452", label="Interest")
        ax.barh(y, data, left=interests, color="#4c72b0", label="Data")
        ax.set_yticks(list(y), labels)
        ax.invert_yaxis()
        ax.set_xlabel("transmissions")
        ax.set_title(f"Link load: {report.scenario}")
        ax.legend(frameon=False, fontsize=8)
        return _save(fig, path)


def plot_crypto_ops(report: ScenarioReport, path: Path) -> Path:
    rows = crypto_rows(report)
    ops = [op for op in rows[0] if op != "entity"] if rows else []
    ops = [op for op in ops if any(r[op] for r in rows)]
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(7, 0.3 * max(len(rows), 1) + 1.5))
        left = [0] * len(rows)
        cmap = plt.get_cmap("tab20")
        for k, op in enumerate(ops):
            vals = [r[op] for r in rows]
            ax.barh(range(len(rows)), vals, left=left, color=cmap(k % 20), label=op)
            left = [a + b for a, b in zip(left, vals)]
        ax.set_yticks(range(len(rows)), [r["entity"] for r in rows])
        ax.invert_yaxis()
        ax.set_xlabel("operations")
        ax.set_title("Cryptographic operations per entity")
        if ops:
            ax.legend(frameon=False, fontsize=7, ncol=2)
        return _save(fig, path)


def plot_scaling(results: list[dict], path: Path) -> Path:
    """Key Data published vs. number of decryptors, one line per scheme."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5, 3.2))
        for scheme, key, marker in (("nac", "kdk", "o"), ("nac-abe", "attribute-key", "s")):
            pts = sorted((r["n"], r["measured"][key] + r["measured"]["kek"]) for r in results if r["scheme"] == scheme)
            if pts:
                ax.plot(*zip(*pts), marker=marker, label=f"{scheme}: KEK + {key}")
        ax.set_xlabel("decryptors n")
        ax.set_ylabel("key Data packets")
        ax.legend(frameon=False, fontsize=8)
        ax.set_title("Key distribution cost")
        return _save(fig, path)


def write_report_artifacts(report: ScenarioReport, directory: str | Path) -> list[Path]:
    """Write PNG figures and CSV tables for ``report`` into ``directory``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    sizes = report_packet_sizes(report)
    written = []
    tables = {
        "packet_sizes.csv": sizes,
        "links.csv": link_rows(report),
        "crypto_ops.csv": crypto_rows(report),
        "outcomes.csv": report.outcome_summary(),
    }
    for name, rows in tables.items():
        (out / name).write_text(to_csv(rows))
        written.append(out / name)
    if sizes:
        written.append(plot_packet_sizes(sizes, out / "packet_sizes.png"))
    if report.links:
        written.append(plot_link_load(report, out / "link_load.png"))
    if report.crypto_ops:
        written.append(plot_crypto_ops(report, out / "crypto_ops.png"))
    return written


def write_scaling_artifacts(results: list[dict], directory: str | Path) -> list[Path]:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for r in results:
        for kind, want in r["predicted"].items():
            rows.append({"scheme": r["scheme"], "n": r["n"], "m": r["m"], "a": r["a"], "x": r["x"],
                         "packet_type": kind, "predicted": want, "measured": r["measured"][kind]})
    (out / "scaling.csv").write_text(to_csv(rows))
    return [out / "scaling.csv", plot_scaling(results, out / "scaling.png")]
