"""Markdown tables and a reward-vs-trust SVG scatter from run directories.

Everything here is a pure function of the artifacts, with fixed number
formatting, so the same run directories always render to the same bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

from agritrust.agronomics import KG_PER_BU_CORN, KG_PER_LB, net_income

ACRES_PER_HA = 2.47105

COLUMNS = (
    ("Total reward", "reward", "{:.1f}"),
    ("Yield (kg/ha)", "yield_kg_ha", "{:.0f}"),
    ("N input (kg/ha)", "total_n_kg_ha", "{:.1f}"),
    ("Leaching (kg/ha)", "total_leach_kg_ha", "{:.3f}"),
    ("Frequency", "n_apps", "{:.1f}"),
    ("In window", "in_window_apps", "{:.1f}"),
    ("Trust", "trust", "{:.3f}"),
)


def _load(run_dir: Path) -> dict:
    path = run_dir / "policies.json"
    if not path.is_file():
        raise FileNotFoundError(f"{run_dir}: missing policies.json")
    return json.loads(path.read_text())


def per_acre_income(rec: dict) -> float:
    """Net income in $/ac for a record in metric units."""
    bu_ac = rec["yield_kg_ha"] / KG_PER_BU_CORN / ACRES_PER_HA
    lb_ac = rec["total_n_kg_ha"] / KG_PER_LB / ACRES_PER_HA
    return net_income(bu_ac, lb_ac, round(rec["n_apps"]))


def _label(p: dict, doc: dict) -> str:
    tags = []
    if p["run_id"] == doc.get("selected"):
        tags.append("selected")
    if p["run_id"] == doc.get("agnostic"):
        tags.append("trust-agnostic")
    front_ids = {q["run_id"] for q in doc["front"]}
    mark = "*" if p["run_id"] in front_ids else ""
    w = "/".join(f"{x:.2f}" for x in p["weight"])
    return f"{p['run_id']}{mark} ({w})" + (f" {', '.join(tags)}" if tags else "")


def _row(cells) -> str:
    return "| " + " | ".join(cells) + " |"


def policy_table(doc: dict) -> str:
    head = ["Policy"] + [c[0] for c in COLUMNS] + ["Net income ($/ac)"]
    lines = [_row(head), _row(["---"] * len(head))]
    rows = [(_label(p, doc), p) for p in doc["policies"]]
    rows += [(name, rec) for name, rec in sorted(doc.get("baselines", {}).items())]
    for label, rec in rows:
        cells = [label] + [fmt.format(rec[key]) for _, key, fmt in COLUMNS]
        cells.append(f"{per_acre_income(rec):.0f}")
        lines.append(_row(cells))
    return "\n".join(lines)


def comparison_table(names: list[str], docs: list[dict]) -> str:
    """One column per run, rows are the selected policy's metrics."""
    lines = [_row(["Selected policy"] + names), _row(["---"] * (len(names) + 1))]
    chosen = [next(p for p in d["policies"] if p["run_id"] == d["selected"]) for d in docs]
    lines.append(_row(["Weight"] + ["/".join(f"{x:.2f}" for x in c["weight"]) for c in chosen]))
    for title, key, fmt in COLUMNS:
        lines.append(_row([title] + [fmt.format(c[key]) for c in chosen]))
    return "\n".join(lines)


def front_svg(doc: dict, width: int = 480, height: int = 360) -> str:
    """Scatter of the non-dominated points; the selected policy is circled."""
    pad = 48
    pts = [(p["reward"], p["trust"], p["run_id"]) for p in doc["front"]]
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(min(ys), 0.0), max(max(ys), 1.0)
    if x1 - x0 < 1e-9:
        x0, x1 = x0 - 1.0, x1 + 1.0

    def sx(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="12">total reward</text>',
        f'<text x="14" y="{height / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {height / 2:.1f})">trust score</text>',
        f'<text x="{pad}" y="{height - pad + 16}" font-size="10">{x0:.0f}</text>',
        f'<text x="{width - pad}" y="{height - pad + 16}" text-anchor="end" font-size="10">{x1:.0f}</text>',
        f'<text x="{pad - 4}" y="{height - pad}" text-anchor="end" font-size="10">{y0:.2f}</text>',
        f'<text x="{pad - 4}" y="{pad + 4}" text-anchor="end" font-size="10">{y1:.2f}</text>',
    ]
    for x, y, rid in pts:
        out.append(f'<circle class="point" cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="4" fill="steelblue">'
                   f'<title>{rid}</title></circle>')
    sel = next((p for p in pts if p[2] == doc.get("selected")), None)
    if sel is not None:
        out.append(f'<circle class="selected" cx="{sx(sel[0]):.2f}" cy="{sy(sel[1]):.2f}" r="9" '
                   f'fill="none" stroke="crimson" stroke-width="2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render(run_dirs: list[Path]) -> tuple[str, dict[str, str]]:
    """Markdown report and SVG documents keyed by file name."""
    docs = [_load(d) for d in run_dirs]
    names = [d.name for d in run_dirs]
    parts = ["# Fertilization policy report", ""]
    if len(docs) > 1:
        parts += ["## Comparison", "", comparison_table(names, docs), ""]
    svgs = {}
    for name, doc in zip(names, docs):
        svg_name = "front.svg" if len(docs) == 1 else f"front_{name}.svg"
        svgs[svg_name] = front_svg(doc)
        parts += [
            f"## {name}",
            "",
            "Policies marked * are non-dominated.",
            "",
            policy_table(doc),
            "",
            f"![front]({svg_name})",
            "",
        ]
    return "\n".join(parts), svgs


def write_report(run_dirs, out_dir) -> list[Path]:
    run_dirs = [Path(d) for d in run_dirs]
    if not run_dirs:
        raise ValueError("no run directories given")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    md, svgs = render(run_dirs)
    written = [out / "report.md"]
    written[0].write_text(md)
    for name, text in svgs.items():
        (out / name).write_text(text)
        written.append(out / name)
    return written


def comparison_rows(runs: dict) -> list[dict]:
    """Selected and trust-agnostic policy per scenario, in the order given."""
    rows = []
    for name, run_dir in runs.items():
        doc = _load(Path(run_dir))
        by_id = {p["run_id"]: p for p in doc["policies"]}
        for role, rid in (("selected 50:50", doc["selected"]), ("trust-agnostic", doc["agnostic"])):
            if rid is None:
                continue
            rows.append({"scenario": name, "policy": role, "run_id": rid, **by_id[rid]})
    return rows


def render_comparison(rows: list[dict]) -> str:
    head = ["Scenario", "Policy"] + [c[0] for c in COLUMNS]
    lines = ["# Climate sweep", "", _row(head), _row(["---"] * len(head))]
    for r in rows:
        lines.append(_row([r["scenario"], r["policy"]] + [fmt.format(r[key]) for _, key, fmt in COLUMNS]))
    return "\n".join(lines) + "\n"
