#!/usr/bin/env python3
"""Render the simulator's figure types from harness CSV output.

Four kinds, matching the evaluation plots of the system:
  ber     - bit error rate vs Eb/N0 per scheme/coding (log y axis)
  se      - mean spectral efficiency vs number of users per scheme
  fair-k  - Jain's fairness index vs number of users per scheme
  fair-l  - Jain's fairness index vs number of users per loading limit

Inputs are the harness CSVs (link schema for ber, summary schema for the
rest); multiple --in files are concatenated. Output is SVG by default,
PNG with --png. Rendering is deterministic: fixed style, no timestamps.
"""

import argparse
import csv
import sys
from collections import OrderedDict

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "nomasim-plots"
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

LINK_COLUMNS = ("scheme", "coded", "ebn0_db", "bits", "bit_errors", "ber",
                "flagged")
SUMMARY_COLUMNS = ("scheme", "K", "L", "drops", "mean_sum_se", "ci95_sum_se",
                   "mean_jain", "ci95_jain", "ratio_to_iwf")

KIND_COLUMNS = {
    "ber": LINK_COLUMNS,
    "se": SUMMARY_COLUMNS,
    "fair-k": SUMMARY_COLUMNS,
    "fair-l": SUMMARY_COLUMNS,
}

STYLE = {
    "NOMA_LRM": dict(color="#1f77b4", marker="o"),
    "NOMA_GOM": dict(color="#2ca02c", marker="s"),
    "OFDMA_PF": dict(color="#d62728", marker="^"),
    "MAC_IWF": dict(color="#555555", marker="d"),
}


def fail(message: str) -> "None":
    sys.exit(f"render: error: {message}")


def load_rows(paths, required):
    rows = []
    for path in paths:
        try:
            handle = open(path, newline="")
        except OSError as exc:
            fail(str(exc))
        with handle:
            reader = csv.DictReader(handle)
            header = reader.fieldnames or []
            for column in required:
                if column not in header:
                    fail(f"column '{column}' missing in {path}")
            file_rows = list(reader)
        if not file_rows:
            fail(f"no data rows in {path}")
        rows.extend(file_rows)
    return rows


def grouped(rows, key):
    groups = OrderedDict()
    for row in rows:
        groups.setdefault(key(row), []).append(row)
    return groups


def scheme_style(scheme):
    return STYLE.get(scheme, dict(marker="o"))


def render_ber(rows, ax):
    for (scheme, coded), pts in grouped(
            rows, lambda r: (r["scheme"], r["coded"])).items():
        pts = sorted(pts, key=lambda r: float(r["ebn0_db"]))
        x = [float(r["ebn0_db"]) for r in pts if float(r["ber"]) > 0]
        y = [float(r["ber"]) for r in pts if float(r["ber"]) > 0]
        label = scheme + (" coded" if coded == "true" else " uncoded")
        ax.semilogy(x, y, label=label, linestyle="--" if coded == "true" else "-",
                    **scheme_style(scheme))
    ax.set_xlabel("Eb/N0 (dB)")
    ax.set_ylabel("BER")
    ax.grid(True, which="both", alpha=0.3)


def render_summary(rows, ax, value, err, ylabel, by_loading=False):
    if by_loading:
        schemes = {r["scheme"] for r in rows}
        def key(r):
            return (f"{r['scheme']} L={r['L']}" if len(schemes) > 1
                    else f"L={r['L']}")
    else:
        def key(r):
            return r["scheme"]
    for label, pts in grouped(rows, key).items():
        pts = sorted(pts, key=lambda r: int(r["K"]))
        x = [int(r["K"]) for r in pts]
        y = [float(r[value]) for r in pts]
        yerr = [float(r[err]) for r in pts]
        style = scheme_style(pts[0]["scheme"]) if not by_loading else {"marker": "o"}
        ax.errorbar(x, y, yerr=yerr, capsize=3, label=label, **style)
    ax.set_xlabel("Number of users K")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)


def render(kind, in_paths, out_path, png=False):
    rows = load_rows(in_paths, KIND_COLUMNS[kind])
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    if kind == "ber":
        render_ber(rows, ax)
    elif kind == "se":
        render_summary(rows, ax, "mean_sum_se", "ci95_sum_se",
                       "Spectral efficiency (bit/s/Hz per RB)")
    elif kind == "fair-k":
        render_summary(rows, ax, "mean_jain", "ci95_jain",
                       "Jain's fairness index")
    elif kind == "fair-l":
        render_summary(rows, ax, "mean_jain", "ci95_jain",
                       "Jain's fairness index", by_loading=True)
    ax.legend(fontsize=8)
    fig.tight_layout()
    if png:
        fig.savefig(out_path, format="png", dpi=120)
    else:
        fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render.py", description="Render figures from harness CSVs.")
    parser.add_argument("--kind", required=True, choices=sorted(KIND_COLUMNS))
    parser.add_argument("--in", dest="inputs", required=True, nargs="+",
                        metavar="CSV", help="input CSV file(s)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--png", action="store_true",
                        help="write PNG instead of the default SVG")
    args = parser.parse_args(argv)
    render(args.kind, args.inputs, args.out, png=args.png)
    return 0


if __name__ == "__main__":
    sys.exit(main())
