"""Sweep outputs: delimited records, gnuplot medians, SVG figures.

The CSV schema is a fixed 18-column contract (diagnostic extras such as
the per-draw rho values stay in memory).  Floats are written with
``repr`` so reloading reproduces the values bit for bit; everything
except the wall-time column is reproducible run to run from the same
config.  Figures are rendered with matplotlib to static SVG files next
to the delimited output, with hashing salted for stable file content.
"""

import json
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .harness import TrialRecord, median_by_m

CSV_COLUMNS = ("m", "trial", "seed", "gamma_w", "gamma_lambda",
               "err_w_l2", "err_w_l1", "ratio_w",
               "err_l_l2", "err_l_l1", "ratio_l",
               "bound_w", "bound_l", "pass_w", "pass_l",
               "iterations", "converged", "wall_time_ms")

_INT_COLUMNS = {"m", "trial", "seed", "iterations"}
_BOOL_COLUMNS = {"pass_w", "pass_l", "converged"}

matplotlib.rcParams["svg.hashsalt"] = "sketchsaddle"


def _format_cell(name, value):
    if name in _BOOL_COLUMNS:
        return "1" if value else "0"
    if name in _INT_COLUMNS:
        return str(int(value))
    return repr(float(value))


def write_records_csv(path, records):
    """Write records in the fixed 18-column schema."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for r in records:
            fh.write(",".join(_format_cell(c, getattr(r, c))
                              for c in CSV_COLUMNS) + "\n")


def read_records_csv(path):
    """Reload records; the in-memory diagnostic extras come back as NaN."""
    records = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV columns in {path}")
        for line in fh:
            cells = line.strip().split(",")
            kwargs = {}
            for name, cell in zip(CSV_COLUMNS, cells):
                if name in _BOOL_COLUMNS:
                    kwargs[name] = cell == "1"
                elif name in _INT_COLUMNS:
                    kwargs[name] = int(cell)
                else:
                    kwargs[name] = float(cell)
            records.append(TrialRecord(**kwargs))
    return records


def write_medians_dat(path, records):
    """Median error and bound per sketch size, gnuplot-ready."""
    ms, med_ew = median_by_m(records, "err_w_l2")
    _, med_el = median_by_m(records, "err_l_l2")
    _, med_bw = median_by_m(records, "bound_w")
    _, med_bl = median_by_m(records, "bound_l")
    with open(path, "w") as fh:
        fh.write("# m err_w_l2 bound_w err_l_l2 bound_l (medians)\n")
        for row in zip(ms, med_ew, med_bw, med_el, med_bl):
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def render_figures(records, outdir, title=None):
    """Render the recovery figure(s) to SVG files; returns their paths.

    With several sketch sizes this is the log-log median error curve
    against the prescribed bound; with a single size, the per-trial
    errors against the bound line.
    """
    ms, med_ew = median_by_m(records, "err_w_l2")
    _, med_el = median_by_m(records, "err_l_l2")
    _, med_bw = median_by_m(records, "bound_w")
    _, med_bl = median_by_m(records, "bound_l")
    path = os.path.join(outdir, "recovery_vs_m.svg")
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    if len(ms) >= 2:
        ax.loglog(ms, med_ew, "o-", color="tab:blue", label="median primal l2 error")
        ax.loglog(ms, med_bw, "--", color="tab:blue", alpha=0.6,
                  label="primal bound")
        ax.loglog(ms, med_el, "s-", color="tab:orange", label="median dual l2 error")
        ax.loglog(ms, med_bl, "--", color="tab:orange", alpha=0.6,
                  label="dual bound")
        ax.set_xlabel("sketch size m")
        ax.set_ylabel("median l2 recovery error")
    else:
        m = ms[0]
        group = sorted((r for r in records if r.m == m), key=lambda r: r.trial)
        trials = [r.trial for r in group]
        ax.semilogy(trials, [r.err_w_l2 for r in group], "o",
                    color="tab:blue", label="primal l2 error")
        ax.axhline(med_bw[0], color="tab:blue", ls="--", alpha=0.6,
                   label="primal bound")
        ax.semilogy(trials, [r.err_l_l2 for r in group], "s",
                    color="tab:orange", label="dual l2 error")
        ax.axhline(med_bl[0], color="tab:orange", ls="--", alpha=0.6,
                   label="dual bound")
        ax.set_xlabel(f"trial (m = {m})")
        ax.set_ylabel("l2 recovery error")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
    return [path]


def emit_report(records, outdir, meta=None, formats=("csv", "dat", "svg"),
                title=None):
    """Write the sweep deliverables into ``outdir``; returns written paths.

    formats: "csv" for the 18-column records file, "dat" for the
    gnuplot-ready medians, "svg" for rendered figures.  ``meta`` is an
    optional JSON-serializable dict stored alongside so the records can
    be checked later without the original config in hand.
    """
    os.makedirs(outdir, exist_ok=True)
    written = []
    if "csv" in formats:
        path = os.path.join(outdir, "records.csv")
        write_records_csv(path, records)
        written.append(path)
    if "dat" in formats:
        path = os.path.join(outdir, "medians.dat")
        write_medians_dat(path, records)
        written.append(path)
    if "svg" in formats:
        written.extend(render_figures(records, outdir, title=title))
    if meta is not None:
        path = os.path.join(outdir, "meta.json")
        with open(path, "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    return written
