"""Deterministic text tables: trajectory CSV and gnuplot column files.

Floats are rendered with repr (shortest round-trip form) so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import numpy as np

__all__ = ["format_trajectory_csv", "format_csv", "write_gnuplot_columns"]


def _cell(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def format_trajectory_csv(t, u, s, e_cols, s_cols) -> str:
    """Header t,u,s then e_0..e_K,s_0..s_K; one row per grid time, scaled by n."""
    e_cols = np.atleast_2d(e_cols)
    s_cols = np.atleast_2d(s_cols)
    kmax = e_cols.shape[1] - 1
    header = (
        ["t", "u", "s"]
        + [f"e_{k}" for k in range(kmax + 1)]
        + [f"s_{k}" for k in range(kmax + 1)]
    )
    lines = [",".join(header)]
    for i in range(len(t)):
        row = [t[i], u[i], s[i], *e_cols[i], *s_cols[i]]
        lines.append(",".join(_cell(x) for x in row))
    return "\n".join(lines) + "\n"


def format_csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(x) for x in row))
    return "\n".join(lines) + "\n"


def write_gnuplot_columns(path, names, columns) -> None:
    """Space-separated columns with a '#' header line, for external plotters."""
    columns = [np.asarray(c) for c in columns]
    with open(path, "w") as fh:
        fh.write("# " + " ".join(names) + "\n")
        for i in range(len(columns[0])):
            fh.write(" ".join(_cell(c[i]) for c in columns) + "\n")
