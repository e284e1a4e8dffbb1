"""CSV tables and summary records.

All files are written atomically: content goes to a temporary file in the
target directory which is then renamed over the destination.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .core import TWO_PI
from .dynamics import SimulationResult, radial_excitation_density
from .experiments import SweepRow

TIMESERIES_COLUMNS = ["t_us", "re_a_in", "im_a_in", "re_a", "im_a",
                      "re_a_out", "im_a_out", "omega_mhz"]
SHELL_COLUMNS = ["r_um", "n_j", "re_S", "im_S", "s_density"]
DENSITY_COLUMNS = SHELL_COLUMNS + ["probe_reference"]
SWEEP_COLUMNS = SweepRow.columns()

# field amplitudes a_in, a_out are exported per sqrt(us), so |a|^2 is photons per us
_PER_SQRT_US = 1e-3


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17e")


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_timeseries_csv(result: SimulationResult, path) -> Path:
    t = result.times
    rows = zip(
        t * 1e6,
        result.a_in.real * _PER_SQRT_US, np.imag(result.a_in) * _PER_SQRT_US,
        result.a.real, result.a.imag,
        result.a_out.real * _PER_SQRT_US, result.a_out.imag * _PER_SQRT_US,
        result.omega / TWO_PI / 1e6,
    )
    return atomic_write_text(path, _csv_text(TIMESERIES_COLUMNS, rows))


def shell_table(result: SimulationResult, probe=None):
    """Rows of the post-write shell snapshot; adds a probe reference column if ``probe`` is given.

    The reference is Psi_p(r)^2 scaled to carry the same total excitation.
    """
    grid = result.grid
    if grid is None:
        raise ValueError("shell snapshot needs a shell-model result")
    S = result.S_final_write
    keep = grid.populations > 0
    _, s = radial_excitation_density(S, grid)
    cols = [grid.radii[keep] * 1e6, grid.populations[keep], S[keep].real, S[keep].imag, s]
    if probe is not None:
        ref = np.asarray(probe(grid.radii[keep]), dtype=float) ** 2
        weight = float(np.dot(grid.populations[keep], ref))
        total = float(np.dot(grid.populations[keep], s))
        cols.append(ref * (total / weight) if weight > 0 else ref)
    return list(zip(*cols))


def write_shell_csv(result: SimulationResult, path, probe=None) -> Path:
    columns = SHELL_COLUMNS if probe is None else DENSITY_COLUMNS
    return atomic_write_text(path, _csv_text(columns, shell_table(result, probe)))


def write_sweep_csv(rows, path) -> Path:
    return atomic_write_text(
        path, _csv_text(SWEEP_COLUMNS, ([getattr(r, c) for c in SWEEP_COLUMNS] for r in rows)))


def read_csv(path) -> list[dict]:
    """Read any table written here back into dicts of floats (strings kept as-is)."""
    with open(path, newline="", encoding="utf-8") as fh:
        out = []
        for rec in csv.DictReader(fh):
            row = {}
            for k, v in rec.items():
                try:
                    row[k] = float(v)
                except ValueError:
                    row[k] = v
            out.append(row)
        return out


def dumps_record(obj, indent: int = 2) -> str:
    """Serialise nested dicts/lists as JSON with floats in full-precision scientific notation."""

    def enc(x, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(x, dict):
            if not x:
                return "{}"
            items = [f"{pad}{_quote(str(k))}: {enc(v, level + 1)}" for k, v in x.items()]
            return "{\n" + ",\n".join(items) + f"\n{end}}}"
        if isinstance(x, (list, tuple, np.ndarray)):
            if len(x) == 0:
                return "[]"
            return "[" + ", ".join(enc(v, level + 1) for v in x) + "]"
        if x is None:
            return "null"
        if isinstance(x, (bool, np.bool_)):
            return "true" if x else "false"
        if isinstance(x, (int, np.integer)):
            return str(int(x))
        if isinstance(x, (float, np.floating)):
            x = float(x)
            if math.isnan(x):
                return "NaN"
            if math.isinf(x):
                return "Infinity" if x > 0 else "-Infinity"
            return format(x, ".17e")
        return _quote(str(x))

    return enc(obj, 0) + "\n"


def _quote(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def write_record(obj, path) -> Path:
    return atomic_write_text(path, dumps_record(obj))


def result_summary(result: SimulationResult) -> dict:
    d = result.diagnostics
    return {
        "eta_w": result.eta_w,
        "eta_r": result.eta_r,
        "eta_tot": result.eta_tot,
        "n_eff": result.n_eff,
        "cooperativity": result.C,
        "analytic_eta_tot": (2 * result.C / (1 + 2 * result.C)) ** 2,
        "n_shells": result.grid.n_shells if result.grid is not None else 1,
        "norm_residual": d["norm_residual"],
        "adiabaticity": d["adiabaticity"],
        "quadrature_error": d["quadrature_error"],
        "error_estimate": d["error_estimate"],
        "n_steps": d["n_steps"],
        "photons_lost": d["photons_lost"],
    }
