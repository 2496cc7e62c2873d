"""Hysteresis quantities, CSV export and SVG plots."""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import matplotlib
import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from .model import Branch, MixedState, SimulationResult, TimeGrid


class EmptyResult(ValueError):
    pass


class PlotKind(str, enum.Enum):
    HISTORY = "history"
    HYSTERESIS = "hysteresis"


@dataclass(frozen=True)
class HysteresisSeries:
    """Step-averaged displacement and the mean spring force over each step."""

    ua: np.ndarray
    f: np.ndarray


def hysteresis(res: SimulationResult) -> HysteresisSeries:
    if res.grid.n_steps < 1:
        raise EmptyResult("hysteresis needs at least one step")
    u, j = res.column("u"), res.column("j")
    return HysteresisSeries(ua=0.5 * (u[:-1] + u[1:]), f=(j[1:] - j[:-1]) / res.grid.h)


CSV_HEADER = ("t", "u", "p_hat", "J", "u1_hat", "branch", "f_applied", "ua", "F")


def _fmt(x: float) -> str:
    return f"{x:.17e}"


def export_csv(res: SimulationResult, hys: Optional[HysteresisSeries] = None) -> str:
    """Render a result as CSV text, one row per node.

    The first row is the initial state; its step-scoped columns
    (branch, f_applied, ua, F) are left empty.
    """
    if hys is None and res.grid.n_steps > 0:
        hys = hysteresis(res)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r, s in enumerate(res.states):
        row = [_fmt(r * res.grid.h), _fmt(s.u), _fmt(s.p_hat), _fmt(s.j), _fmt(s.u1_hat)]
        if r == 0:
            row += ["", "", "", ""]
        else:
            row += [
                res.branch_labels[r - 1].value,
                _fmt(res.forcing_used[r - 1]),
                _fmt(hys.ua[r - 1]),
                _fmt(hys.f[r - 1]),
            ]
        w.writerow(row)
    return buf.getvalue()


def read_csv(text: str, method: str = "csv") -> SimulationResult:
    """Rebuild a ``SimulationResult`` from ``export_csv`` output."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError("not a mixedstep CSV export")
    body = rows[1:]
    if not body:
        raise EmptyResult("CSV has no rows")
    times = [float(r[0]) for r in body]
    states = tuple(MixedState(*(float(x) for x in r[1:5])) for r in body)
    n = len(body) - 1
    h = times[1] - times[0] if n else 1.0
    if n and not np.allclose(np.diff(times), h, rtol=1e-9, atol=0.0):
        raise ValueError("CSV time column is not uniform")
    return SimulationResult(
        grid=TimeGrid(h=h, n_steps=n),
        states=states,
        branch_labels=tuple(Branch(r[5]) for r in body[1:]),
        forcing_used=tuple(float(r[6]) for r in body[1:]),
        method=method,
    )


_STYLE = {
    "extended-hamilton": dict(linestyle=":", linewidth=1.4, color="tab:red"),
    "newmark": dict(linestyle="-", linewidth=0.9, color="tab:blue"),
}


def emit_plot(
    res: Union[SimulationResult, Sequence[SimulationResult]],
    hys: Union[None, HysteresisSeries, Sequence[Optional[HysteresisSeries]]] = None,
    kind: Union[PlotKind, str] = PlotKind.HISTORY,
    title: Optional[str] = None,
    scale: float = 1.0,
    unit: str = "",
) -> str:
    """Draw displacement history or force-displacement loops as SVG text.

    Several results can be overlaid; the mixed scheme is dotted and the
    Newmark reference solid. ``scale`` multiplies displacements before
    plotting (e.g. ``1e3`` with ``unit="milli-in"``). Output bytes depend
    only on the inputs.
    """
    kind = PlotKind(kind)
    runs = [res] if isinstance(res, SimulationResult) else list(res)
    if not runs or any(r.grid.n_steps < 1 for r in runs):
        raise EmptyResult("nothing to plot")
    if hys is None or isinstance(hys, HysteresisSeries):
        hyss = [hys] * len(runs) if hys is not None else [None] * len(runs)
    else:
        hyss = list(hys)
    hyss = [hh if hh is not None else hysteresis(r) for r, hh in zip(runs, hyss)]

    with matplotlib.rc_context({"svg.hashsalt": "mixedstep", "svg.fonttype": "none"}):
        fig = Figure(figsize=(7.0, 4.5))
        FigureCanvasSVG(fig)
        ax = fig.add_subplot(1, 1, 1)
        ulabel = f"displacement ({unit})" if unit else "displacement"
        for r, hh in zip(runs, hyss):
            style = _STYLE.get(r.method, dict(linestyle="--", linewidth=1.0))
            if kind is PlotKind.HISTORY:
                ax.plot(r.grid.times, scale * r.column("u"), label=r.method, **style)
            else:
                ax.plot(scale * hh.ua, hh.f, label=r.method, **style)
        if kind is PlotKind.HISTORY:
            ax.set_xlabel("time")
            ax.set_ylabel(ulabel)
        else:
            ax.set_xlabel(f"average {ulabel}")
            ax.set_ylabel("internal force")
        ax.set_title(title or ("Displacement history" if kind is PlotKind.HISTORY else "Hysteresis"))
        ax.grid(True, linewidth=0.3)
        ax.legend(loc="best")
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()
