"""
Tables produced by the command-line runs and their serialization.

Every table is a list of column names plus a 2-D array of values. CSV
output uses 17 significant digits and LF line endings so that reruns of
the same configuration are byte-identical.
"""

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NoppsError, PostselectionImpossibleError
from .exact_stats import (
    P_POST_MIN,
    ReadoutDistribution,
    exact_x_characteristic_function,
    joint_probability,
    postselection_probability,
)
from .expansion import (
    ExpansionContext,
    characteristic_function_k,
    characteristic_function_x,
    interpolated_distribution,
    mean_k_first_order,
    oscillation_distribution,
    oscillation_period,
    p_post_expanded,
)
from .spinhalf import measure_period, spin_p_post

DRIFT_TOL = 1e-6
PERIOD_WINDOW = 1e-3


@dataclass
class Table:
    name: str
    columns: list
    data: np.ndarray


@dataclass
class RunResult:
    tables: list
    summary: list
    problems: list = field(default_factory=list)

    def table(self, name):
        return next(t for t in self.tables if t.name == name)

    def value(self, quantity):
        return next(v for q, v in self.summary if q == quantity)


def _reference_p_post(cfg, inputs):
    """P_post from the closed form when it applies, else on the wide default grid."""
    p = cfg["probe"]
    closed_form = (
        cfg.kind == "spin-half"
        and cfg["coupling"]["profile"] == "constant"
        and cfg["dispersion"]["k_h"] is not None
        and cfg["decoherence"]["gamma"] is None
        and p["k_mean"] == 0
        and p["x_mean"] == 0
        and p["spread"] == 1
    )
    if closed_form:
        return spin_p_post(cfg.bloch())
    return postselection_probability(**inputs)


def _measured_period(k, inputs, p_post):
    coherent = joint_probability(k, **inputs, terms="coherent") / p_post
    p0 = inputs["probe"].p0(k)
    keep = p0 > PERIOD_WINDOW * p0.max()
    return measure_period(k[keep], coherent[keep] / p0[keep])


def compute_run(cfg):
    """Evaluate every quantity requested by ``cfg``.

    Returns a :class:`RunResult`; ``problems`` lists normalization drifts
    larger than 1e-6, which the command line reports with exit status 4.
    """
    inputs = cfg.inputs()
    sys, probe, profile, dispersion = inputs["sys"], inputs["probe"], inputs["profile"], inputs["dispersion"]
    wanted = set(cfg["outputs"]["quantities"])
    k = cfg.grid(sys)
    dk = k[1] - k[0]

    joint = joint_probability(k, **inputs)
    p_post = float(dk * np.sum(joint))
    if p_post < P_POST_MIN:
        raise PostselectionImpossibleError(f"postselection probability {p_post:.3g} is zero")
    exact = ReadoutDistribution(k, joint / p_post, p_post)
    ctx = ExpansionContext.build(**inputs)
    interp = interpolated_distribution(ctx, k)

    problems = []
    reference = _reference_p_post(cfg, inputs)
    drift = abs(p_post - reference) / reference
    if drift > DRIFT_TOL:
        problems.append(f"P_post on the grid differs from the reference by {drift:.3g} (relative)")
    if abs(interp.norm - 1) > DRIFT_TOL:
        problems.append(f"Q_interp integrates to {interp.norm:.12g} on the grid")

    columns, data = ["k"], [k]
    if "Q_exact" in wanted:
        columns.append("Q_exact")
        data.append(exact.values)
    if "Q_interp" in wanted:
        columns.append("Q_interp")
        data.append(interp.values)
    if "Q_osc" in wanted:
        osc = oscillation_distribution(**inputs, k=k)
        columns.append("Q_osc")
        data.append(osc.values)
    tables = [Table("distribution", columns, np.column_stack(data))]

    if "Z" in wanted:
        theta = np.array(cfg["outputs"]["theta"])
        z_exact = exact.characteristic(theta)
        z_exp = characteristic_function_k(ctx, theta)
        cols = ["theta", "Re_Z_exact", "Im_Z_exact", "Re_Z_expanded", "Im_Z_expanded"]
        tables.append(Table("characteristic_k", cols,
                            np.column_stack([theta, z_exact.real, z_exact.imag, z_exp.real, z_exp.imag])))
    if "Z_x" in wanted:
        chi = np.array(cfg["outputs"]["chi"])
        plain = {n: v for n, v in inputs.items() if n != "deco"}
        zx_exact = exact_x_characteristic_function(chi, **plain, k=k)
        zx_exp = characteristic_function_x(ctx, chi)
        cols = ["chi", "Re_Zx_exact", "Im_Zx_exact", "Re_Zx_expanded", "Im_Zx_expanded"]
        tables.append(Table("characteristic_x", cols,
                            np.column_stack([chi, zx_exact.real, zx_exact.imag, zx_exp.real, zx_exp.imag])))

    summary = [("P_post_exact", p_post), ("norm_Q_exact", exact.norm), ("norm_Q_interp", interp.norm)]
    if "P_post" in wanted:
        summary.append(("P_post_expanded", p_post_expanded(ctx)))
        summary.append(("P_post_reference", reference))
    w = ctx.weights
    summary += [("alpha_00", w.alpha00), ("alpha_11", w.alpha11)]
    summary += [("Re_A_w", math.nan if w.nopps else w.A_w.real), ("Im_A_w", math.nan if w.nopps else w.A_w.imag),
                ("B_w", math.nan if w.nopps else w.B_w)]
    if "moments" in wanted:
        m_exact, m_interp = exact.moments(4), interp.moments(4)
        for n in range(1, 5):
            summary.append((f"moment_{n}_exact", m_exact[n]))
            summary.append((f"moment_{n}_interp", m_interp[n]))
        try:
            summary.append(("mean_k_first_order", mean_k_first_order(ctx)))
        except NoppsError:
            summary.append(("mean_k_first_order", math.nan))
    expected = oscillation_period(sys, profile, dispersion, probe.k_mean)
    summary.append(("oscillation_period_expected", expected))
    measured = _measured_period(k, inputs, p_post) if expected < probe.spread else math.nan
    summary.append(("oscillation_period_measured", measured))
    summary.append(("grid_step", dk))
    return RunResult(tables, [(q, float(v)) for q, v in summary], problems)


def sweep_point(cfg):
    """One row of a parameter sweep: P_post, both means and the largest Q difference."""
    inputs = cfg.inputs()
    k = cfg.grid(inputs["sys"])
    dk = k[1] - k[0]
    joint = joint_probability(k, **inputs)
    p_post = float(dk * np.sum(joint))
    if p_post < P_POST_MIN:
        raise PostselectionImpossibleError(f"postselection probability {p_post:.3g} is zero")
    exact = ReadoutDistribution(k, joint / p_post, p_post)
    interp = interpolated_distribution(ExpansionContext.build(**inputs), k)
    return [p_post, exact.mean, interp.mean, float(np.max(np.abs(exact.values - interp.values)))]


def compute_sweep(cfg, parameter, values, threads=1):
    from .config import SWEEP_PARAMETERS

    section, key = SWEEP_PARAMETERS[parameter]
    configs = [cfg.with_value(section, key, v) for v in values]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(sweep_point, configs))
    data = np.column_stack([np.asarray(values, dtype=float), np.array(rows, dtype=float).reshape(len(values), 4)])
    return Table(f"sweep_{parameter}", ["parameter", "value", "P_post", "mean_k_exact", "mean_k_interp",
                                         "max_abs_Q_diff"], data)


def format_number(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return "%.17g" % v


def table_csv(columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def _json_value(text):
    try:
        v = float(text)
    except ValueError:
        return text
    return v if math.isfinite(v) else text


def table_json(columns, rows):
    records = [json.dumps([_json_value(c) for c in row]) for row in rows]
    body = ",\n  ".join(records)
    return f'{{"columns": {json.dumps(columns)},\n "data": [\n  {body}\n ]}}\n'


def render(columns, rows, fmt):
    return table_csv(columns, rows) if fmt == "csv" else table_json(columns, rows)


def numeric_rows(table, label=None):
    rows = [[format_number(v) for v in row] for row in table.data]
    if label is not None:
        rows = [[label] + r for r in rows]
    return rows


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def metadata(cfg, files, extra=None):
    from . import __version__

    meta = {"version": __version__, "config": cfg.resolved(), "files": sorted(files)}
    meta.update(extra or {})
    return json.dumps(meta, indent=1, sort_keys=True) + "\n"
