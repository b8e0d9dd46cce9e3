"""Evaluate run configurations and persist flat-file results."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .config import RunConfig
from .errors import FitError, GPError
from .gp import gp_correction
from .kernels import SpinBosonKernel
from .kicksim import estimate_factor, fit_decay_rate, resolve_threads
from .predictions import (
    Prediction,
    decoherence_time,
    delta_phi_sb_general,
    delta_phi_sb_high_T,
    delta_phi_sb_zero_T,
    delta_phi_ss_cr,
    delta_phi_ss_sa,
    delta_phi_ss_z,
)

CSV_COLUMNS = (
    "model", "theta0", "omega", "tau", "gamma0", "cutoff", "kT", "J", "Gamma", "alpha", "p_z",
    "n_steps", "phi_total", "phi_unitary", "delta_phi", "prediction", "rel_dev", "t_D",
    "t_D_over_tau", "richardson_error", "seed",
)

JSON_FIELDS = (
    "inputs", "model", "phi_total", "phi_unitary", "delta_phi", "n_steps_used", "richardson_error",
    "converged", "degenerate_times", "prediction", "prediction_formula", "prediction_note", "rel_dev",
    "predictions", "t_D", "t_D_formula", "t_D_over_tau", "mc_rate", "mc_rate_stderr",
    "mc_rate_prediction", "seed", "notes", "error", "timestamp", "version",
)


@dataclass
class ResultRecord:
    inputs: dict[str, Any]
    model: str
    phi_total: float | None = None
    phi_unitary: float | None = None
    delta_phi: float | None = None
    n_steps_used: int | None = None
    richardson_error: float | None = None
    converged: bool | None = None
    degenerate_times: list[float] = field(default_factory=list)
    prediction: float | None = None
    prediction_formula: str | None = None
    prediction_note: str | None = None
    rel_dev: float | None = None
    predictions: list[dict[str, Any]] = field(default_factory=list)
    t_D: float | None = None
    t_D_formula: str | None = None
    t_D_over_tau: float | None = None
    mc_rate: float | None = None
    mc_rate_stderr: float | None = None
    mc_rate_prediction: float | None = None
    seed: int | None = None
    notes: list[str] = field(default_factory=list)
    error: str | None = None
    timestamp: str = ""
    version: str = __version__
    factor_curve: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    @property
    def failed(self) -> bool:
        return self.error is not None

    def csv_row(self) -> list[str]:
        inp = self.inputs
        values = {
            "model": self.model,
            "theta0": inp.get("theta0"),
            "omega": inp.get("omega"),
            "tau": inp.get("tau"),
            "gamma0": inp.get("gamma0"),
            "cutoff": inp.get("cutoff"),
            "kT": inp.get("kT"),
            "J": inp.get("J"),
            "Gamma": inp.get("Gamma"),
            "alpha": inp.get("alpha"),
            "p_z": inp.get("p_z"),
            "n_steps": inp.get("numerics", {}).get("n_steps"),
            "phi_total": self.phi_total,
            "phi_unitary": self.phi_unitary,
            "delta_phi": self.delta_phi,
            "prediction": self.prediction,
            "rel_dev": self.rel_dev,
            "t_D": self.t_D,
            "t_D_over_tau": self.t_D_over_tau,
            "richardson_error": self.richardson_error,
            "seed": self.seed,
        }
        return [_fmt(values[c]) for c in CSV_COLUMNS]

    def to_json(self) -> str:
        d = {name: getattr(self, name) for name in JSON_FIELDS}
        return json.dumps(_json_safe(d), sort_keys=False)


def _fmt(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _json_safe(x: Any) -> Any:
    if isinstance(x, float):
        return x if math.isfinite(x) else None
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, np.generic):
        return _json_safe(x.item())
    return x


def _prediction_dict(p: Prediction) -> dict[str, Any]:
    return dataclasses.asdict(p)


def _predictions(c: RunConfig, kernel=None) -> list[Prediction]:
    """Closed-form comparison targets; the first entry is the headline value."""
    th, om = c.theta0, c.omega
    out: list[Prediction] = []
    if c.model == "unitary":
        out.append(Prediction(0.0, c.model, "delta_phi = 0", "closed system, exact"))
    elif c.model == "spin-boson":
        if c.kT > 0:
            out.append(Prediction(delta_phi_sb_high_T(c.gamma0, om, c.kT, th), c.model,
                                  "delta_phi_SB^HT", "first order in gamma0, high temperature"))
        elif c.cutoff > om:
            out.append(Prediction(delta_phi_sb_zero_T(c.gamma0, om, c.cutoff, th), c.model,
                                  "delta_phi_SB^T=0 (quoted)",
                                  "first order in gamma0, T = 0; half the value implied by this bath normalization"))
        if c.exponent == 1.0:
            deriv = None
            if isinstance(kernel, SpinBosonKernel) and c.gamma0 > 0:
                def deriv(t: float) -> float:
                    return -float(kernel.exponent(np.array([t]))[0]) / c.gamma0
            out.append(Prediction(delta_phi_sb_general(c.bath(), c.system(), deriv), c.model,
                                  "delta_phi_SB first-order integral", "first order in gamma0"))
    elif c.model == "spin-spin" and c.couplings is None:
        note = "second order in J, p_z = 0" if c.p_z == 0 else "second order in J; derived for p_z = 0"
        out.append(Prediction(delta_phi_ss_z(c.J, om, th), c.model, "delta_phi_SS^z", note))
    elif c.model == "kicked-fast" or (c.model == "kicked-mc" and c.mc.kick_mode == "full"):
        note = "fast kicks, full randomization" + ("" if c.p_z == 0 else "; derived for p_z = 0")
        out.append(Prediction(delta_phi_ss_cr(c.J, c.Gamma, om, th), c.model, "delta_phi_SS^cr", note))
    elif c.model == "kicked-small-angle" or (c.model == "kicked-mc" and c.mc.kick_mode == "small-angle"):
        out.append(Prediction(delta_phi_ss_sa(c.J, c.Gamma, c.alpha, om, th), c.model,
                              "delta_phi_SS^sa", "small kick angle, second order in J, p_z = 0"))
    elif c.model == "kicked-mc" and c.mc.kick_mode == "none":
        out.append(Prediction(delta_phi_ss_z(c.J, om, th), c.model, "delta_phi_SS^z", "no kicks"))
    return out


def _decoherence_time(c: RunConfig, tau: float) -> Prediction | None:
    try:
        if c.model == "spin-boson" and c.gamma0 > 0:
            if c.kT > 0:
                return decoherence_time("spin-boson-high-T", tau, gamma0=c.gamma0, kT=c.kT)
            return decoherence_time("spin-boson-zero-T", tau, gamma0=c.gamma0, cutoff=c.cutoff)
        if c.model == "kicked-fast" or (c.model == "kicked-mc" and c.mc.kick_mode == "full"):
            return decoherence_time("kicked-fast", tau, J=c.J, kick_rate=c.Gamma)
        if c.model == "kicked-small-angle" or (c.model == "kicked-mc" and c.mc.kick_mode == "small-angle"):
            return decoherence_time("kicked-small-angle", tau, kick_rate=c.Gamma, alpha=c.alpha)
    except GPError:
        return None
    return None


def run_point(c: RunConfig, threads: int | None = None) -> ResultRecord:
    sys_ = c.system()
    inputs = c.to_dict()
    inputs["tau"] = sys_.tau
    rec = ResultRecord(inputs=inputs, model=c.model,
                       timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"))
    try:
        if c.model == "kicked-mc":
            rec.seed = c.mc.seed
            emp = estimate_factor(c.mc_config(), sys_, c.J, c.env_state(), c.Gamma,
                                  mode=c.mc.kick_mode, alpha=c.alpha or 0.0, threads=threads)
            kernel = emp.as_kernel()
            rec.factor_curve = (emp.times, np.abs(emp.mean))
            if c.mc.kick_mode == "full":
                rec.mc_rate_prediction = math.pi**2 * c.J**2 / (2.0 * c.Gamma)
            elif c.mc.kick_mode == "small-angle":
                rec.mc_rate_prediction = c.Gamma * 2.0 / 3.0 * c.alpha**2
            try:
                rec.mc_rate, rec.mc_rate_stderr = fit_decay_rate(emp, 1.0 / c.Gamma, sys_.tau)
            except FitError as exc:
                rec.notes.append(f"decay fit skipped: {exc}")
        else:
            kernel = c.kernel()
            grid = np.linspace(0.0, sys_.tau, 257)
            rec.factor_curve = (grid, np.abs(kernel(grid)))

        res = gp_correction(sys_, kernel, c.numerics.n_steps, tol=c.numerics.richardson_tol)
        rec.phi_total, rec.phi_unitary, rec.delta_phi = res.phi_total, res.phi_unitary, res.delta_phi
        rec.n_steps_used, rec.richardson_error = res.n_steps_used, res.richardson_error
        rec.converged, rec.degenerate_times = res.converged, list(res.degenerate_times)
        if not res.converged:
            rec.notes.append(
                f"Richardson error {res.richardson_error:.3e} above tolerance {c.numerics.richardson_tol:.1e}"
            )
        if degenerate := res.degenerate_times:
            rec.notes.append(f"{len(degenerate)} degenerate grid point(s) repaired by interpolation")

        preds = _predictions(c, kernel)
        rec.predictions = [_prediction_dict(p) for p in preds]
        if preds:
            head = preds[0]
            rec.prediction, rec.prediction_formula, rec.prediction_note = (
                head.value, head.formula_id, head.validity_note)
            rec.rel_dev = (res.delta_phi - head.value) / head.value if head.value != 0 else None
        td = _decoherence_time(c, sys_.tau)
        if td is not None:
            rec.t_D, rec.t_D_formula, rec.t_D_over_tau = td.value, td.formula_id, td.value / sys_.tau
        elif c.model == "unitary":
            rec.t_D, rec.t_D_over_tau = math.inf, math.inf
    except GPError as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def run(config: RunConfig, threads: int | None = None) -> list[ResultRecord]:
    """One record per sweep point, in sweep order."""
    points = config.expand()
    n_threads = resolve_threads(threads)
    if len(points) == 1 or n_threads == 1:
        return [run_point(p, threads=n_threads) for p in points]
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        return list(pool.map(lambda p: run_point(p, threads=1), points))


def csv_text(records: list[ResultRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow(rec.csv_row())
    return buf.getvalue()


def _dat(path: Path, header: str, x, y) -> None:
    lines = [f"# {header}"] + [f"{a!r} {b!r}" for a, b in zip(map(float, x), map(float, y))]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_outputs(records: list[ResultRecord], out_dir: str | Path, config: RunConfig | None = None,
                  plot_data: bool = False) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "results.csv", out / "results.ndjson"]
    written[0].write_text(csv_text(records), encoding="utf-8")
    written[1].write_text("".join(r.to_json() + "\n" for r in records), encoding="utf-8")
    if plot_data:
        for i, rec in enumerate(records):
            if rec.factor_curve is not None:
                path = out / f"factor_{i:03d}.dat"
                _dat(path, "t |F(t)|", *rec.factor_curve)
                written.append(path)
        if config is not None and config.sweep is not None:
            ok = [r for r in records if not r.failed]
            path = out / f"sweep_{config.sweep.param}.dat"
            _dat(path, f"{config.sweep.param} delta_phi",
                 [r.inputs[config.sweep.param] for r in ok], [r.delta_phi for r in ok])
            written.append(path)
    return written
