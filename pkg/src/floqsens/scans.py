"""Sweep engine and file emission for the command-line front end.

Every map row is produced by the same ``compute_trace`` call the ``trace``
command uses, so a map row at fixed field and the corresponding trace are
bitwise identical.  CSV output is UTF-8 with ``\\n`` line endings and full
``%.17g`` precision; maps can also be emitted as binary 8-bit PGM (P5)
with the documented value mapping round(255 (L + 1) / 2).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .clusters import conditional_cluster_hamiltonians, doublet_dip_estimates, \
    joint_full_model
from .config import ScanConfig
from .engine import ConditionalHamiltonians, PulseSequence, envelope_general, \
    floquet_pair, spectrum_scan, thermal_coherence_numeric, unit_cell
from .errors import ConfigError, NumericalConsistencyError, ValidationError
from .pseudospin import PseudoField, TwoStateModel, avg_hamiltonian_dip, \
    coherence_analytic, diamond_boundaries, dip_positions, envelope, floquet_phase
from .sensors import NVModel, donor_pair_polarizations, nv_two_state

TWO_PI = 2.0 * math.pi

# Dips with level repulsion below this have no observable contrast
# (true-crossing limit) and are dropped from dip reports.
MIN_REPORTED_DELTA = 1e-6


def _fmt(x: float) -> str:
    return "%.17g" % x


@dataclass(frozen=True)
class TraceData:
    """One computed coherence trace over the tau grid."""

    taus: np.ndarray
    coherence: np.ndarray
    envelope: np.ndarray


def _two_state_model(cfg: ScanConfig, field_value: float | None) -> TwoStateModel | None:
    """The D = 2 model at this field, or None for higher-dimensional systems."""
    kind = cfg.system_kind
    if kind == "pseudospin":
        return cfg.system
    if kind == "nv":
        nv = cfg.system
        if cfg.field_axis is not None and cfg.field_axis.name == "omega_x_hz":
            if field_value is None:
                raise ConfigError("nv sweep needs a field value")
            nv = NVModel(omega_x=TWO_PI * field_value, omega_z=nv.omega_z, a_par=nv.a_par)
        return nv_two_state(nv)
    if kind == "donor_pair":
        b0 = _field_b0(cfg, field_value)
        p_u, p_d = donor_pair_polarizations(cfg.donor, b0)
        pair = cfg.system
        return TwoStateModel(h_u=PseudoField(pair.c12 / 2.0, pair.delta_a * p_u / 2.0),
                             h_d=PseudoField(pair.c12 / 2.0, pair.delta_a * p_d / 2.0))
    return None


def _field_b0(cfg: ScanConfig, field_value: float | None) -> float:
    if cfg.field_axis is not None and cfg.field_axis.name == "b0_tesla":
        if field_value is None:
            raise ConfigError("field sweep needs a value")
        return float(field_value)
    if cfg.fixed_field is None:
        raise ConfigError(f"system '{cfg.system_kind}' needs b0_tesla")
    return cfg.fixed_field


def _cluster_polarizations(cfg: ScanConfig, field_value: float | None) -> tuple[float, float]:
    if cfg.polarizations is not None:
        return cfg.polarizations
    b0 = _field_b0(cfg, field_value)
    return donor_pair_polarizations(cfg.donor, b0)


def _conditional(cfg: ScanConfig, field_value: float | None) -> ConditionalHamiltonians:
    kind = cfg.system_kind
    if kind == "cluster3":
        p_u, p_d = _cluster_polarizations(cfg, field_value)
        return conditional_cluster_hamiltonians(cfg.system, p_u, p_d)
    if kind == "independent_pairs":
        p_u, p_d = _cluster_polarizations(cfg, field_value)
        return cfg.system.conditional(p_u, p_d)
    if kind == "joint_full":
        return joint_full_model(cfg.donor, cfg.system, _field_b0(cfg, field_value))
    model = _two_state_model(cfg, field_value)
    return model.conditional()


def compute_trace(cfg: ScanConfig, field_value: float | None = None) -> TraceData:
    """Coherence and envelope over the tau axis at one field point.

    A finite pulse duration delta shifts the effective interval of the
    analytic two-state path to tau + delta, matching the engine's cell
    construction.
    """
    taus = cfg.tau_axis.values()
    n_p = cfg.sequence.n_p
    delta = cfg.sequence.pulse_duration
    model = _two_state_model(cfg, field_value)
    if model is not None:
        tau_eff = taus + delta
        coh = np.asarray(coherence_analytic(model, tau_eff, n_p))
        env = np.asarray(envelope(model, tau_eff))
        return TraceData(taus=taus, coherence=coh, envelope=env)
    ch = _conditional(cfg, field_value)
    coh = np.empty(taus.size)
    env = np.empty(taus.size)
    for i, tau in enumerate(taus):
        try:
            seq = PulseSequence(tau=float(tau), n_p=n_p, pulse_duration=delta)
            coh[i] = thermal_coherence_numeric(ch, seq)
            pair = floquet_pair(*unit_cell(ch, seq))
            env[i] = envelope_general(pair).floor
        except (ValidationError, NumericalConsistencyError) as exc:
            exc.args = (f"tau[{i}] = {tau:g}: {exc}",)
            raise
    return TraceData(taus=taus, coherence=coh, envelope=env)


def _check_range(values: np.ndarray, what: str):
    drift = float(np.abs(values).max(initial=0.0)) - 1.0
    if drift > 1e-9:
        raise NumericalConsistencyError(f"{what} left [-1, 1] by {drift:.3e}")


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_pgm(path: Path, values: np.ndarray) -> None:
    """8-bit binary PGM; L in [-1, 1] maps to round(255 (L + 1) / 2)."""
    pixels = np.rint(255.0 * (np.clip(values, -1.0, 1.0) + 1.0) / 2.0).astype(np.uint8)
    header = f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n255\n".encode("ascii")
    path.write_bytes(header + pixels.tobytes())


def write_manifest(path: Path, cfg: ScanConfig, command: str, files: list[str]) -> None:
    doc = {
        "version": __version__,
        "command": command,
        "config_sha1": cfg.content_hash(),
        "config": cfg.resolved,
        "files": files,
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _field_column(cfg: ScanConfig) -> str:
    return cfg.field_axis.name if cfg.field_axis is not None else "row_index"


def run_trace(cfg: ScanConfig, outdir: Path) -> list[Path]:
    """Emit trace.csv with columns tau_s, coherence, envelope."""
    outdir.mkdir(parents=True, exist_ok=True)
    if cfg.field_axis is not None:
        raise ConfigError("trace takes a single tau axis; drop the field axis")
    data = compute_trace(cfg, None)
    _check_range(data.coherence, "coherence")
    out = outdir / "trace.csv"
    write_csv(out, ["tau_s", "coherence", "envelope"],
              zip(map(float, data.taus), map(float, data.coherence),
                  map(float, data.envelope)))
    manifest = outdir / "trace_manifest.json"
    write_manifest(manifest, cfg, "trace", [out.name])
    return [out, manifest]


def _overlay_rows(cfg: ScanConfig, field_values: np.ndarray):
    """Analytic overlay curves for map output, when the system has them."""
    kind = cfg.system_kind
    if kind == "nv" and cfg.field_axis.name == "omega_x_hz":
        header = ["omega_x_hz", "tau_plus_s", "tau_minus_s"]
        rows = []
        for f in field_values:
            model = _two_state_model(cfg, float(f))
            tau_plus, tau_minus = diamond_boundaries(model)
            rows.append((float(f), tau_plus, tau_minus if tau_minus is not None else math.inf))
        return header, rows
    if kind == "donor_pair" and cfg.field_axis.name == "b0_tesla":
        header = ["b0_tesla", "tau_avg_s"]
        rows = [(float(f), avg_hamiltonian_dip(_two_state_model(cfg, float(f))))
                for f in field_values]
        return header, rows
    if kind == "cluster3" and cfg.donor is not None and cfg.field_axis.name == "b0_tesla":
        labels = None
        rows = []
        for f in field_values:
            p_u, p_d = _cluster_polarizations(cfg, float(f))
            est = doublet_dip_estimates(cfg.system, p_u, p_d)
            est = sorted(est, key=lambda r: r.label)
            if labels is None:
                labels = [r.label for r in est]
            by_label = {r.label: r.tau for r in est}
            rows.append((float(f), *[by_label.get(lb, math.inf) for lb in labels]))
        header = ["b0_tesla"] + [f"tau_{lb.replace('+', 'p').replace('-', 'm')}_s"
                                 for lb in (labels or [])]
        return header, rows
    return None, None


def run_map(cfg: ScanConfig, outdir: Path, threads: int = 1) -> list[Path]:
    """Emit the long-form map CSV, plus PGM and overlay curves if requested."""
    outdir.mkdir(parents=True, exist_ok=True)
    if cfg.field_axis is None:
        raise ConfigError("map needs a field axis in addition to tau_s")
    field_values = cfg.field_axis.values()
    quantity = cfg.output.quantity

    def row(index: int) -> TraceData:
        try:
            return compute_trace(cfg, float(field_values[index]))
        except (ValidationError, NumericalConsistencyError) as exc:
            exc.args = (f"row {index} (field {field_values[index]:g}): {exc}",)
            raise

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            traces = list(pool.map(row, range(field_values.size)))
    else:
        traces = [row(i) for i in range(field_values.size)]

    grid = np.stack([t.coherence if quantity == "coherence" else t.envelope
                     for t in traces])
    _check_range(grid, quantity)
    files = []
    out_csv = outdir / "map.csv"
    if cfg.output.format in ("csv", "both"):
        rows = []
        taus = cfg.tau_axis.values()
        for i, f in enumerate(field_values):
            for j, tau in enumerate(taus):
                rows.append((float(f), float(tau), float(grid[i, j])))
        write_csv(out_csv, [_field_column(cfg), "tau_s", quantity], rows)
        files.append(out_csv)
        header, overlay = _overlay_rows(cfg, field_values)
        if overlay is not None:
            out_overlay = outdir / "map_overlay.csv"
            write_csv(out_overlay, header, overlay)
            files.append(out_overlay)
    if cfg.output.format in ("pgm", "both"):
        out_pgm = outdir / "map.pgm"
        write_pgm(out_pgm, grid)
        files.append(out_pgm)
    manifest = outdir / "map_manifest.json"
    write_manifest(manifest, cfg, "map", [p.name for p in files])
    return files + [manifest]


def run_spectrum(cfg: ScanConfig, outdir: Path) -> list[Path]:
    """Emit eigenphase trajectories over the tau axis with crossing flags."""
    outdir.mkdir(parents=True, exist_ok=True)
    if cfg.field_axis is not None:
        raise ConfigError("spectrum takes a single tau axis; drop the field axis")
    ch = _conditional(cfg, None)
    scan = spectrum_scan(ch, cfg.tau_axis.values(),
                         pulse_duration=cfg.sequence.pulse_duration,
                         gap_threshold=cfg.output.crossing_gap)
    dim = scan.phases.shape[1]
    header = ["tau_s"] + [f"phase_{k + 1}" for k in range(dim)] + ["crossing"]
    rows = []
    for i, tau in enumerate(scan.taus):
        rows.append((float(tau), *map(float, scan.phases[i]), int(scan.crossings[i])))
    out = outdir / "spectrum.csv"
    write_csv(out, header, rows)
    manifest = outdir / "spectrum_manifest.json"
    write_manifest(manifest, cfg, "spectrum", [out.name])
    return [out, manifest]


def run_dips(cfg: ScanConfig, outdir: Path) -> list[Path]:
    """Emit the dip report: located dips, averaged-Hamiltonian and secular estimates.

    Two-state systems report every root of the dip condition below the tau
    axis stop (skipping zero-contrast true crossings) plus the averaged-
    Hamiltonian estimate; 3-clusters report the secular doublet estimates,
    with the harmonic column carrying the quasienergy pair as a two-digit
    code (12, 13, 23).
    """
    outdir.mkdir(parents=True, exist_ok=True)
    if cfg.field_axis is not None:
        raise ConfigError("dips takes a single tau axis; drop the field axis")
    n_p = cfg.sequence.n_p
    rows = []
    model = _two_state_model(cfg, None)
    if model is not None:
        for rec in dip_positions(model, cfg.tau_axis.stop, n_p=n_p):
            if rec.delta < MIN_REPORTED_DELTA:
                continue
            rows.append((rec.tau_dip, "floquet_condition", rec.delta, rec.depth,
                         rec.harmonic_index))
        try:
            tau_bar = avg_hamiltonian_dip(model)
        except ValidationError:
            tau_bar = None
        if tau_bar is not None and tau_bar <= cfg.tau_axis.stop:
            e_tau = float(floquet_phase(model, tau_bar))
            delta = abs(math.pi - e_tau)
            depth = 1.0 - 2.0 * math.sin(n_p * delta) ** 2
            rows.append((tau_bar, "avg_hamiltonian", delta, depth, 1))
    elif cfg.system_kind == "cluster3":
        p_u, p_d = _cluster_polarizations(cfg, None)
        for rec in doublet_dip_estimates(cfg.system, p_u, p_d):
            if rec.tau <= cfg.tau_axis.stop:
                rows.append((rec.tau, "secular_estimate", math.nan, math.nan,
                             rec.pair[0] * 10 + rec.pair[1]))
    else:
        raise ConfigError(f"system '{cfg.system_kind}' has no analytic or secular "
                          f"dip estimates")
    rows.sort(key=lambda r: r[0])
    out = outdir / "dips.csv"
    write_csv(out, ["tau_dip_s", "method", "delta_rad", "depth", "harmonic"], rows)
    manifest = outdir / "dips_manifest.json"
    write_manifest(manifest, cfg, "dips", [out.name])
    return [out, manifest]
