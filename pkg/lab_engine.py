"""
Core laboratory engine: one method per command, each writing its data
files and logging the run to history.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

import eigensolver
import exporters
import manifold
import phasespace
import plot_theme
import simulate
import transfer
from config import COMMANDS, HISTORY_FILE, RunConfig
from maps import coboundary_system, gauge_from_coefficients, system_from_config
from run_history import RunHistory
from validators import FitWindowError, NumericalError, ValidationError, validate_config

logger = logging.getLogger(__name__)


class CommandResult:
    """Result of a command run."""

    def __init__(self, command, files=None, summary=None, success=False, error=None):
        self.command = command
        self.files = [Path(f) for f in (files or [])]
        self.summary = summary or {}
        self.success = success
        self.error = error

    def __repr__(self):
        status = "✓" if self.success else "✗"
        if self.success:
            return f"{status} {self.command}: {len(self.files)} file(s)"
        return f"{status} {self.command}: {self.error}"


class ResonanceLab:
    """Main laboratory engine."""

    def __init__(self, config: RunConfig, history: Optional[RunHistory] = None):
        """
        Initialize the lab.

        Args:
            config: RunConfig with the run settings
            history: Optional shared RunHistory instance
        """
        self.config = config
        self.output_dir = Path(config.output_dir)
        self.history = history if history else RunHistory(self.output_dir / HISTORY_FILE)
        self._system = None

    @property
    def system(self):
        if self._system is None:
            self._system = system_from_config(self.config)
        return self._system

    def run(self, command: str) -> CommandResult:
        """
        Validate the config, run a command and record it in the history.

        Validation and numerical failures come back as an unsuccessful
        CommandResult carrying the exception.
        """
        handlers: Dict[str, Callable[[], CommandResult]] = {
            "spectrum": self.spectrum,
            "sweep": self.sweep,
            "captivity": self.captivity,
            "trapped": self.trapped,
            "manifold": self.manifold,
            "fractal": self.fractal,
            "cloud": self.cloud,
            "correlate": self.correlate,
            "gauge-check": self.gauge_check,
        }
        if command not in handlers:
            error = ValidationError(f"Unknown command: {command} (choose from: {', '.join(handlers)})")
            return CommandResult(command, success=False, error=error)
        try:
            validate_config(self.config, command)
            result = handlers[command]()
        except (ValidationError, NumericalError) as e:
            logger.error("%s failed: %s", command, e)
            return CommandResult(command, success=False, error=e)

        self.history.add_session(command, self.config.config_hash(),
                                 [str(f) for f in result.files], _plain(result.summary))
        return result

    # Helpers

    def _path(self, command, name):
        return self.output_dir / command / name

    def _header(self, command, **extra):
        return exporters.metadata_header(self.config, command, **extra)

    def _map_nu(self, func, nus):
        """Apply func to each nu on the worker pool, results in nu order."""
        workers = max(1, int(self.config.workers))
        if workers == 1 or len(nus) == 1:
            return [func(nu) for nu in nus]
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(func, nus))

    def _zone(self):
        kappa = self.config.kappa
        if self.config.radius is None:
            return phasespace.escape_radius(self.system, kappa)
        if self.config.radius <= 0:
            raise ValidationError("radius must be positive", line=self.config.source_lines.get("radius"))
        return phasespace.CompactZone(float(self.config.radius), kappa)

    def _eta(self):
        return gauge_from_coefficients(self.config.eta_cos, self.config.eta_sin)

    def _spectrum(self, nu):
        N = self.config.truncation_for(nu)
        matrix = transfer.assemble(self.system, nu, transfer.FourierTruncation(N),
                                   self.config.assembly, self.config.quad_factor)
        return matrix, eigensolver.eigenvalues(matrix, self.config.eigen_method)

    # Commands

    def spectrum(self) -> CommandResult:
        """Spectra for each nu, one CSV per nu and a combined scatter."""
        cfg, sys = self.config, self.system
        nus = cfg.nu_values()
        computed = self._map_nu(self._spectrum, nus)

        files, summary, plotted = [], {}, {}
        for nu, (matrix, spec) in zip(nus, computed):
            header = self._header("spectrum", N=matrix.truncation.N,
                                  quad_points=matrix.quad_points or "n/a", nu=nu, method=matrix.method)
            name = "spectrum_" + exporters.sweep_frame_name(nu)
            files.append(exporters.write_csv(self._path("spectrum", name), header,
                                             ["nu", "index", "re", "im", "modulus"],
                                             exporters.spectrum_rows(spec, nu)))
            if cfg.save_matrices:
                stem = name[:-len(".csv")]
                files.append(exporters.write_matrix(self._path("spectrum", stem + ".bin"), matrix.entries))
            nonconstant = spec.eigenvalues[np.abs(spec.eigenvalues - 1.0) > 1e-10] if nu == 0 else spec.eigenvalues
            bound = transfer.bound_report(sys, cfg.sobolev_order, nu, 0.0).gap_bound
            radius = float(np.max(np.abs(nonconstant))) if nonconstant.size else 0.0
            summary[f"nu={nu:g}"] = {
                "N": matrix.truncation.N,
                "spectral_radius": eigensolver.spectral_radius(spec),
                "count_above": eigensolver.count_above(spec, cfg.lambda_threshold),
                "gap_bound": bound,
                "radius_excluding_one": radius,
            }
            plotted[nu] = spec.eigenvalues
            logger.info("nu=%g: spectral radius %.6f (gap bound %.6f)",
                        nu, eigensolver.spectral_radius(spec), bound)

        files.append(plot_theme.spectrum_plot(self._path("spectrum", "spectrum.svg"), plotted, sys.E_min,
                                              title=f"{sys.name}: resonances"))
        return CommandResult("spectrum", files, summary, success=True)

    def sweep(self) -> CommandResult:
        """One frame per nu over nu_start..nu_stop."""
        cfg = self.config
        nus = cfg.nu_values(use_range=True)
        computed = self._map_nu(self._spectrum, nus)

        files = []
        gaps = []
        previous = None
        for nu, (matrix, spec) in zip(nus, computed):
            header = self._header("sweep", N=matrix.truncation.N,
                                  quad_points=matrix.quad_points or "n/a", nu=nu, method=matrix.method)
            files.append(exporters.write_csv(self._path("sweep", exporters.sweep_frame_name(nu)), header,
                                             ["nu", "index", "re", "im", "modulus"],
                                             exporters.spectrum_rows(spec, nu)))
            if previous is not None:
                gaps.append(eigensolver.hausdorff_gap(previous, spec, cfg.floor))
            previous = spec
        finite = [g for g in gaps if math.isfinite(g)]
        summary = {
            "frames": len(files),
            "max_adjacent_gap": max(finite) if finite else 0.0,
            "frames_with_empty_side": len(gaps) - len(finite),
        }
        return CommandResult("sweep", files, summary, success=True)

    def captivity(self) -> CommandResult:
        """Captivity table N(n), with the manifold counter alongside for linear E."""
        cfg, sys = self.config, self.system
        zone = self._zone()
        table = phasespace.captivity_table(sys, zone, cfg.n_max, tuple(cfg.captivity_grid), cfg.enumeration_cap)

        alt = {}
        if sys.is_linear:
            for row in table.rows:
                alt[row.n] = manifold.alt_captivity_count(sys, row.n, zone.R, tuple(cfg.captivity_grid),
                                                          cfg.series_tolerance, cfg.enumeration_cap)
        rows = [(r.n, r.count, r.exponent, r.gap_estimate, alt.get(r.n, "")) for r in table.rows]
        header = self._header("captivity", R=zone.R, kappa=zone.kappa, grid=tuple(cfg.captivity_grid))
        path = exporters.write_csv(self._path("captivity", "captivity.csv"), header,
                                   ["n", "count", "exponent", "gap_estimate", "manifold_count"], rows)
        summary = {
            "R": zone.R,
            "N(n_max)": table.rows[-1].count,
            "exponent": table.rows[-1].exponent,
            "gap_estimate": table.gap_estimate,
            "subadditivity_violations": len(table.subadditivity_violations()),
        }
        return CommandResult("captivity", [path], summary, success=True)

    def trapped(self) -> CommandResult:
        """Trapped set occupancy at the configured depth, PGM image plus cell list."""
        cfg, sys = self.config, self.system
        zone = self._zone()
        grid = phasespace.trapped_set_estimate(sys, zone, cfg.depth, tuple(cfg.trapped_grid), cfg.enumeration_cap)

        header = self._header("trapped", R=zone.R, depth=cfg.depth, grid=tuple(cfg.trapped_grid),
                              measure=grid.measure)
        ix, ij = np.nonzero(grid.occupied)
        cells = exporters.write_csv(self._path("trapped", "trapped.csv"), header, ["x", "xi"],
                                    zip(grid.x[ix], grid.xi[ij]))
        image = exporters.write_pgm(self._path("trapped", "trapped.pgm"), grid.occupied)

        weyl = {f"nu={nu:g}": transfer.bound_report(sys, cfg.sobolev_order, nu, grid.measure).weyl_bound
                for nu in cfg.nu_values()}
        summary = {"R": zone.R, "measure": grid.measure,
                   "occupied_cells": int(np.count_nonzero(grid.occupied)), "weyl_bound": weyl}
        return CommandResult("trapped", [cells, image], summary, success=True)

    def manifold(self) -> CommandResult:
        """Stable manifold graph over one period of the cover and its residuals."""
        cfg, sys = self.config, self.system
        graph = manifold.stable_manifold(sys, cfg.series_tolerance)
        x = np.arange(cfg.manifold_points) / cfg.manifold_points
        values = graph(x)
        residual = graph.residual(x)

        header = self._header("manifold", terms=graph.terms, tolerance=cfg.series_tolerance)
        files = [exporters.write_csv(self._path("manifold", "manifold.csv"), header,
                                     ["x", "S", "residual"], zip(x, values, residual))]
        files.append(plot_theme.series_plot(self._path("manifold", "manifold.svg"),
                                            {"S(x)": (x, values)}, "x", "xi", title=f"{sys.name}: stable manifold"))
        summary = {"terms": graph.terms, "max_residual": float(np.max(residual)), "bound": graph.bound}
        try:
            point = manifold.fixed_point(sys)
            summary["fixed_point"] = (point.x, point.xi)
        except NumericalError as e:
            logger.warning("no fixed point at the origin: %s", e)
        return CommandResult("manifold", files, summary, success=True)

    def fractal(self) -> CommandResult:
        """Fractal slice S^c(x+m), m = -range..range."""
        cfg, sys = self.config, self.system
        points = manifold.fractal_slice(sys, cfg.fractal_x, cfg.fractal_range, cfg.fractal_terms)
        m = np.arange(-cfg.fractal_range, cfg.fractal_range + 1)

        header = self._header("fractal", x=cfg.fractal_x, m_range=cfg.fractal_range,
                              terms=max(cfg.fractal_terms, manifold.fractal_terms_needed(sys)))
        files = [exporters.write_csv(self._path("fractal", "fractal.csv"), header, ["m", "re", "im"],
                                     zip(m, points.real, points.imag))]
        files.append(plot_theme.points_plot(self._path("fractal", "fractal.svg"),
                                            {f"x = {cfg.fractal_x:g}": (points.real, points.imag)},
                                            "Re", "Im", title=f"{sys.name}: fractal slice", equal=True))
        summary = {"points": int(points.size), "bound": manifold.fractal_bound(sys),
                   "max_modulus": float(np.max(np.abs(points)))}
        return CommandResult("fractal", files, summary, success=True)

    def cloud(self) -> CommandResult:
        """Gaussian cloud snapshots and their uniformity statistics."""
        cfg, sys = self.config, self.system
        start = simulate.gaussian_cloud(tuple(cfg.cloud_center), cfg.cloud_sigma, cfg.cloud_size, cfg.seed)
        times = sorted(set(cfg.snapshot_times) | {cfg.steps})
        snapshots = simulate.cloud_snapshots(sys, start, times)

        def rows():
            for snap in snapshots:
                for x, s in zip(snap.x, snap.s):
                    yield snap.time, x, s

        header = self._header("cloud", size=cfg.cloud_size, sigma=cfg.cloud_sigma, times=times)
        files = [exporters.write_csv(self._path("cloud", "cloud.csv"), header, ["n", "x", "s"], rows())]
        shown = [snap for snap in snapshots if snap.time in cfg.snapshot_times] or snapshots
        files.append(plot_theme.points_plot(self._path("cloud", "cloud.svg"),
                                            {f"n = {snap.time}": (snap.x, snap.s) for snap in shown},
                                            "x", "s", title=f"{sys.name}: cloud", limits=((0, 1), (0, 1)),
                                            equal=True))
        summary = {f"chi2_per_dof(n={snap.time})": simulate.uniformity_chi2(snap) for snap in snapshots}
        return CommandResult("cloud", files, summary, success=True)

    def correlate(self) -> CommandResult:
        """Correlation functions per nu, their decay fits and the spectral radius they track."""
        cfg, sys = self.config, self.system
        nus = cfg.nu_values()

        def one(nu):
            trunc = transfer.FourierTruncation(cfg.truncation_for(nu))
            series = simulate.correlation_series(sys, nu, cfg.psi1, cfg.psi2, cfg.correlation_steps,
                                                 trunc, cfg.assembly, cfg.quad_factor)
            _, spec = self._spectrum(nu)
            try:
                fit = simulate.fit_decay_rate(series, *cfg.fit_window)
            except FitWindowError as e:
                logger.warning("nu=%g: no decay fit (%s)", nu, e)
                fit = None
            return series, spec, fit

        results = self._map_nu(one, nus)
        header = self._header("correlate", steps=cfg.correlation_steps, fit_window=tuple(cfg.fit_window))
        correlation_rows = [(s.nu, n, c.real, c.imag, abs(c))
                            for s, _, _ in results for n, c in enumerate(s.values)]
        fit_rows = [(s.nu, fit.rate if fit else "", fit.residual if fit else "",
                     eigensolver.spectral_radius(spec), len(spec))
                    for s, spec, fit in results]
        files = [
            exporters.write_csv(self._path("correlate", "correlation.csv"), header,
                                ["nu", "n", "re", "im", "modulus"], correlation_rows),
            exporters.write_csv(self._path("correlate", "decay_fits.csv"), header,
                                ["nu", "rate", "residual", "spectral_radius", "dim"], fit_rows),
        ]
        curves = {f"nu = {s.nu:g}": (np.arange(len(s)), np.maximum(s.moduli, 1e-300)) for s, _, _ in results}
        files.append(plot_theme.series_plot(self._path("correlate", "correlation.svg"), curves,
                                            "n", "|C(n)|", title=f"{sys.name}: correlations", log_y=True))
        summary = {f"nu={s.nu:g}": {"rate": fit.rate if fit else None,
                                    "spectral_radius": eigensolver.spectral_radius(spec)}
                   for s, spec, fit in results}
        return CommandResult("correlate", files, summary, success=True)

    def gauge_check(self) -> CommandResult:
        """Compare spectra of tau and tau + eta - eta o E above the floor."""
        cfg, sys = self.config, self.system
        eta = self._eta()
        shifted = coboundary_system(sys, eta)

        def one(nu):
            N = cfg.truncation_for(nu)
            trunc = transfer.FourierTruncation(N)
            original = eigensolver.eigenvalues(
                transfer.assemble(sys, nu, trunc, cfg.assembly, cfg.quad_factor), cfg.eigen_method)
            moved = eigensolver.eigenvalues(
                transfer.assemble(shifted, nu, trunc, "quadrature" if cfg.assembly == "bessel" else cfg.assembly,
                                  cfg.quad_factor), cfg.eigen_method)
            distance = eigensolver.hausdorff_gap(original, moved, cfg.floor)
            try:
                defect = transfer.gauge_covariance_defect(sys, eta, nu, trunc)
            except ValidationError as e:
                logger.warning("nu=%g: matrix covariance skipped (%s)", nu, e)
                defect = ""
            return nu, N, distance, defect

        rows = self._map_nu(one, cfg.nu_values())
        header = self._header("gauge-check", floor=cfg.floor, eta_cos=cfg.eta_cos, eta_sin=cfg.eta_sin)
        path = exporters.write_csv(self._path("gauge-check", "gauge_check.csv"), header,
                                   ["nu", "N", "hausdorff", "matrix_defect"], rows)
        summary = {f"nu={nu:g}": {"N": N, "hausdorff": distance} for nu, N, distance, _ in rows}
        return CommandResult("gauge-check", [path], summary, success=True)


def _plain(value: Any) -> Any:
    """JSON-friendly copy of a summary."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    return value


def available_commands() -> List[str]:
    return [c for c in COMMANDS if c != "history"]
