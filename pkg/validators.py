"""
Validation functions and error types for the resonance laboratory.

Validators follow one convention: they return ``(is_valid, error_message)``
tuples so callers can collect several problems before failing. Numerical
failures that only show up while computing live in the ``NumericalError``
family.
"""
import math
from pathlib import Path

from config import (
    ASSEMBLY_METHODS, COMMANDS, EIGEN_METHODS, MAX_TRUNCATION, MIN_EMIN_GRID,
    PRESETS,
)


class ValidationError(Exception):
    """Raised for invalid user input: config values, arguments, ranges."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(Exception):
    """Base class for failures detected during a computation."""
    pass


class ExpansionError(NumericalError):
    """The circle map is not uniformly expanding (E_min <= 1)."""
    pass


class ConvergenceError(NumericalError):
    """An iterative solver hit its iteration cap."""
    pass


class QuadratureResolutionError(NumericalError):
    """Too few quadrature nodes to resolve the integrand oscillations."""
    pass


class EnumerationCapError(NumericalError):
    """A branch enumeration would exceed the configured cap."""
    pass


class TruncationOverflowError(NumericalError):
    """An observable has Fourier support outside the retained modes."""
    pass


class FitWindowError(NumericalError):
    """The decay-fit window contains values too small to take logs of."""
    pass


class ConventionError(NumericalError):
    """The lifted dynamics require E(0) = 0 on the cover."""
    pass


def validate_nu_list(nus):
    """
    Validate the list of semiclassical parameters.

    Args:
        nus: sequence of real numbers

    Returns:
        tuple: (is_valid, error_message)
    """
    if nus is None or len(nus) == 0:
        return False, "nu list cannot be empty"
    for nu in nus:
        if isinstance(nu, bool) or not isinstance(nu, (int, float)):
            return False, f"nu values must be numbers, got {nu!r}"
        if not math.isfinite(nu):
            return False, f"nu values must be finite, got {nu!r}"
    return True, ""


def validate_nu_range(start, stop, step):
    """
    Validate a sweep range nu_start..nu_stop with a positive step.

    Returns:
        tuple: (is_valid, error_message)
    """
    for name, value in (("nu_start", start), ("nu_stop", stop), ("nu_step", step)):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return False, f"{name} must be a number"
    if step <= 0:
        return False, "nu_step must be positive"
    if stop < start:
        return False, "nu range is reversed (nu_stop < nu_start)"
    return True, ""


def validate_truncation(value):
    """
    Validate a truncation setting: "auto" or an integer 1..MAX_TRUNCATION.

    Returns:
        tuple: (is_valid, error_message)
    """
    if value == "auto":
        return True, ""
    if isinstance(value, bool) or not isinstance(value, int):
        return False, "truncation must be 'auto' or a positive integer"
    if value < 1:
        return False, "truncation N must be at least 1"
    if value > MAX_TRUNCATION:
        return False, f"truncation N is too large (max: {MAX_TRUNCATION})"
    return True, ""


def validate_grid(grid, name="grid"):
    """
    Validate a (nx, nxi) grid specification.

    Returns:
        tuple: (is_valid, error_message)
    """
    try:
        nx, nxi = grid
    except (TypeError, ValueError):
        return False, f"{name} must be a pair [nx, nxi]"
    for n in (nx, nxi):
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            return False, f"{name} sizes must be positive integers"
    return True, ""


def validate_emin_grid(grid_size):
    """Validate the sample grid used for E_min and periodicity checks."""
    if isinstance(grid_size, bool) or not isinstance(grid_size, int):
        return False, "grid_size must be an integer"
    if grid_size < MIN_EMIN_GRID:
        return False, f"grid_size must be at least {MIN_EMIN_GRID}"
    return True, ""


def validate_kappa(kappa, emin_value):
    """
    Validate the escape-lemma expansion rate: 1 < kappa < E_min.

    Returns:
        tuple: (is_valid, error_message)
    """
    if kappa is None:
        return True, ""
    if not (1.0 < kappa < emin_value):
        return False, f"kappa must satisfy 1 < kappa < E_min={emin_value:.6g}, got {kappa}"
    return True, ""


def validate_sobolev_order(m):
    """The Sobolev order of the escape function must be negative."""
    if isinstance(m, bool) or not isinstance(m, (int, float)):
        return False, "Sobolev order m must be a number"
    if m >= 0:
        return False, f"Sobolev order m must be negative, got {m}"
    return True, ""


def validate_seed(seed):
    """Seeds are non-negative integers below 2**64."""
    if isinstance(seed, bool) or not isinstance(seed, int):
        return False, "seed must be an integer"
    if seed < 0 or seed >= 2 ** 64:
        return False, "seed must lie in [0, 2**64)"
    return True, ""


def validate_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, int):
        return False, f"{name} must be an integer"
    if value < minimum:
        return False, f"{name} must be at least {minimum}"
    return True, ""


def validate_positive_number(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return False, f"{name} must be a number"
    if not value > 0:
        return False, f"{name} must be positive"
    return True, ""


def validate_coefficients(values, name):
    """Fourier coefficient lists are lists of real numbers."""
    if not isinstance(values, (list, tuple)):
        return False, f"{name} must be a list of numbers"
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            return False, f"{name} must contain only numbers"
    return True, ""


def validate_observable(coefficients, name):
    """
    Validate an observable given as {mode: [re, im]} or {mode: re}.

    Returns:
        tuple: (is_valid, error_message)
    """
    if not isinstance(coefficients, dict) or not coefficients:
        return False, f"{name} must be a non-empty table of mode = value"
    for mode, value in coefficients.items():
        try:
            int(mode)
        except (TypeError, ValueError):
            return False, f"{name} has a non-integer mode {mode!r}"
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                return False, f"{name}[{mode}] must be [re, im]"
        elif isinstance(value, bool) or not isinstance(value, (int, float)):
            return False, f"{name}[{mode}] must be a number or [re, im]"
    return True, ""


def validate_output_dir(path):
    """
    Check that the output directory exists or can be created.

    Returns:
        tuple: (is_valid, error_message)
    """
    path = Path(path)
    if path.exists() and not path.is_dir():
        return False, f"Output path is not a directory: {path}"
    parent = path if path.exists() else path.parent
    while not parent.exists() and parent != parent.parent:
        parent = parent.parent
    if not parent.exists():
        return False, f"Output directory cannot be created: {path}"
    return True, ""


def validate_config(config, command=None):
    """
    Validate a RunConfig, raising ValidationError on the first problem.

    Line numbers recorded while loading a config file are attached to the
    error so messages point at the offending key.
    """
    checks = [
        ("preset", _check_preset(config)),
        ("truncation", validate_truncation(config.truncation)),
        ("quad_factor", validate_positive_number(config.quad_factor, "quad_factor")),
        ("assembly", _check_choice(config.assembly, ASSEMBLY_METHODS, "assembly")),
        ("eigen_method", _check_choice(config.eigen_method, EIGEN_METHODS, "eigen_method")),
        ("captivity_grid", validate_grid(config.captivity_grid, "captivity_grid")),
        ("trapped_grid", validate_grid(config.trapped_grid, "trapped_grid")),
        ("n_max", validate_positive_int(config.n_max, "n_max")),
        ("depth", validate_positive_int(config.depth, "depth")),
        ("seed", validate_seed(config.seed)),
        ("cloud_size", validate_positive_int(config.cloud_size, "cloud_size")),
        ("cloud_sigma", validate_positive_number(config.cloud_sigma, "cloud_sigma")),
        ("steps", validate_positive_int(config.steps, "steps", minimum=0)),
        ("floor", validate_positive_number(config.floor, "floor")),
        ("workers", validate_positive_int(config.workers, "workers")),
        ("sobolev_order", validate_sobolev_order(config.sobolev_order)),
        ("output_dir", validate_output_dir(config.output_dir)),
        ("save_matrices", _check_flag(config.save_matrices, "save_matrices")),
    ]
    for key in ("g_cos", "g_sin", "tau_cos", "tau_sin", "eta_cos", "eta_sin"):
        checks.append((key, validate_coefficients(getattr(config, key), key)))
    checks.append(("psi1", validate_observable(config.psi1, "psi1")))
    checks.append(("psi2", validate_observable(config.psi2, "psi2")))

    if command == "sweep":
        checks.append(("nu_start", validate_nu_range(config.nu_start, config.nu_stop, config.nu_step)))
    else:
        checks.append(("nu", validate_nu_list(config.nu_values())))

    if command is not None and command not in COMMANDS:
        raise ValidationError(f"Unknown command: {command}")

    for key, (is_valid, message) in checks:
        if not is_valid:
            raise ValidationError(message, line=config.source_lines.get(key))


def _check_preset(config):
    if config.preset == "custom":
        is_valid, message = validate_positive_int(config.k, "k", minimum=2)
        return is_valid, message
    if config.preset not in PRESETS:
        return False, f"Unknown preset '{config.preset}' (choose from: {', '.join(PRESETS)}, custom)"
    return True, ""


def _check_flag(value, name):
    if not isinstance(value, bool):
        return False, f"{name} must be true or false"
    return True, ""


def _check_choice(value, options, name):
    if value not in options:
        return False, f"{name} must be one of: {', '.join(options)}"
    return True, ""
