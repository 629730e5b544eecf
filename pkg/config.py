"""
Configuration constants and settings for the Ruelle Resonance Lab.
"""
import hashlib
import json
import math

# Application Metadata
APP_NAME = "Ruelle Resonance Lab"
APP_VERSION = "1.0.1"

# Default Settings
DEFAULT_PRESET = "doubling-cos"
DEFAULT_TRUNCATION = "auto"  # Options: auto, or an integer N >= 1
DEFAULT_ASSEMBLY = "auto"  # Options: auto, quadrature, bessel
DEFAULT_EIGEN_METHOD = "lapack"  # Options: lapack, qr
DEFAULT_OUTPUT_DIR = "results"
DEFAULT_WORKERS = 1

# Quadrature
DEFAULT_QUAD_FACTOR = 8
MIN_QUAD_FACTOR = 4
OSCILLATION_MARGIN = 16

# Truncation rule N = ceil(slope * |nu|) + offset
AUTO_TRUNCATION_SLOPE = 1.6
AUTO_TRUNCATION_OFFSET = 32
AUTO_TRUNCATION_RULE = "N = ceil(1.6*|nu|) + 32"
MAX_TRUNCATION = 4096

# Map checks
DEFAULT_EMIN_GRID = 4096
MIN_EMIN_GRID = 64
PERIODICITY_TOLERANCE = 1e-12
INVERSE_TOLERANCE = 1e-14

# Phase space
DEFAULT_ENUMERATION_CAP = 2 ** 20
DEFAULT_CAPTIVITY_GRID = (256, 129)
DEFAULT_TRAPPED_GRID = (512, 257)
DEFAULT_N_MAX = 10
DEFAULT_DEPTH = 10
DEFAULT_SOBOLEV_ORDER = -2.0
ESCAPE_RADIUS_MARGIN = 1e-9

# Eigensolver
QR_ITERATION_FACTOR = 60
DEFLATION_TOLERANCE = 1e-14
DEFAULT_FLOOR = 0.3
DEFAULT_LAMBDA = 0.3

# Stable manifold and fractal slice
DEFAULT_SERIES_TOLERANCE = 1e-14
DEFAULT_MANIFOLD_POINTS = 1024
DEFAULT_FRACTAL_X = 0.0
DEFAULT_FRACTAL_RANGE = 4096
DEFAULT_FRACTAL_TERMS = 48

# Simulation
DEFAULT_SEED = 20240611
DEFAULT_CLOUD_SIZE = 100_000
DEFAULT_CLOUD_SIGMA = 0.01
DEFAULT_CLOUD_STEPS = 19
DEFAULT_SNAPSHOT_TIMES = (0, 2, 10, 19)
DEFAULT_HISTOGRAM_BINS = 64
DEFAULT_FIT_WINDOW = (10, 30)
DEFAULT_CORRELATION_STEPS = 40
# Mean-zero observables with no reflection symmetry, so both parity sectors are reached
DEFAULT_PSI1 = {
    "-3": [0.3, -0.2], "-2": [-0.5, 0.4], "-1": [0.8, 0.1],
    "1": [0.6, -0.7], "2": [0.2, 0.9], "3": [-0.4, 0.3],
}
DEFAULT_PSI2 = {
    "-3": [-0.2, 0.5], "-2": [0.7, 0.3], "-1": [0.1, -0.6],
    "1": [0.9, 0.2], "2": [-0.3, -0.4], "3": [0.5, 0.1],
}
FIT_UNDERFLOW = 1e-14

# Output
HISTORY_FILE = "history.json"
MATRIX_MAGIC = b"RRLMAT01"
MODE_ORDERING = "modes n = -N..N ascending"
SWEEP_FRAME_PATTERN = "nu_{value:08.3f}.csv"

# Supported map presets
PRESETS = {
    "doubling-cos": "E(x) = 2x, tau(x) = cos 2 pi x",
    "doubling-sin": "E(x) = 2x, tau(x) = sin 2 pi x",
    "doubling-flat": "E(x) = 2x, tau(x) = 0",
    "tripling-cos": "E(x) = 3x, tau(x) = cos 2 pi x",
    "perturbed-doubling": "E(x) = 2(x + 0.05 sin 2 pi x), tau(x) = cos 2 pi x",
}

# Matrix assembly methods
ASSEMBLY_METHODS = {
    "auto": "Closed form for doubling-cos, quadrature otherwise",
    "quadrature": "Trapezoid quadrature (FFT)",
    "bessel": "Bessel closed form (doubling-cos only)",
}

# Eigenvalue backends
EIGEN_METHODS = {
    "lapack": "LAPACK zgeev via scipy.linalg",
    "qr": "Balancing, Hessenberg, shifted complex QR",
}

# Subcommands
COMMANDS = {
    "spectrum": "Resonance spectra for a list of nu",
    "sweep": "One spectrum frame per nu over a range",
    "captivity": "Captivity table N(n)",
    "trapped": "Trapped set occupancy and measure",
    "manifold": "Stable manifold graph and residuals",
    "fractal": "Fractal slice of the trapped set",
    "cloud": "Point cloud mixing snapshots",
    "correlate": "Correlation functions and decay fits",
    "gauge-check": "Spectrum invariance under a coboundary",
    "history": "List recorded runs",
}

# Keys excluded from the config hash (they never change data files)
UNHASHED_KEYS = ("output_dir", "workers")


def auto_truncation(nu):
    """Truncation N = ceil(1.6*|nu|) + 32."""
    return math.ceil(AUTO_TRUNCATION_SLOPE * abs(nu)) + AUTO_TRUNCATION_OFFSET


class RunConfig:
    """Configuration class for laboratory runs."""

    def __init__(self):
        # Map system
        self.preset = DEFAULT_PRESET
        self.k = 2
        self.g_cos = []
        self.g_sin = []
        self.tau_constant = 0.0
        self.tau_cos = []
        self.tau_sin = []
        self.eta_cos = []
        self.eta_sin = [0.3]

        # Semiclassical parameter
        self.nu = [0.0]
        self.nu_start = 0.0
        self.nu_stop = 0.0
        self.nu_step = 1.0

        # Transfer matrix
        self.truncation = DEFAULT_TRUNCATION
        self.quad_factor = DEFAULT_QUAD_FACTOR
        self.assembly = DEFAULT_ASSEMBLY
        self.eigen_method = DEFAULT_EIGEN_METHOD
        self.floor = DEFAULT_FLOOR
        self.lambda_threshold = DEFAULT_LAMBDA
        self.save_matrices = False

        # Phase space
        self.kappa = None
        self.radius = None
        self.sobolev_order = DEFAULT_SOBOLEV_ORDER
        self.captivity_grid = list(DEFAULT_CAPTIVITY_GRID)
        self.trapped_grid = list(DEFAULT_TRAPPED_GRID)
        self.n_max = DEFAULT_N_MAX
        self.depth = DEFAULT_DEPTH
        self.enumeration_cap = DEFAULT_ENUMERATION_CAP

        # Manifold
        self.series_tolerance = DEFAULT_SERIES_TOLERANCE
        self.manifold_points = DEFAULT_MANIFOLD_POINTS
        self.fractal_x = DEFAULT_FRACTAL_X
        self.fractal_range = DEFAULT_FRACTAL_RANGE
        self.fractal_terms = DEFAULT_FRACTAL_TERMS

        # Simulation
        self.seed = DEFAULT_SEED
        self.cloud_size = DEFAULT_CLOUD_SIZE
        self.cloud_sigma = DEFAULT_CLOUD_SIGMA
        self.cloud_center = [0.0, 0.0]
        self.steps = DEFAULT_CLOUD_STEPS
        self.snapshot_times = list(DEFAULT_SNAPSHOT_TIMES)
        self.psi1 = {key: list(value) for key, value in DEFAULT_PSI1.items()}
        self.psi2 = {key: list(value) for key, value in DEFAULT_PSI2.items()}
        self.correlation_steps = DEFAULT_CORRELATION_STEPS
        self.fit_window = list(DEFAULT_FIT_WINDOW)

        # Run
        self.workers = DEFAULT_WORKERS
        self.output_dir = DEFAULT_OUTPUT_DIR

        # 1-based line of each key in the file it was loaded from
        self.source_lines = {}

    def truncation_for(self, nu):
        """Calculate the truncation N for a given nu."""
        if self.truncation == "auto":
            return auto_truncation(nu)
        return int(self.truncation)

    def nu_values(self, use_range=False):
        """The nu list, or the nu_start..nu_stop range when no list is set."""
        if self.nu is not None and not use_range:
            return [float(v) for v in self.nu]
        count = math.floor((self.nu_stop - self.nu_start) / self.nu_step + 1e-9) + 1
        return [round(self.nu_start + i * self.nu_step, 12) for i in range(max(count, 0))]

    def to_dict(self):
        """Convert configuration to dictionary."""
        data = {key: getattr(self, key) for key in CONFIG_KEYS}
        data["captivity_grid"] = list(self.captivity_grid)
        data["trapped_grid"] = list(self.trapped_grid)
        return data

    @classmethod
    def from_dict(cls, data):
        """Create configuration from dictionary."""
        config = cls()
        for key in CONFIG_KEYS:
            if key in data:
                setattr(config, key, data[key])
        return config

    def config_hash(self):
        """First 16 hex digits of the sha256 of the canonical config JSON."""
        data = {k: v for k, v in self.to_dict().items() if k not in UNHASHED_KEYS}
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


CONFIG_KEYS = tuple(k for k in vars(RunConfig()) if k != "source_lines")
