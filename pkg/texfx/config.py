"""Configuration constants and parameter sets for texfx."""

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError

CONF_PATH = Path(__file__).parent.parent / "conf" / "params.json"

# Distance statistics
BIN_COUNT = 100
OUTLIER_FRACTION = 0.2
MIN_RADIUS = 0.5
BINARIZE_THRESHOLD = 0.5

# Matching
INIT_CANDIDATES = 20
SELF_MATCH_ITERATIONS = 10
EXHAUSTIVE_PIXEL_LIMIT = 64 * 64
STATISTICS_SEED = 0

# Analysis
PARTITION_MODES = ("random", "grid", "angle", "ring", "distance")
DEFAULT_PARTITIONS = 16
DEFAULT_PATCH_SIZES = (3, 5, 9, 15, 21)
MAX_PARTITION_SAMPLES = 2000
CLASSIFIER_L2 = 1e-4
CLASSIFIER_TOLERANCE = 1e-5
CLASSIFIER_EPOCHS = 500
CLASSIFIER_LEARNING_RATE = 1.0

SYNTHESIS_MODES = ("baseline", "full")
SUBCOMMANDS = ("transfer", "analyze", "batch")


@dataclass(frozen=True)
class SynthesisParams:
    """All synthesis tunables with their default values.

    patch_size is m, scales is L, scale_factor is s, lambda1..3 weight the
    distribution, psycho-visual and text-shape terms, omega is the scale
    filter threshold.
    """

    patch_size: int = 5
    scales: int = 5
    scale_factor: float = 2.0
    lambda1: float = 0.01
    lambda2: float = 0.005
    lambda3: float = 10.0
    omega: float = 0.3
    pyramid_depth: int = 10
    coarsest: int = 32
    iterations: int = 10
    seed: int = 0
    mode: str = "full"
    threshold: float = BINARIZE_THRESHOLD
    outlier_fraction: float = OUTLIER_FRACTION

    @property
    def half(self):
        return self.patch_size // 2

    def validate(self):
        """Raise ConfigError if any value is outside its documented range."""
        if self.patch_size < 3 or self.patch_size % 2 == 0:
            raise ConfigError(f"--patch-size must be odd and >= 3, got {self.patch_size}")
        for name in ("lambda1", "lambda2", "lambda3"):
            if getattr(self, name) < 0:
                raise ConfigError(f"--{name} must be >= 0, got {getattr(self, name)}")
        if self.pyramid_depth < 1:
            raise ConfigError(f"--pyramid-depth must be >= 1, got {self.pyramid_depth}")
        if not 1 <= self.scales <= self.pyramid_depth:
            raise ConfigError(
                f"--scales must be between 1 and --pyramid-depth ({self.pyramid_depth}), got {self.scales}"
            )
        if self.scale_factor <= 1:
            raise ConfigError(f"scale_factor must be > 1, got {self.scale_factor}")
        if self.omega <= 0:
            raise ConfigError(f"--omega must be > 0, got {self.omega}")
        if self.coarsest < 1:
            raise ConfigError(f"--coarsest must be >= 1, got {self.coarsest}")
        if self.iterations < 1:
            raise ConfigError(f"--iterations must be >= 1, got {self.iterations}")
        if self.mode not in SYNTHESIS_MODES:
            raise ConfigError(f"--mode must be one of {', '.join(SYNTHESIS_MODES)}, got {self.mode}")
        if not 0 < self.threshold < 1:
            raise ConfigError(f"--threshold must be in (0, 1), got {self.threshold}")
        if not 0 <= self.outlier_fraction < 1:
            raise ConfigError(f"--outlier-fraction must be in [0, 1), got {self.outlier_fraction}")
        return self

    def with_overrides(self, **overrides):
        """Return a copy with every non-None override applied and validated."""
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"Unknown parameter(s): {', '.join(sorted(unknown))}")
        changes = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **changes).validate()

    def to_dict(self):
        return asdict(self)


def load_params(path=None):
    """
    Load parameter overrides from a JSON file on top of the defaults.

    With no path, conf/params.json is used when present. Returns a validated
    SynthesisParams.
    """
    if path is None:
        if not CONF_PATH.exists():
            return SynthesisParams().validate()
        path = CONF_PATH

    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Parameter file not found: {path}")

    try:
        with open(path, encoding="utf-8") as f:
            overrides = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Parameter file is not valid JSON: {path} ({e})")

    if not isinstance(overrides, dict):
        raise ConfigError(f"Parameter file must hold a JSON object: {path}")

    return SynthesisParams().with_overrides(**overrides)


@dataclass
class JobConfig:
    """Everything one CLI invocation needs."""

    subcommand: str
    source_text: Path = None
    source_style: Path = None
    target_text: Path = None
    target_dir: Path = None
    out: Path = None
    report: Path = None
    params: SynthesisParams = field(default_factory=SynthesisParams)
    verbose: bool = False
    dump_debug: bool = False
    threads: int = None
    modes: tuple = PARTITION_MODES
    partitions: int = DEFAULT_PARTITIONS
    patch_sizes: tuple = DEFAULT_PATCH_SIZES
    samples: int = MAX_PARTITION_SAMPLES

    def validate(self):
        """Check the paths each subcommand requires; raise ConfigError naming the flag."""
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"Unknown subcommand: {self.subcommand}")

        required = {
            "transfer": ("source_text", "source_style", "target_text", "out"),
            "batch": ("source_text", "source_style", "target_dir", "out"),
            "analyze": ("source_text", "source_style", "report"),
        }[self.subcommand]
        for name in required:
            if getattr(self, name) is None:
                raise ConfigError(f"Missing option '--{name.replace('_', '-')}'")

        for mode in self.modes:
            if mode not in PARTITION_MODES:
                raise ConfigError(f"--modes: unknown partition mode '{mode}'")
        if self.partitions < 2:
            raise ConfigError(f"--partitions must be >= 2, got {self.partitions}")
        for size in self.patch_sizes:
            if size < 3 or size % 2 == 0:
                raise ConfigError(f"--patch-sizes: sizes must be odd and >= 3, got {size}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {self.threads}")

        self.params.validate()
        return self
