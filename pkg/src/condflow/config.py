"""Line-oriented ``key = value`` study configuration.

Grammar (bit-exact): one ``key = value`` pair per line; whitespace
around key and value is stripped; blank lines and lines starting with
``#`` are ignored; ``#`` does not start a comment elsewhere on a line.
Booleans are ``true``/``false`` (case-insensitive); the snapshot list is
comma-separated integers. Unknown keys are rejected.

An empty file yields the defaults, which reproduce the reference
experimental setup: 16x16 fine / 8x8 coarse grids, sigma2 = 1,
lx = 0.4, ly = 0.8, 20 KL modes, beta = 0.85, sigma_f2 = 1e-4,
sigma_c2 = 5e-3, 4 chains.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ArgumentError, ParseError

_MOD = "cli"


def _parse_bool(s):
    v = s.strip().lower()
    if v in ("true", "1", "yes"):
        return True
    if v in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_int_list(s):
    return tuple(int(t) for t in s.split(",") if t.strip())


@dataclass
class StudyConfig:
    fine_nx: int = 16
    fine_ny: int = 16
    coarse_nx: int = 8
    coarse_ny: int = 8
    sigma2: float = 1.0
    lx: float = 0.4
    ly: float = 0.8
    n_terms: int = 20
    energy_threshold: float = None  # overrides n_terms when set
    beta: float = 0.85
    sigma_f2: float = 1e-4
    sigma_c2: float = 5e-3
    chains: int = 4
    iterations: int = 20000
    burn_in: int = None  # default: 10% of iterations
    conditioned: bool = False
    single_component: bool = True
    store_projected: bool = False
    seed: int = 2023
    measurements: str = None  # packaged defaults when unset
    reference_field: str = None
    output_dir: str = "out"
    snapshots: tuple = (40, 5000, 20000)
    verbosity: int = 1

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ArgumentError(
                f"mcmc.beta must be in [0, 1], got {self.beta}", module=_MOD
            )
        for key in ("fine_nx", "fine_ny", "coarse_nx", "coarse_ny",
                    "n_terms", "chains", "iterations"):
            if getattr(self, key) < 1:
                raise ArgumentError(f"{key} must be positive", module=_MOD)
        if self.sigma2 <= 0 or self.lx <= 0 or self.ly <= 0:
            raise ArgumentError("kernel parameters must be positive",
                                module=_MOD)
        if self.sigma_f2 <= 0 or self.sigma_c2 <= 0:
            raise ArgumentError("precision parameters must be positive",
                                module=_MOD)
        if self.energy_threshold is not None and not (
            0.0 < self.energy_threshold <= 1.0
        ):
            raise ArgumentError(
                "kle.energy_threshold must be in (0, 1]", module=_MOD
            )
        if self.burn_in is not None and self.burn_in < 0:
            raise ArgumentError("mcmc.burn_in must be non-negative",
                                module=_MOD)

    @property
    def effective_burn_in(self):
        if self.burn_in is not None:
            return self.burn_in
        return self.iterations // 10

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


# config-file key -> (attribute, parser)
_KEYS = {
    "grid.fine_nx": ("fine_nx", int),
    "grid.fine_ny": ("fine_ny", int),
    "grid.coarse_nx": ("coarse_nx", int),
    "grid.coarse_ny": ("coarse_ny", int),
    "kernel.sigma2": ("sigma2", float),
    "kernel.lx": ("lx", float),
    "kernel.ly": ("ly", float),
    "kle.n_terms": ("n_terms", int),
    "kle.energy_threshold": ("energy_threshold", float),
    "mcmc.beta": ("beta", float),
    "mcmc.sigma_f2": ("sigma_f2", float),
    "mcmc.sigma_c2": ("sigma_c2", float),
    "mcmc.chains": ("chains", int),
    "mcmc.iterations": ("iterations", int),
    "mcmc.burn_in": ("burn_in", int),
    "mcmc.conditioned": ("conditioned", _parse_bool),
    "mcmc.single_component": ("single_component", _parse_bool),
    "mcmc.store_projected": ("store_projected", _parse_bool),
    "seed": ("seed", int),
    "paths.measurements": ("measurements", str),
    "paths.reference_field": ("reference_field", str),
    "paths.output_dir": ("output_dir", str),
    "output.snapshots": ("snapshots", _parse_int_list),
    "output.verbosity": ("verbosity", int),
}


def parse_config(path):
    """Read and validate a config file, applying defaults."""
    overrides = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ParseError(
                    f"{path}:{lineno}: expected 'key = value'", module=_MOD
                )
            key, _, value = stripped.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in _KEYS:
                raise ParseError(
                    f"{path}:{lineno}: unknown key '{key}'", module=_MOD
                )
            attr, parser = _KEYS[key]
            try:
                overrides[attr] = parser(value)
            except ValueError as exc:
                raise ParseError(
                    f"{path}:{lineno}: bad value for '{key}': {exc}",
                    module=_MOD,
                ) from exc
    return StudyConfig(**overrides)
