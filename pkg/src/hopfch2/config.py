"""Tolerances, gate thresholds and run configuration.

Every numerical tolerance used by the library lives here so that a run can
be reproduced from a single configuration object. Configuration files are
JSON; the CLI layers command-line flags over a file, which itself layers
over the defaults below.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

CONFIG_ENV_VAR = "HOPFCH2_CONFIG"

# Reference finite-difference step; FD-limited gates are quoted at this step.
H_REF = 1e-4


class PreconditionError(ValueError):
    """Input violates a documented precondition."""


class DegenerateError(PreconditionError):
    """Input is geometrically degenerate (rank loss, coincident lines)."""


class CorruptDataError(ValueError):
    """Data that should satisfy an invariant by construction does not."""


@dataclass(frozen=True)
class Tolerances:
    tol_frame: float = 1e-10
    tol_sphere: float = 1e-10
    tol_null: float = 1e-10
    tol_algebra: float = 1e-8
    tol_contact: float = 1e-8
    tol_lift: float = 1e-8
    tol_recon: float = 1e-9
    tol_coincide: float = 1e-8
    speed_min: float = 1e-6
    sing_min: float = 1e-8
    cond_max: float = 1e8
    h: float = H_REF


# Gate name -> (threshold, scales with h^2)
DEFAULT_GATES: dict[str, tuple[float, bool]] = {
    "eta4": (1e-6, True),
    "hopf_w43": (1e-6, True),
    "symmetry": (1e-6, True),
    "w_row": (1e-6, True),
    "alpha_std": (1e-5, True),
    "alpha_mean": (1e-5, True),
    "hopf_identity": (1e-5, True),
    "split_signature": (1e-5, True),
    "kappa_plus": (1e-5, True),
    "kappa_minus": (1e-5, True),
    "char_null": (1e-6, True),
    "char_angle_plus": (1e-4, True),
    "char_angle_minus": (1e-4, True),
    "sigma_roundtrip": (1e-9, False),
    "sigma_defect": (1e-8, True),
    "sigma_variance": (1e-12, False),
    "frame_validity": (1e-10, False),
    "pseudo_einstein_w": (1e-5, True),
    "pseudo_einstein_perp": (1e-5, True),
}

DEFAULT_ORACLE_GATES: dict[str, tuple[float, bool]] = {
    "spectrum": (1e-4, True),
    "hopf_identity": (1e-4, True),
    "borderline": (1e-4, True),
    "eta4": (1e-6, True),
    "kappa": (1e-4, True),
    "sigma_variance": (1e-8, False),
}


def gate_threshold(base: float, scales: bool, h: float) -> float:
    """Threshold of an FD-limited gate at step ``h``.

    Thresholds grow with (h / H_REF)**2 for coarser steps and are never
    tightened for finer ones, where rounding dominates truncation.
    """
    if not scales:
        return base
    return base * max(1.0, (h / H_REF) ** 2)


@dataclass
class RunConfig:
    tolerances: Tolerances = field(default_factory=Tolerances)
    gates: dict[str, float] = field(default_factory=dict)
    grid: tuple[int, int, int] = (16, 16, 8)
    tau_range: tuple[float, float] = (-1.0, 1.0)
    threads: int = 1
    output_dir: str = "."
    seed: int = 0

    def __post_init__(self) -> None:
        for name, value in dataclasses.asdict(self.tolerances).items():
            if not value > 0:
                raise PreconditionError(f"tolerance {name} must be positive, got {value}")
        if any(n < 4 for n in self.grid):
            raise PreconditionError(f"grid dimensions must be >= 4, got {self.grid}")
        if self.threads < 1:
            raise PreconditionError("threads must be >= 1")
        for name, value in self.gates.items():
            if not value > 0:
                raise PreconditionError(f"gate threshold {name} must be positive")

    def gate(self, name: str, table: dict[str, tuple[float, bool]] = DEFAULT_GATES) -> float:
        base, scales = table[name]
        base = self.gates.get(name, base)
        return gate_threshold(base, scales, self.tolerances.h)

    def updated(self, **overrides: Any) -> "RunConfig":
        """Copy with ``overrides`` applied; ``None`` values are ignored.

        Keys matching a field of :class:`Tolerances` update the tolerances.
        """
        overrides = {k: v for k, v in overrides.items() if v is not None}
        tol_fields = {f.name for f in dataclasses.fields(Tolerances)}
        tol = {k: overrides.pop(k) for k in list(overrides) if k in tol_fields}
        tolerances = dataclasses.replace(self.tolerances, **tol)
        gates = dict(self.gates)
        gates.update(overrides.pop("gates", {}))
        return dataclasses.replace(self, tolerances=tolerances, gates=gates, **overrides)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["grid"] = list(self.grid)
        d["tau_range"] = list(self.tau_range)
        return d


def load_config(path: str | os.PathLike | None = None) -> RunConfig:
    """Load a JSON run configuration.

    With ``path=None`` the file named by ``$HOPFCH2_CONFIG`` is used if set,
    otherwise the defaults are returned.
    """
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
        if not path:
            return RunConfig()
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise PreconditionError(f"config {path} is not valid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise PreconditionError(f"config {path} must hold a JSON object")
    raw = dict(raw)
    tol = raw.pop("tolerances", {})
    unknown = set(raw) - {f.name for f in dataclasses.fields(RunConfig)}
    if unknown:
        raise PreconditionError(f"unknown config keys: {sorted(unknown)}")
    if "grid" in raw:
        raw["grid"] = tuple(int(n) for n in raw["grid"])
    if "tau_range" in raw:
        raw["tau_range"] = tuple(float(x) for x in raw["tau_range"])
    try:
        tolerances = Tolerances(**tol)
    except TypeError as exc:
        raise PreconditionError(f"config {path}: {exc}") from None
    return RunConfig(tolerances=tolerances, **raw)


DEFAULT_TOLERANCES = Tolerances()
