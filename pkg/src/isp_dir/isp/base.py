"""Image containers and ISP parameter types shared by all pipeline stages.

Pixel arrays are float64 in [0, 1]. Containers clamp on construction, so
every value that crosses a stage boundary is finite and in range.
"""

from dataclasses import asdict, dataclass
from typing import Any

import numpy as np
from numpy.typing import NDArray

from ..errors import DimensionError, ParameterError

FloatArray = NDArray[np.float64]

CFA_RGGB = "RGGB"

# Channel sampled at each site of the 2x2 RGGB tile, indexed [row % 2][col % 2]
RGGB_CHANNELS = ((0, 1), (1, 2))

GAMMA_RANGE = (1.8, 2.6)
WB_GAIN_RANGE = (0.5, 2.0)
CCM_ROW_SUM_TOL = 1e-6


def _as_finite(pixels: Any, name: str) -> FloatArray:
    array = np.asarray(pixels, dtype=np.float64)
    if not np.all(np.isfinite(array)):
        raise ParameterError(f"{name} contains non-finite values")
    return np.clip(array, 0.0, 1.0)


@dataclass(eq=False)
class ImageRGB:
    """An H×W×3 RGB image with values in [0, 1]."""

    pixels: FloatArray

    def __post_init__(self) -> None:
        array = np.asarray(self.pixels)
        if array.ndim != 3 or array.shape[2] != 3:
            raise DimensionError(f"ImageRGB expects H×W×3 pixels, got {array.shape}")
        if array.shape[0] < 1 or array.shape[1] < 1:
            raise DimensionError(f"ImageRGB must be non-empty, got {array.shape}")
        self.pixels = _as_finite(array, "ImageRGB")

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @classmethod
    def uniform(cls, height: int, width: int, value: float | tuple[float, float, float]) -> "ImageRGB":
        """Build a constant image."""
        pixels = np.empty((height, width, 3), dtype=np.float64)
        pixels[...] = value
        return cls(pixels)


@dataclass(eq=False)
class BayerRaw:
    """An H×W single-channel RAW mosaic sampled through an RGGB filter."""

    pixels: FloatArray
    cfa: str = CFA_RGGB

    def __post_init__(self) -> None:
        array = np.asarray(self.pixels)
        if array.ndim != 2:
            raise DimensionError(f"BayerRaw expects H×W pixels, got {array.shape}")
        if array.shape[0] % 2 or array.shape[1] % 2:
            raise DimensionError(
                f"BayerRaw dimensions must be even, got {array.shape[0]}×{array.shape[1]}"
            )
        if self.cfa != CFA_RGGB:
            raise ParameterError(f"Only the {CFA_RGGB} CFA is supported, got {self.cfa}")
        self.pixels = _as_finite(array, "BayerRaw")

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])


@dataclass(frozen=True)
class IspParams:
    """One sampled ISP configuration.

    Construction only enforces what every stage needs (positive gains and
    gamma, a 3×3 CCM, non-negative noise, qf in [1, 100]); ``validate()``
    additionally checks the ranges a sampled configuration must satisfy.
    """

    wb_gains: tuple[float, float, float] = (1.0, 1.0, 1.0)
    ccm: tuple[tuple[float, float, float], ...] = (
        (1.0, 0.0, 0.0),
        (0.0, 1.0, 0.0),
        (0.0, 0.0, 1.0),
    )
    gamma: float = 1.0
    gauss_sigma: float = 0.0
    poisson_lambda: float = 0.0
    jpeg_qf: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.wb_gains) != 3 or any(g <= 0 for g in self.wb_gains):
            raise ParameterError(f"wb_gains must be 3 positive values, got {self.wb_gains}")
        if np.asarray(self.ccm).shape != (3, 3):
            raise DimensionError(f"ccm must be 3×3, got shape {np.asarray(self.ccm).shape}")
        if self.gamma <= 0:
            raise ParameterError(f"gamma must be positive, got {self.gamma}")
        if self.gauss_sigma < 0 or self.poisson_lambda < 0:
            raise ParameterError("noise magnitudes must be non-negative")
        if not 1 <= self.jpeg_qf <= 100:
            raise ParameterError(f"jpeg_qf must be in [1, 100], got {self.jpeg_qf}")

    @property
    def ccm_matrix(self) -> FloatArray:
        return np.asarray(self.ccm, dtype=np.float64)

    def validate(self) -> "IspParams":
        """Check the invariants of a sampled configuration.

        Returns:
            self, for chaining

        Raises:
            ParameterError: If gains, gamma or CCM row sums are out of range
        """
        lo, hi = WB_GAIN_RANGE
        if any(not lo <= g <= hi for g in self.wb_gains):
            raise ParameterError(f"wb_gains must lie in {WB_GAIN_RANGE}, got {self.wb_gains}")
        lo, hi = GAMMA_RANGE
        if not lo <= self.gamma <= hi:
            raise ParameterError(f"gamma must lie in {GAMMA_RANGE}, got {self.gamma}")
        row_sums = self.ccm_matrix.sum(axis=1)
        if np.max(np.abs(row_sums - 1.0)) > CCM_ROW_SUM_TOL:
            raise ParameterError(f"ccm rows must sum to 1, got {row_sums.tolist()}")
        return self

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["wb_gains"] = list(self.wb_gains)
        data["ccm"] = [list(row) for row in self.ccm]
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "IspParams":
        return cls(
            wb_gains=tuple(float(g) for g in data["wb_gains"]),  # type: ignore[arg-type]
            ccm=tuple(tuple(float(v) for v in row) for row in data["ccm"]),  # type: ignore[arg-type]
            gamma=float(data["gamma"]),
            gauss_sigma=float(data["gauss_sigma"]),
            poisson_lambda=float(data["poisson_lambda"]),
            jpeg_qf=int(data["jpeg_qf"]),
            seed=int(data["seed"]),
        )


IDENTITY_PARAMS = IspParams()

# Fixed reference camera used to unprocess clean RGB into RAW
CANONICAL_PARAMS = IspParams(gamma=2.2)


Range = tuple[float, float]


@dataclass(frozen=True)
class DegradationProfile:
    """Uniform sampling ranges for every IspParams field."""

    name: str
    wb_gain: Range = (0.8, 1.25)
    ccm_offdiag: Range = (-0.1, 0.1)
    gamma: Range = GAMMA_RANGE
    gauss_sigma: Range = (0.05, 0.10)
    poisson_lambda: Range = (0.0, 0.0)
    jpeg_qf: tuple[int, int] = (10, 30)

    def __post_init__(self) -> None:
        for key in ("wb_gain", "ccm_offdiag", "gamma", "gauss_sigma", "poisson_lambda", "jpeg_qf"):
            lo, hi = getattr(self, key)
            if lo > hi:
                raise ParameterError(f"profile {self.name}: {key} min {lo} > max {hi}")
        if self.wb_gain[0] < WB_GAIN_RANGE[0] or self.wb_gain[1] > WB_GAIN_RANGE[1]:
            raise ParameterError(f"profile {self.name}: wb_gain outside {WB_GAIN_RANGE}")
        if self.gamma[0] < GAMMA_RANGE[0] or self.gamma[1] > GAMMA_RANGE[1]:
            raise ParameterError(f"profile {self.name}: gamma outside {GAMMA_RANGE}")
        if self.gauss_sigma[0] < 0 or self.poisson_lambda[0] < 0:
            raise ParameterError(f"profile {self.name}: noise ranges must be non-negative")
        if self.jpeg_qf[0] < 1 or self.jpeg_qf[1] > 100:
            raise ParameterError(f"profile {self.name}: jpeg_qf outside [1, 100]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "wb_gain": list(self.wb_gain),
            "ccm_offdiag": list(self.ccm_offdiag),
            "gamma": list(self.gamma),
            "gauss_sigma": list(self.gauss_sigma),
            "poisson_lambda": list(self.poisson_lambda),
            "jpeg_qf": list(self.jpeg_qf),
        }


PROFILES: dict[str, DegradationProfile] = {
    "default": DegradationProfile(
        name="default",
        gauss_sigma=(0.05, 0.10),
        poisson_lambda=(0.0, 0.0),
        jpeg_qf=(10, 30),
    ),
    "dark": DegradationProfile(
        name="dark",
        gauss_sigma=(0.15, 0.35),
        poisson_lambda=(0.02, 0.04),
        jpeg_qf=(50, 95),
    ),
    "mild": DegradationProfile(
        name="mild",
        gauss_sigma=(0.01, 0.03),
        poisson_lambda=(0.0, 0.0),
        jpeg_qf=(60, 90),
    ),
}


def get_profile(name: str) -> DegradationProfile:
    """Look up a named degradation profile.

    Raises:
        ParameterError: If the name is unknown
    """
    try:
        return PROFILES[name]
    except KeyError:
        raise ParameterError(f"Unknown degradation profile {name!r}; choose from {sorted(PROFILES)}")
