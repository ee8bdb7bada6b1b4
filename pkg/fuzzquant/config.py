import logging
from pathlib import Path
from typing import Any, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger("fuzzquant.config")

CFIS_CLUSTERS = 3

# keys accepted at the top level of a config file that belong to PupilOptions
_PUPIL_KEYS = {"min_area", "min_area_fraction", "disc_likeness"}


class QuantizeOptions(BaseModel):
    """Lloyd iteration settings.

    `init="optimal"` seeds from the exact 1-D optimum over the distinct
    sample values, which Lloyd then confirms as a fixed point. `init="quantile"`
    seeds at the (j - 0.5)/k quantiles of the sorted data; it is also the
    fallback when there are too many distinct values for the exact seed.
    """

    model_config = ConfigDict(frozen=True)

    max_iter: int = Field(200, gt=0)
    init: Literal["quantile", "optimal"] = "optimal"


class PupilOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    min_area_fraction: float = Field(0.0005, gt=0, lt=1)
    min_area: Optional[int] = Field(None, gt=0)
    disc_likeness: float = Field(0.6, gt=0, le=1)
    quantize: QuantizeOptions = QuantizeOptions()

    def min_area_for(self, width: int, height: int) -> float:
        if self.min_area is not None:
            return float(self.min_area)
        return self.min_area_fraction * width * height


class CfisConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    # cluster count of the quantize command; segmentation always uses 3
    k: int = Field(CFIS_CLUSTERS, ge=1)
    rui_width: int = Field(512, ge=2)
    # profiles need at least 3 rows
    max_radius: Optional[int] = Field(None, ge=3)
    pupil: PupilOptions = PupilOptions()
    quantize: QuantizeOptions = QuantizeOptions()

    # True suppresses the human-readable summary on stderr
    json_output: bool = False
    overlay: Optional[Path] = None
    dump: Optional[Path] = None


def load_config(path: Optional[Union[str, Path]] = None, **overrides: Any) -> CfisConfig:
    """Load a CfisConfig from a YAML file and apply overrides on top.

    Overrides whose value is None are ignored, so argparse namespaces can be
    passed straight through. Pupil keys may be given flat.
    """
    data: dict[str, Any] = {}
    if path is not None:
        config_path = Path(path)
        if not config_path.exists():
            raise FileNotFoundError(f"Config file not found: {config_path}")
        with open(config_path, "r") as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ValueError(f"Config file {config_path} must contain a mapping")
        logger.debug(f"Loaded config from {config_path}: {data}")

    pupil = dict(data.pop("pupil", None) or {})
    for key in list(data):
        if key in _PUPIL_KEYS:
            pupil[key] = data.pop(key)

    for key, value in overrides.items():
        if value is None:
            continue
        if key in _PUPIL_KEYS:
            pupil[key] = value
        else:
            data[key] = value

    # the pupil finder quantizes with the top-level options unless it has its own
    if "quantize" in data and "quantize" not in pupil:
        pupil["quantize"] = data["quantize"]
    if pupil:
        data["pupil"] = pupil
    return CfisConfig.model_validate(data)
