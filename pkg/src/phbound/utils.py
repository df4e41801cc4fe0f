import logging
from collections.abc import Mapping
from typing import Any

import numpy as np

from phbound.config import config
from phbound.const import ABS_FLOOR

logger = logging.getLogger(__name__)


def scaled_tol(rtol: float, scale: float) -> float:
    return max(rtol * scale, ABS_FLOOR)


def raise_or_warn(ex: Exception) -> None:
    if config.strict:
        raise ex
    logger.warning(ex)


def make_rng(seed: int | None = None) -> np.random.Generator:
    return np.random.default_rng(config.seed if seed is None else seed)


def spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """One independent generator per sample index.

    Results do not depend on how the sample loop is chunked.
    """
    seqs = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(s) for s in seqs]


def tolist(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Mapping):
        return {k: tolist(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [tolist(v) for v in value]
    return value


def boldify(text: str) -> str:
    return f"\033[1m{text}\033[0m"
