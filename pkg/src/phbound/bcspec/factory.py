import logging
from collections.abc import Callable, Mapping
from typing import Any, ClassVar

from phbound.bcspec.types import BuiltinMap
from phbound.exceptions import UnknownContractionError

logger = logging.getLogger(__name__)


class ContractionFactory:
    _maps: ClassVar[dict[str, Callable[..., BuiltinMap]]] = {}

    @classmethod
    def register(cls, name: str) -> Callable:
        def _wrapper(map_class: Callable[..., BuiltinMap]) -> Callable[..., BuiltinMap]:
            cls._maps[name] = map_class
            return map_class

        return _wrapper

    @classmethod
    def names(cls) -> list[str]:
        return list(cls._maps)

    @classmethod
    def create(cls, name: str, size: int, params: Mapping[str, Any]) -> BuiltinMap:
        if name not in cls._maps:
            raise UnknownContractionError(name, cls.names())
        logger.debug("Creating built-in boundary map %s with %s", name, dict(params))
        return cls._maps[name](size, **params)
