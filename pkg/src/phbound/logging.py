import logging
import logging.config
from typing import ClassVar, Final

from phbound.config import config

CSI: Final = "\033["


class ColourFormatter(logging.Formatter):
    COLOURS: ClassVar[dict[int, str]] = {
        logging.DEBUG: f"{CSI}36m",
        logging.INFO: f"{CSI}1;37m",
        logging.WARNING: f"{CSI}93m",
        logging.ERROR: f"{CSI}31m",
        logging.CRITICAL: f"{CSI}1;31m",
    }
    RESET: ClassVar[str] = f"{CSI}0m"

    def format(self, record: logging.LogRecord) -> str:
        text = super().format(record)
        if colour := self.COLOURS.get(record.levelno):
            return f"{colour}{text}{self.RESET}"
        return text


def configure_logger() -> None:
    fmt = "%(levelname)8s | %(message)s"
    if config.log_level <= logging.DEBUG:
        fmt = "%(levelname)8s | %(name)s | %(message)s"

    logging.config.dictConfig(
        {
            "version": 1,
            "disable_existing_loggers": True,
            "formatters": {
                "standard": {
                    "()": ColourFormatter if config.use_colour else logging.Formatter,
                    "fmt": fmt,
                }
            },
            "handlers": {
                "console": {
                    "class": "logging.StreamHandler",
                    "formatter": "standard",
                },
            },
            "loggers": {
                "root": {"level": "NOTSET", "handlers": ["console"]},
                "phbound": {"level": config.log_level},
            },
        }
    )
