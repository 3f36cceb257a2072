import logging

from app.core.config import config


def setup_logging(level: str | None = None):
    if level is None:
        level = "DEBUG" if config.debug else config.log_level
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s [%(name)s] %(message)s"
    )
