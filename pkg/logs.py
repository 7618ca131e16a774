"""
Console logging for the flight-control package.
"""
import logging

import termcolor

LEVEL_COLORS = {
    logging.DEBUG: "dark_grey",
    logging.INFO: "white",
    logging.WARNING: "yellow",
    logging.ERROR: "red",
    logging.CRITICAL: "red",
}


class ColorFormatter(logging.Formatter):
    """Colour the whole record by level."""

    def format(self, record: logging.LogRecord) -> str:
        message = super().format(record)
        return termcolor.colored(message, LEVEL_COLORS.get(record.levelno, "white"))


def setup_logging(verbose: bool = False) -> None:
    """
    Install the coloured console handler on the root logger.

    Args:
        verbose (bool): Log at DEBUG instead of INFO.

    Returns:
        None
    """
    handler = logging.StreamHandler()
    handler.setFormatter(ColorFormatter("%(asctime)s %(levelname)-7s %(name)s: %(message)s", "%H:%M:%S"))
    root = logging.getLogger()
    # Only an earlier coloured handler is replaced.
    root.handlers = [h for h in root.handlers if not isinstance(h.formatter, ColorFormatter)] + [handler]
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
