import logging

import termcolor

from logs import ColorFormatter, setup_logging


def test_records_coloured_by_level() -> None:
    formatter = ColorFormatter("%(message)s")
    record = logging.LogRecord("x", logging.WARNING, __file__, 1, "careful", None, None)
    assert formatter.format(record) == termcolor.colored("careful", "yellow")


def test_setup_is_idempotent() -> None:
    setup_logging(verbose=True)
    setup_logging(verbose=False)
    root = logging.getLogger()
    coloured = [h for h in root.handlers if isinstance(h.formatter, ColorFormatter)]
    assert len(coloured) == 1
    assert root.level == logging.INFO
