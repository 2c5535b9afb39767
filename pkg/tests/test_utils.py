import logging

from utils.errors import FormulaSyntaxError, ProgramSyntaxError, SosatError
from utils.logger import set_level, setup_logger


def test_logger_writes_to_stderr(capsys):
    logger = setup_logger("test-stderr", logging.INFO)
    logger.info("hello")
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "hello" in captured.err
    assert "test-stderr" in captured.err


def test_setup_is_idempotent():
    setup_logger("test-twice")
    logger = setup_logger("test-twice")
    assert len(logger.handlers) == 1
    assert not logger.propagate


def test_set_level_reaches_existing_loggers():
    logger = setup_logger("test-level", logging.INFO)
    set_level(logging.DEBUG)
    try:
        assert logger.level == logging.DEBUG
        assert logger.handlers[0].level == logging.DEBUG
    finally:
        set_level(logging.INFO)


def test_positioned_errors_carry_their_location():
    e = FormulaSyntaxError("Unbalanced parenthesis", 3, 7)
    assert (e.line, e.column) == (3, 7)
    assert str(e) == "Unbalanced parenthesis at line 3, column 7"
    assert str(ProgramSyntaxError("Bad operand")) == "Bad operand"
    assert isinstance(e, SosatError)
