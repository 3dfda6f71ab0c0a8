"""Logger wrapper, level names and environment configuration."""

import logging

import pytest

from src.utils.logger import ENV_LEVEL, configure_logging, get_logger, level_from_name


@pytest.fixture
def root_level():
    root = logging.getLogger("saddlekit")
    level = root.level
    yield root
    root.setLevel(level)


class TestLevels:

    @pytest.mark.parametrize("name, level", [
        ("error", logging.ERROR),
        ("WARN", logging.WARNING),
        (" info ", logging.INFO),
        ("debug", logging.DEBUG),
    ])
    def test_names(self, name, level):
        assert level_from_name(name) == level

    def test_unknown(self):
        with pytest.raises(ValueError):
            level_from_name("loud")


class TestConfigure:

    def test_explicit_level(self, root_level):
        configure_logging("debug")
        assert root_level.level == logging.DEBUG

    def test_environment(self, root_level, monkeypatch):
        monkeypatch.setenv(ENV_LEVEL, "error")
        configure_logging()
        assert root_level.level == logging.ERROR

    def test_default(self, root_level, monkeypatch):
        monkeypatch.delenv(ENV_LEVEL, raising=False)
        configure_logging()
        assert root_level.level == logging.WARNING

    def test_bad_environment_value(self, root_level, monkeypatch):
        monkeypatch.setenv(ENV_LEVEL, "chatty")
        configure_logging()
        assert root_level.level == logging.WARNING


class TestLogger:

    def test_shared_instances(self):
        assert get_logger("tests") is get_logger("tests")

    def test_signal(self):
        logger = get_logger("tests.signal")
        seen = []
        logger.log_added.connect(lambda level, module, message: seen.append((level, module, message)))
        logger.info("hello")
        logger.warning("careful")
        assert seen == [("info", "tests.signal", "hello"), ("warning", "tests.signal", "careful")]

    def test_debug_flag(self, root_level):
        configure_logging("debug")
        assert get_logger("tests").is_debug()
        configure_logging("error")
        assert not get_logger("tests").is_debug()
