import json

import pytest

from modules.YA_Common.utils.errors import (
    USAGE_CODES,
    ConfigException,
    LabException,
    TrajectoryException,
    UsageException,
)
from modules.YA_Common.utils.middleware import (
    EXIT_FAILURE,
    EXIT_OK,
    EXIT_USAGE,
    exception_handler,
    exit_code_for,
)


def test_error_record_shape():
    record = ConfigException("坏配置", {"key": "seed"}).to_error().to_dict()
    assert record == {"error": {"code": "CONFIG_ERROR", "message": "坏配置", "details": {"key": "seed"}}}
    assert isinstance(UsageException("x"), LabException)


@pytest.mark.parametrize(
    "exc, code",
    [
        (UsageException("u"), EXIT_USAGE),
        (ConfigException("c"), EXIT_USAGE),
        (TrajectoryException("t"), EXIT_FAILURE),
    ],
)
def test_exit_codes(exc, code):
    assert exit_code_for(exc) == code
    assert (exc.code in USAGE_CODES) == (code == EXIT_USAGE)


def test_exception_handler_writes_json(capsys):
    @exception_handler
    def fails():
        raise TrajectoryException("没有数据行", {"rows": 0})

    assert fails() == EXIT_FAILURE
    record = json.loads(capsys.readouterr().out)
    assert record["error"]["code"] == "TRAJECTORY_ERROR"


def test_exception_handler_wraps_unknown_errors(capsys):
    @exception_handler
    def boom():
        raise RuntimeError("意外")

    assert boom() == EXIT_FAILURE
    assert json.loads(capsys.readouterr().out)["error"]["code"] == "INTERNAL_ERROR"


def test_exception_handler_success():
    assert exception_handler(lambda: None)() == EXIT_OK
    assert exception_handler(lambda: EXIT_USAGE)() == EXIT_USAGE
