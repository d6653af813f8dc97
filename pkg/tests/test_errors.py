import pytest

from signassess.errors import (
    AssessError,
    ConfigError,
    DataError,
    IoError,
    NumericError,
)


def test_exit_codes():
    assert AssessError.exit_code == 1
    assert ConfigError.exit_code == 2
    assert DataError.exit_code == 2
    assert NumericError.exit_code == 3
    assert IoError.exit_code == 4


def test_hierarchy():
    for cls in (ConfigError, DataError, NumericError, IoError):
        assert issubclass(cls, AssessError)
    with pytest.raises(AssessError):
        raise DataError("caught by the base class")
