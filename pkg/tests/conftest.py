import pytest

from bhtlab import builtin_curve


@pytest.fixture(scope="session")
def curve_t2():
    return builtin_curve("poly: t^2")


@pytest.fixture(scope="session")
def curve_t3():
    return builtin_curve("poly: t^3")


@pytest.fixture(scope="session")
def curve_mixed():
    return builtin_curve("poly: t^2 + t^3")


@pytest.fixture(scope="session")
def curve_pow():
    return builtin_curve("pow: 1.5")


@pytest.fixture(scope="session")
def curve_powlog():
    return builtin_curve("powlog: a=2 b=1")
