import pytest

from jointprop import kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # JIT compilation must not land inside a timed test section.
    kernels.warmup()
