import pytest

from tests.acceptance import reproduce


@pytest.fixture(scope="class")
def out_root(tmp_path_factory):
    yield tmp_path_factory.mktemp("results")


@pytest.fixture(scope="class")
def fig2(out_root):
    reproduce("fig2", out_root)
    yield out_root


@pytest.fixture(scope="class")
def fig4(out_root):
    reproduce("fig4", out_root)
    yield out_root


@pytest.fixture(scope="class")
def fig5c(out_root):
    reproduce("fig5c", out_root)
    yield out_root


@pytest.fixture(scope="class")
def fig3(out_root):
    reproduce("fig3", out_root)
    yield out_root


@pytest.fixture(scope="class")
def fig11(out_root):
    reproduce("fig11", out_root)
    yield out_root


@pytest.fixture(scope="class")
def fig12(out_root):
    reproduce("fig12", out_root)
    yield out_root


@pytest.fixture(scope="class")
def fig13(out_root):
    reproduce("fig13", out_root)
    yield out_root


@pytest.fixture(scope="class")
def narrowing(out_root):
    reproduce("narrowing", out_root)
    yield out_root


@pytest.fixture(scope="class")
def coverage(out_root):
    reproduce("coverage", out_root)
    yield out_root
