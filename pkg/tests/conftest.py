import pytest

from evflow.ingest import bundled_manifest_path, load_network

import netbuild


@pytest.fixture(scope="session")
def bundled_network():
    return load_network(bundled_manifest_path())


@pytest.fixture(scope="session")
def tiny_network():
    return netbuild.tiny_network()


@pytest.fixture(scope="session")
def line_network():
    return netbuild.line_network()


@pytest.fixture(scope="session")
def sea_network():
    return netbuild.sea_network()
