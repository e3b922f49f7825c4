"""Pytest fixtures shared by the whole suite."""

from __future__ import annotations

import pytest

import nets


@pytest.fixture
def chain3():
    return nets.chain3()


@pytest.fixture
def self_loop():
    return nets.self_loop()


@pytest.fixture
def cycle3():
    return nets.cycle3()


@pytest.fixture
def sr_net():
    return nets.sr_net()


@pytest.fixture
def s_net():
    return nets.s_net()


@pytest.fixture
def ff_chain():
    return nets.ff_chain()


@pytest.fixture(scope="session")
def corpus():
    return nets.property_corpus()


@pytest.fixture
def write_net(tmp_path):
    """Write a network to a temp file in text form, return the path."""
    from rollout_lab import network_to_text

    def write(net, name="net.txt"):
        path = tmp_path / name
        path.write_text(network_to_text(net), encoding="utf-8")
        return path

    return write
