"""Shipped fixture graphs: self-contained experiment inputs.

``table3_pair`` is the calibrated two-op co-run micro-benchmark; the
``*_like`` graphs are synthetic one-training-step dataflows whose op mix
and repetition structure follow the four reference model families.
"""

from importlib import resources

from ..graph import DataflowGraph, parse_graph

FIXTURES = ("table3_pair", "resnet_like", "dcgan_like", "inception_like", "lstm_like")


def fixture_text(name: str) -> str:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    return resources.files(__package__).joinpath(f"{name}.json").read_text("utf-8")


def load_fixture(name: str) -> DataflowGraph:
    return parse_graph(fixture_text(name))
