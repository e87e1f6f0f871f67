"""Named fixture spaces shipped with the package."""

import json
from importlib import resources

from .metric import MetricSpace, parse_metric_space

FIXTURE_NAMES = ("path3", "square", "line")


def load_fixture(name: str) -> MetricSpace:
    text = resources.files("scottrank").joinpath("data").joinpath(f"{name}.json").read_text()
    return parse_metric_space(text)


SPACE_PATH3 = load_fixture("path3")
SPACE_SQUARE = load_fixture("square")
SPACE_LINE = load_fixture("line")

FIXTURES = {"path3": SPACE_PATH3, "square": SPACE_SQUARE, "line": SPACE_LINE}
