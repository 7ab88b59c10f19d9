"""Python access to the pfem finite element core."""

import json as _json

from ._core import catalogue as _catalogue
from ._core import (
    Mesh,
    OperatorPair,
    assemble,
    build_polygon_mesh,
    domain_metrics,
    eigenvalues,
    mesh_quality,
    read_mesh,
    refine_uniform,
    run,
    write_mesh,
)

__all__ = [
    "Mesh",
    "OperatorPair",
    "assemble",
    "build_polygon_mesh",
    "catalogue",
    "domain_metrics",
    "eigenvalues",
    "mesh_quality",
    "read_mesh",
    "refine_uniform",
    "run",
    "run_report",
    "write_mesh",
]


def run_report(experiment, config=None):
    """Runs a sweep and returns the parsed report."""
    return _json.loads(run(experiment, _json.dumps(config or {})))


def catalogue():
    """Shipped coefficient samples with their certificates."""
    return _json.loads(_catalogue())
