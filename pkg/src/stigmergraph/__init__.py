"""Stigmergic ant-colony simulation toolkit.

Ant populations coordinate exclusively through pheromone, resources, and
vector marks left on a shared environment graph; the package reads solutions
(paths, compatible alignment blocks, sense activations) off that environment
instead of optimizing an objective function.
"""

from ._kernels import backend_name
from .graph import EnvironmentGraph, make_random_tree, make_torus

__all__ = [
    "EnvironmentGraph",
    "make_torus",
    "make_random_tree",
    "backend_name",
]

__version__ = "0.1.0"
