"""Conformal Laplace-Beltrami basis pursuit for surface registration."""

import json

from ._lbbp import (
    Error,
    TriangleMesh,
    eigs,
    geodesic_distance,
    geodesic_errors,
    load_mesh,
    mass,
    sample,
    save_off,
    stiffness,
)
from ._lbbp import default_config as _default_config
from ._lbbp import register_meshes as _register_meshes

__all__ = [
    "Error",
    "TriangleMesh",
    "default_config",
    "eigs",
    "error_code",
    "geodesic_distance",
    "geodesic_errors",
    "load_mesh",
    "mass",
    "register",
    "sample",
    "save_off",
    "stiffness",
]


def default_config():
    """The solver defaults as a nested dict (same keys as the CLI config file)."""
    return json.loads(_default_config())


def register(source, target, landmarks, config=None):
    """Registers `source` onto `target`.

    `landmarks` is a sequence of (source vertex, target vertex) pairs and
    `config` a dict of overrides. Returns a dict with the correspondence,
    the conformal factor w, Psi* and the energy trace.
    """
    pairs = [(int(a), int(b)) for a, b in landmarks]
    return _register_meshes(source, target, pairs, json.dumps(config or {}))


def error_code(exc):
    """Name of the error category carried by an lbbp.Error."""
    return str(exc).split(":", 1)[0]
