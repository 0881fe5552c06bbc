"""Python veneer over the native qrlab core.

The heavy lifting happens in the ``_qrlab`` extension module; this package
converts between Python dicts and the JSON strings the core speaks.
"""

import json as _json

try:  # installed wheel layout: the extension lives inside the package
    from ._qrlab import (
        chordal_distance,
        evaluate_map_json as _evaluate_map_json,
        experiment_kinds,
        run_experiment_json as _run_experiment_json,
        zoo_json as _zoo_json,
    )
except ImportError:  # build-tree layout: the extension sits on sys.path
    from _qrlab import (
        chordal_distance,
        evaluate_map_json as _evaluate_map_json,
        experiment_kinds,
        run_experiment_json as _run_experiment_json,
        zoo_json as _zoo_json,
    )

__all__ = [
    "chordal_distance",
    "evaluate_map",
    "experiment_kinds",
    "list_zoo",
    "run_experiment",
]


def run_experiment(kind, config):
    """Run one experiment and return ``{"report":…, "csv":…, "plots":…}``.

    ``config`` is a plain dict matching the CLI's JSON config schema.  A
    numerical failure does not raise: the returned report carries
    ``status == "failed"`` plus partial results, exactly like the CLI's
    exit-code-3 path.  Invalid configs raise ``ValueError``.
    """
    return _json.loads(_run_experiment_json(kind, _json.dumps(config)))


def list_zoo():
    """Return the specimen catalog as a list of dicts."""
    return _json.loads(_zoo_json())


def evaluate_map(descriptor, x):
    """Evaluate a zoo map at the finite point ``x``.

    Returns a tuple of coordinates, or ``None`` when the value is infinite.
    """
    out = _evaluate_map_json(_json.dumps(descriptor), [float(c) for c in x])
    return None if out is None else tuple(out)
