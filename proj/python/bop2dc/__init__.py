"""Python front end for the bop2dc engine.

Configs may be given as a dict, a JSON string, or a path to a JSON file.
Results come back as the same JSON documents the command-line tool writes.
"""

import json
import os

from . import _bop2dc
from ._bop2dc import (
    __version__,
    graduate_cutoff,
    interim_cutoffs,
    tail_prob_binary,
    tail_prob_categorical,
    tail_prob_continuous,
    tail_prob_difference_binary,
    tail_prob_tte,
)

__all__ = [
    "validate",
    "calibrate",
    "simulate",
    "decision_table",
    "graduate_cutoff",
    "interim_cutoffs",
    "tail_prob_binary",
    "tail_prob_categorical",
    "tail_prob_continuous",
    "tail_prob_difference_binary",
    "tail_prob_tte",
]


def _text(config, design=None):
    if isinstance(config, os.PathLike) or (isinstance(config, str) and not config.lstrip().startswith("{")):
        with open(config, encoding="utf-8") as f:
            config = f.read()
    if design is not None:
        doc = json.loads(config) if isinstance(config, str) else dict(config)
        # a calibration result carries the chosen design under "design"
        doc["design"] = design.get("design", design)
        return json.dumps(doc)
    return config if isinstance(config, str) else json.dumps(config)


def validate(config):
    """Validation report: {"valid": bool, "errors": [...], "config": echo, ...}."""
    return json.loads(_bop2dc.validate(_text(config)))


def calibrate(config, threads=0, progress=None, summary=False):
    """Grid search for the design. With summary=True also returns the protocol markdown."""
    payload, md = _bop2dc.calibrate(_text(config), threads, progress)
    result = json.loads(payload)
    return (result, md) if summary else result


def simulate(config, design=None, threads=0):
    """Operating characteristics of a fixed design under every scenario."""
    payload, _ = _bop2dc.simulate(_text(config, design), threads)
    return json.loads(payload)


def decision_table(config, design=None):
    return json.loads(_bop2dc.decision_table(_text(config, design)))
