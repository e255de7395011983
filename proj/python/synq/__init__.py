"""Stationary workloads of Levy-driven tandem queues.

Models are given as dicts, JSON text or paths to JSON files, in the same
format the ``synq`` command line tool reads.
"""

import json
import os

from . import _synq
from ._synq import (
    BracketOverflow,
    ConfigError,
    DomainError,
    Error,
    InfiniteMean,
    InstabilityError,
    Model,
    NearPole,
    NumericError,
    UnsupportedModel,
    ValidationError,
)

__all__ = [
    "load_model", "phi", "psi", "lst", "decomposition", "moments", "simulate", "verify",
    "Model", "Error", "DomainError", "InstabilityError", "ConfigError", "UnsupportedModel",
    "ValidationError", "NumericError", "NearPole", "BracketOverflow", "InfiniteMean",
]


def load_model(source):
    """Validate a model from a dict, JSON text or file path."""
    if isinstance(source, Model):
        return source
    if isinstance(source, dict):
        return Model.from_json(json.dumps(source))
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source) as fh:
            return Model.from_json(fh.read())
    return Model.from_json(str(source))


def phi(model, v):
    return _synq.phi(load_model(model), list(v))


def psi(model, k, tail):
    return _synq.psi(load_model(model), k, list(tail))


def lst(model, alpha, space="W"):
    return _synq.lst(load_model(model), list(alpha), space)


def decomposition(model, alpha):
    return _synq.decomposition(load_model(model), list(alpha))


def moments(model):
    return _synq.moments(load_model(model))


def simulate(model, horizon=5000.0, replications=200, seed=42, step=0.01, burn_in=0.5,
             threads=0, alphas=()):
    return _synq.simulate(load_model(model), horizon, replications, seed, step, burn_in,
                          threads, [list(a) for a in alphas])


def verify(model, plan=None):
    """Run a verification plan and return the report as a dict."""
    if isinstance(plan, dict):
        plan = json.dumps(plan)
    elif plan is not None and os.path.exists(plan):
        with open(plan) as fh:
            plan = fh.read()
    return json.loads(_synq.verify(load_model(model), plan or ""))
