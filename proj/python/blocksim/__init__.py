"""Block dissemination simulator: python bindings for the C++ core."""

import json

from ._blocksim import (
    check_properties,
    estimate_mu_json,
    run_experiment_json,
    single_block_spread,
    topology_json,
)

__all__ = [
    "topology",
    "run_experiment",
    "estimate_mu",
    "check_properties",
    "single_block_spread",
]


def topology(family, n, **kwargs):
    """Generate a topology and return its conductance and stability bounds."""
    return json.loads(topology_json(family, n, **kwargs))


def run_experiment(config):
    """Run an experiment from a config dict (or JSON string), return the report."""
    if not isinstance(config, str):
        config = json.dumps(config)
    return json.loads(run_experiment_json(config))


def estimate_mu(family, n, **kwargs):
    """Estimate the critical arrival rate via batch clearing times."""
    return json.loads(estimate_mu_json(family, n, **kwargs))
