import math

import blocksim


def test_topology_bounds():
    info = blocksim.topology("complete", 10)
    assert info["peer_count"] == 10
    assert info["conductance_exact"] is True
    assert math.isclose(info["upper_bound"], 10.0 / 9.0, rel_tol=1e-9)
    assert math.isclose(info["lower_bound"], (10.0 / 9.0) / (2 * math.log(10)), rel_tol=1e-9)


def test_run_experiment():
    config = {
        "topology": {"family": "complete", "params": {"n": 5}},
        "policy": "tree",
        "arrivals": {"kind": "poisson", "rate": 0.2},
        "comm": {"mode": "stochastic", "rate": 1.0},
        "stop": {"kind": "cycles", "value": 20},
        "warmup_cycles": 2,
        "replications": 2,
        "master_seed": 3,
    }
    report = blocksim.run_experiment(config)
    assert report["schema_version"] == 1
    assert report["counts"]["cycles"] == 40
    assert report["metrics"]["time_to_consistency"]["mean"] > 0
    assert 0 < report["metrics"]["consistency_fraction"]["mean"] <= 1
    # deterministic for a fixed config
    assert blocksim.run_experiment(config) == report


def test_single_block_spread():
    samples = blocksim.single_block_spread("complete", 4, replications=10, seed=9)
    assert len(samples) == 10
    assert all(s > 0 for s in samples)


def test_estimate_mu_within_bounds():
    sweep = blocksim.estimate_mu("complete", 6, n_max=16, replications=10, seed=2)
    assert sweep["within_bounds"] is True
    slack = sweep["mu_hat"]["halfwidth"] or 0.0
    assert sweep["bounds"]["lower"] - slack <= sweep["mu_hat"]["mean"]
    assert sweep["mu_hat"]["mean"] <= sweep["bounds"]["upper"] + slack


def test_check_properties():
    result = blocksim.check_properties(instances=25, seed=11)
    assert result["violations"] == 0
    assert result["checks"] > 0
