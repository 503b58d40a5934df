"""Smoke test for the `dhams` extension module.

Build and install first, e.g. `maturin develop --release -m crates/python/Cargo.toml`.
"""

import json
import math
import tempfile

import dhams


def check_overrelaxation():
    probs = [0.2, 0.5, 0.3]
    for beta in (-1.0, -0.37, 0.0, 0.62, 1.0):
        m = dhams.transition_matrix(probs, beta)
        for i, row in enumerate(m):
            assert abs(sum(row) - 1.0) < 1e-10
            for j in range(3):
                assert abs(probs[i] * m[i][j] - probs[j] * m[j][i]) < 1e-10
    rng = dhams.Rng(1)
    assert abs(dhams.correlation_at_beta(0.0, 20_000, rng) + 1.0) < 1e-6
    assert dhams.sample_overrelaxed(1, probs, 0.5, rng) in (0, 1, 2)


def check_rejection_free():
    target = dhams.Target.linear([0.3, -0.8, 0.5], [0.0, 1.0, 2.0])
    params = dhams.SamplerParams(delta=1.2, epsilon=0.9, phi=0.3, beta=-0.5)
    rng = dhams.Rng(2)
    s, u = [0.0, 1.0, 2.0], [0.1, -0.2, 0.3]
    for kind in ("avg", "vdhams", "odhams"):
        for _ in range(200):
            out = dhams.step(kind, target, s, params, rng, u=u)
            assert abs(out["log_accept_ratio"]) < 1e-8, out
            s, u = out["s"], out["u"]


def check_chain():
    target = dhams.Target.discrete_gaussian(dim=2, k=2, sigma=1.5, rho=0.5)
    assert target.dim == 2 and target.support == [-2.0, -1.0, 0.0, 1.0, 2.0]
    joint = target.exact_joint()
    assert len(joint) == 25 and abs(sum(joint) - 1.0) < 1e-12
    params = dhams.SamplerParams(delta=1.0, epsilon=0.9, phi=0.5)
    chains = [dhams.run_chain("vdhams", target, params, 500, 5_000, seed=3, stream=m) for m in range(4)]
    again = dhams.run_chain("vdhams", target, params, 500, 5_000, seed=3, stream=0)
    assert again["states"] == chains[0]["states"]
    levels = target.support
    counts = [0] * 25
    for c in chains:
        for s in c["states"]:
            counts[levels.index(s[0]) * 5 + levels.index(s[1])] += 1
    n = sum(counts)
    tv = 0.5 * sum(abs(c / n - p) for c, p in zip(counts, joint))
    assert tv < 0.05, tv
    ess = dhams.ess([c["potentials"] for c in chains])
    assert 0.0 < ess and math.isfinite(ess)
    assert dhams.ess([[1.0, 2.0], [2.0, 4.0]]) == 10.0 / 9.0


def check_errors():
    for bad in (lambda: dhams.SamplerParams(beta=2.0), lambda: dhams.Target.discrete_gaussian(2, 2, 1.0, 1.5)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")


def check_experiment():
    with tempfile.TemporaryDirectory() as out:
        config = {
            "target": {"kind": "discrete_gaussian", "dim": 2, "k": 1, "sigma": 1.0, "rho": 0.2},
            "sampler": {"kind": "odhams", "delta": 1.0, "epsilon": 0.9, "phi": 0.5, "beta": -0.62},
            "chains": 2,
            "draws": 10,
            "seed": 4,
            "output_dir": out,
        }
        summary = dhams.run_experiment(json.dumps(config))
        with open(f"{out}/draws.csv") as f:
            assert len(f.read().splitlines()) == 21
        assert len(summary["acceptance_rates"]) == 2


if __name__ == "__main__":
    check_overrelaxation()
    check_rejection_free()
    check_chain()
    check_errors()
    check_experiment()
    print("dhams smoke test passed; samplers:", ", ".join(dhams.SAMPLERS))
