#!/usr/bin/env python3
"""Smoke test for the flair_forge extension module.

Build the module first:

    cargo build -p flair-py --release

then run this script from the repository root:

    python3 python/smoke_test.py
"""

import json
import math
import os
import shutil
import sys
import tempfile


def load_module():
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    candidates = [
        os.path.join(root, "target", "release", "libflair_forge.so"),
        os.path.join(root, "target", "debug", "libflair_forge.so"),
        os.path.join(root, "target", "release", "flair_forge.dll"),
        os.path.join(root, "target", "debug", "flair_forge.dll"),
        os.path.join(root, "target", "release", "libflair_forge.dylib"),
        os.path.join(root, "target", "debug", "libflair_forge.dylib"),
    ]
    built = next((c for c in candidates if os.path.exists(c)), None)
    if built is None:
        sys.exit("build the extension first: cargo build -p flair-py --release")
    staging = tempfile.mkdtemp(prefix="flair_forge_py_")
    ext = ".pyd" if built.endswith(".dll") else ".so"
    shutil.copy(built, os.path.join(staging, "flair_forge" + ext))
    sys.path.insert(0, staging)
    import flair_forge

    return flair_forge


def main():
    ff = load_module()
    print(f"flair_forge {ff.__version__}")

    # Dense network basics: determinism and shape.
    net = ff.Mlp(4, 64, 1, seed=7)
    out1 = net.forward([0.1, -0.2, 0.3, 0.0])
    out2 = net.forward([0.1, -0.2, 0.3, 0.0])
    assert out1 == out2 and len(out1) == 1
    print(f"{net!r} forward OK")

    # Gaussian policy log-density sanity: the mode beats a shifted action.
    policy = ff.Policy(4, 1, 64, seed=3)
    state = [0.0, 0.1, -0.1, 0.2]
    mean = policy.mean_action(state)
    lp_mode = policy.log_prob(state, mean)
    lp_off = policy.log_prob(state, [mean[0] + 1.0])
    assert lp_mode > lp_off
    print(f"policy log-density at mode {lp_mode:.4f} > shifted {lp_off:.4f}")

    # Environment rollout with a scripted balance demonstrator.
    env = ff.Env("rail-pendulum")
    assert env.state_dim == 4 and env.action_dim == 1 and env.horizon == 200
    states, actions, rewards = env.rollout_style(0, seed=1)
    assert len(states) == env.horizon + 1 and len(actions) == env.horizon
    demo_return = sum(rewards)
    print(f"styles {env.styles()}; balance demo return {demo_return:.3f}")
    assert demo_return > -20.0, "balance demonstrator should keep the pole up"

    # KL estimator calibration on a closed-form case: KL(N(0,1)||N(1,1)) = 0.5.
    import random

    rng = random.Random(0)
    p = [[rng.gauss(0.0, 1.0)] for _ in range(4000)]
    q = [[rng.gauss(1.0, 1.0)] for _ in range(4000)]
    kl = ff.estimate_kl(p, q, 3)
    assert abs(kl - 0.5) < 0.15, f"KL estimate {kl} too far from 0.5"
    entropy = ff.knn_entropy(p, 3)
    expected_h = 0.5 * math.log(2.0 * math.pi * math.e)
    assert abs(entropy - expected_h) < 0.15
    print(f"estimate_kl N(0,1)||N(1,1) = {kl:.3f}; entropy {entropy:.3f}")

    # Simplex sampling invariants.
    w = ff.sample_simplex(4, seed=5)
    assert abs(sum(w) - 1.0) < 1e-9 and all(v >= 0.0 for v in w)
    print(f"simplex sample {[round(v, 3) for v in w]}")

    # Mixture action is a convex combination of component samples.
    p0 = ff.Policy(4, 1, 64, seed=10)
    p1 = ff.Policy(4, 1, 64, seed=11)
    a = ff.mixture_action([p0, p1], [0.7, 0.3], state, seed=2)
    assert len(a) == 1 and math.isfinite(a[0])
    print(f"mixture action {a[0]:.4f}")

    # Demo file generation round trip through the config default.
    cfg = json.loads(ff.default_config("rail-pendulum"))
    assert cfg["env"] == "rail-pendulum" and cfg["lifelong"]["search"]["sample_cap"] == 2000
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "smoke.demos")
        count = ff.gen_demos("rail-pendulum", 2, 3, 1, path)
        assert count == 5 and os.path.getsize(path) > 0
        print(f"wrote {count} demos to {path}")

    print("smoke test passed")


if __name__ == "__main__":
    main()
