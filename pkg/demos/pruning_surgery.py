#!/usr/bin/env python3
"""Structural removal of a dead unit leaves every output untouched.

Once a gate probability reaches zero the unit contributes nothing: its
activation is multiplied by zero everywhere downstream. Pruning then means
deleting its row in the block that produces it and the matching columns in
every consumer. This script performs one such surgery on each branch and
compares forward passes before and after at machine precision.
"""

import numpy as np

from ofexi import complexity, ofenet, sac


def build(rng):
    ofe = ofenet.build_ofe(rng, d_o=3, d_a=1, units_o=(5, 4), units_oa=(4,))
    dz_o, dz_oa = ofenet.z_o_dim(ofe), ofenet.z_oa_dim(ofe)
    models = {
        "ofe": ofe,
        "pi": sac.build_mlp(rng, dz_o, (6, 6), 2, "pi", True),
        "v": sac.build_mlp(rng, dz_o, (6,), 1, "v", True),
        "q1": sac.build_mlp(rng, dz_oa, (6,), 1, "q1", True),
        "q2": sac.build_mlp(rng, dz_oa, (6,), 1, "q2", True),
    }
    return models


def forward_all(models, o, a):
    """Deterministic eval-mode outputs of every head."""
    ofe = models["ofe"]
    z_o, _ = ofenet.phi_o_forward(ofe, o, "eval")
    z_oa, _ = ofenet.phi_oa_forward(ofe, z_o, a, "eval")
    pred = ofenet.predict_next(ofe, z_oa)
    pi_out, _ = sac.mlp_forward(models["pi"], z_o, "eval")
    v_out, _ = sac.mlp_forward(models["v"], z_o, "eval")
    q1_out, _ = sac.mlp_forward(models["q1"], z_oa, "eval")
    q2_out, _ = sac.mlp_forward(models["q2"], z_oa, "eval")
    return pred, pi_out, v_out, q1_out, q2_out


def counts(models):
    return (complexity.param_count(models, "deploy"),
            complexity.param_count(models, "train"))


def main():
    rng = np.random.default_rng(3)
    models = build(rng)
    o = rng.normal(size=(8, 3))
    a = rng.normal(size=(8, 1))

    dep0, tra0 = counts(models)
    print(f"starting budgets: deploy {dep0}, train {tra0}")
    print()

    surgeries = [
        ("observation block 1, unit 2",
         lambda: models["ofe"].blocks_o[1].gate.theta.__setitem__(2, 0.0),
         lambda: ofenet.prune_unit(
             models["ofe"], "o", 1, 2, 0.1,
             zo_consumers=(models["pi"], models["v"]),
             zoa_consumers=(models["q1"], models["q2"]))),
        ("action block 0, unit 0",
         lambda: models["ofe"].blocks_oa[0].gate.theta.__setitem__(0, 0.0),
         lambda: ofenet.prune_unit(
             models["ofe"], "oa", 0, 0, 0.1,
             zo_consumers=(models["pi"], models["v"]),
             zoa_consumers=(models["q1"], models["q2"]))),
        ("policy hidden layer 0, unit 5",
         lambda: models["pi"].layers[0].gate.theta.__setitem__(5, 0.0),
         lambda: sac.prune_mlp_unit(models["pi"], 0, 5, 0.1)),
        ("q1 hidden layer 0, unit 3",
         lambda: models["q1"].layers[0].gate.theta.__setitem__(3, 0.0),
         lambda: sac.prune_mlp_unit(models["q1"], 0, 3, 0.1)),
    ]

    for label, kill, cut in surgeries:
        kill()
        dead = forward_all(models, o, a)
        cut()
        after = forward_all(models, o, a)
        gap = max(np.abs(x - y).max() for x, y in zip(dead, after))
        dep, tra = counts(models)
        print(f"removed {label}")
        print(f"  max output change {gap:.3e}, "
              f"budgets now deploy {dep}, train {tra}")

    dep1, tra1 = counts(models)
    print()
    print(f"four units gone: deploy {dep0} -> {dep1}, train {tra0} -> {tra1}")
    widths_o = [b.width for b in models["ofe"].blocks_o]
    widths_oa = [b.width for b in models["ofe"].blocks_oa]
    print(f"surviving widths: o={widths_o} oa={widths_oa} "
          f"pi={[l.width for l in models['pi'].layers]} "
          f"q1={[l.width for l in models['q1'].layers]}")


if __name__ == "__main__":
    main()
