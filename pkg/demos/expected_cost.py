#!/usr/bin/env python3
"""Stochastic gates and the exact expected-complexity closed form.

Every prunable unit carries a Bernoulli gate with probability theta. The
inference cost of a sampled subnetwork is a polynomial in the gate draws
that is linear in each individual gate (multilinear), so the expectation
over all 2^n binary configurations has a closed form that this package
evaluates directly from the theta vectors. This script checks that claim
by brute force on a model small enough to enumerate.
"""

import itertools

import numpy as np

from ofexi import complexity, ofenet, sac


def build_models(rng):
    ofe = ofenet.build_ofe(rng, d_o=2, d_a=1, units_o=(2, 2), units_oa=(2,))
    dz_o, dz_oa = ofenet.z_o_dim(ofe), ofenet.z_oa_dim(ofe)
    models = {
        "ofe": ofe,
        "pi": sac.build_mlp(rng, dz_o, (2,), 2, "pi", True),
        "v": sac.build_mlp(rng, dz_o, (2,), 1, "v", True),
        "q1": sac.build_mlp(rng, dz_oa, (2,), 1, "q1", True),
        "q2": sac.build_mlp(rng, dz_oa, (2,), 1, "q2", True),
    }
    return models


def all_gates(models):
    out = [b.gate for b in models["ofe"].blocks_o + models["ofe"].blocks_oa]
    for name in ("pi", "v", "q1", "q2"):
        out.extend(layer.gate for layer in models[name].layers)
    return out


def shape_of(models, rho=0.5):
    rl = {"pi": (models["pi"], "z_o"), "v": (models["v"], "z_o"),
          "q1": (models["q1"], "z_oa"), "q2": (models["q2"], "z_oa")}
    nus = {"pi": 1.0, "v": 1.0, "q1": 1.0, "q2": 1.0}
    return complexity.build_shape(models["ofe"], rl, rho=rho, nu_ofe=1.0,
                                  nus=nus)


def main():
    rng = np.random.default_rng(0)
    models = build_models(rng)
    gvecs = all_gates(models)
    thetas = [rng.uniform(0.1, 0.9, g.width) for g in gvecs]
    for g, th in zip(gvecs, thetas):
        g.theta[:] = th

    n = sum(g.width for g in gvecs)
    print(f"model with {n} gated units, theta drawn uniform in (0.1, 0.9)")
    print()

    closed = complexity.c_ofe_total(shape_of(models))

    # brute force: weight the cost of every binary configuration by its
    # Bernoulli probability
    flat = np.concatenate(thetas)
    expected = 0.0
    for bits in itertools.product((0.0, 1.0), repeat=n):
        bits = np.asarray(bits)
        prob = np.prod(np.where(bits > 0.5, flat, 1.0 - flat))
        k = 0
        for g in gvecs:
            g.theta[:] = bits[k:k + g.width]
            k += g.width
        expected += prob * complexity.c_ofe_total(shape_of(models))
    for g, th in zip(gvecs, thetas):
        g.theta[:] = th

    print(f"closed form        C = {closed:.10f}")
    print(f"enumerated  E[cost]  = {expected:.10f}  ({2 ** n} configurations)")
    print(f"|difference|         = {abs(closed - expected):.3e}")
    print()

    # linearity in a single gate: E[C] = theta_k*C1_k + (1-theta_k)*C0_k
    g0 = gvecs[0]
    keep = g0.theta[0]
    g0.theta[0] = 1.0
    c1 = complexity.c_ofe_total(shape_of(models))
    g0.theta[0] = 0.0
    c0 = complexity.c_ofe_total(shape_of(models))
    g0.theta[0] = keep
    recon = keep * c1 + (1.0 - keep) * c0
    print("linearity in one gate (unit 0 of the first observation block):")
    print(f"  C with unit on   = {c1:.6f}")
    print(f"  C with unit off  = {c0:.6f}")
    print(f"  theta*C1+(1-theta)*C0 = {recon:.10f}  vs closed {closed:.10f}")
    print()

    # the prior strength is set per layer so that the penalty -theta*log(gamma)
    # grows exactly as fast as the expected cost: log(gamma) = -dC/dtheta.
    # A central difference with step 0.5 is exact for a multilinear function.
    shape = shape_of(models)
    print("gate prior log(gamma) vs central difference -dC/dtheta:")
    for l in range(len(models["ofe"].blocks_o)):
        lg = complexity.log_gamma_o(shape, l)
        g = models["ofe"].blocks_o[l].gate
        keep = g.theta[0]
        g.theta[0] = keep + 0.5
        hi = complexity.c_ofe_total(shape_of(models))
        g.theta[0] = keep - 0.5
        lo = complexity.c_ofe_total(shape_of(models))
        g.theta[0] = keep
        print(f"  o-block {l}: log gamma = {lg:.6f}, "
              f"-dC/dtheta = {lo - hi:.6f}")


if __name__ == "__main__":
    main()
