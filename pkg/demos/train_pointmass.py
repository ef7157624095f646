#!/usr/bin/env python3
"""Pointmass training run with live pruning, small enough to watch.

Runs the full four-part loop (collect, extractor regression, agent update,
prune) for 10000 steps on the built-in pointmass task. The arc to look
for: the random policy drifts badly, returns recover as the agent learns,
and once gates unfreeze at step 2000 the parameter budget drops in visible
chunks while returns keep improving. Takes under a minute on one core.

The pendulum task needs the acceptance-scale 100k-step schedule to solve;
same machinery, just longer:

    ofexi --env pendulum --seed 0 --steps 100000 --out-dir runs/pend0

Pass a different seed as argv[1].
"""

import sys
import time

from ofexi import report
from ofexi.trainer import RunConfig, Schedule, Trainer


def main():
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
    steps = 10_000
    cfg = RunConfig(env="pointmass", seed=seed,
                    schedule=Schedule.scaled(steps))

    t = Trainer(cfg)
    print(f"pointmass, seed {seed}, {steps} steps, "
          f"baseline train params {t.baseline_train}")
    print(f"gates unfreeze at step {cfg.schedule.theta_freeze_steps}, "
          f"final rounding at step {cfg.schedule.round_start}")
    print()
    print(f"{'step':>6} {'eval':>10} {'aux':>9} {'C_OFE':>9} "
          f"{'train':>7} {'tR':>6} {'binary':>7}")

    seen = 0
    t0 = time.time()
    while t.step < steps:
        t.train_step()
        while seen < len(t.metrics):
            m = t.metrics[seen]
            seen += 1
            print(f"{m.step:>6} {m.eval_return:>10.1f} {m.l_aux:>9.4f} "
                  f"{m.c_ofe:>9.1f} {m.params_train:>7} {m.tr:>6.3f} "
                  f"{m.theta_binary_fraction:>7.2f}")
    secs = time.time() - t0

    print()
    print(f"finished in {secs:.0f} s")
    print(report.format_report_table(report.architecture_report(t)))


if __name__ == "__main__":
    main()
