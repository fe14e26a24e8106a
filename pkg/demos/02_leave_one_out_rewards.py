"""Pointwise versus distribution-level credit on one rollout group.

The classic case: target 5, rollouts [3, 4, 8]. The pointwise squared-error
reward likes 4 best and punishes 8 hardest. Leave-one-out CRPS credit sees
it differently: 3 and 4 pile mass on the same side of the target, so the
redundant 3 earns the least, while the far-but-balancing 8 earns as much
as the nearest rollout.
"""

import numpy as np

from distreward import RolloutSet, dar_rewards, mse_reward, neg_crps_score

TARGET = 5.0
PREDICTIONS = [3.0, 4.0, 8.0]

rollouts = RolloutSet("demo", np.array(PREDICTIONS), np.ones(3, dtype=bool), TARGET)
loo = dar_rewards(rollouts).rewards
mse = [mse_reward(p, TARGET) for p in PREDICTIONS]

s_full = neg_crps_score(PREDICTIONS, TARGET)
print(f"target {TARGET}, rollouts {PREDICTIONS}")
print(f"group score S = -CRPS = {s_full:+.6f}\n")
print(f"{'rollout':>8} {'S without it':>13} {'loo reward':>11} {'mse reward':>11}")
for i, p in enumerate(PREDICTIONS):
    rest = [q for j, q in enumerate(PREDICTIONS) if j != i]
    print(f"{p:8.1f} {neg_crps_score(rest, TARGET):13.6f} {loo[i]:11.6f} {mse[i]:11.1f}")

print(f"""
Removing 8 would leave the one-sided pair [3, 4] (S = {neg_crps_score([3, 4], TARGET):.3f}),
so 8 carries real credit ({loo[2]:+.4f}) despite the worst pointwise error
({mse[2]:+.1f}). Removing 3 barely hurts: [4, 8] already covers the target.
""")

print("=== Sweeping the third rollout ===\n")
print(f"{'third rollout':>13} {'loo reward of it':>17} {'mse reward of it':>17}")
for third in np.arange(4.5, 9.6, 0.5):
    preds = np.array([3.0, 4.0, third])
    rewards = dar_rewards(RolloutSet("s", preds, np.ones(3, bool), TARGET)).rewards
    print(f"{third:13.1f} {rewards[2]:17.6f} {mse_reward(third, TARGET):17.2f}")

print("""
Both peak at the target itself, but the pointwise reward falls off
quadratically while the leave-one-out credit decays gently and stays
positive far out: a rollout on the empty side of the target keeps earning
for the coverage it adds, no matter how large its own error.
""")
