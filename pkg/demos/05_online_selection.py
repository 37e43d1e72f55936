"""Streaming selection with exponential-weights experts.

Each of the k dictionary slots is one expert over the atoms.  On a
stationary planted stream the experts concentrate and per-round utility
climbs; the final hindsight regrets sit well inside the theoretical
G * sqrt(2 T ln n) envelope.
"""

import numpy as np

from dictsel import dct2_basis
from dictsel.online import expert_hindsight_regrets, online_round, online_state

a = dct2_basis(8)  # orthonormal, n = 64
n, k, s, horizon = 64, 10, 3, 400

rng = np.random.default_rng(5)
planted = rng.choice(n, size=8, replace=False)
state = online_state("online_replacement_omp", a, k=k, s=s, horizon=horizon, seed=0)

for t in range(horizon):
    support = rng.choice(planted, size=s, replace=False)
    y = a[:, support] @ rng.standard_normal(s)
    online_round(state, y, a)

gains = np.array(state.ledger.player_gains)
print(f"stream: {horizon} rounds, {len(planted)} planted atoms, k={k}, s={s}")
print("\nmean realized utility by phase:")
for lo in range(0, horizon, 100):
    print(f"  rounds {lo + 1:3d}-{lo + 100:3d}: {gains[lo : lo + 100].mean():.3f}")

regrets = expert_hindsight_regrets(state)
bound = state.gain_bound * np.sqrt(2 * horizon * np.log(n))
print(f"\nper-slot hindsight regret (bound {bound:.1f}):")
print("  " + " ".join(f"{r:5.1f}" for r in regrets))

last_played = sorted(set(state.ledger.dictionaries[-1]))
print(f"\nfinal round dictionary: {last_played}")
print(f"planted atoms:          {sorted(int(j) for j in planted)}")
