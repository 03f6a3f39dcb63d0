"""A diagonal state-space model, from continuous parameters to a selective scan.

We discretize a one-state system with the zero-order hold, watch its
impulse response decay geometrically, and then let the input choose its
own timescale through the selective scan used inside the Mamba branch.

Run: python demos/02_state_space_scan.py
"""

import numpy as np

from walmafa.params import ParamStore, Scope
from walmafa.ssm import SSMParams, init_selective, scan, selective_scan_channel, zoh_discretize

# %% Zero-order hold on a scalar system
for delta in (0.1, 1.0, 5.0):
    a_bar, b_bar = zoh_discretize(-1.0, 1.0, delta)
    print(f"delta={delta:4.1f}: A_bar={a_bar:.4f}  B_bar={b_bar:.4f}  (sum {a_bar + b_bar:.4f})")
# With A=-1, B=1 the two always sum to one: the state is a moving average of the input.

# %% Impulse response of the discretized scan
params = SSMParams(A=[[-0.7]], B=[[1.0]], C=[[1.0]], D_skip=[0.0], delta=[1.0])
impulse = np.zeros((8, 1))
impulse[0] = 1.0
response = scan(params, impulse)[:, 0]
print("impulse response:", np.round(response, 4))
print("successive ratios:", np.round(response[1:] / response[:-1], 4), "= exp(-0.7)")

# %% Selective scan: the timescale depends on the input
rng = np.random.default_rng(0)
store = ParamStore()
init_selective(store, "ssm", dims=4, state_size=8, rng=rng)
x = rng.normal(size=(32, 4))
y = selective_scan_channel(x, Scope(store, "ssm."))
print(f"\nselective scan: input {x.shape} -> output {y.shape}")

# Causality: changing the future leaves the past untouched.
x2 = x.copy()
x2[20:] = 0.0
y2 = selective_scan_channel(x2, Scope(store, "ssm."))
print("outputs before step 20 unchanged:", np.array_equal(y[:20], y2[:20]))
