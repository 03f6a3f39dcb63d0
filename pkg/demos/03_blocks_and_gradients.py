"""The two building blocks and how their gradients are verified.

A Wavelet-based Mamba Block runs a selective scan over the LL band of a
feature map; a Fast Fourier Adjustment Block refines amplitude and phase
with pointwise convolutions. Both carry residual paths, so zeroing their
output layers turns them into the identity. Every analytic gradient is
checked against central finite differences.

Run: python demos/03_blocks_and_gradients.py
"""

import numpy as np

from walmafa.blocks import ffab_forward, init_ffab, init_wmb, wmb_forward
from walmafa.gradcheck import grad_check_report, weighted_sum_loss
from walmafa.params import ParamStore, Scope

rng = np.random.default_rng(0)
store = ParamStore()
init_wmb(store, "wmb", 4, 4, rng)
init_ffab(store, "ffab", 4, rng)
x = rng.normal(size=(8, 8, 4))

out, ll = wmb_forward(x, Scope(store, "wmb."))
print(f"WMB: {x.shape} -> {out.shape}, LL prediction {ll.shape}")
print(f"FFAB: {x.shape} -> {ffab_forward(x, Scope(store, 'ffab.')).shape}")

# %% Residual identity
silent = store.copy()
for name in ("ffab.out.weight", "ffab.out.bias"):
    silent.set(name, np.zeros_like(silent[name]))
print("FFAB with a zero output conv is the identity:",
      np.abs(ffab_forward(x, Scope(silent, "ffab.")) - x).max() == 0.0)

# %% Finite-difference check, parameter by parameter
wmb_only = ParamStore()
for name in store.names("wmb."):
    wmb_only.add(name, store[name])
report = grad_check_report(lambda w, inp: wmb_forward(inp, Scope(w, "wmb.")), wmb_only, x,
                           weighted_sum_loss(rng.normal(size=x.shape)))
print(f"\n{'parameter':32s} {'rel. error':>10s} {'|grad|':>10s}")
for name, r in report.items():
    print(f"{name:32s} {r['max_rel_error']:10.1e} {r['grad_norm']:10.3f}")
