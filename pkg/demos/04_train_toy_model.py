"""Train the full network on the eight bundled 64x64 pairs and compare PSNR.

The head starts at zero, so the untrained network returns its input and
the first loss is exactly the Charbonnier distance between the dark and
bright images. A few hundred Adam steps on random crops are enough to see
the enhanced images pull ahead of the inputs. Expect several minutes on
one core at the default 200 steps.

Run: python demos/04_train_toy_model.py [steps]
"""

import sys
import time

import numpy as np

from walmafa.config import TrainConfig
from walmafa.metrics import psnr, ssim
from walmafa.model import ModelConfig, forward, init_params
from walmafa.samples import load_pairs
from walmafa.train import evaluate, fit

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 200
pairs = load_pairs()
config = ModelConfig()
params = init_params(config, 0)
print(f"{len(pairs)} pairs, {params.count():,} parameters")
print("initial losses:", {k: round(v, 4) for k, v in evaluate(params, pairs, config).items()})

start = time.perf_counter()


def log(step, record):
    if step % 20 == 0 or step == steps - 1:
        print(f"step {step:4d}  total {record['total']:.4f}  charbonnier {record['charbonnier']:.4f}"
              f"  lr {record['lr']:.2e}  ({time.perf_counter() - start:.0f}s)")


history, best = fit(params, pairs, config, TrainConfig(steps=steps, eval_every=50), log=log)
print("final losses:", {k: round(v, 4) for k, v in evaluate(params, pairs, config).items()})

# %% Quality before and after
print(f"\n{'pair':>4s} {'PSNR in':>8s} {'PSNR out':>9s} {'SSIM in':>8s} {'SSIM out':>9s}")
for i, (low, high) in enumerate(pairs):
    enhanced = np.clip(forward(low, params, config)[0], 0, 1)
    print(f"{i:4d} {psnr(low, high):8.2f} {psnr(enhanced, high):9.2f} "
          f"{ssim(low, high)[0]:8.4f} {ssim(enhanced, high)[0]:9.4f}")
