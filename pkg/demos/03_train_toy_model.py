# %% [markdown]
# # Training the toy renderer
#
# The encoder lifts a 16x16 image to an 8^3 latent scene, the latent is
# rotated by the known relative pose, and the decoder renders it back.
# Training asks the rotated latent to reproduce the second view.

# %%
import sys

from equirender.synth import SceneSpec, generate
from equirender.toy_model import evaluate, init_params, train

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 500
data = generate(SceneSpec(n=8, seed=0), 64, 8)
held = generate(SceneSpec(n=8, seed=1 << 16), 16, 4)

# %% Before training
before = evaluate(init_params(0), held)
print(f"untrained: psnr {before['mean_psnr_db']:.2f} dB, gap {before['mean_equiv_gap']:.3f}")

# %% Train and watch the log
result = train(data, steps, seed=0, holdout=held[0], log_every=max(1, steps // 10))
for row in result.log:
    print(f"step {row['step']:5d}  total {row['total']:.4f}  probe psnr {row['psnr']:.2f}")

# %% After training
after = evaluate(result.params, held)
print(f"trained:   psnr {after['mean_psnr_db']:.2f} dB, gap {after['mean_equiv_gap']:.3f}")
