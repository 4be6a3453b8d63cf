"""Monte-Carlo run of the block-Markov scheme with a half-duplex relay.

The relay listens exactly where its own codeword is silent, so the
switching pattern itself carries the relay's message.

    python demos/coding_simulation.py
"""
import numpy as np

from hdrelay.bsc import BscPair, bsc_capacity
from hdrelay.coding import CodingConfig, generate_codebooks, encode_block, relay_receive, run_experiment
from hdrelay.probability import ConditionalPmf, Pmf, RelayInputModel

# one block, in detail
cfg = CodingConfig(k=8, rate=0.25, p_u=0.5, seed=1)
books = generate_codebooks(cfg, Pmf.uniform([0, 1]), RelayInputModel(0.5, Pmf([1], [1.0])))
x1, active, x2 = encode_block(cfg, 2, 1, books)
print("relay x2      ", x2)
print("source active ", active.astype(int))
print("source x1     ", np.where(active, x1, -1))
print("relay hears   ", relay_receive(cfg, x1, x2))

# error rates around capacity on BSC(0.05, 0.05)
sol = bsc_capacity(BscPair(0.05, 0.05))
ch = ConditionalPmf.bsc(0.05)
print(f"\nC = {sol.capacity:.4f}; P_U = 0.31, 300 trials per row")
print("  R/C   k   relay_err  dest_err  e2e_err  hd_violations")
for frac in (0.8, 1.2):
    for k in (16, 32, 64):
        cfg = CodingConfig(k=k, rate=frac * sol.capacity, p_u=0.31, typicality_eps=0.15, seed=5,
                           codebook_mode="ensemble")
        r = run_experiment(cfg, ch, ch, 300)
        print(f"  {frac:.1f}  {k:3d}   {r.relay_err:.3f}     {r.dest_err:.3f}     {r.e2e_err:.3f}    {r.hd_violations}")

cfg = CodingConfig(k=32, rate=0.25, p_u=0.3, n_blocks=20, seed=5)
print(f"\nN = 20 blocks of k = 32 at R = 0.25: effective rate {cfg.effective_rate()} "
      f"= {float(cfg.effective_rate()):.4f}")
