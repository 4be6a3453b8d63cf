"""Rate sandwich for the Gaussian relay: conventional <= Gaussian inputs <= C_L <= upper bound.

Uses the quick search budget so it finishes in about a minute.

    python demos/awgn_bounds.py
"""
from hdrelay.awgn import (
    AwgnPair, SearchSpec, awgn_capacity_fixed, awgn_capacity_lower, awgn_conventional_rate,
    awgn_gaussian_input_rate, awgn_upper_bound, published_distribution,
)

QUICK = SearchSpec(gap_multipliers=(1, 2), n_delta=6, delta_rtol=2e-2)

print(" SNR    conv    gauss    C_L     upper")
for db in (0, 10, 20):
    pair = AwgnPair.from_db(db, db)
    low = awgn_capacity_lower(pair, QUICK)
    print(f"{db:3d}dB {awgn_conventional_rate(pair):.4f}  {awgn_gaussian_input_rate(pair):.4f}  "
          f"{low.capacity:.4f}  {awgn_upper_bound(pair):.4f}")
    dist = low.diagnostics["distribution"]
    print(f"       {len(dist.locations)} positive mass points, first at {dist.locations[0]:.3f}, "
          f"P_U* = {low.p_u_star:.4f}")

for db in (10, 15):
    fixed = awgn_capacity_fixed(AwgnPair.from_db(db, db), published_distribution(db))
    print(f"published {db} dB point list: C_L = {fixed.capacity:.5f} at P_U = {fixed.p_u_star:.5f}")
