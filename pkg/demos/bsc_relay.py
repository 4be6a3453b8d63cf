"""Half-duplex relay capacity over binary symmetric links against conventional relaying.

    python demos/bsc_relay.py
"""
from hdrelay.bsc import BscPair, bsc_capacity, bsc_conventional_rate
from hdrelay.probability import binary_entropy

sol = bsc_capacity(BscPair(0, 0))
print(f"noiseless links: C = {sol.capacity:.5f} at P_U* = {sol.p_u_star:.5f} ({sol.regime.value})")
print(f"  fixed point 1 - P_U - H(P_U) = {1 - sol.p_u_star - binary_entropy(sol.p_u_star):.1e}")
print(f"  conventional rate {bsc_conventional_rate(BscPair(0, 0))}, gain {sol.capacity / 0.5 - 1:.1%}")

print("\n  p_eps  capacity   conv    P_U*   regime")
for i in range(11):
    e = 0.05 * i
    pair = BscPair(e, e)
    s = bsc_capacity(pair)
    print(f"  {e:5.2f}  {s.capacity:8.5f}  {bsc_conventional_rate(pair):7.5f}  {s.p_u_star:6.4f}  {s.regime.value}")

# a clean first hop and a noisy second hop: the relay-destination maximum can bind instead
s = bsc_capacity(BscPair(0.0, 0.3))
print(f"\nBSC(0, 0.3): C = {s.capacity:.5f} at P_U* = {s.p_u_star:.4f} ({s.regime.value})")
