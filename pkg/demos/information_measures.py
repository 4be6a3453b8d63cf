"""Entropy, mutual information and channel capacity on small channels.

    python demos/information_measures.py
"""
import math

from hdrelay.probability import (
    ConditionalPmf, Pmf, RelayInputModel, binary_entropy, blahut_arimoto, gaussian_entropy,
    gaussian_mixture_entropy, mutual_information, relay_mutual_information,
)

bsc = ConditionalPmf.bsc(0.1)
print(f"BSC(0.1): I(uniform) = {mutual_information(Pmf.uniform([0, 1]), bsc):.6f}"
      f"  1 - H(0.1) = {1 - binary_entropy(0.1):.6f}")

cap, best = blahut_arimoto(bsc)
print(f"Blahut-Arimoto capacity {cap:.6f} at input {best.probs.round(4)}")

# a relay that is silent (symbol 0) with probability 1 - P_U: silence carries information
for p_u in (0.1, 0.3, 0.5):
    model = RelayInputModel(p_u, Pmf([1], [1.0]))
    print(f"P_U = {p_u}: I(X2; Y) through a noiseless link = "
          f"{relay_mutual_information(model, ConditionalPmf.bsc(0.0)):.6f}  H(P_U) = {binary_entropy(p_u):.6f}")

for s in (0.1, 1.0, 10.0):
    h = gaussian_mixture_entropy([1.0], [0.0], s)
    print(f"h(N(0, {s}^2)) by quadrature {h:.9f}  closed form {0.5 * math.log2(2 * math.pi * math.e * s * s):.9f}")
print(f"two far-apart components add one bit: {gaussian_mixture_entropy([0.5, 0.5], [-40, 40], 1.0):.6f}"
      f" vs {gaussian_entropy(1.0) + 1:.6f}")
