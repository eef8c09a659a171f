"""
Asymptotic key rate of a trusted-detector link
==============================================

Key fraction against channel transmittance and untrusted excess noise,
with the receiver efficiency and electronic noise treated as trusted.
"""

# %%
# Reference operating point
import dataclasses

import numpy as np

from cvqkd import LinkParams, key_fraction

link = LinkParams()
r = key_fraction(link)
print(f"I_AB = {r.i_ab:.5f}  chi_BE = {r.holevo:.5f} bits/symbol")
print(f"key fraction {r.key_fraction:.5f} bits/symbol, {r.key_rate_bps / 1e3:.1f} kbit/s")

# %%
# Sweep over transmittance. Each row uses the same excess noise, so losses
# only shrink the signal.
for eta in np.geomspace(0.01, 0.5, 8):
    k = key_fraction(dataclasses.replace(link, eta=float(eta))).key_fraction
    print(f"eta={eta:7.4f}  ({-10 * np.log10(eta):5.1f} dB)  K={k:.5f}")

# %%
# Excess-noise tolerance at fixed loss: the key fraction reaches zero near
# 2.5 mSNU at the detector input.
us = np.linspace(0, 4e-3, 41)
ks = np.array([key_fraction(dataclasses.replace(link, u=float(u))).key_fraction for u in us])
print("key vanishes at u =", us[np.argmax(ks == 0)] if np.any(ks == 0) else "never")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots()
    ax.plot(us * 1e3, ks)
    ax.set_xlabel("u [mSNU]")
    ax.set_ylabel("key fraction [bit/symbol]")
    fig.savefig("key_rate_vs_u.png", dpi=120)
except ImportError:
    pass
