"""Build a wave packet, ride it along its ray, and test the frame.

Constructs the tight frame at a dyadic frequency, decomposes random
band-limited data and reconstructs it, then builds a single packet on
the central frequency column and reports how well it solves the
dispersive equation (the residual-to-dispersive ratio).

Usage: python3 demos/packet_gallery.py
"""
import numpy as np

from wavetank import hamiltonian as hm
from wavetank import packets as pk
from wavetank import spectral as sp


def main():
    lam = 256.0
    grid = sp.GridSpec(2048)
    geometry = pk.FrameGeometry.for_lambda(lam, grid)
    print(f"frame at frequency {lam:.0f}: {geometry.n_x} positions x "
          f"{len(geometry.core_j_values())} frequency columns")
    print(f"frame constant C = {pk.frame_constant(lam, grid):.6f}")

    rng = np.random.default_rng(3)
    u = sp.random_field(grid, rng, band=(128, 512), real=False)
    back = pk.frame_reconstruct(pk.frame_decompose(u, lam))
    print(f"reconstruction error on random band data: "
          f"{sp.l2_norm(back - u) / sp.l2_norm(u):.3e}")

    coeffs = hm.TruncatedCoeffs.constant(grid, 0.02, 9.81,
                                         hm.FrequencyConstants(lam))
    idx = pk.PacketIndex(0, int(round(lam / geometry.xi_step)), geometry)
    packet = pk.build_packet(idx, coeffs,
                             times=np.linspace(0.0, 0.25, 101))
    norms = pk.packet_l2_history(packet)
    print(f"packet L2 constancy: max deviation "
          f"{float(np.max(np.abs(norms / norms[0] - 1.0))):.3e}")
    res = pk.packet_residual(packet, coeffs, lam)
    print(f"packet residual ratio ||(d_t + iH)u|| / ||sqrt(a|D|)u|| = "
          f"{res['ratio']:.4f}")


if __name__ == "__main__":
    main()
