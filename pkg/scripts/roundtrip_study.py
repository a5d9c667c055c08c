"""Monte Carlo study of the (W, cos chi) estimator at one object setting.

    python scripts/roundtrip_study.py --t 0.6 --chi 0.785 --shots 100000 --seeds 200
"""
import argparse
import math

import numpy as np

from ifmsim import DetectorConfig, evolve, reconstruct_object, reference_evolution, sample
from ifmsim import build_mach_zehnder, loss, make_partial_object, photon


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--t", type=float, default=0.6)
    ap.add_argument("--chi", type=float, default=math.pi / 4)
    ap.add_argument("--shots", type=int, default=10**5)
    ap.add_argument("--seeds", type=int, default=100)
    args = ap.parse_args()

    circuit = build_mach_zehnder(make_partial_object(photon("b"), args.t, args.chi, loss("loss")))
    cfg = DetectorConfig({"a": "D_a", "b": "D_b"})
    obj_state, ref_state = evolve(circuit).final_state, reference_evolution(circuit).final_state
    W_true, c_true = 1 - args.t**2, math.cos(args.chi)

    W, sW, c, sc = [], [], [], []
    for seed in range(args.seeds):
        est = reconstruct_object(
            sample(obj_state, cfg, args.shots, seed, stream=(1,)),
            sample(ref_state, cfg, args.shots, seed, stream=(0,)),
            allow_undefined_phase=True,
        )
        W.append(est.W)
        sW.append(est.sigma_W)
        if est.phase_defined:
            c.append(est.cos_chi)
            sc.append(est.sigma_cos_chi)
    W, sW = np.array(W), np.array(sW)
    print(f"W:       true {W_true:.6f}  mean {W.mean():.6f}  spread {W.std(ddof=1):.2e}  "
          f"mean sigma {sW.mean():.2e}  2-sigma coverage {np.mean(abs(W - W_true) <= 2 * sW):.2f}")
    if c:
        c, sc = np.array(c), np.array(sc)
        print(f"cos chi: true {c_true:.6f}  mean {c.mean():.6f}  spread {c.std(ddof=1):.2e}  "
              f"mean sigma {sc.mean():.2e}  2-sigma coverage {np.mean(abs(c - c_true) <= 2 * sc):.2f}")
    print(f"phase defined in {len(c)}/{args.seeds} runs")


if __name__ == "__main__":
    main()
