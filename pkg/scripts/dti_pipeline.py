"""Synthetic DTI pipeline: tensors -> DWIs -> Rician noise -> fit -> denoise.

Invalid-fit voxels are masked and inpainted by the regularizer; the script
writes all stages as MVD files and prints the improvement.
"""

import argparse
import os

from mtgv.cppa import StagewiseSchedule, TgvParams, alphas_from_rs, denoise_bivariate
from mtgv.mvdio import write_mvd
from mtgv.proximal import ProxInnerParams
from mtgv.synth import (DwiProtocol, delta_snr, dwi_forward, fit_tensors,
                        make_phantom, make_rng, rician_corrupt)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=16)
    ap.add_argument("--sigma", type=float, default=0.1)
    ap.add_argument("--r", type=float, default=0.12)
    ap.add_argument("--s", type=float, default=0.3)
    ap.add_argument("--cycles", type=int, default=300)
    ap.add_argument("--seed", type=int, default=5)
    ap.add_argument("--out", default="dti_run")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    truth, _ = make_phantom("spd_image", args.size, seed=args.seed)
    proto = DwiProtocol()
    dwis = rician_corrupt(dwi_forward(truth, proto), args.sigma,
                          make_rng(args.seed + 1))
    fitted = fit_tensors(dwis, proto)
    print(f"valid voxel fraction after fit: {fitted.valid_fraction():.3f}")
    write_mvd(truth, os.path.join(args.out, "truth.mvd"))
    write_mvd(fitted, os.path.join(args.out, "fitted.mvd"))

    w = alphas_from_rs(args.r, args.s)
    params = TgvParams(
        weights=w, outer_iters=args.cycles, lambda0=0.7 / w.alpha0,
        seed=args.seed, trace_every=max(args.cycles // 20, 1),
        stagewise=StagewiseSchedule(args.cycles // 5, args.cycles // 5 * 2),
        inner=ProxInnerParams(inner_iters=5, inner_step0=0.3))
    rep = denoise_bivariate(fitted, params)
    write_mvd(rep.u, os.path.join(args.out, "denoised.mvd"))
    print(f"delta-SNR vs fitted input: {delta_snr(truth, fitted, rep.u):.3f} dB")
    print(f"perturbation escapes: {rep.perturbations}")


if __name__ == "__main__":
    main()
