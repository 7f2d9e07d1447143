#!/usr/bin/env python3
"""Regenerate data/metamer_scene.json.

Three classes: classes 1 and 2 share (almost) the same multispectral means
but clearly different hyperspectral spectra; class 3 is distinct in both.
A per-pixel brightness nuisance makes raw-MS nearest neighbor struggle while
leaving the discriminative directions learnable.
"""

import pathlib

import numpy as np

from cospace.data import ClassSpec, SceneSpec, build_gaussian_srf, metamer_hs_mean

HS_CENTERS = [400.0 + 15.0 * i for i in range(40)]
MS_CENTERS = [430.0 + 56.0 * i for i in range(10)]
FWHM = 40.0
SEED = 4


def build_spec() -> SceneSpec:
    srf = build_gaussian_srf(MS_CENTERS, HS_CENTERS, FWHM)
    lam = np.asarray(HS_CENTERS)
    base1 = 0.4 + 0.2 * np.sin((lam - 400.0) / 120.0)
    base3 = 0.3 + 0.25 * np.cos((lam - 400.0) / 100.0)
    # class 2: mostly SRF-invisible offset from class 1, small visible leak
    base2 = metamer_hs_mean(base1, srf, scale=0.8, seed=7, leak=0.2)
    return SceneSpec(
        classes=(
            ClassSpec(hs_mean=base1, size=150),
            ClassSpec(hs_mean=base2, size=150),
            ClassSpec(hs_mean=base3, size=150),
        ),
        noise_sigma=0.1,
        brightness_sigma=0.5,
        ms_centers=np.asarray(MS_CENTERS),
        hs_centers=np.asarray(HS_CENTERS),
        srf_fwhm=FWHM,
        test_fraction=0.8,
        seed=SEED,
    )


def main():
    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "metamer_scene.json"
    out.parent.mkdir(exist_ok=True)
    out.write_text(build_spec().to_json() + "\n", encoding="utf-8")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
