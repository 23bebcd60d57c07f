"""Basin radius of the plateau flow for growing M, and its jump under the horizontal shift.

alpha_M increases with M towards a left-computable limit; the shifted
profile moves the radius by exactly 2^-theta(n).
"""

import argparse
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from noncomp_lab.exactnum import Dyadic
from noncomp_lab.planarflow import basin_radius_estimate, default_prefix, modulus_theta, profile_build, shift_profile
from noncomp_lab.svg import line_chart


@dataclass
class RadiusConfig:
    Ms: list[int] = field(default_factory=lambda: list(range(1, 11)))
    shifts: list[int] = field(default_factory=lambda: [1, 3, 5, 8])
    budget: int = 128
    tol_bits: int = 30
    out: str = "out/plateau_radius"


def run(cfg: RadiusConfig) -> dict:
    prefix = default_prefix(cfg.budget)
    tol = Dyadic(1, -cfg.tol_bits)
    radii = []
    for M in cfg.Ms:
        prof = profile_build(prefix, M)
        est = basin_radius_estimate(prof, tol=tol)
        radii.append({"M": M, "alpha_M": str(prof.alpha_M), "alpha_float": float(prof.alpha_M),
                      "estimate_lo": float(est.lo), "estimate_hi": float(est.hi)})
    base = profile_build(prefix, cfg.Ms[-1])
    shifts = []
    for n in cfg.shifts:
        est = basin_radius_estimate(shift_profile(base, n), tol=tol)
        th = modulus_theta(base, n)
        shifts.append({"n": n, "theta": th, "jump_lo": float(est.lo - base.alpha_M),
                       "jump_hi": float(est.hi - base.alpha_M), "expected": 2.0**-th})
    return {"radii": radii, "shifts": shifts}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=RadiusConfig.out)
    args = ap.parse_args()
    cfg = RadiusConfig(out=args.out)
    res = run(cfg)
    for r in res["radii"]:
        print(f"M={r['M']:2d} alpha_M={r['alpha_float']:.12f}")
    for s in res["shifts"]:
        print(f"n={s['n']} theta={s['theta']} jump in [{s['jump_lo']:.3e}, {s['jump_hi']:.3e}] expected {s['expected']:.3e}")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "radius.json").write_text(json.dumps({"config": asdict(cfg), **res}, indent=2))
    (out / "radius.svg").write_text(line_chart(
        {"alpha_M": ([r["M"] for r in res["radii"]], [r["alpha_float"] for r in res["radii"]])},
        title="squared basin radius vs M"))


if __name__ == "__main__":
    main()
