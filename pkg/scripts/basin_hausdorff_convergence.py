"""Hausdorff distance of the computed basin boundary against the analytic circle as k grows."""

import argparse
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from noncomp_lab.classifier import compute_basin, default_level
from noncomp_lab.fields import build_field
from noncomp_lab.svg import basin_svg, line_chart


@dataclass
class ConvergenceConfig:
    field_spec: str = "radial:rho2=1/4,sigma2=4/5"
    radius: float = 0.5
    ks: list[int] = field(default_factory=lambda: [4, 8, 16, 32])
    out: str = "out/hausdorff"


def run(cfg: ConvergenceConfig) -> list[dict]:
    F = build_field(cfg.field_spec)
    theta = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
    circle = cfg.radius * np.column_stack([np.cos(theta), np.sin(theta)])
    rows = []
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for k in cfg.ks:
        start = time.perf_counter()
        grid = compute_basin(F, 1, k)
        rows.append({"k": k, "level": default_level(k), "d_H": grid.hausdorff_to(circle), "claim": 1 / k,
                     "unresolved": grid.unresolved_fraction(), "seconds": round(time.perf_counter() - start, 2)})
        (out / f"basin_k{k}.svg").write_text(basin_svg(grid))
        print(rows[-1])
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--field", default=ConvergenceConfig.field_spec)
    ap.add_argument("--radius", type=float, default=ConvergenceConfig.radius,
                    help="radius of the analytic basin boundary")
    ap.add_argument("--out", default=ConvergenceConfig.out)
    args = ap.parse_args()
    cfg = ConvergenceConfig(field_spec=args.field, radius=args.radius, out=args.out)
    rows = run(cfg)
    out = Path(cfg.out)
    (out / "convergence.json").write_text(json.dumps({"config": asdict(cfg), "rows": rows}, indent=2))
    ks = [r["k"] for r in rows]
    (out / "convergence.svg").write_text(line_chart(
        {"d_H": (ks, [r["d_H"] for r in rows]), "1/k": (ks, [r["claim"] for r in rows])},
        title="boundary error vs k", log_y=True))


if __name__ == "__main__":
    main()
