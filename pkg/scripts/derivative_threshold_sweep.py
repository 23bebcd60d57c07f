"""Misclassification and gap counts of the derivative threshold as the perturbation grows.

Below ``1/alpha`` the decision should never fail; above it adversarial
bumps start to push mu across the gap.
"""

import argparse
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from noncomp_lab.constructions import robust_derivative_harness
from noncomp_lab.planarflow import default_prefix
from noncomp_lab.svg import line_chart


@dataclass
class SweepConfig:
    multiples: list[str] = field(default_factory=lambda: ["0", "1/4", "1/2", "9/10", "1", "3/2", "2", "3"])
    trials: int = 40
    seed: int = 0
    budget: int = 128
    out: str = "out/derivative_sweep"


def run(cfg: SweepConfig) -> list[dict]:
    prefix = default_prefix(cfg.budget)
    alpha = Fraction(5, 2)
    rows = []
    for m in cfg.multiples:
        scale = Fraction(m) / alpha
        rep = robust_derivative_harness(cfg.trials, scale, prefix, seed=cfg.seed)
        rows.append({"multiple": m, "scale": str(scale), "decisions": len(rep.records),
                     "misclassifications": rep.misclassifications, "gap_violations": rep.gap_violations})
        print(f"scale {m}/alpha: {rep.misclassifications} wrong, {rep.gap_violations} gap, of {len(rep.records)}")
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=SweepConfig.trials)
    ap.add_argument("--seed", type=int, default=SweepConfig.seed)
    ap.add_argument("--out", default=SweepConfig.out)
    args = ap.parse_args()
    cfg = SweepConfig(trials=args.trials, seed=args.seed, out=args.out)
    rows = run(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.json").write_text(json.dumps({"config": asdict(cfg), "rows": rows}, indent=2, sort_keys=True))
    x = [float(Fraction(r["multiple"])) for r in rows]
    (out / "sweep.svg").write_text(line_chart(
        {"misclassified": (x, [r["misclassifications"] for r in rows]),
         "gap": (x, [r["gap_violations"] for r in rows])},
        title="threshold failures vs ||q||_1 (units of 1/alpha)"))


if __name__ == "__main__":
    main()
