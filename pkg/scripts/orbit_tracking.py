"""Worst orbit error of perturbed machine maps against the exact transition, for several delta."""

import argparse
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from noncomp_lab.embedding import proposition1_harness
from noncomp_lab.svg import line_chart


@dataclass
class TrackingConfig:
    deltas: list[str] = field(default_factory=lambda: ["0", "1/40", "1/20", "1/10", "3/20", "1/5", "1/4"])
    epsilon: str = "1/5"
    trials: int = 40
    j_max: int = 30
    seed: int = 0
    out: str = "out/tracking"


def run(cfg: TrackingConfig) -> list[dict]:
    rows = []
    for d in cfg.deltas:
        rep = proposition1_harness(Fraction(d), Fraction(cfg.epsilon), cfg.trials, cfg.j_max, cfg.seed)
        worst = max(r["max_error_after_step0"] for r in rep["records"])
        rows.append({"delta": d, "violations": rep["violations"], "worst_error": worst,
                     "precondition_ok": rep["precondition_ok"]})
        print(rows[-1])
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=TrackingConfig.trials)
    ap.add_argument("--seed", type=int, default=TrackingConfig.seed)
    ap.add_argument("--out", default=TrackingConfig.out)
    args = ap.parse_args()
    cfg = TrackingConfig(trials=args.trials, seed=args.seed, out=args.out)
    rows = run(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "tracking.json").write_text(json.dumps({"config": asdict(cfg), "rows": rows}, indent=2))
    x = [float(Fraction(r["delta"])) for r in rows]
    (out / "tracking.svg").write_text(line_chart(
        {"worst error": (x, [r["worst_error"] for r in rows]), "epsilon": (x, [float(Fraction(cfg.epsilon))] * len(x))},
        title="orbit error after the first step vs delta"))


if __name__ == "__main__":
    main()
