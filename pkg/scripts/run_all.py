"""Run every shipped sweep config and write reports under results/."""
import argparse
import sys
import time
from pathlib import Path

from strichartz_lab.sweep import emit_report, load_config, run_sweep

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", type=Path, default=ROOT / "configs")
    ap.add_argument("--out", type=Path, default=ROOT / "results")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    status = 0
    for path in sorted(args.configs.glob("*.json")):
        cfg = load_config(path)
        if args.jobs != 1:
            cfg = type(cfg).from_json({**cfg.to_json(), "jobs": args.jobs})
        t = time.perf_counter()
        rep = run_sweep(cfg)
        emit_report(rep, args.out, ["json", "csv"], stem=path.stem)
        verdict = "PASS" if rep.passed else "FAIL"
        print(f"{path.stem:16s} {verdict}  {time.perf_counter() - t:6.1f}s")
        for c in rep.fits + rep.checks:
            if c["verdict"] != "PASS":
                print(f"    {c['name']}: value={c['value']} target={c['target']} tol={c['tolerance']}")
        status |= not rep.passed
    return 2 if status else 0


if __name__ == "__main__":
    sys.exit(main())
