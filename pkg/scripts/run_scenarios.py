"""Run every bundled scenario and write one canonical JSON report per scenario.

    python3 scripts/run_scenarios.py --out reports/
"""

import argparse
import json
import sys
import time
from pathlib import Path

from zerodim.scenarios import SCENARIOS


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="reports")
    ap.add_argument("--only", nargs="*", choices=sorted(SCENARIOS))
    ap.add_argument("--timing", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    failed = []
    for name in args.only or sorted(SCENARIOS):
        t = time.perf_counter()
        res = SCENARIOS[name]()
        path = out / f"{name}.json"
        path.write_text(json.dumps({"command": "scenarios", **res.to_json(args.timing)},
                                   indent=2, sort_keys=True) + "\n")
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} {name:<16} {len(res.verdicts):3d} verdicts  {time.perf_counter() - t:6.1f}s  -> {path}")
        if not res.passed:
            failed.append(name)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
