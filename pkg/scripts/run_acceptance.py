"""Run the acceptance suite and print only the PASS/FAIL lines.

    python3 scripts/run_acceptance.py
"""

import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def main():
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           str(ROOT / "tests" / "test_acceptance.py")],
                          cwd=ROOT, capture_output=True, text=True)
    lines = [l for l in proc.stdout.splitlines() if l.startswith("ACCEPTANCE")]
    # each line appears inline and again in the summary section
    seen = []
    for l in lines:
        if l not in seen:
            seen.append(l)
    print("\n".join(seen))
    if proc.returncode:
        print(proc.stdout[-3000:], file=sys.stderr)
    return proc.returncode


if __name__ == "__main__":
    sys.exit(main())
