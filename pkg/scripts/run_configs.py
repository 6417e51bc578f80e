"""Run every config in a directory through the CLI and tabulate assertion results.

    python3 scripts/run_configs.py configs/acceptance
"""

import json
import subprocess
import sys
from pathlib import Path


def main(directory="configs/acceptance"):
    rows = []
    for cfg in sorted(Path(directory).glob("*.cfg")):
        proc = subprocess.run([sys.executable, "-m", "extremalpp", "simulate", "--config", str(cfg)],
                              capture_output=True, text=True)
        if proc.returncode not in (0, 1):
            rows.append((cfg.name, f"exit {proc.returncode}", proc.stderr.strip()))
            continue
        summary = json.loads(proc.stdout)
        for key, check in summary["assertions"].items():
            status = "PASS" if check["pass"] else "FAIL"
            rows.append((cfg.name, status, f"{key} = {check['value']:.6g} ({check['expr']})"))
    width = max(len(r[0]) for r in rows)
    for name, status, detail in rows:
        print(f"{name:<{width}}  {status:<6}  {detail}")


if __name__ == "__main__":
    main(*sys.argv[1:])
