"""Write exact Kendall tau null PMFs as CSV files.

    python3 scripts/kendall_tables.py out_dir 5 10 20
"""

import sys
from pathlib import Path

from extremalpp.exactdist import kendall_pmf


def main(out_dir="results/kendall", *ns):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for n in (int(v) for v in (ns or (5, 10, 20))):
        pmf = kendall_pmf(n)
        path = out / f"kendall_n{n}.csv"
        path.write_text(pmf.to_csv())
        print(f"{path}: {len(pmf.support)} values, variance {float(pmf.variance()):.6g}")


if __name__ == "__main__":
    main(*sys.argv[1:])
