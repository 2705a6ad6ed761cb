"""Downloads the Sicily acute-coronary-event series and writes data/sicily.csv.

The source table is the `sicily.csv` distributed with the interrupted time
series tutorial by Bernal, Cummins and Gasparrini (Int. J. Epidemiol. 2017).
Its columns are year, month, aces, time, smokban, pop and stdpop. The output
keeps `time` (months since January 2002, starting at 1) and adds the
age-standardized rate per 100 000, `rate = aces / stdpop * 1e5`.

The smoking ban starts in January 2005, which is `time = 37`; analyses use
`threshold = 37`.

Usage: python3 scripts/fetch_sicily.py [--url URL] [--source local.csv]
"""

import argparse
import csv
import io
import sys
import urllib.request
from pathlib import Path

DEFAULT_URL = "https://raw.githubusercontent.com/gasparrini/2017_bernal_IJE_Rcodedata/master/sicily.csv"
OUT = Path(__file__).resolve().parent.parent / "data" / "sicily.csv"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--url", default=DEFAULT_URL)
    parser.add_argument("--source", type=Path, help="use a local copy instead of downloading")
    args = parser.parse_args()

    if args.source:
        text = args.source.read_text(encoding="utf-8")
    else:
        with urllib.request.urlopen(args.url, timeout=30) as resp:
            text = resp.read().decode("utf-8")

    rows = list(csv.DictReader(io.StringIO(text)))
    missing = {"time", "aces", "stdpop"} - set(rows[0] if rows else {})
    if missing:
        sys.exit(f"source table lacks columns: {', '.join(sorted(missing))}")

    OUT.parent.mkdir(exist_ok=True)
    with open(OUT, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["time", "rate"])
        for r in rows:
            w.writerow([int(float(r["time"])), repr(float(r["aces"]) / float(r["stdpop"]) * 1e5)])
    print(f"wrote {len(rows)} rows to {OUT}")


if __name__ == "__main__":
    main()
