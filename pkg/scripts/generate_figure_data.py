"""Regenerate the figure CSVs: sandwich-profit curves over attack size for
the local and global rules, and loss-fraction curves over the price ratio
for a few pool shares.

Usage: python scripts/generate_figure_data.py --out-dir figures/
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from ammlab.cli import main as cli_main  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="figures")
    args = parser.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    jobs = [
        ["sweep", "mev", "--xi", "400000", "--victim", "40000",
         "--range", "0:200000:1000", "--algorithm", "cpmm",
         "--out", str(out / "mev_profit_cpmm.csv")],
        ["sweep", "mev", "--xi", "400000", "--victim", "40000",
         "--range", "0:200000:1000", "--algorithm", "gmm", "--x", "800000",
         "--out", str(out / "mev_profit_gmm.csv")],
    ]
    for alpha in ("0.01", "0.05", "0.1", "0.25", "0.5"):
        jobs.append(
            ["sweep", "il", "--alpha", alpha, "--ratio-range", "0.0625:16:0.0625",
             "--out", str(out / f"il_alpha_{alpha}.csv")]
        )
    for job in jobs:
        rc = cli_main(job)
        if rc != 0:
            print(f"failed: {' '.join(job)}", file=sys.stderr)
            return rc
    print(f"wrote {len(jobs)} CSVs to {out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
