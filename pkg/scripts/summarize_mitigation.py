"""Print the mitigation table as raw vs mitigated errors per proxy variant.

    python scripts/summarize_mitigation.py results/mitigate/mitigate.csv
"""
import csv
import sys
from collections import defaultdict


def main(path: str) -> None:
    groups = defaultdict(list)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            label = row["proxy"] + ("+map" if row["mapped"] == "1" else "")
            groups[(row["distribution"], label)].append(row)
    for (dist, label), rows in sorted(groups.items()):
        print(f"{dist} {label}")
        print(f"  {'sigma':>8} {'raw dX':>9} {'dX':>9} {'raw dY':>9} {'dY':>9} {'raw dZ':>9} {'dZ':>9}")
        for r in sorted(rows, key=lambda r: float(r["sigma"])):
            vals = [float(r[k]) for k in ("sigma", "raw_dx", "dx", "raw_dy", "dy", "raw_dz", "dz")]
            print("  " + " ".join(f"{v:9.4f}" if i else f"{v:8.4f}" for i, v in enumerate(vals)))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "results/mitigate/mitigate.csv")
