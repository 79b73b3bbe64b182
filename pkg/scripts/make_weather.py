"""Regenerate the bundled illustrative weather file.

Daily values are drawn around monthly normals that resemble Ames, IA in 1999.
They are not observations; swap in a real series via ``weather_path``.
"""
import argparse
import csv
from pathlib import Path

import numpy as np

# month -> (mean tmax, mean tmin, total rain mm, wet days)
NORMALS = {
    1: (-2.0, -12.0, 20.0, 6),
    2: (2.0, -9.0, 25.0, 6),
    3: (9.0, -3.0, 55.0, 8),
    4: (17.0, 4.0, 90.0, 10),
    5: (23.0, 10.5, 115.0, 11),
    6: (28.0, 16.0, 125.0, 10),
    7: (30.5, 18.5, 105.0, 9),
    8: (28.5, 16.5, 105.0, 9),
    9: (24.0, 11.0, 80.0, 8),
    10: (17.0, 4.0, 60.0, 7),
    11: (8.0, -2.5, 45.0, 6),
    12: (0.0, -9.0, 25.0, 6),
}
DAYS = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31]


def generate(seed=1999):
    rng = np.random.default_rng(seed)
    rows = []
    doy = 1
    for month, ndays in enumerate(DAYS, start=1):
        tmax_m, tmin_m, rain_m, wet = NORMALS[month]
        wet_idx = set(rng.choice(ndays, size=wet, replace=False).tolist())
        amounts = rng.gamma(0.9, 1.0, size=wet)
        amounts = amounts / amounts.sum() * rain_m
        k = 0
        for d in range(ndays):
            anomaly = rng.normal(0.0, 2.5)
            tmax = tmax_m + anomaly + rng.normal(0.0, 1.0)
            tmin = tmin_m + 0.7 * anomaly + rng.normal(0.0, 1.0)
            if d in wet_idx:
                rain = float(amounts[k])
                k += 1
                tmax -= 2.0
            else:
                rain = 0.0
            tmin = min(tmin, tmax - 1.0)
            rows.append((doy, round(tmax, 1), round(tmin, 1), round(rain, 1)))
            doy += 1
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    default = Path(__file__).resolve().parents[1] / "src" / "agritrust" / "data" / "ames_1999.csv"
    parser.add_argument("--out", type=Path, default=default)
    parser.add_argument("--seed", type=int, default=1999)
    args = parser.parse_args()
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doy", "tmax", "tmin", "rain"])
        writer.writerows(generate(args.seed))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
