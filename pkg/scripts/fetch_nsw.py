#!/usr/bin/env python3
"""Build ``nsw_dw.csv`` (Dehejia-Wahba NSW subset, 445 rows) for the case study.

The data are not shipped with this package.  This script downloads the
``causaldata`` source distribution with pip, reads the bundled Stata file and
writes a plain CSV with columns::

    treat,age,educ,black,hisp,married,nodegree,re74,re75,re78

Usage::

    python scripts/fetch_nsw.py [output.csv]     # default: data/nsw_dw.csv
"""

import subprocess
import sys
import tarfile
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd

COLUMNS = ["treat", "age", "educ", "black", "hisp", "married", "nodegree",
           "re74", "re75", "re78"]


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    out = Path(argv[0]) if argv else Path(__file__).resolve().parents[1] / "data" / "nsw_dw.csv"
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "causaldata==0.1.5",
             "--no-deps", "--no-binary", ":all:", "-d", tmp, "-q"],
            check=True,
        )
        sdist = next(Path(tmp).glob("causaldata-*.tar.gz"))
        with tarfile.open(sdist) as tar:
            member = next(m for m in tar.getmembers() if m.name.endswith("nsw_mixtape.dta"))
            tar.extract(member, tmp)
        frame = pd.read_stata(Path(tmp) / member.name)

    frame = frame.rename(columns={"marr": "married"})[COLUMNS]
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(COLUMNS) + "\n")
        for row in frame.itertuples(index=False):
            cells = []
            for col, value in zip(COLUMNS, row):
                if col.startswith("re"):
                    # stored as float32; shortest float32 repr recovers the published values
                    cells.append(str(np.float32(value)))
                else:
                    cells.append(str(int(value)))
            fh.write(",".join(cells) + "\n")
    print(f"wrote {len(frame)} rows to {out}")


if __name__ == "__main__":
    main()
