"""Freezes Welch t, df and one-sided p from SciPy for the C++ test suite.

Usage: python3 tools/oracles/welch_oracle.py > tests/data/welch_oracle.json
"""

import json
import sys

import numpy as np
import scipy
from scipy import stats
from scipy.stats._stats_py import _unequal_var_ttest_denom


def main() -> None:
    rng = np.random.default_rng(20240611)
    cases = []
    while len(cases) < 1000:
        m1, m2 = rng.uniform(0.0, 1.0, 2)
        v1, v2 = 10.0 ** rng.uniform(-5.0, 0.0, 2)
        n1, n2 = (int(x) for x in rng.integers(2, 2001, 2))
        df, _ = _unequal_var_ttest_denom(v1, n1, v2, n2)
        res = stats.ttest_ind_from_stats(m1, np.sqrt(v1), n1, m2, np.sqrt(v2), n2,
                                         equal_var=False, alternative="greater")
        cases.append({
            "a": {"mean": float(m1), "variance": float(v1), "n": n1},
            "b": {"mean": float(m2), "variance": float(v2), "n": n2},
            "t": float(res.statistic),
            "df": float(df),
            "p_one_sided": float(res.pvalue),
        })
    json.dump({"generator": f"scipy {scipy.__version__} ttest_ind_from_stats(equal_var=False)",
               "cases": cases}, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
