"""Smoke test for the bbt_lab extension module.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`
or `pip install crates/python`, then run `python python/smoke_test.py`.
"""

import os
import sys
import tempfile
from fractions import Fraction

import bbt_lab


def check(name, cond):
    print(f"{'ok  ' if cond else 'FAIL'} {name}")
    return cond


def main():
    results = []

    maj = bbt_lab.TruthTable.family("majority", 3)
    a = bbt_lab.analyze(maj)
    results.append(check("majority-3 spectrum", a["spectrum"] == [0, 4, 4, 0, 4, 0, 0, -4]))
    results.append(check("majority-3 log2 mu = -1", a["log2_mu"] == Fraction(-1)))

    parity = bbt_lab.TruthTable.family("parity", 3)
    p = bbt_lab.analyze(parity)
    results.append(check("parity-3 log2 mu = -3/2", p["log2_mu"] == Fraction(-3, 2)))
    results.append(check("parity-3 Jensen slack = 0", p["bound_slacks"]["jensen"] == 0))

    cert = bbt_lab.min_support(maj)
    results.append(check("majority-3 min support = 3", cert.min_support == 3 and cert.optimal))
    results.append(check("certificate mask verifies", cert.mask.verify(maj)[0]))

    f = bbt_lab.TruthTable.from_fid(4, 0x1EE1)
    mask, status, _ = bbt_lab.multi_start_repair(f)
    results.append(check(f"repair succeeds ({status})", mask.verify(f)[0]))

    results.append(check("14 NPN classes at n=3", len(bbt_lab.enumerate_npn_classes(3)) == 14))
    results.append(check("group size 7680 at n=5", bbt_lab.npn_group_size(5) == 7680))
    neg = bbt_lab.TruthTable([-v for v in parity.values])
    results.append(check("output negation keeps class",
                         bbt_lab.canonicalize(neg) == bbt_lab.canonicalize(parity)))

    census = bbt_lab.separation_census(3)
    results.append(check("degree histogram sums to 256",
                         sum(census["degree_histogram"].values()) == 256))
    results.append(check("pair ratio key values",
                         (bbt_lab.pair_ratio(1, 0), bbt_lab.pair_ratio(1, 1),
                          bbt_lab.pair_ratio(1, -1)) == (1.0, 0.0, 0.0)))

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "certs.jsonl")
        certs = [bbt_lab.min_support(bbt_lab.TruthTable.from_fid(2, fid)) for fid in range(16)]
        bbt_lab.save_certificates(path, certs)
        loaded = bbt_lab.load_certificates(path)
        report = bbt_lab.audit_certificates(path)
        results.append(check("certificate round trip and audit",
                             len(loaded) == 16 and report["passed"] == 16 and not report["failures"]))

    try:
        bbt_lab.TruthTable([1, 2])
        results.append(check("bad entry rejected", False))
    except bbt_lab.BbtError:
        results.append(check("bad entry rejected", True))

    print(f"{sum(results)}/{len(results)} checks passed")
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
