"""Golden round tables for the bundled Ward 9 fixture.

Tabulates a BLT profile with the closed forms in fit_ward9.py, which share
no code with the Rust crate, and prints JSON consumed by the acceptance
tests: WIGM round tallies and Meek instant quotas, keep factors and hopeful
tallies along the canonical path and at the branch state.

usage: python3 tools/ward9_tables.py crates/core/fixtures/ward9.blt > crates/core/fixtures/ward9_tables.json
"""
import json
import sys

import fit_ward9 as F
from polish_ward9 import read_blt

STATES = {
    "root": ((), (F.L, F.A, F.J, F.LU, F.D, F.H)),
    "elect_L": ((F.L,), (F.A, F.J, F.LU, F.D, F.H)),
    "eliminate_H": ((F.L,), (F.A, F.J, F.LU, F.D)),
    "elect_A": ((F.L, F.A), (F.J, F.LU, F.D)),
    "eliminate_D": ((F.L, F.A), (F.J, F.LU)),
    "branch_vertex": ((F.L, F.A), (F.J, F.LU, F.D, F.H)),
}


def meek(ballots, winners, hopefuls, m=F.M_SEATS, e=F.EPS):
    n = sum(ballots.values())
    # reach[p] and exhaust[p]: ballots whose winner prefix is p, overall and with no hopeful after
    reach, exhaust, lands = {}, {}, {}
    ghosts = 0
    for r, c in ballots.items():
        pat = []
        first = None
        for x in r:
            if x in hopefuls:
                first = x
                break
            if x in winners:
                pat.append(winners.index(x))
        pat = tuple(pat)
        if not pat and first is None:
            ghosts += c
        for k in range(1, len(pat) + 1):
            reach[pat[:k]] = reach.get(pat[:k], 0) + c
        if first is None:
            exhaust[pat] = exhaust.get(pat, 0) + c
        else:
            lands[(pat, first)] = lands.get((pat, first), 0) + c
    ng = n - ghosts
    if not winners:
        ks = ()
        q = ng / (m + 1) + e
    elif len(winners) == 1:
        t1 = exhaust.get((0,), 0)
        k1 = (ng - t1 + (m + 1) * e) / ((m + 1) * reach[(0,)] - t1)
        ks = (k1,)
        q = k1 * reach[(0,)]
    else:
        T1, T2 = reach.get((0,), 0), reach.get((1,), 0)
        T12, T21 = reach.get((0, 1), 0), reach.get((1, 0), 0)
        t1, t2 = exhaust.get((0,), 0), exhaust.get((1,), 0)
        t12, t21 = exhaust.get((0, 1), 0), exhaust.get((1, 0), 0)
        k2 = F.least_positive_root(*F.deg2_coeffs(T1, T2, T12, T21, t1, t2, t12, t21, ng))
        k1 = F.least_positive_root(*F.deg2_coeffs(T2, T1, T21, T12, t2, t1, t21, t12, ng))
        ks = (k1, k2)
        q = (ng - (1 - k1) * t1 - (1 - k2) * t2 - (1 - k1) * (1 - k2) * (t12 + t21)) / (m + 1) + e

    def weight(pat):
        w = 1.0
        for i in pat:
            w *= 1 - ks[i]
        return w

    tallies = {h: 0.0 for h in hopefuls}
    for (pat, h), c in lands.items():
        tallies[h] += weight(pat) * c
    return ks, q, tallies


def main():
    counts = read_blt(sys.argv[1])
    ballots = {F.ALL[i]: c for i, c in counts.items()}
    name = lambda c: F.NAMES[c]
    st = F.State(dict(counts))
    wigm = {"1": {name(c): float(v) for c, v in F.FIRST.items()}}
    for rd, t in F.wigm_tallies(st).items():
        wigm[str(rd)] = {name(c): round(v, 6) for c, v in t.items()}
    out = {"wigm_quota": 923, "wigm": wigm, "meek": {}}
    for key, (w, h) in STATES.items():
        ks, q, t = meek(ballots, w, h)
        out["meek"][key] = {
            "winners": [name(c) for c in w],
            "hopefuls": [name(c) for c in h],
            "keep_factors": [round(k, 8) for k in ks],
            "quota": round(q, 6),
            "tallies": {name(c): round(v, 6) for c, v in t.items()},
        }
    json.dump(out, sys.stdout, indent=2)
    print()


if __name__ == "__main__":
    main()
