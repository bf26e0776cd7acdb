"""Parallel driver for the single-station fixture seed search.

Scans seed ranges on worker processes, collects every candidate that clears
all calibration windows, and emits the best-scoring one.
"""

from __future__ import annotations

import json
import multiprocessing as mp
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))
sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

import make_patiyapura as mk  # noqa: E402


def scan(args):
    start, count = args
    found = []
    for seed in range(start, start + count):
        d, _ = build = mk.build_deviation_path(seed)
        d = build[0]
        if d is None:
            continue
        x_train = (mk.MU + d[: mk.T_TRAIN])[:, mk.CSV_ORDER]
        payload = mk.evaluate_train_criteria(x_train)
        if payload is None:
            continue
        s = mk.calibrate_scale(d)
        if s is None:
            continue
        x_full = (mk.MU + s * d)[:, mk.CSV_ORDER]
        if not mk.plausibility(x_full):
            continue
        payload["seed"], payload["scale"] = seed, s
        payload["score"] = mk.score(payload)
        found.append(payload)
        print(f"[worker] candidate seed={seed} score={payload['score']:.3f}", flush=True)
    return found


def main():
    total = int(sys.argv[1]) if len(sys.argv) > 1 else 40000
    workers = 2
    chunk = 500
    ranges = [(s, chunk) for s in range(0, total, chunk)]
    t0 = time.time()
    all_found = []
    with mp.Pool(workers) as pool:
        for result in pool.imap_unordered(scan, ranges):
            all_found.extend(result)
            if all_found:
                best = min(all_found, key=lambda p: p["score"])
                Path("/tmp/patiyapura_candidates.json").write_text(json.dumps(all_found, default=float))
    print(f"search over {total} seeds took {time.time()-t0:.0f}s; {len(all_found)} candidates")
    if not all_found:
        sys.exit(1)
    best = min(all_found, key=lambda p: p["score"])
    print("best:", json.dumps(best, default=float))
    d, _ = mk.build_deviation_path(int(best["seed"]))
    x_csv = (mk.MU + best["scale"] * d)[:, mk.CSV_ORDER]
    out = Path(__file__).resolve().parents[1] / "src" / "gwts" / "fixtures" / "patiyapura.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    mk.emit_csv(x_csv, out)
    final = mk.verify_csv(out)
    print("emitted + verified:", out)
    print(json.dumps(final, default=float))


if __name__ == "__main__":
    main()
