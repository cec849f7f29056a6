"""How the DP-QPSK implementation penalty shapes the dual-CUT zero-error readouts.

For each candidate penalty, counts QPSK readouts at the <1e-8 floor and how
many of those coincide with an error-free 16QAM interval. Used to pick the
shipped QPSK penalty: too small and QPSK counts zero errors even during
fades that break 16QAM, too large and QPSK almost never reaches the floor.
"""

import argparse
from dataclasses import replace

from fsofeeder.campaign import run_dual_cut
from fsofeeder.config import load_config
from fsofeeder.fec import IntervalClass


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/dual_cut_calibrated.ini")
    ap.add_argument("--penalties", default="2.0,2.5,3.0,3.5,4.0,4.5")
    args = ap.parse_args()

    cfg = load_config(args.config)
    plan = cfg.build_plan()
    link = cfg.build_link()
    base = cfg.build_campaign(plan)
    print("penalty_db  qpsk_floor  16qam_valid_at_floor  share")
    for pen in (float(p) for p in args.penalties.split(",")):
        penalties = {**base.penalties, "DPQPSK": pen}
        run = run_dual_cut(plan, link, replace(base, penalties=penalties))
        even, odd = run.dual_slots
        q16 = {r.t_start: r for r in run.records_for(even)}
        floor = [r for r in run.records_for(odd) if r.below_floor]
        ok = sum(q16[r.t_start].interval_class is IntervalClass.VALID for r in floor)
        share = ok / len(floor) if floor else float("nan")
        print(f"{pen:10.2f}  {len(floor):10d}  {ok:20d}  {share:5.3f}")


if __name__ == "__main__":
    main()
