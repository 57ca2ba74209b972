"""Ping-pong prediction on the BPIC 2013 incidents log.

The log is not bundled; pass its path or set FOE_PREDICT_BPIC13_INCIDENTS.

    python3 scripts/bpic13_ar_e1.py path/to/BPI_Challenge_2013_incidents.xes.gz
"""
import argparse
import os
import time

from foe_predict.corpus import load_rule
from foe_predict.encoding import LastNOneHot
from foe_predict.event_log import load_xes
from foe_predict.ml import TreeSpec, ZeroRSpec, prepare_holdout, score

ENV = "FOE_PREDICT_BPIC13_INCIDENTS"

ENCODINGS = {
    "activity+resource+impact": [LastNOneHot(("concept:name", "org:resource", "impact"))],
    "activity": [LastNOneHot(("concept:name",))],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("log", nargs="?", default=os.environ.get(ENV))
    ap.add_argument("--rule", default="bpic13_pingpong_group_change")
    args = ap.parse_args()
    if not args.log:
        ap.error(f"give the log path or set {ENV}")

    t0 = time.perf_counter()
    log = load_xes(args.log)
    print(f"{len(log)} traces, {log.n_events} events, loaded in {time.perf_counter() - t0:.1f}s")
    rule = load_rule(args.rule)
    for enc_name, enc in ENCODINGS.items():
        prepared = prepare_holdout(rule, log, enc)
        print(f"\n{enc_name}: {len(prepared.train)} train rows, {len(prepared.test)} test rows")
        for name, spec in (("ZeroR", ZeroRSpec()), ("tree", TreeSpec())):
            m = score(prepared, spec).metrics
            print(f"  {name:<6} AUC {m.auc:.3f}  Acc {m.accuracy:.3f}  W.Prec {m.weighted_precision:.3f}"
                  f"  W.Rec {m.weighted_recall:.3f}  F {m.f_measure:.3f}")
    print(f"\ntotal {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
