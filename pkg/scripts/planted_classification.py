"""Planted ping-pong classification: tree vs ZeroR over several seeds.

    python3 scripts/planted_classification.py --seeds 0 1 2 --traces 1000
"""
import argparse
import time

from foe_predict.encoding import LastNOneHot
from foe_predict.ml import LogisticSpec, TreeSpec, ZeroRSpec, prepare_holdout, score
from foe_predict.parser import parse_rule
from foe_predict.synthetic import BOUNCE_RULE, pingpong_log


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--traces", type=int, default=1000)
    ap.add_argument("--positive-rate", type=float, default=0.3)
    ap.add_argument("--max-depth", type=int, default=10)
    args = ap.parse_args()

    rule = parse_rule(BOUNCE_RULE)
    encoder = [LastNOneHot(("concept:name", "org:resource", "impact"))]
    specs = [("ZeroR", ZeroRSpec()), ("tree", TreeSpec(max_depth=args.max_depth)),
             ("logistic", LogisticSpec())]
    print(f"{'seed':>4}  {'model':<9}{'AUC':>8}{'Acc':>8}{'W.Prec':>8}{'W.Rec':>8}{'F':>8}")
    for seed in args.seeds:
        t0 = time.perf_counter()
        log = pingpong_log(args.traces, args.positive_rate, seed=seed)
        prepared = prepare_holdout(rule, log, encoder)
        for name, spec in specs:
            m = score(prepared, spec).metrics
            print(f"{seed:>4}  {name:<9}{m.auc:8.4f}{m.accuracy:8.4f}{m.weighted_precision:8.4f}"
                  f"{m.weighted_recall:8.4f}{m.f_measure:8.4f}")
        print(f"      ({len(prepared.train)} train rows, {len(prepared.test)} test rows, "
              f"{time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()
