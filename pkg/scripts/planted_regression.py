"""Planted remaining-time regression: tree and linear vs ZeroR.

    python3 scripts/planted_regression.py --seeds 0 1 2
"""
import argparse

from foe_predict.encoding import Composite, LastNOneHot, TimeDeltas
from foe_predict.ml import LinearSpec, TreeSpec, ZeroRSpec, prepare_holdout, score
from foe_predict.parser import parse_rule
from foe_predict.synthetic import REMAINING_TIME_RULE, staged_log

MS_PER_HOUR = 3_600_000


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--traces", type=int, default=600)
    args = ap.parse_args()

    rule = parse_rule(REMAINING_TIME_RULE)
    encodings = {
        "activity": [LastNOneHot(("concept:name",))],
        "activity+deltas": [Composite((LastNOneHot(("concept:name",)), TimeDeltas()))],
    }
    specs = [("ZeroR", ZeroRSpec()), ("tree", TreeSpec()), ("linear", LinearSpec())]
    print(f"{'seed':>4}  {'encoding':<16}{'model':<8}{'MAE (h)':>10}{'RMSE (h)':>10}")
    for seed in args.seeds:
        log = staged_log(args.traces, seed=seed)
        for enc_name, enc in encodings.items():
            prepared = prepare_holdout(rule, log, enc)
            for name, spec in specs:
                m = score(prepared, spec).metrics
                print(f"{seed:>4}  {enc_name:<16}{name:<8}{m.mae / MS_PER_HOUR:10.3f}"
                      f"{m.rmse / MS_PER_HOUR:10.3f}")


if __name__ == "__main__":
    main()
