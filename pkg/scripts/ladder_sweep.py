"""Critical points and values of g_n, m_n along the shipped geometric ladder, as CSV."""

import argparse
import json
import sys

from charm_kit.approx import build_ladder, critical_tracking, sweep_csv, widom_products
from charm_kit.moebius import parse_config
from charm_kit.runner import corpus_paths

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--scenario", default="geometric_ladder")
p.add_argument("--out")
args = p.parse_args()

doc = next(json.loads(q.read_text()) for q in corpus_paths() if q.name == f"{args.scenario}.json")
cfg, pol = parse_config(doc["config"])
ladder = build_ladder(cfg, doc["params"]["levels"], pol)
rep = critical_tracking(ladder, 1j)
text = sweep_csv(rep)
if args.out:
    open(args.out, "w").write(text)
else:
    sys.stdout.write(text)
print("monotone:", rep.monotone, file=sys.stderr)
print("widom products:", widom_products(ladder, 1j), file=sys.stderr)
