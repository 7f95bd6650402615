"""eps_c and R_inf for the constant-type and noble rotation numbers of T5.

Resumable: each bisection keeps a state file next to the output.
"""

import argparse
import json
from pathlib import Path

from kamscale import reference as ref
from kamscale.cache import Cache, ResultStore, default_cache_dir
from kamscale.greene import ClassificationRules, critical_function
from kamscale.rotation import parse_bracket

ap = argparse.ArgumentParser()
ap.add_argument("--q-max", type=int, default=5000)
ap.add_argument("--digits", type=int, default=4)
ap.add_argument("--out", type=Path, default=Path("runs/critical"))
a = ap.parse_args()
a.out.mkdir(parents=True, exist_ok=True)
store = ResultStore(Cache(default_cache_dir()))
rules = ClassificationRules(q_max=a.q_max)
for w, eps_ref, _ in ref.T5:
    tag = w.strip("[]").replace(",", "_").replace("(", "").replace(")", "")
    try:
        est = critical_function(parse_bracket(w), a.digits, rules=rules, store=store,
                                state_path=a.out / f"{tag}.state")
    except Exception as exc:  # keep scanning; the state file holds the bracket
        print(f"{w:12s} {type(exc).__name__}: {exc}")
        continue
    (a.out / f"{tag}.json").write_text(json.dumps(est.to_json(), indent=1) + "\n")
    print(f"{w:12s} {est.value}  [{est.lo}, {est.hi}]  ref {eps_ref}")
