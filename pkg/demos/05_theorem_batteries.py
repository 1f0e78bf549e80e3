"""Run every identity and inequality battery on random instances.

Each trial draws random SPD pairs and a factored sparse instance, then
checks the full list: divergence nonnegativity and congruence
invariance, the divergence-vs-ln K inequality and its unit-trace
equality case, Kaporin scale/similarity invariances and the kappa2
sandwich, the c-scaling identity, the dual-coordinate identity, the
optimality and flat-interval facts of the complement scaling, and the
gamma-greedy-beats-TSVD comparison.  Failures would be reported as
data, not exceptions.
"""

import json

from bld_kaporin import verify_theorems

report = verify_theorems(trials=100, n_range=(10, 60), seed=7)

width = max(len(name) for name in report["results"])
for name, res in report["results"].items():
    status = "pass" if res["pass"] else "FAIL"
    print(f"{status}  {name:<{width}}  worst = {res['worst']:.3e}  tol = {res['tol']:.1e}")

print(f"\nviolations: {report['violations'] or 'none'}")
print("\nfull report as JSON:")
print(json.dumps(report["spec_echo"], indent=2))
