"""
Verdicts under erring and hallucinating agents
==============================================

Runs the news test 1,000 times per setting with fault-injected agents and
tallies verdicts and recognized run shapes. Erring agents never cause a
FAIL; hallucinating agents do, and some wrong navigations slip through
readiness.
"""

from collections import Counter

from nlguard import fixtures
from nlguard.agents import AgentBundle, FailureMode, FaultProfile
from nlguard.executor import run_batch
from nlguard.regimes import classify_run

model = fixtures.load_model("uca")
(tc,) = fixtures.load_suite("uca")

for regime, mode in (("B", FailureMode.ERROR), ("C", FailureMode.HALLUCINATE)):
    for p in (0.5, 0.9):
        prof = FaultProfile(p, mode)
        agents = AgentBundle.faulty(model, nav=prof, readiness=prof, assert_=prof)
        batch = run_batch(tc, model, agents, 1000, seed=1, keep_results=True)
        shapes = Counter(classify_run(regime, r, tc, model) for r in batch.results)
        verdicts = {v.value: n for v, n in sorted(batch.histogram.items())}
        print(f"{mode.value:11} p={p}: {verdicts}  consistency={batch.observed_consistency:.3f}")
        for name, n in shapes.most_common():
            print(f"    {name}: {n}")
