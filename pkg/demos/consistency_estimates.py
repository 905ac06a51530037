"""
Estimated versus observed consistency
=====================================

Estimates per-role agent deviations with ``eval_agents``, plugs them into
the consistency measure, and compares that estimate with the modal-verdict
fraction observed over batches of runs.
"""

import numpy as np

from nlguard import fixtures
from nlguard.agents import AgentBundle, FailureMode, FaultProfile
from nlguard.consistency import ConsistencyReport, eval_agents, sigma_triple
from nlguard.executor import run_batch
from nlguard.iolts import classify_weak_unsoundness
from nlguard.steps import strictness_of

model = fixtures.load_model("uca")
eval_suite = fixtures.load_suite("uca-eval")
(tc,) = fixtures.load_suite("uca-single")

rows = []
for p in np.linspace(0.5, 1.0, 6):
    agents = AgentBundle.faulty(model, assert_=FaultProfile(float(p), FailureMode.HALLUCINATE))
    sigmas = sigma_triple(eval_agents(eval_suite, model, agents, 500, seed=3))
    batch = run_batch(tc, model, agents, 20, seed=4)
    rep = ConsistencyReport.compute(tc, strictness_of(tc), sigmas, batch.observed_consistency)
    wu = classify_weak_unsoundness(tc, sigmas, strictness_of(tc))
    rows.append((p, sigmas.sigma_assert, rep.estimated, rep.observed, rep.mre, wu.claim))

print(f"{'p':>5} {'sigma':>7} {'est':>6} {'obs':>6} {'mre':>6}  claim")
for p, s, est, obs, err, claim in rows:
    print(f"{p:5.2f} {s:7.4f} {est:6.3f} {obs:6.3f} {err:6.3f}  {claim}")

errors = np.array([r[4] for r in rows])
print(f"mean relative error over the sweep: {errors.mean():.3f}")
