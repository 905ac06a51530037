"""
Guarded execution of the ARTEMIS news test
==========================================

Executes the five-step news test against the bundled three-page model,
first with oracle agents and then against two mutants, and prints the
covered path of ``tc|AUT`` for each run.
"""

from nlguard import fixtures
from nlguard.agents import AgentBundle
from nlguard.aut import Mutation, mutate
from nlguard.executor import execute

model = fixtures.load_model("uca")
(tc,) = fixtures.load_suite("uca")

for nav in tc.nav_actions:
    print(f"action: {nav.raw_text!r:45} strict form: {nav.strict_form}")

# %%
# With oracle agents every guard holds and both assertions are true.
res = execute(tc, model, AgentBundle.oracle(model))
print(res.verdict.value)
print(" ".join(res.trace))

# %%
# Removing the ALL NEWS link makes readiness of the third action false.
broken = mutate(model, Mutation.remove_element("eu", "e1"))
res = execute(tc, broken, AgentBundle.oracle(broken))
print(res.verdict.value, "-", res.diagnostic)

# %%
# Redirecting ALL NEWS to the home page yields a false ARTEMIS assertion.
wrong = mutate(model, Mutation.redirect("eu", "Click 'ALL NEWS'", "home"))
res = execute(tc, wrong, AgentBundle.oracle(wrong))
print(res.verdict.value, "-", res.diagnostic)

# %%
# The full tc|AUT, including the branches the run did not take.
print(res.iolts.render())
