"""
Conformance of mutants
======================

Checks each shipped mutant of the three-page model against the model's
specification IOLTS and prints which ones ioco tells apart.
"""

from nlguard import fixtures
from nlguard.aut import mutate, spec_of
from nlguard.iolts import ioco_check

model = fixtures.load_model("uca")
spec = spec_of(model)
print(f"spec: {len(spec.states)} states, {len(spec.transitions)} transitions")

for mutant in fixtures.UCA_MUTANTS:
    rep = ioco_check(spec_of(mutate(model, mutant.mutation)), spec, max_depth=10)
    status = "conformant" if rep.conformant else "violation"
    print(f"{mutant.name:36} {status:10} {mutant.mutation.describe()}")
    for trace, extra in rep.violations[:1]:
        print(f"    after {' '.join(trace)} -> unexpected {sorted(extra)}")
