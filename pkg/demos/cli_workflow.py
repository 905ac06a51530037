"""
Command-line workflow
=====================

Drives the ``nlguard`` command from Python: estimate agent sigmas on the
expectation suite, classify the news test with them, then run it with
hallucinating assertion agents. Reports land in a temporary directory.
"""

import json
import tempfile
from pathlib import Path

from nlguard import fixtures
from nlguard.cli import main

out = Path(tempfile.mkdtemp(prefix="nlguard-demo-"))
model = str(fixtures.path("uca.aut"))
fault = ["--fault-assert", "0.9:Hallucinate"]

# %%
# Per-role deviations from 200 runs of the expectation suite.
main(["eval-agents", "--suite", str(fixtures.path("uca-eval.suite")), "--model", model,
      "--n", "200", "--seed", "7", "--out", str(out), *fault])
(sigma_file,) = out.glob("*-sigmas.json")
print(json.dumps(json.loads(sigma_file.read_text())["roles"], indent=2))

# %%
# Consistency estimate and weak-unsoundness claim for the news test.
main(["analyze", "--suite", str(fixtures.path("uca.suite")), "--sigmas", str(sigma_file),
      "--out", str(out)])

# %%
# Twenty runs with the same agents. The report keeps the modal verdict, the
# exit code is 0 only when every single run passed.
code = main(["run", "--suite", str(fixtures.path("uca.suite")), "--model", model, "--n", "20",
             "--seed", "7", "--sigmas", str(sigma_file), "--out", str(out), *fault])
print("exit code", code)
