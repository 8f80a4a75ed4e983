"""
Scenario files and the command line
===================================

Every shipped scenario is a JSON file with explicit tolerances.  The same
runs are available as ``wavenets run <name>``.
"""

import json
import tempfile
from pathlib import Path

from wavenets.cli import main, shipped_scenarios

for name, cfg in shipped_scenarios().items():
    print(f"{name:<28} {[a['type'] for a in cfg['analyses']]}")

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "rw"
    code = main(["run", "rw_domain_of_dependence", "--out", str(out)])
    report = json.loads((out / "report.json").read_text())
    print("exit code", code, "status", report["status"])
