"""Drive the command line: calibrate h, run one config, then sweep several.

Run with ``python demos/06_command_line.py``; outputs go to ``demo_out/``.
"""
from pathlib import Path

from lamina.cli_runner import main

here = Path(__file__).parent / "configs"
out = Path("demo_out")

main(["calibrate", "--config", str(here / "calibrate.cfg"), "--out", str(out)])
main(["run", "--config", str(here / "branched_2.cfg"), "--seed", "0", "--out", str(out / "b2")])
code = main(["sweep", "--config", str(here / "flat_3.cfg"), "--config", str(here / "poly_steep.cfg"),
             "--out", str(out / "sweep"), "--k", "4,8"])
print("sweep exit code", code)
print("files:", sorted(str(p.relative_to(out)) for p in out.rglob("*.csv")))
