"""Regenerate the CLI golden outputs in tests/golden.

Run from the repository root after an intentional output change:
``python3 scripts/make_golden.py``.
"""

from __future__ import annotations

import contextlib
import io
import shutil
from pathlib import Path

from pivotplan.cli import main

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "pivotplan" / "data"
GOLDEN = ROOT / "tests" / "golden"

# name -> argv (paths relative to the data directory, {out} for an export dir)
CASES = {
    "check_planar3": ["check", "{data}/planar3_tip.json"],
    "check_arm7": ["check", "{data}/arm7_tip.json"],
    "check_dual": ["check", "{data}/dual_arm7_tip.json"],
    "gait_walk": ["gait", "{data}/walk_gait.json"],
    "sclerp": ["sclerp", "--from", "0,0,0,1,0,0,0", "--to", "0.3,0.1,0,0.9238795325112867,0,0,0.3826834323650898",
               "--steps", "5"],
    "plan_planar3": ["plan", "{data}/planar3_tip.json", "-o", "{out}"],
    "plan_arm7": ["plan", "{data}/arm7_tip.json", "-o", "{out}"],
    "plan_dual": ["plan", "{data}/dual_arm7_tip.json", "-o", "{out}"],
    "rmrc_dual_right": ["rmrc", "{data}/dual_arm7_tip.json", "--arm", "1", "-o", "{out}"],
}


def run(name: str, out_dir: Path) -> tuple[int, str]:
    argv = [a.format(data=DATA, out=out_dir) for a in CASES[name]]
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(argv)
    text = buf.getvalue().replace(str(out_dir), "<out>").replace(str(DATA), "<data>")
    return code, text


def main_() -> None:
    for name in CASES:
        target = GOLDEN / name
        if target.exists():
            shutil.rmtree(target)
        target.mkdir(parents=True)
        code, text = run(name, target / "export")
        assert code == 0, name
        (target / "stdout.txt").write_text(text)
        print(f"wrote {target}")


if __name__ == "__main__":
    main_()
