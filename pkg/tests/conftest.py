import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

LABELS = {
    1: "autodiff oracle suite",
    2: "operator annihilation",
    3: "Lame annulus (airy BFGS, dense Adam)",
    4: "strip footing (wedge, conjugate vs solo)",
    5: "clamped circular plate",
    6: "rectangular plate identification",
    7: "Navier parametric ratios",
    8: "determinism",
}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None)
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(verdicts):
        ok, detail = verdicts[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n}. {LABELS[n]}: {detail}")
