import re
import sys
from pathlib import Path

# Make the sibling oracles module importable regardless of rootdir.
sys.path.insert(0, str(Path(__file__).parent))

_CRITERION = re.compile(r"test_acceptance\.py::.*test_c(\d+)_")

_TITLES = {
    1: "alignment cost equals the word Levenshtein oracle",
    2: "ROVER voting laws: unanimity, strict majority, tie-break goldens",
    3: "CTC prefix beam matches exhaustive path enumeration",
    4: "CTC marginal argmax beats greedy on the two-frame grid",
    5: "transducer greedy decode structural properties",
    6: "segmentation partition, uniformity, and order independence",
    7: "relative-change arithmetic on the reported WER pairs",
    8: "diverse ensembles beat single teachers; clones gain nothing",
    9: "distill golden manifest byte-exact for 1 and 4 workers",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance criterion."""
    status: dict[int, str] = {}
    for reports in terminalreporter.stats.values():
        for report in reports:
            nodeid = getattr(report, "nodeid", "")
            match = _CRITERION.search(nodeid)
            if match is None:
                continue
            number = int(match.group(1))
            if getattr(report, "failed", False):
                status[number] = "FAIL"
            elif getattr(report, "passed", False) and report.when == "call":
                status.setdefault(number, "PASS")
    if not status:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(status):
        title = _TITLES.get(number, "")
        terminalreporter.write_line(f"criterion {number}: {status[number]}  {title}")
