import json
import sys
from importlib import resources
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from foliation_lab.cli import AnalysisRequest  # noqa: E402
from foliation_lab.scalars import EXACT  # noqa: E402

CORPUS = resources.files("foliation_lab") / "corpus"
CORPUS_NAMES = sorted(p.name[:-5] for p in CORPUS.iterdir() if p.name.endswith(".json"))
PERTURBED = [n for n in CORPUS_NAMES if n.startswith("type")]
LINEAR = [n for n in CORPUS_NAMES if n.startswith("linear")]


def corpus_spec(name: str) -> dict:
    return json.loads((CORPUS / f"{name}.json").read_text())


def corpus_field(name: str, mode: str = EXACT, cap=None):
    return AnalysisRequest.from_spec(corpus_spec(name), cap=cap, mode=mode, tasks=["resonance"]).field


@pytest.fixture
def corpus_path():
    def _path(name):
        return str(CORPUS / f"{name}.json")
    return _path


# acceptance bookkeeping: one line per criterion in the terminal summary
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}  {detail}".rstrip())
