import runpy
from pathlib import Path

import pytest

DEMOS = Path(__file__).resolve().parents[1] / "demos"


# the benchmark demo is covered by the acceptance run
@pytest.mark.parametrize("name", ["01_size_priors.py", "02_sequential_summaries.py"])
def test_demo_runs(name, capsys):
    runpy.run_path(str(DEMOS / name), run_name="__main__")
    assert capsys.readouterr().out.strip()
