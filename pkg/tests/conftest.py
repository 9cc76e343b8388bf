import sys
from pathlib import Path

import pytest

# add repo root so `import src...` works in ci and locally
ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from src.pipeline.artifacts import OUTPUT_ENV  # noqa: E402
from src.workers import THREADS_ENV  # noqa: E402


@pytest.fixture(autouse=True)
def output_root(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    # keep artifacts out of the repo and ignore a developer's thread override
    out = tmp_path / "outputs"
    monkeypatch.setenv(OUTPUT_ENV, str(out))
    monkeypatch.delenv(THREADS_ENV, raising=False)
    return out
