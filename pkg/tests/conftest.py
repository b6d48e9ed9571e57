import numpy as np
import pytest
from PIL import Image


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def write_png_dir(root, rows, size=(8, 8), mode="RGB", fill=None, seed=0):
    """Write PNGs plus a manifest; ``rows`` is a list of (filename, target)."""
    gen = np.random.default_rng(seed)
    root.mkdir(parents=True, exist_ok=True)
    lines = ["path,target"]
    for name, target in rows:
        shape = size + ((3,) if mode == "RGB" else ())
        arr = np.full(shape, fill, dtype=np.uint8) if fill is not None else gen.integers(0, 256, shape, dtype=np.uint8)
        Image.fromarray(arr, mode=mode).save(root / name)
        lines.append(f"{name},{target}")
    (root / "manifest.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return root / "manifest.csv"


_ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record ``(passed, measured)`` for one acceptance line, printed in the run summary."""
    def record(key, passed, measured):
        _ACCEPTANCE[key] = (bool(passed), measured)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: (int(k.rstrip("abc")), k)):
        passed, measured = _ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:<3} {'PASS' if passed else 'FAIL'}  {measured}")
