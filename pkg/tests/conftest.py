import json

import pytest

from fovlab.geometry import PinholeCamera

# Canonical test camera used by all hand-derived expectations below.
K0 = PinholeCamera(fx=500.0, fy=500.0, px=320.0, py=240.0, width=640, height=480)


@pytest.fixture
def k0():
    return K0


@pytest.fixture
def camera_file(tmp_path):
    path = tmp_path / "camera.json"
    path.write_text(
        json.dumps({"fx": 500, "fy": 500, "px": 320, "py": 240, "width": 640, "height": 480})
    )
    return path
