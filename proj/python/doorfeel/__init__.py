# Copyright 2026 The doorfeel Authors
# SPDX-License-Identifier: Apache-2.0
"""Door-opening force profiles to perceptual ratings."""

import json

from ._core import *  # noqa: F401,F403
from ._core import (
    default_car_specs as _default_car_specs,
    run_loocv as _run_loocv,
)

__version__ = "0.1.0"


def default_car_specs():
    """The six built-in synthetic car specs as dicts."""
    return [json.loads(s) for s in _default_car_specs()]


def run_loocv(data_dir, ratings_csv, config=None, workers=1, oracle=False):
    """Leave-one-car-out evaluation; returns the report as a dict."""
    if config is None:
        config = json.loads(default_config())  # noqa: F405
    text = _run_loocv(str(data_dir), str(ratings_csv), json.dumps(config), workers, oracle)
    return json.loads(text)
