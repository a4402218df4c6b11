from __future__ import annotations

import numpy as np
import pytest

from segscore import LabelMask
from segscore.confusion import ConfusionCounts


@pytest.fixture
def fixture_4x4() -> tuple[LabelMask, LabelMask]:
    """gt foreground {(1,1),(1,2),(2,1),(2,2)}, pred foreground shifted right
    by one column: tp=2, fp=2, tn=10, fn=2."""
    gt = np.zeros((4, 4), dtype=int)
    gt[1:3, 1:3] = 1
    pred = np.zeros((4, 4), dtype=int)
    pred[1:3, 2:4] = 1
    return LabelMask.from_array(gt), LabelMask.from_array(pred)


@pytest.fixture
def fixture_4x4_counts() -> ConfusionCounts:
    return ConfusionCounts(tp=2, fp=2, tn=10, fn=2)


def random_mask(rng: np.random.Generator, shape, n_classes: int = 2,
                spacing=None) -> LabelMask:
    labels = rng.integers(0, n_classes, size=shape)
    return LabelMask.from_array(labels, spacing=spacing)


def random_binary_mask(rng: np.random.Generator, shape, p: float = 0.3,
                       spacing=None, ensure_foreground: bool = False) -> LabelMask:
    labels = (rng.random(shape) < p).astype(int)
    if ensure_foreground and labels.sum() == 0:
        labels.flat[rng.integers(0, labels.size)] = 1
    return LabelMask.from_array(labels, spacing=spacing)
