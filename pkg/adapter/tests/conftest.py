import os
import sys

import pytest
from fastapi.testclient import TestClient

sys.path.insert(0, os.path.dirname(__file__))

from fake_predictor import FakePredictor
from sam_adapter.app import create_app
from sam_adapter.model import SegmentationModel


@pytest.fixture()
def fake_predictor():
    return FakePredictor()


@pytest.fixture()
def client(fake_predictor):
    app = create_app(SegmentationModel(fake_predictor, "sam-vit_l"))
    return TestClient(app)
