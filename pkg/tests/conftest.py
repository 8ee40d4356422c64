import json
import os

import pytest

from diracjacobi import io

DOCUMENTS = os.path.join(os.path.dirname(__file__), os.pardir, "documents")


def document_path(name):
    return os.path.join(DOCUMENTS, name)


def load_document(name):
    with open(document_path(name), "r", encoding="utf-8") as fh:
        return io.load(json.load(fh))


@pytest.fixture
def documents_dir():
    return DOCUMENTS
