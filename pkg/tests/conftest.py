import numpy as np
import pytest

from interfuse import ingest


@pytest.fixture
def toy_docs():
    return [
        ingest.DocumentRecord("d1", "sunset over the sandy beach", ("i1",)),
        ingest.DocumentRecord("d2", "mountain bikes on rocky trails", ("i2",)),
        ingest.DocumentRecord("d3", "beach volleyball in the sand", ("i3",)),
    ]


@pytest.fixture
def toy_queries():
    return [
        ingest.QueryRecord("q1", "beach sand", ("s1",)),
        ingest.QueryRecord("q2", "mountain trails", ()),
    ]


# fixture rather than a plain helper so tests never import this module
# by name (two conftest.py files share that name in combined runs)
@pytest.fixture
def make_vectors():
    def make(*pairs):
        return [ingest.DenseVector(vector_id,
                                   np.asarray(values, dtype=np.float32))
                for vector_id, values in pairs]
    return make
