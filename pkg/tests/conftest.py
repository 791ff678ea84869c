from pathlib import Path

import pytest

from chsalign.scoring import unit_scheme
from chsalign.structure_io import parse_dotbracket
from chsalign.tree_align import AlignParams
from chsalign.tree_model import ChsStatus, annotate, forest_from_structure

DATA = Path(__file__).parent / "data"

FX1_SEQ = "GGAGCAAAGCACGUUUCGACC"
FX1_DB = "((.((...)).((...)).))"


def forest(seq, db, *statuses):
    """Forest with junction statuses given as tokens in junction-ordinal order."""
    f = forest_from_structure(parse_dotbracket(seq, db))
    junctions = f.junctions()
    table = {}
    for k, status in enumerate(statuses, 1):
        table[k] = ChsStatus.parse(junctions[k - 1].branches, status)
    return annotate(f, table)


@pytest.fixture
def unit():
    return unit_scheme()


@pytest.fixture
def unit_params():
    return AlignParams(unit_scheme())


@pytest.fixture
def fx1_h1h3():
    return forest(FX1_SEQ, FX1_DB, "H1H3")


@pytest.fixture
def fx1_h1h2():
    return forest(FX1_SEQ, FX1_DB, "H1H2")


@pytest.fixture
def fx1_none():
    return forest(FX1_SEQ, FX1_DB, "none")
