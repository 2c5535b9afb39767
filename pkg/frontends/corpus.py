"""The bundled bit-twiddling benchmark corpus.

`manifest.json` lists every case with its reference program; cases with a
formula file are checked against that file, the known-hard ones take their
semantics from the reference program alone.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Literal, Optional, Sequence

from pydantic import BaseModel, ValidationError

from formula.ast import SOSFormula, SynthesisInstance
from formula.parser import parse_formula
from formula.skolem import skolemize
from frontends.superopt import encode_superopt
from lang.program import Program
from lang.text import parse_program
from utils.errors import FormulaSyntaxError, ProgramSyntaxError
from utils.logger import setup_logger

logger = setup_logger("frontends")

CORPUS_DIR = Path(__file__).parent / "corpus"
SOLVED = "solved"
KNOWN_HARD = "known-hard"


class ManifestEntry(BaseModel):
    id: str
    name: str
    file: Optional[str] = None
    status: Literal["solved", "known-hard"]
    expected_length: Optional[int] = None
    reference: str
    enable_shl: bool = False


class Manifest(BaseModel):
    cases: List[ManifestEntry]


@dataclass(frozen=True)
class BenchmarkCase:
    id: str
    name: str
    status: str
    reference: Program
    formula: SOSFormula
    expected_length: Optional[int] = None
    enable_shl: bool = False
    file: Optional[str] = None

    @property
    def known_hard(self) -> bool:
        return self.status == KNOWN_HARD

    def instance(self) -> SynthesisInstance:
        return skolemize(self.formula, label=self.id, enable_shl=self.enable_shl)


def _load_case(entry: ManifestEntry, directory: Path) -> BenchmarkCase:
    reference = parse_program(entry.reference)
    if entry.expected_length is not None and entry.expected_length != reference.length:
        raise ValueError(
            f"Case {entry.id}: expected length {entry.expected_length} but the reference has "
            f"{reference.length} instructions"
        )
    if entry.file:
        formula = parse_formula((directory / entry.file).read_text(encoding="utf-8"))
    else:
        formula = encode_superopt(reference)
    return BenchmarkCase(
        id=entry.id,
        name=entry.name,
        status=entry.status,
        reference=reference,
        formula=formula,
        expected_length=entry.expected_length,
        enable_shl=entry.enable_shl,
        file=entry.file,
    )


def load_corpus(directory: Optional[Path] = None, ids: Optional[Sequence[str]] = None) -> List[BenchmarkCase]:
    """Every case in manifest order, or the ones named in `ids`."""
    directory = Path(directory) if directory else CORPUS_DIR
    try:
        manifest = Manifest.model_validate(json.loads((directory / "manifest.json").read_text(encoding="utf-8")))
    except (OSError, json.JSONDecodeError, ValidationError) as e:
        logger.error(f"Error reading corpus manifest in {directory}: {str(e)}")
        raise

    wanted = set(ids) if ids is not None else None
    cases = []
    for entry in manifest.cases:
        if wanted is not None and entry.id not in wanted:
            continue
        try:
            cases.append(_load_case(entry, directory))
        except (OSError, FormulaSyntaxError, ProgramSyntaxError, ValueError) as e:
            logger.error(f"Error loading corpus case {entry.id}: {str(e)}")
            raise
    logger.debug(f"Loaded {len(cases)} corpus cases from {directory}")
    return cases
