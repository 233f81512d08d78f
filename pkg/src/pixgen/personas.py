"""Persona corpus loading and deterministic sampling.

A persona is a one-line description of a person ("a sci-fi novelist who
likes alien worlds"). Conditioning topic generation on a sampled persona is
what spreads generated content across subject matter instead of collapsing
onto the few topics the model finds most likely for a bare query.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import EmptyCorpusError, EmptyStoreError, PersonaCorpusError
from .seeds import pick_index

FIXTURE_RESOURCE = "personas_fixture.txt"


@dataclass(frozen=True)
class Persona:
    """One corpus entry: dense line index plus the description text."""

    id: int
    text: str


class PersonaStore:
    """In-memory persona corpus with seed-addressed sampling."""

    def __init__(self, personas: list[Persona]):
        if not personas:
            raise EmptyStoreError("persona store has no entries")
        self._personas = list(personas)

    def __len__(self) -> int:
        return len(self._personas)

    def get(self, persona_id: int) -> Persona:
        return self._personas[persona_id]

    def sample(self, job_seed: int) -> Persona:
        """Pick the persona for a job; pure function of the job seed."""
        return self._personas[pick_index(job_seed, "persona", len(self._personas))]


def load_personas(path: str | Path) -> PersonaStore:
    """Load a one-persona-per-line corpus file.

    Blank and whitespace-only lines are skipped; surviving lines get dense
    ids 0..n-1 in file order so a corpus edit upstream of line k only
    renumbers personas at k and later.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise PersonaCorpusError(f"cannot read persona corpus {path}: {exc}") from exc
    personas = [
        Persona(id=i, text=line.strip())
        for i, line in enumerate(
            line for line in text.splitlines() if line.strip()
        )
    ]
    if not personas:
        raise EmptyCorpusError(f"persona corpus {path} has no non-blank lines")
    return PersonaStore(personas)


def load_fixture_personas() -> PersonaStore:
    """Load the small persona corpus bundled with the package."""
    ref = resources.files("pixgen").joinpath("data", FIXTURE_RESOURCE)
    with resources.as_file(ref) as path:
        return load_personas(path)
