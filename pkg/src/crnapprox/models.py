"""
Model files: JSON documents describing a reaction network.

Document layout::

    {
      "name": "bistable",
      "species": ["X", "Y"],
      "rate_convention": "absorbed",
      "parameters": {"m": 3},
      "reactions": [
        {"reactants": {"Y": 1}, "products": {"X": 2}, "rate_constant": 8}
      ]
    }

``parameters`` is optional. It declares integer parameters that stoichiometric
coefficients may reference as affine expressions such as ``"m"`` or ``"m+2"``;
``parse_model(path, {"m": 0})`` overrides the declared value. Coefficients that
resolve to 0 are dropped, which is how the bundled metabolism model turns
``N + mE -> (m+2)E`` into ``N -> 2E`` for m = 0.
"""

from __future__ import annotations

import json
import logging
import re
from pathlib import Path
from typing import Any, Mapping

import sympy
import yaml
from pydantic import BaseModel, ConfigDict, Field, StrictInt, ValidationError

from .config import PROJECT_ROOT
from .errors import ModelError
from .network import Complex, RateConvention, Reaction, ReactionNetwork

LOGGER = logging.getLogger(__name__)

MODELS_DIR = PROJECT_ROOT / "models"
BUNDLED_MODELS = {
    "metabolism": MODELS_DIR / "metabolism.json",
    "bistable": MODELS_DIR / "bistable.json",
}

_EXPRESSION = re.compile(r"^[0-9A-Za-z_+\-* ()]+$")
_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


class ReactionDocument(BaseModel):
    """One reaction entry of a model file."""

    model_config = ConfigDict(extra="forbid")

    reactants: dict[str, StrictInt | str] = Field(default_factory=dict)
    products: dict[str, StrictInt | str] = Field(default_factory=dict)
    rate_constant: float
    label: str | None = None


class ModelDocument(BaseModel):
    """Schema of a model file."""

    model_config = ConfigDict(extra="forbid")

    name: str
    species: list[str]
    rate_convention: RateConvention = RateConvention.ABSORBED
    parameters: dict[str, StrictInt] = Field(default_factory=dict)
    reactions: list[ReactionDocument] = Field(default_factory=list)


def _reaction_lines(text: str) -> list[int]:
    """1-based source line of each reaction entry, or [] when not locatable."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return []
    if not isinstance(root, yaml.MappingNode):
        return []
    for key, value in root.value:
        if getattr(key, "value", None) == "reactions" and isinstance(value, yaml.SequenceNode):
            return [item.start_mark.line + 1 for item in value.value]
    return []


def _where(index: int, lines: list[int]) -> str:
    location = f"reaction #{index + 1}"
    if index < len(lines):
        location += f" (line {lines[index]})"
    return location


def _resolve_coefficient(value: int | str, parameters: Mapping[str, int], where: str, species: str) -> int:
    if isinstance(value, int):
        return value
    text = value.strip()
    if not text or not _EXPRESSION.match(text):
        raise ModelError(f"{where}: coefficient of {species!r} is not an integer expression: {value!r}")
    unknown = set(_IDENTIFIER.findall(text)) - set(parameters)
    if unknown:
        raise ModelError(
            f"{where}: coefficient of {species!r} uses undeclared parameter(s) {sorted(unknown)}"
        )
    symbols = {name: sympy.Symbol(name) for name in parameters}
    try:
        expr = sympy.sympify(text, locals=symbols)
    except (sympy.SympifyError, SyntaxError, TypeError) as e:
        raise ModelError(f"{where}: cannot parse coefficient of {species!r}: {value!r}") from e
    resolved = expr.subs({symbols[name]: val for name, val in parameters.items()})
    if not resolved.is_integer:
        raise ModelError(f"{where}: coefficient of {species!r} must be an integer, got {resolved}")
    return int(resolved)


def _build_network(document: ModelDocument, overrides: Mapping[str, int], lines: list[int]) -> ReactionNetwork:
    unknown = set(overrides) - set(document.parameters)
    if unknown:
        raise ModelError(
            f"model {document.name!r} declares no parameter(s) {sorted(unknown)}; "
            f"declared: {sorted(document.parameters) or 'none'}"
        )
    parameters = {**document.parameters, **{k: int(v) for k, v in overrides.items()}}
    for name, value in parameters.items():
        if value < 0:
            raise ModelError(f"parameter {name!r} must be a non-negative integer, got {value}")

    declared = set(document.species)
    reactions = []
    for index, entry in enumerate(document.reactions):
        where = _where(index, lines)
        sides = {}
        for side in ("reactants", "products"):
            resolved: dict[str, int] = {}
            for species, raw in getattr(entry, side).items():
                if species not in declared:
                    raise ModelError(f"{where}: unknown species {species!r} in {side}")
                coefficient = _resolve_coefficient(raw, parameters, where, species)
                if coefficient < 0:
                    raise ModelError(
                        f"{where}: coefficient of {species!r} resolves to negative value {coefficient}"
                    )
                resolved[species] = coefficient
            sides[side] = Complex.of(resolved)
        try:
            reactions.append(Reaction(sides["reactants"], sides["products"], entry.rate_constant, entry.label))
        except ModelError as e:
            raise ModelError(f"{where}: {e}") from e
    return ReactionNetwork(
        name=document.name,
        species=tuple(document.species),
        reactions=tuple(reactions),
        rate_convention=document.rate_convention,
        parameters=parameters,
    )


def _format_validation_error(error: ValidationError, lines: list[int]) -> str:
    problems = []
    for item in error.errors():
        loc = list(item["loc"])
        prefix = ".".join(str(part) for part in loc)
        if len(loc) >= 2 and loc[0] == "reactions" and isinstance(loc[1], int):
            prefix = _where(loc[1], lines) + (": " + ".".join(str(p) for p in loc[2:]) if loc[2:] else "")
            if len(loc) >= 4 and loc[2] in ("reactants", "products"):
                prefix = f"{_where(loc[1], lines)}: species {loc[3]!r} in {loc[2]}"
                if item["type"] in ("int_type", "string_type", "int_from_float"):
                    problems.append(f"{prefix}: non-integer stoichiometry {item.get('input')!r}")
                    continue
        problems.append(f"{prefix}: {item['msg']}")
    return "; ".join(dict.fromkeys(problems))


def parse_model_text(text: str, parameters: Mapping[str, int] | None = None, source: str = "<string>") -> ReactionNetwork:
    """Parse and validate a model document given as JSON text."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelError(f"{source}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e

    lines = _reaction_lines(text)
    try:
        document = ModelDocument.model_validate(raw)
    except ValidationError as e:
        raise ModelError(f"{source}: {_format_validation_error(e, lines)}") from e

    try:
        network = _build_network(document, parameters or {}, lines)
    except ModelError as e:
        raise ModelError(f"{source}: {e}") from e
    LOGGER.debug(
        "Parsed model %s: %d species, %d reactions", network.describe(), network.n_species, network.n_reactions
    )
    return network


def resolve_model_path(path_or_name: str | Path) -> Path:
    """Return a model file path; bare names of bundled models are accepted."""
    path = Path(path_or_name)
    if path.exists():
        return path
    if str(path_or_name) in BUNDLED_MODELS:
        return BUNDLED_MODELS[str(path_or_name)]
    raise ModelError(f"model file not found: {path_or_name}")


def parse_model(path: str | Path, parameters: Mapping[str, int] | None = None) -> ReactionNetwork:
    """
    Load and validate a model file.

    Args:
        path: Path to the JSON document, or the name of a bundled model
        parameters: Overrides for integer template parameters (e.g. ``{"m": 3}``)

    Returns:
        The validated ReactionNetwork

    Raises:
        ModelError: Missing file, malformed JSON, unknown species, non-integer
            stoichiometry, non-positive rate constant or a self-loop reaction
    """
    model_path = resolve_model_path(path)
    text = model_path.read_text(encoding="utf-8")
    return parse_model_text(text, parameters, source=str(model_path))


def load_bundled_model(name: str, **parameters: int) -> ReactionNetwork:
    if name not in BUNDLED_MODELS:
        raise ModelError(f"unknown bundled model {name!r}; choose from {sorted(BUNDLED_MODELS)}")
    return parse_model(BUNDLED_MODELS[name], parameters)


def serialize_model(network: ReactionNetwork) -> dict[str, Any]:
    """JSON-ready document of a concrete network (template parameters already applied)."""
    reactions = []
    for reaction in network.reactions:
        entry: dict[str, Any] = {
            "reactants": reaction.reactants.as_dict(),
            "products": reaction.products.as_dict(),
            "rate_constant": reaction.rate_constant,
        }
        if reaction.label is not None:
            entry["label"] = reaction.label
        reactions.append(entry)
    return {
        "name": network.name,
        "species": list(network.species),
        "rate_convention": network.rate_convention.value,
        "reactions": reactions,
    }


def dump_model(network: ReactionNetwork, path: str | Path) -> Path:
    target = Path(path)
    target.write_text(json.dumps(serialize_model(network), indent=2) + "\n", encoding="utf-8")
    return target
