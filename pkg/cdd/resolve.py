"""Parsing of command-line spec strings for cdd.

Grammars:

* weighting: ``KIND`` or ``KIND:NAME=VALUE[,NAME=VALUE...]``
* weighting list: weightings separated by commas, e.g.
  ``landau,normal:sigma=1.4,gamma:k=2,theta=2.5`` (a ``NAME=VALUE`` token after a
  comma continues the previous weighting); ``all`` selects every kind
* loss: ``cd_l1``, ``cd_l2``, ``hypercd[:alpha=A]`` or ``weighted:WEIGHTING``
* reference distribution: ``uniform``, ``expdecay[:RATE]``, ``file:PATH`` or
  ``selfgen[:ITERS]``
* grid: ``default`` or ``file:PATH`` (JSON mapping kind to parameter lists)
"""

import difflib
import json
import math
from pathlib import Path
from typing import NamedTuple, Optional

from .config import DEFAULT_DECAY_RATE
from .exceptions import CloudParseError, InvalidArgumentError
from .models import LossSpec
from .weightfns import WEIGHT_KINDS, ParamGrid, WeightingFunction, validate_kind

LOSS_NAMES: tuple[str, ...] = ("cd_l1", "cd_l2", "hypercd", "weighted")
REFERENCE_NAMES: tuple[str, ...] = ("uniform", "expdecay", "file", "selfgen")


def suggest(name: str, choices: tuple[str, ...], max_suggestions: int = 3) -> list[str]:
    """Suggest choices similar to a mistyped name.

    Args:
        name: Name that was not recognized.
        choices: Valid names.
        max_suggestions: Maximum number of suggestions.

    Returns:
        Close matches, best first.
    """
    return difflib.get_close_matches(name, choices, n=max_suggestions, cutoff=0.5)


def _unknown(what: str, name: str, choices: tuple[str, ...]) -> InvalidArgumentError:
    message = f"Unknown {what} '{name}'. Valid: {', '.join(choices)}"
    close = suggest(name, choices)
    if close:
        message += f". Did you mean: {', '.join(close)}?"
    return InvalidArgumentError(message)


def _parse_number(text: str, what: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise InvalidArgumentError(f"{what} must be a number, got '{text}'")
    if not math.isfinite(value):
        raise InvalidArgumentError(f"{what} must be finite, got '{text}'")
    return value


def parse_params(text: str) -> dict[str, float]:
    """Parse ``NAME=VALUE[,NAME=VALUE...]`` into a dict (names not yet checked).

    Raises:
        InvalidArgumentError: On a token without ``=`` or a non-numeric value.
    """
    params: dict[str, float] = {}
    for token in text.split(","):
        name, sep, value = token.partition("=")
        name = name.strip()
        if not sep or not name:
            raise InvalidArgumentError(f"malformed parameter '{token}', expected NAME=VALUE")
        params[name] = _parse_number(value.strip(), f"parameter '{name}'")
    return params


def parse_weighting(text: str) -> WeightingFunction:
    """Parse one weighting spec; a bare kind uses its experiment parameters.

    Raises:
        UnknownWeightingError: If the kind is unknown.
        WeightDomainError: If a parameter name or value is invalid.
        InvalidArgumentError: If the parameter list is malformed.
    """
    kind, sep, rest = text.strip().partition(":")
    validate_kind(kind)
    if not sep:
        return WeightingFunction(kind, None)
    if not rest.strip():
        raise InvalidArgumentError(f"empty parameter list in '{text}'")
    return WeightingFunction(kind, parse_params(rest))


def split_weighting_list(text: str) -> list[str]:
    """Split a comma-separated weighting list, keeping parameter lists together."""
    items: list[str] = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            raise InvalidArgumentError(f"empty entry in distribution list '{text}'")
        if "=" in token and ":" not in token:
            if not items or ":" not in items[-1]:
                raise InvalidArgumentError(f"parameter '{token}' does not follow a distribution")
            items[-1] += "," + token
        else:
            items.append(token)
    return items


def parse_weighting_list(text: str) -> list[WeightingFunction]:
    """Parse a weighting list; ``all`` gives every kind at its experiment point."""
    if text.strip() == "all":
        return [parse_weighting(kind) for kind in WEIGHT_KINDS]
    return [parse_weighting(item) for item in split_weighting_list(text)]


def parse_kinds(text: str) -> list[str]:
    """Parse a comma-separated list of bare kinds, or ``all``."""
    if text.strip() == "all":
        return list(WEIGHT_KINDS)
    return [validate_kind(kind.strip()) for kind in text.split(",")]


def parse_loss(text: str, mode_shift: bool = True) -> LossSpec:
    """Parse a loss spec.

    Args:
        text: Spec such as ``hypercd:alpha=1`` or ``weighted:gamma:k=2,theta=2.5``.
        mode_shift: Whether weighted losses evaluate f at its mode plus d.

    Returns:
        The LossSpec.

    Raises:
        InvalidArgumentError: On an unknown loss or malformed parameters.
        UnknownWeightingError: On an unknown weighting kind.
    """
    name, sep, rest = text.strip().partition(":")
    if name not in LOSS_NAMES:
        raise _unknown("loss", name, LOSS_NAMES)
    if name in ("cd_l1", "cd_l2"):
        if sep:
            raise InvalidArgumentError(f"{name} takes no parameters")
        return LossSpec(name)
    if name == "hypercd":
        params = parse_params(rest) if sep else {}
        unknown = set(params) - {"alpha"}
        if unknown:
            raise InvalidArgumentError(f"hypercd only takes 'alpha', got {', '.join(sorted(unknown))}")
        return LossSpec("hypercd", alpha=params.get("alpha", 1.0))
    if not rest.strip():
        raise InvalidArgumentError("weighted loss needs a distribution, e.g. weighted:landau")
    return LossSpec("weighted_cd", weighting=parse_weighting(rest), mode_shift=mode_shift)


class ReferenceSource(NamedTuple):
    """A parsed reference-distribution spec.

    Attributes:
        kind: uniform, exp_decay, empirical_file or self_generated
        rate: Decay rate (exp_decay)
        path: Distribution file (empirical_file)
        iters: Training iterations (self_generated)
    """
    kind: str
    rate: Optional[float] = None
    path: Optional[Path] = None
    iters: Optional[int] = None

    def describe(self) -> str:
        """Render the source in the command-line grammar."""
        if self.kind == "exp_decay":
            return f"expdecay:{self.rate!r}"
        if self.kind == "empirical_file":
            return f"file:{self.path}"
        if self.kind == "self_generated":
            return f"selfgen:{self.iters}" if self.iters is not None else "selfgen"
        return self.kind


def parse_reference(text: str) -> ReferenceSource:
    """Parse a reference-distribution spec.

    Raises:
        InvalidArgumentError: On an unknown source or a bad argument.
    """
    name, sep, arg = text.strip().partition(":")
    if name not in REFERENCE_NAMES:
        raise _unknown("reference distribution", name, REFERENCE_NAMES)
    if name == "uniform":
        if sep:
            raise InvalidArgumentError("uniform takes no argument")
        return ReferenceSource("uniform")
    if name == "expdecay":
        rate = _parse_number(arg, "decay rate") if sep else DEFAULT_DECAY_RATE
        if rate < 0:
            raise InvalidArgumentError(f"decay rate must be >= 0, got {rate}")
        return ReferenceSource("exp_decay", rate=rate)
    if name == "file":
        if not arg:
            raise InvalidArgumentError("file: needs a path")
        return ReferenceSource("empirical_file", path=Path(arg))
    if not sep:
        return ReferenceSource("self_generated")
    try:
        iters = int(arg)
    except ValueError:
        raise InvalidArgumentError(f"selfgen iterations must be an integer, got '{arg}'")
    if iters < 1:
        raise InvalidArgumentError(f"selfgen iterations must be >= 1, got {iters}")
    return ReferenceSource("self_generated", iters=iters)


def parse_grid_document(text: str, path: Optional[str] = None) -> dict[str, ParamGrid]:
    """Parse a grid file: a JSON object mapping kind to ``{param: [values]}``.

    Raises:
        CloudParseError: If the text is not a JSON object of the expected shape.
        UnknownWeightingError: If a kind is unknown.
        WeightDomainError: If a grid lists the wrong parameters or bad values.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise CloudParseError(e.msg, e.lineno, path)
    if not isinstance(data, dict):
        raise CloudParseError("grid file must hold a JSON object", 1, path)
    grids = {}
    for kind, values in data.items():
        validate_kind(kind)
        if not isinstance(values, dict) or not all(isinstance(v, list) for v in values.values()):
            raise CloudParseError(f"grid for '{kind}' must map parameter names to lists", 1, path)
        grids[kind] = ParamGrid(kind, values)
    return grids


def read_grid_file(path: Path) -> dict[str, ParamGrid]:
    """Read a grid file written in the format of :func:`parse_grid_document`."""
    with open(path, "r") as f:
        return parse_grid_document(f.read(), str(path))


def parse_grid(text: str) -> Optional[dict[str, ParamGrid]]:
    """Parse ``default`` (None) or ``file:PATH`` (the grids in the file)."""
    name, sep, arg = text.strip().partition(":")
    if name == "default" and not sep:
        return None
    if name == "file" and arg:
        return read_grid_file(Path(arg))
    raise InvalidArgumentError(f"grid must be 'default' or 'file:PATH', got '{text}'")
