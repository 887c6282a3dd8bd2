"""JSON file formats for MDPs and Q-tables.

The byte layout is documented in ``docs/formats.md``. In short, an MDP file
is one line of JSON with the keys ``n_states``, ``n_actions``, ``gamma``,
``reward`` and ``transition`` in that order, arrays flattened row-major,
floats written in Python's shortest round-trip repr, ``", "`` and ``": "``
as separators and a trailing newline.
"""
import json
import logging
from pathlib import Path
from typing import List, Union

import numpy as np
from pydantic import BaseModel, PositiveInt, ValidationError, model_validator

from src.mdp.core import Mdp, QTable
from src.mdp.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class MdpFile(BaseModel):
    n_states: PositiveInt
    n_actions: PositiveInt
    gamma: float
    reward: List[float]
    transition: List[float]

    @model_validator(mode="after")
    def _check_lengths(self) -> "MdpFile":
        pairs = self.n_states * self.n_actions
        if len(self.reward) != pairs:
            raise ValueError(f"reward has {len(self.reward)} entries, expected {pairs}")
        if len(self.transition) != pairs * self.n_states:
            raise ValueError(
                f"transition has {len(self.transition)} entries, expected {pairs * self.n_states}"
            )
        return self


class QTableFile(BaseModel):
    n_states: PositiveInt
    n_actions: PositiveInt
    values: List[float]

    @model_validator(mode="after")
    def _check_length(self) -> "QTableFile":
        if len(self.values) != self.n_states * self.n_actions:
            raise ValueError(
                f"values has {len(self.values)} entries, expected {self.n_states * self.n_actions}"
            )
        return self


def _dumps(payload: dict) -> str:
    return json.dumps(payload, separators=(", ", ": ")) + "\n"


def mdp_to_json(mdp: Mdp) -> str:
    payload = {
        "n_states": mdp.n_states,
        "n_actions": mdp.n_actions,
        "gamma": mdp.gamma,
        "reward": mdp.reward.ravel().tolist(),
        "transition": mdp.transition.ravel().tolist(),
    }
    return _dumps(payload)


def mdp_from_json(text: str) -> Mdp:
    """Parse and validate an MDP document."""
    try:
        parsed = MdpFile.model_validate_json(text)
    except ValidationError as e:
        raise InvalidArgumentError(f"Invalid MDP file: {e}") from e
    shape = (parsed.n_states, parsed.n_actions)
    return Mdp(
        transition=np.array(parsed.transition).reshape(shape + (parsed.n_states,)),
        reward=np.array(parsed.reward).reshape(shape),
        gamma=parsed.gamma,
    )


def qtable_to_json(q: QTable) -> str:
    n_states, n_actions = q.shape
    return _dumps(
        {"n_states": n_states, "n_actions": n_actions, "values": q.values.ravel().tolist()}
    )


def qtable_from_json(text: str) -> QTable:
    try:
        parsed = QTableFile.model_validate_json(text)
    except ValidationError as e:
        raise InvalidArgumentError(f"Invalid Q-table file: {e}") from e
    return QTable(np.array(parsed.values).reshape(parsed.n_states, parsed.n_actions))


def save_mdp(mdp: Mdp, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(mdp_to_json(mdp), encoding="utf-8")
    logger.info(f"Wrote {mdp.n_states}x{mdp.n_actions} MDP to {path}")
    return path


def load_mdp(path: PathLike) -> Mdp:
    path = Path(path)
    if not path.exists():
        raise InvalidArgumentError(f"MDP file '{path}' not found")
    return mdp_from_json(path.read_text(encoding="utf-8"))


def save_qtable(q: QTable, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(qtable_to_json(q), encoding="utf-8")
    logger.info(f"Wrote Q-table {q.shape} to {path}")
    return path


def load_qtable(path: PathLike) -> QTable:
    path = Path(path)
    if not path.exists():
        raise InvalidArgumentError(f"Q-table file '{path}' not found")
    return qtable_from_json(path.read_text(encoding="utf-8"))


def looks_like_mdp_file(path: PathLike) -> bool:
    """True when the JSON document at ``path`` carries a transition tensor."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError):
        return False
    return isinstance(payload, dict) and "transition" in payload
