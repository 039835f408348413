"""JSON encodings of spaces, events, measures, POVMs, kernels and states."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .classical import FiniteMeasure, JointMeasure
from .errors import AxiomViolation, DomainError, NcpolyError
from .linalg import matrix_from_json, matrix_to_json
from .opkernels import OperatorKernel
from .povm import Povm, Pvm
from .spaces import Event, FiniteSpace, ProductSpace
from .states import DensityOperator, ScalarKernel

__all__ = [
    "ParseError",
    "space_to_json",
    "space_from_json",
    "event_from_json",
    "measure_from_json",
    "povm_to_json",
    "povm_from_json",
    "kernel_to_json",
    "kernel_from_json",
    "density_to_json",
    "density_from_json",
    "scalar_kernel_to_json",
    "to_json",
    "from_json",
    "load",
    "dump",
]


class ParseError(NcpolyError, ValueError):
    """Input is not valid JSON or does not match any known schema."""


def _get(obj, key):
    try:
        return obj[key]
    except (KeyError, TypeError):
        raise DomainError(f"missing field {key!r}") from None


def space_to_json(space: FiniteSpace) -> dict:
    return space.to_json()


def space_from_json(obj) -> FiniteSpace:
    if isinstance(obj, dict) and "left" in obj and "right" in obj:
        return ProductSpace(space_from_json(obj["left"]), space_from_json(obj["right"]))
    atoms = _get(obj, "atoms")
    if not isinstance(atoms, list):
        raise DomainError("'atoms' must be a list of labels")
    return FiniteSpace(atoms)


def event_from_json(obj, space: FiniteSpace | None = None) -> Event:
    if space is None:
        space = space_from_json(_get(obj, "space"))
    return space.event(_get(obj, "members"))


def measure_from_json(obj) -> FiniteMeasure | JointMeasure:
    space = space_from_json(_get(obj, "space"))
    weights = _get(obj, "weights")
    if set(weights) != set(space.atoms):
        raise DomainError("weights must name every atom exactly once")
    w = [float(weights[a]) for a in space.atoms]
    if isinstance(space, ProductSpace):
        return JointMeasure(space, w)
    return FiniteMeasure(space, w)


def povm_to_json(Q: Povm) -> dict:
    return {
        "kind": Q.kind,
        "space": space_to_json(Q.space),
        "dim": Q.dim,
        "effects": {a: matrix_to_json(E) for a, E in zip(Q.space.atoms, Q.effects)},
    }


def povm_from_json(obj) -> Povm:
    kind = obj.get("kind", "povm")
    if kind not in ("povm", "pvm"):
        raise DomainError(f"unknown POVM kind {kind!r}")
    space = space_from_json(_get(obj, "space"))
    effects = _get(obj, "effects")
    if set(effects) != set(space.atoms):
        raise DomainError("effects must name every atom exactly once")
    cls = Pvm if kind == "pvm" else Povm
    return cls(space, int(_get(obj, "dim")), [matrix_from_json(effects[a]) for a in space.atoms])


def kernel_to_json(K: OperatorKernel) -> dict:
    return {
        "indices": list(K.labels),
        "dim": K.dim,
        "blocks": [[matrix_to_json(K.blocks[i, j]) for j in range(K.n)] for i in range(K.n)],
    }


def kernel_from_json(obj) -> OperatorKernel:
    """Accepts full rows, rows with ``null`` below the diagonal, or ragged upper-triangle rows."""
    labels = _get(obj, "indices")
    d = int(_get(obj, "dim"))
    rows = _get(obj, "blocks")
    n = len(labels)
    if len(rows) != n:
        raise DomainError(f"kernel has {n} indices but {len(rows)} block rows")
    blocks = np.zeros((n, n, d, d), dtype=np.complex128)
    have = np.zeros((n, n), dtype=bool)
    for i, row in enumerate(rows):
        offset = 0 if len(row) == n else i
        if len(row) not in (n, n - i):
            raise DomainError(f"block row {i} has {len(row)} entries")
        for k, entry in enumerate(row):
            j = k + offset
            if entry is None:
                continue
            blocks[i, j] = matrix_from_json(entry)
            have[i, j] = True
    for i in range(n):
        for j in range(n):
            if not have[i, j]:
                if not have[j, i]:
                    raise DomainError(f"block ({i}, {j}) is missing on both sides of the diagonal")
                blocks[i, j] = blocks[j, i].conj().T
    return OperatorKernel(tuple(labels), d, blocks)


def density_to_json(rho: DensityOperator) -> dict:
    return {
        "dim": rho.dim,
        "split": list(rho.split) if rho.split else None,
        "matrix": matrix_to_json(rho.matrix),
    }


def density_from_json(obj) -> DensityOperator:
    M = matrix_from_json(_get(obj, "matrix"))
    if int(_get(obj, "dim")) != M.shape[0]:
        raise DomainError("declared dim does not match the matrix")
    split = obj.get("split")
    return DensityOperator(M, tuple(split) if split else None)


def scalar_kernel_to_json(c: ScalarKernel) -> dict:
    return {"indices": list(c.labels), "values": matrix_to_json(c.values)}


def to_json(obj) -> dict:
    """Encode any supported object."""
    if isinstance(obj, Povm):
        return povm_to_json(obj)
    if isinstance(obj, OperatorKernel):
        return kernel_to_json(obj)
    if isinstance(obj, DensityOperator):
        return density_to_json(obj)
    if isinstance(obj, ScalarKernel):
        return scalar_kernel_to_json(obj)
    if isinstance(obj, np.ndarray):
        return matrix_to_json(obj)
    if hasattr(obj, "to_json"):
        return obj.to_json()
    raise TypeError(f"cannot encode {type(obj).__name__}")


def from_json(obj):
    """Decode by schema: POVM/PVM, kernel, density operator, measure, matrix, space."""
    if not isinstance(obj, dict):
        raise DomainError("top-level JSON value must be an object")
    if "kind" in obj or "effects" in obj:
        return povm_from_json(obj)
    if "indices" in obj and "blocks" in obj:
        return kernel_from_json(obj)
    if "matrix" in obj:
        return density_from_json(obj)
    if "weights" in obj:
        return measure_from_json(obj)
    if "rows" in obj and "data" in obj:
        return matrix_from_json(obj)
    if "atoms" in obj or ("left" in obj and "right" in obj):
        return space_from_json(obj)
    raise DomainError(f"unrecognized object with keys {sorted(obj)}")


def load(path) -> object:
    """Read and decode a JSON artifact.

    Raises
    ------
    ParseError
        On malformed JSON (message carries line and column) or a schema mismatch.
    AxiomViolation
        When the payload parses but the object breaks a structural axiom.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return from_json(raw)
    except AxiomViolation:
        raise
    except (DomainError, ValueError, TypeError) as exc:
        raise ParseError(f"{path}: {exc}") from None


def dump(obj, path=None, indent: int | None = 2) -> str:
    text = json.dumps(to_json(obj), indent=indent)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text
