"""Versioned JSON schema for measurement-count files.

A counts file declares the measurement scheme (state or process kind,
qubit count, readout family, input family) and carries one record per
measured block. MUB outcome keys are bitstrings of length m with bit 0
meaning the + eigenstate; SIC outcome keys are the element indices
"0".."4^m-1". A process file has one record per (input, readout-block)
configuration, ordered inputs-outer to match the design rows.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .errors import SchemaError
from .protocols import (
    MAX_QPT_QUBITS,
    MAX_QST_QUBITS,
    mub_protocol,
    process_protocol,
    sic_protocol,
)
from .qst import FrequencyVector

FORMAT_VERSION = "1"
KIND_QST = "qst"
KIND_QPT = "qpt"


def mub_words(m: int) -> tuple[str, ...]:
    """Readout basis words, one letter per qubit, in block order."""
    return tuple("".join(w) for w in itertools.product("xyz", repeat=m))


def basis_words(m: int, readout: str) -> tuple[str, ...]:
    if readout == "mub":
        return mub_words(m)
    if readout == "sic":
        return ("sic",)
    raise SchemaError(f"unknown readout {readout!r}", field="readout")


def outcome_keys(m: int, readout: str) -> tuple[str, ...]:
    """Outcome labels of one block, in probability-vector order."""
    if readout == "mub":
        return tuple(format(i, f"0{m}b") for i in range(2**m))
    if readout == "sic":
        return tuple(str(i) for i in range(4**m))
    raise SchemaError(f"unknown readout {readout!r}", field="readout")


@dataclass(frozen=True)
class CountBlock:
    """Counts of one measured block, in canonical outcome order."""

    basis_word: str
    counts: tuple[int, ...]
    input_index: int | None = None


@dataclass(frozen=True)
class CountsFile:
    """A validated counts file: scheme declaration plus block records."""

    kind: str
    qubits: int
    readout: str
    inputs: str
    shots_per_block: int
    blocks: tuple[CountBlock, ...]

    def __post_init__(self):
        if self.kind not in (KIND_QST, KIND_QPT):
            raise SchemaError(f"kind must be qst or qpt, got {self.kind!r}", "kind")
        limit = MAX_QPT_QUBITS if self.kind == KIND_QPT else MAX_QST_QUBITS
        if not isinstance(self.qubits, int) or not 1 <= self.qubits <= limit:
            raise SchemaError(
                f"qubits must be an integer in [1, {limit}], got {self.qubits!r}",
                "qubits",
            )
        if self.readout not in ("mub", "sic"):
            raise SchemaError(
                f"readout must be mub or sic, got {self.readout!r}", "readout"
            )
        if self.kind == KIND_QST and self.inputs != "none":
            raise SchemaError("state tomography uses inputs 'none'", "inputs")
        if self.kind == KIND_QPT:
            if self.inputs != "tetrahedron":
                raise SchemaError(
                    "process tomography uses inputs 'tetrahedron'", "inputs"
                )
            if self.readout != "mub":
                raise SchemaError(
                    "process tomography here uses MUB readout", "readout"
                )
        if not isinstance(self.shots_per_block, int) or self.shots_per_block < 1:
            raise SchemaError(
                f"shots_per_block must be a positive integer, got "
                f"{self.shots_per_block!r}",
                "shots_per_block",
            )
        expected = expected_block_keys(self.kind, self.qubits, self.readout)
        declared = [(b.input_index, b.basis_word) for b in self.blocks]
        if declared != list(expected):
            _diagnose_block_keys(declared, expected)
        n_out = len(outcome_keys(self.qubits, self.readout))
        for i, block in enumerate(self.blocks):
            if len(block.counts) != n_out:
                raise SchemaError(
                    f"expected {n_out} outcomes, got {len(block.counts)}",
                    f"blocks[{i}].counts",
                )
            if any((not isinstance(c, int)) or c < 0 for c in block.counts):
                raise SchemaError(
                    "counts must be nonnegative integers", f"blocks[{i}].counts"
                )
            total = sum(block.counts)
            if total != self.shots_per_block:
                raise SchemaError(
                    f"block {block.basis_word!r} counts sum to {total}, "
                    f"expected {self.shots_per_block}",
                    f"blocks[{i}].counts",
                )

    @property
    def stacked_counts(self) -> np.ndarray:
        """All counts concatenated in design row order."""
        return np.array(
            [c for b in self.blocks for c in b.counts], dtype=np.int64
        )


def expected_block_keys(kind: str, m: int, readout: str):
    """Canonical (input_index, basis_word) sequence for a scheme."""
    words = basis_words(m, readout)
    if kind == KIND_QST:
        return tuple((None, w) for w in words)
    return tuple((i, w) for i in range(4**m) for w in words)


def _diagnose_block_keys(declared, expected):
    seen = set()
    for i, key in enumerate(declared):
        if key in seen:
            raise SchemaError(f"duplicate block {key}", f"blocks[{i}]")
        seen.add(key)
        if key not in expected:
            raise SchemaError(f"unexpected block {key}", f"blocks[{i}]")
    missing = [k for k in expected if k not in seen]
    if missing:
        raise SchemaError(f"missing blocks {missing[:4]}", "blocks")
    raise SchemaError(
        "blocks are out of canonical order (inputs outer, basis words "
        "x..z lexicographic)",
        "blocks",
    )


def build_protocol(cf: CountsFile):
    """The measurement scheme a counts file declares."""
    if cf.kind == KIND_QPT:
        return process_protocol(cf.qubits, cf.shots_per_block)
    if cf.readout == "mub":
        return mub_protocol(cf.qubits, cf.shots_per_block)
    return sic_protocol(cf.qubits, cf.shots_per_block)


def frequency_vector(cf: CountsFile, model) -> FrequencyVector:
    """The file's counts in the block structure of a built design."""
    return FrequencyVector(
        counts=cf.stacked_counts,
        starts=model.starts,
        sizes=model.sizes,
        shots_per_block=cf.shots_per_block,
    )


def counts_file(
    kind: str, qubits: int, readout: str, shots_per_block: int, counts
) -> CountsFile:
    """Wrap a stacked count vector (design row order) into a CountsFile."""
    counts = np.asarray(counts)
    keys = expected_block_keys(kind, qubits, readout)
    n_out = len(outcome_keys(qubits, readout))
    if counts.shape != (n_out * len(keys),):
        raise SchemaError(
            f"count vector length {counts.shape} does not match "
            f"{len(keys)} blocks of {n_out} outcomes"
        )
    blocks = []
    for j, (idx, word) in enumerate(keys):
        row = counts[j * n_out : (j + 1) * n_out]
        blocks.append(
            CountBlock(
                basis_word=word,
                counts=tuple(int(c) for c in row),
                input_index=idx,
            )
        )
    return CountsFile(
        kind=kind,
        qubits=int(qubits),
        readout=readout,
        inputs="tetrahedron" if kind == KIND_QPT else "none",
        shots_per_block=int(shots_per_block),
        blocks=tuple(blocks),
    )


def to_payload(cf: CountsFile) -> dict:
    """JSON-ready dict with stable field ordering."""
    keys = outcome_keys(cf.qubits, cf.readout)
    blocks = []
    for b in cf.blocks:
        record = {}
        if b.input_index is not None:
            record["input_index"] = b.input_index
        record["basis_word"] = b.basis_word
        record["counts"] = {k: c for k, c in zip(keys, b.counts)}
        blocks.append(record)
    return {
        "format_version": FORMAT_VERSION,
        "kind": cf.kind,
        "qubits": cf.qubits,
        "readout": cf.readout,
        "inputs": cf.inputs,
        "shots_per_block": cf.shots_per_block,
        "blocks": blocks,
    }


def _require(payload: dict, field: str, kinds, path: str = ""):
    where = f"{path}{field}"
    if field not in payload:
        raise SchemaError("missing required field", where)
    value = payload[field]
    if kinds is not None and not isinstance(value, kinds):
        raise SchemaError(f"wrong type {type(value).__name__}", where)
    if isinstance(value, bool):  # bool passes isinstance(int) checks
        raise SchemaError("wrong type bool", where)
    return value


def from_payload(payload) -> CountsFile:
    """Validate a decoded JSON document into a CountsFile."""
    if not isinstance(payload, dict):
        raise SchemaError("top level must be an object")
    version = _require(payload, "format_version", str)
    if version != FORMAT_VERSION:
        raise SchemaError(
            f"unsupported version {version!r} (expected {FORMAT_VERSION!r})",
            "format_version",
        )
    kind = _require(payload, "kind", str)
    qubits = _require(payload, "qubits", int)
    readout = _require(payload, "readout", str)
    inputs = _require(payload, "inputs", str)
    shots = _require(payload, "shots_per_block", int)
    raw_blocks = _require(payload, "blocks", list)
    if kind not in (KIND_QST, KIND_QPT):
        raise SchemaError(f"kind must be qst or qpt, got {kind!r}", "kind")
    if readout not in ("mub", "sic"):
        raise SchemaError(f"readout must be mub or sic, got {readout!r}", "readout")
    if not isinstance(qubits, int) or qubits < 1:
        raise SchemaError("qubits must be a positive integer", "qubits")
    keys = outcome_keys(qubits, readout)
    blocks = []
    for i, rec in enumerate(raw_blocks):
        path = f"blocks[{i}]."
        if not isinstance(rec, dict):
            raise SchemaError("block must be an object", f"blocks[{i}]")
        word = _require(rec, "basis_word", str, path)
        counts_map = _require(rec, "counts", dict, path)
        if kind == KIND_QPT:
            idx = _require(rec, "input_index", int, path)
        else:
            if "input_index" in rec:
                raise SchemaError(
                    "input_index is only valid for process files",
                    f"{path}input_index",
                )
            idx = None
        extra = sorted(set(counts_map) - set(keys))
        if extra:
            raise SchemaError(f"unknown outcome keys {extra[:4]}", f"{path}counts")
        row = []
        for k in keys:
            if k not in counts_map:
                raise SchemaError(f"missing outcome {k!r}", f"{path}counts")
            c = counts_map[k]
            if not isinstance(c, int) or isinstance(c, bool):
                raise SchemaError(f"outcome {k!r} is not an integer", f"{path}counts")
            row.append(c)
        blocks.append(
            CountBlock(basis_word=word, counts=tuple(row), input_index=idx)
        )
    return CountsFile(
        kind=kind,
        qubits=qubits,
        readout=readout,
        inputs=inputs,
        shots_per_block=shots,
        blocks=tuple(blocks),
    )


def parse_counts(path: str) -> CountsFile:
    """Load and validate a counts file from disk."""
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from exc
    return from_payload(payload)


def write_counts(cf: CountsFile, path: str):
    """Serialize a counts file with stable formatting."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_payload(cf), fh, indent=2)
        fh.write("\n")
