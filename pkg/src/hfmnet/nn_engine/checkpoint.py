"""Bit-exact textual serialisation of parameter vectors.

Format: JSON object with keys
    format  — always "hfmnet-params"
    version — integer, currently 1
    layout  — list of [layer, name, offset, [shape...]] in slot order
    dtype   — numpy dtype string of the flat vector ("<f8")
    values  — base64 of the raw little-endian float64 buffer

base64 of the raw buffer round-trips every bit, including signed zeros;
the layout table keeps the file self-describing.
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from ..errors import DataError
from .params import ParamLayout, ParamSet, TensorSlot

FORMAT_NAME = "hfmnet-params"
FORMAT_VERSION = 1


def params_to_payload(params: ParamSet) -> dict:
    values = np.ascontiguousarray(params.values, dtype="<f8")
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "layout": [[s.layer, s.name, s.offset, list(s.shape)] for s in params.layout.slots],
        "dtype": "<f8",
        "values": base64.b64encode(values.tobytes()).decode("ascii"),
    }


def params_from_payload(payload: dict) -> ParamSet:
    if payload.get("format") != FORMAT_NAME:
        raise DataError(f"not a parameter checkpoint: format={payload.get('format')!r}")
    if payload.get("version") != FORMAT_VERSION:
        raise DataError(f"unsupported checkpoint version {payload.get('version')!r}")
    slots = tuple(
        TensorSlot(layer=int(layer), name=str(name), offset=int(offset), shape=tuple(shape))
        for layer, name, offset, shape in payload["layout"]
    )
    layout = ParamLayout(slots=slots)
    raw = base64.b64decode(payload["values"])
    values = np.frombuffer(raw, dtype=payload["dtype"]).astype(np.float64)
    return ParamSet(layout=layout, values=values)


def save_params(params: ParamSet, path) -> None:
    Path(path).write_text(json.dumps(params_to_payload(params), indent=2) + "\n", encoding="utf-8")


def load_params(path) -> ParamSet:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"cannot parse checkpoint {path}: {exc}") from exc
    return params_from_payload(payload)
