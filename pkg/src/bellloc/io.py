"""JSON interchange: states, source operators, certificates, functionals, POVMs.

Complex numbers are written as ``[re, im]`` pairs; matrices as row-major
nested lists of such pairs.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .bellcheck import BellFunctional, MeasurementAssemblage, Scenario
from .dilation import SettingProfile, SourceOperator
from .states import PureStateCoeffs
from .tensor import OperatorOnProduct
from .tpcert import ProductState, TpCertificate


def encode_complex_array(a) -> list:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [encode_complex_array(x) for x in a]


def decode_complex_array(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape[-1] != 2:
        raise ValueError("complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def state_to_json(psi: PureStateCoeffs) -> dict:
    return {"d": psi.d, "n_sites": psi.n_sites, "coeffs": encode_complex_array(psi.coeffs)}


def state_from_json(data: dict) -> PureStateCoeffs:
    try:
        return PureStateCoeffs(int(data["d"]), int(data["n_sites"]), decode_complex_array(data["coeffs"]))
    except KeyError as exc:
        raise ValueError(f"state file is missing key {exc}") from None


def load_state(path) -> PureStateCoeffs:
    return state_from_json(json.loads(Path(path).read_text()))


def operator_to_json(op: OperatorOnProduct) -> dict:
    return {"dims": list(op.dims), "entries": encode_complex_array(op.matrix)}


def operator_from_json(data: dict) -> OperatorOnProduct:
    return OperatorOnProduct(data["dims"], decode_complex_array(data["entries"]))


def source_to_json(src: SourceOperator) -> dict:
    out = operator_to_json(src.op)
    out.update(
        {"d": src.d, "profile": list(src.profile.settings), "target": operator_to_json(src.target)}
    )
    return out


def source_from_json(data: dict) -> SourceOperator:
    return SourceOperator(
        operator_from_json(data),
        SettingProfile(tuple(data["profile"])),
        int(data["d"]),
        operator_from_json(data["target"]),
    )


def certificate_to_json(cert: TpCertificate) -> dict:
    return {
        "verdict": cert.verdict,
        "min_value": cert.min_value,
        "witness": [encode_complex_array(v) for v in cert.witness.vectors],
        "seed": cert.seed,
        "restarts": cert.restarts,
        "iterations": list(cert.iterations),
        "tolerance": cert.tolerance,
        "note": cert.note,
    }


def certificate_from_json(data: dict) -> TpCertificate:
    return TpCertificate(
        verdict=data["verdict"],
        min_value=float(data["min_value"]),
        witness=ProductState(tuple(decode_complex_array(v) for v in data["witness"])),
        restarts=int(data["restarts"]),
        iterations=[int(i) for i in data["iterations"]],
        seed=int(data["seed"]),
        tolerance=float(data.get("tolerance", 1e-9)),
    )


def functional_from_json(data: dict) -> BellFunctional:
    """``{"settings": [...], "outcomes": [[...], ...], "coefficients": {"0,1": table, ...}}``."""
    try:
        scen = Scenario(tuple(data["settings"]), tuple(tuple(o) for o in data["outcomes"]))
        coeffs = {}
        for key, table in data["coefficients"].items():
            s = tuple(int(t) for t in str(key).split(","))
            coeffs[s] = np.asarray(table, dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed functional: {exc}") from None
    return BellFunctional(scen, coeffs)


def functional_to_json(phi: BellFunctional) -> dict:
    scen = phi.scenario
    return {
        "settings": list(scen.settings),
        "outcomes": [list(o) for o in scen.outcomes],
        "coefficients": {
            ",".join(map(str, s)): t.tolist() for s, t in phi.coefficients.items() if t.any()
        },
    }


def povms_from_json(data: dict) -> MeasurementAssemblage:
    """``{"povms": [[[effect, ...] per setting] per site]}`` with complex-pair matrices."""
    try:
        sites = data["povms"]
        return MeasurementAssemblage(
            tuple(tuple(decode_complex_array(effects) for effects in site) for site in sites)
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ValueError(f"malformed POVM file: {exc}") from None


def povms_to_json(m: MeasurementAssemblage) -> dict:
    return {"povms": [[encode_complex_array(e) for e in site] for site in m.povms]}
