import dataclasses
from dataclasses import dataclass
from typing import List, Mapping, Optional, Tuple

import numpy as np

from muondemur.dynamics.trace import AsymmetryTrace
from muondemur.fitkit.fit import FitReport, fit_model
from muondemur.fitkit.models import Kind, ModelSpec, Zone
from muondemur.spinsys.operators import InvalidArgumentException

GEOMETRIES = ("lf", "tf")


@dataclass(frozen=True)
class AmplitudePair:
    component: str
    nu: float
    A_lf: float
    A_lf_error: float
    A_tf: float
    A_tf_error: float

    def as_row(self) -> dict:
        return dataclasses.asdict(self)


def constellation_fit(
    lf: AsymmetryTrace,
    tf: AsymmetryTrace,
    model: ModelSpec,
    init: Mapping[str, float],
    bounds: Optional[Mapping[str, Tuple[float, float]]] = None,
    seed: Optional[int] = None,
) -> Tuple[FitReport, List[AmplitudePair]]:
    """
    Fits one multi-component model to an LF and a TF trace at once, with the
    oscillation frequencies shared between the two geometries.

    init and bounds use the names of model; they seed both geometries.
    """
    if lf.times[0] < 0 or tf.times[0] < 0:
        raise InvalidArgumentException("Constellation fits need traces starting at t >= 0")

    # the TF trace is placed after the LF one on a common time axis
    shift = float(lf.times[-1] + lf.dt)
    zones = (Zone("lf", 0.0, shift), Zone("tf", shift))
    components = []
    for geometry in GEOMETRIES:
        components.extend(
            dataclasses.replace(component, name=f"{geometry}_{component.name}", zone=geometry)
            for component in model.components
        )
    shared = [
        (f"tf_{component.name}.nu", f"lf_{component.name}.nu")
        for component in model.components
        if component.kind is Kind.DAMPED_COSINE
    ]
    joint = ModelSpec(tuple(components), tuple(shared), zones)

    if lf.sigma is None or tf.sigma is None:
        raise InvalidArgumentException("Both traces need per-point standard errors")
    combined = AsymmetryTrace(
        np.concatenate([lf.times, tf.times + shift]),
        np.concatenate([lf.values, tf.values]),
        np.concatenate([lf.sigma, tf.sigma]),
    )

    joint_init, joint_bounds = {}, {}
    for geometry in GEOMETRIES:
        for name, value in init.items():
            joint_init[f"{geometry}_{name}"] = value
        for name, limits in (bounds or {}).items():
            target = f"{geometry}_{name}"
            if target in joint.parameter_names:
                joint_bounds[target] = limits
    joint_init = {name: value for name, value in joint_init.items() if name in joint.parameter_names}

    report = fit_model(combined, joint, joint_init, joint_bounds, seed=seed)
    pairs = [
        AmplitudePair(
            component=component.name,
            nu=report.value(f"lf_{component.name}.nu"),
            A_lf=report.value(f"lf_{component.name}.A"),
            A_lf_error=report.error(f"lf_{component.name}.A"),
            A_tf=report.value(f"tf_{component.name}.A"),
            A_tf_error=report.error(f"tf_{component.name}.A"),
        )
        for component in model.components
        if component.kind is Kind.DAMPED_COSINE
    ]
    return report, pairs
