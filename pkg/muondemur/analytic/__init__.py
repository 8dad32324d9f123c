from muondemur.analytic.rabi import (
    amplitude_overlay,
    effective_rabi,
    rabi_amplitudes,
)
from muondemur.analytic.shift import dq_shift_curve, resonance_field
from muondemur.analytic.tilted import (
    DemurPoint,
    MinimizationBracketException,
    TiltedFrameAngles,
    analytic_tf_trace,
    crossing_fields,
    demur_eigenfrequencies,
    demur_sweep,
    tilted_angles,
)
