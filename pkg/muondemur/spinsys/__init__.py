from muondemur.spinsys.hamiltonian import (
    build_static_hamiltonian,
    frame_generator,
    rotating_frame_hamiltonian,
)
from muondemur.spinsys.levels import (
    LevelDiagram,
    Transition,
    TransitionTable,
    breit_rabi_sweep,
    diagonalize,
    level_diagram,
    muon_sector_frequencies,
    transition_table,
)
from muondemur.spinsys.operators import (
    ContractViolationException,
    InvalidArgumentException,
    OperatorMatrix,
)
from muondemur.spinsys.system import Hyperfine, SpinSystem
