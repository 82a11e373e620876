"""Mixed-state circuits, subroutine gates and their compilation to unitaries."""

from .compiler import (
    circuit_unitary,
    compile_subroutine,
    inline_subroutines,
    lineage,
    to_unitary_circuit,
)
from .core import (
    Circuit,
    CircuitBuilder,
    Node,
    ancestors_of_output,
    circuit_channel,
    computed_function,
    depth,
    evaluate,
    is_topological,
    max_fanin,
    random_circuit,
    topo_sort,
)
from .functions import (
    ProbFunction,
    SubroutineRef,
    restrict_to_blank_outputs,
    subroutine_gate,
    subroutine_gate_bruteforce,
)
