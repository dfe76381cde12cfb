"""2D finite-volume wave-propagation solver with pointwise Riemann kernels,
interchangeable grid traversals, and pluggable threading backends."""

from .grid import (AuxField, BoundaryCondition, FluctuationField, GridSpec,
                   StateField, allocate_fields, fill_ghost)
from .kernels import (DESCRIPTORS, KERNEL_NAMES, AcousticsParams, Direction,
                      EulerParams, Kernel, KernelDescriptor, KernelError,
                      RiemannResult, euler_flux, make_kernel, rp_acoustics_const,
                      rp_acoustics_var, rp_advection, rp_euler)
from .parallel import (Backend, ParallelError, Range2D, Serial, StaticThreads,
                       WorkStealing, default_thread_count, detect_cores,
                       for_each_unit)
from .sweep import (CellWise, RowWise, Strategy, SweepError, SweepStats, Tiled,
                    apply_update, sweep)
from .driver import (DEFAULT_IC, SimulationConfig, StepReport,
                     TimestepController, choose_dt, initial_condition, run,
                     step)

__version__ = "0.1.0"
