"""Cycle-accurate simulator and analytical model of a multi-mode CNN inference engine."""
from .engine import (EngineConfig, NetworkResult, PipelinePlan, SimResult, plan_pipeline,
                     run_conv_layer, run_fc_layer, run_network)
from .errors import (CapacityError, DimensionError, GfidError, ModeError, PreconditionError,
                     ShapeError, UnknownNetworkError)
from .fixedpoint import (ACTIVATION_Q, WEIGHT_Q, Acc24, Fixed16, QFormat, dequantize, mac,
                         quantize)
from .gfid import (GfidSchedule, TileModeConfig, active_pe_count, build_schedule, lcm_pe_count,
                   mode_utilization, tile_mode, utilization, utilization_max)
from .layers import (ConvLayerConfig, FcLayerConfig, FilterBank, NetworkDescriptor, Tensor3,
                     load_network, output_dims, read_tensor, save_network, write_tensor)
from .networks import builtin_network
from .oracle import conv_forward, fc_forward
from .perf import (CYCLE_LAW, CALIBRATED, CostModel, PerfReport, conv_cycles, conv_mem_accesses,
                   efficiency, fc_cycles, fc_mem_accesses, network_report, peak_performance)
from .tile import FcTile, Tile, TileTrace, WeightGenerator, configure, weight_passing_stall

__version__ = "0.1.0"
