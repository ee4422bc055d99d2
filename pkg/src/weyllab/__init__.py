"""Desk-scale spectral laboratory for singular model spaces.

Weighted intervals, rectangles, disks and flat cones get meshed, their
Dirichlet pencils assembled and solved, and the results are held against
analytic oracles: Weyl counting asymptotics, heat-trace and heat-kernel
limits, Bishop-Gromov-type comparison inequalities, and blow-up (tangent
cone) spectra.  The `weyllab` CLI drives the same pipeline from YAML
configs and leaves reproducible CSV/JSON run directories behind.
"""

from .errors import (ConfigError, DomainTooSmall, FactorizationBreakdown,
                     NoConvergence, NonconvergentDensity, RadiusOutOfDomain,
                     ResolutionTooCoarse, SingularElement, TailModelMissing,
                     TimeTooSmall, UnresolvedLimit, UnsupportedDomain,
                     UnsupportedSpace, WeylLabError, WindowTooNarrow)
from .spaces import (SpaceSpec, WeightSpec, ball_measure, b_function, cone,
                     disk, interval, rectangle)
from .geometry import (check_bishop_gromov, check_doubling,
                       check_noncollapsing, density_estimate,
                       unit_ball_volume, volume_profile)
from .meshing import BallDomain, Mesh, build_mesh, refine
from .assembly import DiscreteOperator, assemble
from .eigensolve import (CountingFunction, Spectrum, analytic_spectrum,
                         bessel_zeros, counting_by_inertia,
                         counting_from_spectrum, inertia_count, lowest_eigs)
from .heat import (GrowthBound, HeatTrace, KernelDiagonal, check_gaussian_shape,
                   check_kernel_monotonicity, check_rescaling_identity,
                   check_tail_decay, heat_trace, kernel_diagonal,
                   trace_diagonal_consistency, vertex_kernel_series)
from .asymptotics import (KaramataReport, LimitEstimate, WeylFit, b_limit,
                          diagonal_limit, karamata_check,
                          measure_independence_experiment, time_ladder,
                          trace_limit, weyl_constant_forms, weyl_fit,
                          weyl_predict)
from .blowup import (blowup_kernel_limit, blowup_ladder, blowup_operator,
                     blowup_pair, blowup_spectrum,
                     local_spectral_convergence_experiment,
                     shrinking_interval_example)
from .config import ExperimentConfig, load_config, parse_config
from .runner import RunManifest, load_manifest, report, run, run_batch

try:
    from importlib.metadata import version as _version

    __version__ = _version("weyllab")
except Exception:  # pragma: no cover - running from a plain checkout
    __version__ = "0.0.0"

__all__ = [name for name in dir() if not name.startswith("_")]
