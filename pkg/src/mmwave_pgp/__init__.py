"""Beamspace grouping and finite-alphabet precoding for a mmWave massive MIMO cell."""

from .beamspace import preselect, project, vcm_basis, virtual_channel
from .channel import CellGeometry, PropagationParams, sample_cell
from .grouping import Mode, apply_subgrouping, partition_cfsdm, subgroup
from .interference import effective_snr_jsdm, mai_covariance, mai_report
from .mutual_info import Constellation, mi_gh, mi_mc, qam
from .opgpa import QosTarget, opgpa_gains, snr_required
from .precoding import (
    PgpBlockOptimizer,
    effective_singular_values,
    get_optimizer,
    vaac_pgp,
    zf_pgp,
    zfp,
)

__version__ = "0.1.0"

__all__ = [
    "CellGeometry",
    "PropagationParams",
    "sample_cell",
    "vcm_basis",
    "project",
    "preselect",
    "virtual_channel",
    "Mode",
    "partition_cfsdm",
    "subgroup",
    "apply_subgrouping",
    "Constellation",
    "qam",
    "mi_gh",
    "mi_mc",
    "PgpBlockOptimizer",
    "get_optimizer",
    "zfp",
    "zf_pgp",
    "vaac_pgp",
    "effective_singular_values",
    "QosTarget",
    "snr_required",
    "opgpa_gains",
    "mai_covariance",
    "mai_report",
    "effective_snr_jsdm",
]
