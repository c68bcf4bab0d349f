from .common import (
    SearchError,
    SearchTrace,
    Tracker,
    penalize_truss,
    penalize_volume,
    penalize_volume_batch,
)
from .gsa import (
    GsaConfig,
    gsa_acceptance,
    gsa_acceptance_probability,
    gsa_minimize,
    gsa_temperature,
    tsallis_visit_sample,
)
from .bat import (
    BaConfig,
    BbaConfig,
    ba_minimize,
    bba_minimize,
    bba_transfer,
    inertia_weight,
    snap_to_catalog,
)

__all__ = [
    "SearchError", "SearchTrace", "Tracker",
    "penalize_truss", "penalize_volume", "penalize_volume_batch",
    "GsaConfig", "gsa_acceptance", "gsa_acceptance_probability",
    "gsa_minimize", "gsa_temperature", "tsallis_visit_sample",
    "BaConfig", "BbaConfig", "ba_minimize", "bba_minimize", "bba_transfer",
    "inertia_weight", "snap_to_catalog",
]
