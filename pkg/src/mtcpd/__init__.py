"""Mode-tensorized CP decomposition for MIMO-OFDM channel estimation."""

__version__ = "0.1.0"

from .tensor import (  # noqa: E402
    TensorizationPlan,
    detensorize,
    frobenius_norm,
    kronecker,
    kronecker_chain,
    rank1_tensor,
    reshape_ura,
    tensorize,
    unfold,
    fold,
)
from .channel import (  # noqa: E402
    ChannelRealization,
    PropagationPath,
    ScenarioConfig,
    add_awgn,
    make_rng,
    normalize_channel,
    sample_scenario,
    steering_vector,
    synthesize_channel,
)
from .decomposition import (  # noqa: E402
    AlsSettings,
    Rank1Component,
    dft_init,
    extract_components,
    make_binary_plan,
    make_trivial_plan,
    normalized_parameter_count,
    parameter_count,
    rank1_als,
    recombine_virtual_factors,
    reconstruct,
)
from .selection import (  # noqa: E402
    SliceErrorTable,
    component_coherence,
    phase_coherence,
    phase_ratios,
    reconstruction_error,
    select_by_pcm,
    select_rank_avg,
)
from .link import Precoder, evaluate_realization, spectral_efficiency, svd_precoder  # noqa: E402
