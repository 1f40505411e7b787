"""codesleep: slotted multi-hop wireless simulation with XOR inter-flow
coding and per-node learned sleep/overhear scheduling."""

from .agent import (
    Action,
    AgentState,
    DecisionRecord,
    EpsilonSchedule,
    QTable,
    RewardEvent,
    SleepAgent,
    StateQuantizer,
    compose_reward,
    elapsed_discount,
    observe_state,
    select,
)
from .baselines import (
    ALWAYS_OVERHEAR,
    ALWAYS_SLEEP,
    FixedPolicy,
    SyntheticSmdp,
    apply_fixed_policy,
    canonical_scenario,
    random_policy,
    steady_canonical,
    train_on_smdp,
    value_iteration,
)
from .coding import (
    REDUNDANT,
    CodedPacket,
    DecodeFailure,
    KnowledgeTable,
    NativePacket,
    OverheardEntry,
    OverheardPool,
    ReceptionReport,
    age_pool,
    decode,
    emit_reception_report,
    encode,
    select_coding_set,
    update_knowledge,
)
from .config import ScenarioConfig
from .engine import EnergyModel, NodeRuntime, SlotOutcome, account_energy, run
from .metrics import (
    MetricsReport,
    avg_delay,
    coding_gain,
    converged_epoch,
    energy_per_bit,
    lifetime,
    reward_curve,
)
from .world import (
    Flow,
    InfiniteGap,
    RouteFailure,
    Topology,
    TrafficRates,
    build_topology,
    expected_epoch_gap,
    flow_rates,
    generate_arrivals,
    next_hop,
    random_topology,
)

__version__ = "0.1.0"
