"""Multi-source neurosymbolic transfer for tabular RL on automaton-product
gridworlds: LLM-generated task automata, semantic cross-task aggregation
of distilled teacher knowledge, and dual-volatility trust gating."""

from .aggregate import ContextMap, aggregate_strategic, aggregate_tactical, map_context
from .dfa import (
    Dfa,
    DfaError,
    DfaValidationReport,
    chain_dfa,
    dfa_step,
    is_accepting,
    parse_dfa,
    serialize_dfa,
    validate_dfa,
)
from .distill import (
    KnowledgePack,
    PackError,
    compute_q_ad,
    distill_pack,
    extract_teacher_policy,
    load_pack,
    save_pack,
    summarize_state,
)
from .envs import ACTIONS, EnvState, GridEnv, enumerate_states, env_step, label, make_env
from .gating import GateParams, TrustGateState, sigmoid
from .llm_dfa import (
    LlmClientConfig,
    LlmDfaError,
    PromptSpec,
    build_prompt,
    generate_dfa,
    parse_llm_response,
)
from .metrics import RunMetrics, SummaryTable, summarize_runs
from .product import ProductConfig, ProductState, initial_product_state, product_step
from .qlearn import (
    LearnerConfig,
    QTable,
    plain_update,
    select_action,
    softmax_row,
    td_error,
    train_teacher,
    value_iteration,
)
from .semantic import (
    BagOfWordsProvider,
    FixtureProvider,
    HttpEmbeddingProvider,
    Neighborhood,
    SemanticIndex,
    build_neighborhood,
    compute_weights,
    cosine_similarity,
    embed_all,
    semantic_volatility,
)
from .tasks import TASK_DESCRIPTIONS, default_dfa
from .training import (
    METHODS,
    MethodConfig,
    ad_decay,
    guidance,
    lantern_update,
    run_baseline,
    select_best_pack,
    train_student,
)

__version__ = "0.1.0"
