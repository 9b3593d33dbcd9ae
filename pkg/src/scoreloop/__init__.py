"""Rubric-grounded LLM scoring with a human-in-the-loop refinement cycle."""

from .corpus import (
    BalanceReport,
    CotChain,
    Exemplar,
    ExemplarStore,
    ResponseSet,
    SplitSpec,
    StudentResponse,
    check_balance,
    ingest_responses,
    split_dataset,
)
from .gateway import (
    EchoLabelsProvider,
    FaultyProvider,
    HttpProvider,
    LLMResult,
    ProviderConfig,
    RawCompletion,
    ScriptedProvider,
    complete,
    parse_output,
)
from .hitl import (
    CandidateRanking,
    IrrSession,
    StickingPoint,
    TrendReport,
    compute_session_kappa,
    detect_trends,
    open_irr_session,
    promote_exemplar,
    rank_candidates,
    resolve_disagreement,
)
from .metrics import LabelSeries, RunMetrics, cohen_kappa, quadratic_weighted_kappa, run_metrics
from .prompting import (
    BlockCodeListing,
    Prompt,
    PromptConfig,
    assemble_prompt,
    encode_block_code,
    estimate_tokens,
    render_cot,
)
from .rubric import (
    Assessment,
    Criterion,
    Rubric,
    ScoreVector,
    make_score_vector,
    max_score,
    total_score,
    validate_rubric,
)
from .runner import Discrepancy, RunRecord, ScoredResult, detect_total_discrepancy, execute_run
from .store import Workspace

__version__ = "0.1.0"
