"""conceptscope: diverse concept-bottleneck explanations with an expert loop."""

from .backend import active_backend
from .datagen import (GroundTruthCatalog, HexagonConfig, VitalsConfig,
                      gen_hexagon, gen_vitals, oracle_valid_combinations)
from .diversity import (MetricKind, ProposalSet, SingleConceptProposal,
                        greedy_select, kmeans_select, split_to_singles)
from .evaluate import MatchReport, coverage_report, f1_binary, match_explanation, match_single
from .hmc import (HmcConfig, PinnedConcept, ProposalPool, filter_predictive,
                  hmc_chain, leapfrog, run_restarts)
from .model import (ConceptParams, Dataset, LabelParams, PosteriorSample,
                    PriorSpec, concept_forward, flatten_params, grad_log_posterior,
                    label_forward, log_posterior, sample_accuracy, unflatten_params)
from .pipeline import PipelineConfig, run_pipeline

__version__ = "0.1.0"
