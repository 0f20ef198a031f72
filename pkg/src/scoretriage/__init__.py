"""Allocate a human-rater budget over machine-scored responses and estimate
the resulting global accuracy/QWK with lower confidence bounds."""

from .aggregation import AggregationPolicy, GlobalTable, aggregate_dataset, global_score
from .core import (AgreementMatrix, Dataset, ItemResponse, ScoreScale, ValidationError, build_agreement_matrix,
                   lookup_prob, validate_dataset)
from .guarantee import (CandidateConfidence, GuaranteeReport, candidate_confidence, draw_estimation_sample,
                        estimate_with_bound)
from .metrics import MetricReport, accuracy, confusion, qwk
from .samplers import (Method, SamplePlan, SamplingWeights, apply_human_scores, class_uncertainty,
                       draw_without_replacement, expected_reward, random_weights, reward_of_swap, reward_weights,
                       uncertainty_weights)
from .synthetic import PseudoModelConfig, SynthConfig, apply_pseudo_model, generate_labels, split_by_candidate

__version__ = "0.1.0"
