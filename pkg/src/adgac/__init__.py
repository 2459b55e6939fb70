"""Interactive classification with noisy label and pairwise-comparison oracles."""

from .oracles import (ComparisonNoiseSpec, GroundTruth, LabelNoiseSpec, Oracle,
                      QueryCounters, ScenarioSpec, bayes_label, calibrate_band,
                      gaussian_scenario, query_comparison, query_label,
                      sample_unlabeled, score, uniform_scenario)
from .core import (AdgacParams, AdgacResult, RankedGroups, adgac,
                   group_binary_search, k_adv, k_tnc, noisy_quicksort,
                   partition_groups)
from .hypotheses import (EmptyVersionSpaceError, ExplicitClass, LabeledDataset,
                         ThresholdClass, VersionSpace, empirical_error,
                         estimate_disagreement_coefficient,
                         estimate_disagreement_mass, filter_version_space,
                         in_disagreement_region)
from .a2 import (BudgetExceededError, RunParams, RunResult, choose_n_i,
                 run_a2_adgac, run_baseline_a2, vc_bound_u)
from .margin import (EmptyBandError, HingeFit, MarginParams, MarginRunResult,
                     MarginSchedule, band_membership, fit_initial_direction,
                     hinge_loss, hinge_loss_batch, hinge_subgradient,
                     minimize_hinge, run_margin_adgac)
from .minimax import (GhatConstruction, LemmaInstance, ScoreDistribution,
                      best_threshold_error, comparison_error_of, construct_ghat,
                      equality_instance, lemma_min_f, make_lemma_instance)
from .bench import (DEFAULT_CONSTANTS, ExperimentConfig, TrialReport,
                    TunableConstants, emit_report, measure_error,
                    parse_report_csv, passive_erm, run_trials)

__all__ = [name for name in dir() if not name.startswith("_")]
