"""Extremal point processes of rank and distance statistics in high dimension."""

from .datagen import LinearModelSpec, MarginalSpec, SampleMatrix, derive_seed, gen_iid_matrix
from .exactdist import ExactPmf, kendall_pmf, mahonian_counts
from .gof import TestReport, ks_test, poisson_count_test
from .kernels import KENDALL, INTERPOINT, R_MAJOR, SPEARMAN, Kernel
from .pointproc import build_process, record_times
from .prmref import GUMBEL, LimitFamily, limit_cdf, orderstat_k_cdf
from .scaling import Affine, d_of, statistic_transform

__version__ = "0.1.0"
