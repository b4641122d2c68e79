"""Likert scoring and repeated-measures statistics."""
from .anova import Mauchly, PairwiseComparison, RmAnovaResult, helmert_contrasts, mauchly, rm_anova
from .distributions import (betainc, chi2_sf, f_sf, gammainc_lower, gammainc_upper,
                            t_sf_two_sided)
from .ratings import (ITEMS, TABLE_ROWS, RatingError, RatingRecord, ScoreTable, read_ratings,
                      score_table, subject_matrix, synthetic_ratings, write_ratings)

__all__ = [
    "ITEMS", "TABLE_ROWS", "Mauchly", "PairwiseComparison", "RatingError", "RatingRecord",
    "RmAnovaResult", "ScoreTable", "betainc", "chi2_sf", "f_sf", "gammainc_lower",
    "gammainc_upper", "helmert_contrasts", "mauchly", "read_ratings", "rm_anova",
    "score_table", "subject_matrix", "synthetic_ratings", "t_sf_two_sided", "write_ratings",
]
