"""One-way repeated-measures ANOVA with sphericity test and paired follow-ups."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from itertools import combinations

import numpy as np

from .distributions import chi2_sf, f_sf, t_sf_two_sided

_REL_TOL = 1e-12


@dataclass(frozen=True)
class Mauchly:
    W: float
    chi2: float
    df: int
    p: float
    epsilon_gg: float


@dataclass(frozen=True)
class PairwiseComparison:
    a: str
    b: str
    mean_diff: float
    t: float | None
    df: int
    p_raw: float
    p_bonferroni: float


@dataclass
class RmAnovaResult:
    """Within-subjects effect of condition.

    ``F`` and ``p`` are None when the design is degenerate (no residual
    variance), with the reason in ``notes``.
    """

    conditions: list
    n_subjects: int
    means: dict
    ss_condition: float
    ss_subject: float
    ss_error: float
    df1: int
    df2: int
    F: float | None
    p: float | None
    mauchly: Mauchly
    pairwise: list
    degenerate: bool = False
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "conditions": list(self.conditions),
            "n_subjects": self.n_subjects,
            "means": self.means,
            "ss": {"condition": self.ss_condition, "subject": self.ss_subject,
                   "error": self.ss_error},
            "df": [self.df1, self.df2],
            "F": self.F,
            "p": self.p,
            "mauchly": asdict(self.mauchly),
            "pairwise": [asdict(c) for c in self.pairwise],
            "degenerate": self.degenerate,
            "notes": list(self.notes),
        }

    def to_text(self) -> str:
        m = self.mauchly
        lines = [f"Repeated-measures ANOVA over {len(self.conditions)} conditions, "
                 f"{self.n_subjects} subjects"]
        lines.append("  means: " + ", ".join(f"{c} {self.means[c]:.3f}" for c in self.conditions))
        lines.append(f"  Mauchly W = {m.W:.4f}, chi2({m.df}) = {m.chi2:.3f}, {_fmt_p(m.p)}, "
                     f"Greenhouse-Geisser epsilon = {m.epsilon_gg:.4f}")
        if self.F is None:
            lines.append(f"  F({self.df1},{self.df2}) undefined")
        else:
            lines.append(f"  F({self.df1},{self.df2}) = {self.F:.2f}, {_fmt_p(self.p)}")
        lines.append("  pairwise (Bonferroni):")
        for c in self.pairwise:
            lines.append(f"    {c.a} - {c.b}: diff {c.mean_diff:+.3f}, "
                         f"{_fmt_p(c.p_bonferroni)}")
        for note in self.notes:
            lines.append(f"  note: {note}")
        return "\n".join(lines) + "\n"


def _fmt_p(p: float | None) -> str:
    if p is None:
        return "p n/a"
    return "p < .001" if p < 0.001 else "p = " + f"{p:.3f}".lstrip("0")


def helmert_contrasts(k: int) -> np.ndarray:
    """Orthonormal contrasts (k x k-1): columns orthogonal to the unit vector."""
    C = np.zeros((k, k - 1))
    for j in range(1, k):
        C[:j, j - 1] = 1.0
        C[j, j - 1] = -float(j)
        C[:, j - 1] /= math.sqrt(j * (j + 1))
    return C


def mauchly(Y: np.ndarray) -> tuple[Mauchly, list]:
    n, k = Y.shape
    notes = []
    if k == 2:
        notes.append("two conditions give a single difference score; sphericity holds trivially")
        return Mauchly(1.0, 0.0, 0, 1.0, 1.0), notes
    p = k - 1
    Z = Y @ helmert_contrasts(k)
    S = np.cov(Z, rowvar=False, ddof=1)
    tr = float(np.trace(S))
    if tr <= 0:
        notes.append("difference scores have no variance; sphericity test undefined")
        return Mauchly(1.0, 0.0, p * (p + 1) // 2 - 1, 1.0, 1.0), notes
    det = float(np.linalg.det(S))
    W = min(1.0, max(det, 0.0) / (tr / p) ** p)
    df = p * (p + 1) // 2 - 1
    eps = tr ** 2 / (p * float(np.trace(S @ S)))
    if W <= 0:
        notes.append("difference covariance is singular; Mauchly W is 0")
        return Mauchly(0.0, math.inf, df, 0.0, eps), notes
    factor = (n - 1) - (2 * p * p + p + 2) / (6 * p)
    chi2 = max(0.0, -factor * math.log(W))
    return Mauchly(W, chi2, df, chi2_sf(chi2, df), eps), notes


def _pairwise(Y, conditions) -> list[PairwiseComparison]:
    n, k = Y.shape
    pairs = list(combinations(range(k), 2))
    out = []
    for i, j in pairs:
        d = Y[:, i] - Y[:, j]
        mean = float(d.mean())
        sd = float(d.std(ddof=1)) if n > 1 else 0.0
        scale = max(1.0, float(np.abs(Y).max()))
        if sd <= _REL_TOL * scale:
            t = None
            p_raw = 1.0 if abs(mean) <= _REL_TOL * scale else 0.0
        else:
            t = mean / (sd / math.sqrt(n))
            p_raw = t_sf_two_sided(t, n - 1)
        out.append(PairwiseComparison(str(conditions[i]), str(conditions[j]), mean, t, n - 1,
                                      p_raw, min(1.0, p_raw * len(pairs))))
    return out


def rm_anova(Y, conditions=None) -> RmAnovaResult:
    """Repeated-measures ANOVA on a subjects x conditions matrix.

    Parameters
    ----------
    Y : array (n_subjects, k_conditions)
        One score per subject and condition, e.g. per-subject means.
    conditions : sequence of str, optional
    """
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2:
        raise ValueError("Y must be a subjects x conditions matrix")
    if not np.all(np.isfinite(Y)):
        raise ValueError("incomplete design: every subject needs a finite score "
                         "in every condition")
    n, k = Y.shape
    if k < 2:
        raise ValueError("need at least two conditions")
    if n < k:
        raise ValueError(f"need at least as many subjects as conditions ({n} < {k})")
    conditions = [str(c) for c in (conditions if conditions is not None else range(k))]
    if len(conditions) != k:
        raise ValueError("one name per condition required")

    gm = Y.mean()
    col = Y.mean(axis=0)
    row = Y.mean(axis=1)
    ss_cond = float(n * ((col - gm) ** 2).sum())
    ss_subj = float(k * ((row - gm) ** 2).sum())
    resid = Y - col[None, :] - row[:, None] + gm
    ss_err = float((resid ** 2).sum())
    df1, df2 = k - 1, (k - 1) * (n - 1)
    notes = []
    scale = float(((Y - gm) ** 2).sum())
    degenerate = scale == 0 or ss_err <= _REL_TOL * scale
    if degenerate:
        F = p = None
        notes.append("no residual variance; F is undefined" +
                     (" (all scores identical)" if scale == 0 else ""))
    else:
        F = (ss_cond / df1) / (ss_err / df2)
        p = f_sf(F, df1, df2)
    sph, sph_notes = mauchly(Y)
    notes.extend(sph_notes)
    return RmAnovaResult(conditions, n, dict(zip(conditions, col.tolist())), ss_cond, ss_subj,
                         ss_err, df1, df2, F, p, sph, _pairwise(Y, conditions), degenerate,
                         notes)
