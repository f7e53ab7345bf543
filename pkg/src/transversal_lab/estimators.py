"""scikit-learn style wrappers around the solver and independence engine.

Inputs may be a :class:`Family`, a list of :class:`NearBall`, or an array of
shape (n, d + 1) whose rows are ``(center..., radius)`` single balls.
"""
from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DegenerateInput, DimensionMismatch
from .independence import TOL_INDEP, IndependenceWitness, greedy_independent_subsequence, is_k_independent
from .nearball import Family, NearBall, member_pierced
from .solver import SolveOptions, TransversalCertificate, fit_flat, pierce_with_m_flats


def check_family(X, open_flag: bool = False) -> Family:
    """Coerce ``X`` to a :class:`Family`.

    Arrays must be 2-D, finite, with at least two columns and nonnegative
    radii in the last one.
    """
    if isinstance(X, Family):
        return X
    if isinstance(X, (list, tuple)) and X and all(isinstance(b, NearBall) for b in X):
        return Family.from_members(X)
    A = check_array(X, dtype=float, ensure_min_features=2)
    if np.any(A[:, -1] < 0):
        raise DegenerateInput("radii must be nonnegative")
    n = len(A)
    return Family(A[:, :-1], A[:, -1], np.arange(n + 1), np.zeros(n, dtype=int), open_flag)


def _check_k(k, fam: Family):
    if not isinstance(k, (int, np.integer)) or not 0 <= k <= fam.dim - 1:
        raise DegenerateInput(f"k must be an integer in [0, {fam.dim - 1}]")


class _SolverParams:
    def _options(self) -> SolveOptions:
        return SolveOptions(restarts=self.restarts, seed=self.random_state or 0,
                            tol_feas=self.tol, tol_open=self.tol_open, method=self.method)


class MinimaxFlat(_SolverParams, BaseEstimator, TransformerMixin):
    """Single k-flat minimising the worst member gap.

    Attributes
    ----------
    flat_ : KFlat
    value_ : float
        Signed minimax value; nonpositive means every member is met.
    certified_ : bool
    n_features_in_ : int
    """

    def __init__(self, k: int = 1, restarts: int = 8, tol: float = 1e-7, tol_open: float = 1e-9,
                 method: str = "auto", random_state: Optional[int] = None, open_flag: bool = False):
        self.k = k
        self.restarts = restarts
        self.tol = tol
        self.tol_open = tol_open
        self.method = method
        self.random_state = random_state
        self.open_flag = open_flag

    def fit(self, X, y=None):
        fam = check_family(X, self.open_flag)
        _check_k(self.k, fam)
        fit = fit_flat(fam, self.k, self._options())
        self.flat_ = fit.flat
        self.value_ = float(fit.signed)
        self.certified_ = bool(fit.certified)
        self.n_features_in_ = fam.dim
        return self

    def _family(self, X):
        check_is_fitted(self, "flat_")
        fam = check_family(X, self.open_flag)
        if fam.dim != self.n_features_in_:
            raise DimensionMismatch(f"fitted in R^{self.n_features_in_}, got R^{fam.dim}")
        return fam

    def transform(self, X):
        """Signed member gaps to the fitted flat, shape (n, 1)."""
        return self._family(X).member_gaps(self.flat_)[:, None]

    def predict(self, X):
        """Whether each member is pierced by the fitted flat."""
        fam = self._family(X)
        return member_pierced(fam.member_gaps(self.flat_), fam.open_flag, self.tol_open, self.tol)


class FlatPiercer(_SolverParams, BaseEstimator):
    """Pierce a family with at most ``n_flats`` k-flats.

    After ``fit``, ``certificate_`` is a :class:`TransversalCertificate`
    or ``None`` when the budget failed (see ``failure_``).
    """

    def __init__(self, k: int = 1, n_flats: int = 1, mode: str = "auto", restarts: int = 8,
                 tol: float = 1e-7, tol_open: float = 1e-9, method: str = "auto",
                 random_state: Optional[int] = None, open_flag: bool = False):
        self.k = k
        self.n_flats = n_flats
        self.mode = mode
        self.restarts = restarts
        self.tol = tol
        self.tol_open = tol_open
        self.method = method
        self.random_state = random_state
        self.open_flag = open_flag

    def fit(self, X, y=None):
        fam = check_family(X, self.open_flag)
        _check_k(self.k, fam)
        res = pierce_with_m_flats(fam, self.k, self.n_flats, self._options(), mode=self.mode)
        self.n_features_in_ = fam.dim
        if isinstance(res, TransversalCertificate):
            self.certificate_, self.failure_ = res, None
            self.flats_ = list(res.flats)
            self.n_flats_ = res.m
        else:
            self.certificate_, self.failure_ = None, res
            self.flats_ = []
            self.n_flats_ = 0
        return self

    def predict(self, X):
        """Index of the nearest fitted flat for each member; -1 if none meets it."""
        check_is_fitted(self, "flats_")
        fam = check_family(X, self.open_flag)
        if not self.flats_:
            return np.full(len(fam), -1)
        gaps = np.column_stack([fam.member_gaps(f) for f in self.flats_])
        lab = np.argmin(gaps, axis=1)
        ok = member_pierced(gaps[np.arange(len(fam)), lab], fam.open_flag, self.tol_open, self.tol)
        return np.where(ok, lab, -1)


class IndependentSubsequence(BaseEstimator, TransformerMixin):
    """Greedy k-independent subsequence (or a whole-family test).

    With ``target_len=None`` the whole family is tested; ``witness_`` is
    then either an :class:`IndependenceWitness` or ``None`` with the
    violating subset in ``violation_``.
    """

    def __init__(self, k: int = 1, target_len: Optional[int] = None, tol_indep: float = TOL_INDEP,
                 restarts: int = 8, random_state: Optional[int] = None, open_flag: bool = False):
        self.k = k
        self.target_len = target_len
        self.tol_indep = tol_indep
        self.restarts = restarts
        self.random_state = random_state
        self.open_flag = open_flag

    def fit(self, X, y=None):
        fam = check_family(X, self.open_flag)
        _check_k(self.k, fam)
        opts = SolveOptions(restarts=self.restarts, seed=self.random_state or 0)
        self.violation_ = None
        if self.target_len is None:
            res = is_k_independent(fam, self.k, opts, self.tol_indep)
            if isinstance(res, IndependenceWitness):
                self.witness_ = res
            else:
                self.witness_, self.violation_ = None, res
        else:
            self.witness_ = greedy_independent_subsequence(fam, self.k, self.target_len, opts,
                                                           self.tol_indep)
        self.support_ = np.zeros(len(fam), dtype=bool)
        if self.witness_ is not None:
            self.support_[self.witness_.member_indices] = True
        self.n_features_in_ = fam.dim
        return self

    def transform(self, X):
        check_is_fitted(self, "support_")
        fam = check_family(X, self.open_flag)
        if len(fam) != len(self.support_):
            raise DimensionMismatch("family length differs from the fitted one")
        return fam.subfamily(np.flatnonzero(self.support_))
