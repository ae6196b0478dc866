"""Weak approximation of Stratonovich SDEs driven by cubature formulas.

The driving equation is dX = f(X) o dB^ with B^ the time-augmented
Brownian motion (direction 0 is time).  A word (w1..wk) over the driver
alphabet pairs with the iterated directional derivative
g_w = D(g_(w2..wk)) . f_w1, so the stochastic-Taylor image of a state
under a tensor element L is sum_w L[w] g_w(x).  Affine and polynomial
vector fields evaluate these towers exactly; generic ones fall back to
nested central differences.
"""

import math
import time
import weakref
from dataclasses import dataclass, replace
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.linalg

from . import dense
from .tensor import TensorElement
from .wiener import _dense_entry as _dense_entry_tensor

_EPS = float(np.finfo(float).eps)


class DerivativeOrderError(ValueError):
    """Contraction order exceeds what the vector field can provide."""


class LeafBudgetError(RuntimeError):
    """The cubature tree would exceed the configured leaf budget."""


class NonFiniteStateError(RuntimeError):
    """A solver state became NaN or infinite."""


class MissingReferenceError(ValueError):
    """A convergence run needs a reference value and none is available."""


# ---------------------------------------------------------------------------
# vector fields


class VectorFieldSpec:
    """A vector field f: R^n -> L(R^(d+1), R^n) with derivative towers.

    kind "affine":      f_j(x) = A[j] @ x + b[j], exact to any order.
    kind "polynomial":  each direction is a sparse polynomial
                        {exponent tuple: coefficient vector}, exact.
    kind "generic":     a black-box evaluator x -> (n, d+1) matrix with a
                        declared maximum usable derivative order.
    """

    def __init__(self, kind, n, d, A=None, b=None, polys=None, func=None,
                 max_order=None):
        self.kind = kind
        self.n = n
        self.d = d
        self.A = A
        self.b = b
        self.polys = polys
        self.func = func
        self._declared_order = max_order
        self._word_polys = {}

    # -- constructors

    @classmethod
    def affine(cls, A, b=None):
        A = np.asarray(A) if not _is_object_seq(A) else _object_array(A)
        drivers, n, n2 = A.shape
        if n != n2:
            raise ValueError("affine matrices must be square")
        if b is None:
            b = np.zeros((drivers, n)) if A.dtype != object else _object_zeros(drivers, n)
        else:
            b = np.asarray(b)
        return cls("affine", n, drivers - 1, A=A, b=b)

    @classmethod
    def polynomial(cls, polys, n, d):
        cooked = []
        for direction in polys:
            cooked.append({tuple(alpha): np.asarray(vec, dtype=float)
                           for alpha, vec in direction.items()})
        if len(cooked) != d + 1:
            raise ValueError("need one polynomial per driver direction (incl. time)")
        return cls("polynomial", n, d, polys=tuple(cooked))

    @classmethod
    def generic(cls, func, n, d, max_order):
        return cls("generic", n, d, func=func, max_order=max_order)

    @classmethod
    def gbm(cls, a, b):
        """Scalar geometric Brownian motion dX = a X dt + b X o dB."""
        return cls.affine([[[a]], [[b]]])

    # -- basics

    @property
    def drivers(self):
        return self.d + 1

    @property
    def max_order(self):
        return self._declared_order if self.kind == "generic" else None

    def require_order(self, k):
        if self.max_order is not None and k > self.max_order:
            raise DerivativeOrderError(
                f"order {k} exceeds the declared derivative order {self.max_order}")

    def eval_columns(self, x):
        """The matrix f(x) with column j the direction-j field."""
        x = np.asarray(x)
        if self.kind == "affine":
            return np.stack([self.A[j] @ x + self.b[j]
                             for j in range(self.drivers)], axis=-1)
        if self.kind == "polynomial":
            return np.stack([_poly_eval(p, x, self.n) for p in self.polys], axis=-1)
        return np.asarray(self.func(x), dtype=float)

    def as_polynomial(self):
        if self.kind == "polynomial":
            return self
        if self.kind != "affine":
            raise ValueError("only affine fields convert to polynomial form")
        polys = []
        for j in range(self.drivers):
            direction = {}
            zero = (0,) * self.n
            if np.any(self.b[j] != 0):
                direction[zero] = np.asarray(self.b[j], dtype=float)
            for p in range(self.n):
                col = np.asarray(self.A[j][:, p], dtype=float)
                if np.any(col != 0):
                    e_p = tuple(1 if q == p else 0 for q in range(self.n))
                    direction[e_p] = col
            polys.append(direction)
        return VectorFieldSpec("polynomial", self.n, self.d, polys=tuple(polys))

    # -- derivative towers

    def word_tower(self, word, x):
        """g_w(x): the word's iterated directional derivative at x."""
        word = tuple(word)
        if not word:
            return np.asarray(x)
        self.require_order(len(word))
        if self.kind == "affine":
            v = self.A[word[0]] @ np.asarray(x) + self.b[word[0]]
            for letter in word[1:]:
                v = self.A[letter] @ v
            return v
        if self.kind == "polynomial":
            return _poly_eval(self._word_poly(word), np.asarray(x, dtype=float), self.n)
        return self._fd_word(word, np.asarray(x, dtype=float))

    def _word_poly(self, word):
        cached = self._word_polys.get(word)
        if cached is not None:
            return cached
        if len(word) == 1:
            poly = self.polys[word[0]]
        else:
            poly = _poly_directional(self._word_poly(word[1:]),
                                     self.polys[word[0]])
        self._word_polys[word] = poly
        return poly

    def _fd_word(self, word, x):
        cols = np.asarray(self.func(x), dtype=float)
        v = cols[:, word[0]]
        if len(word) == 1:
            return v
        size = float(np.linalg.norm(v))
        if size == 0.0:
            return np.zeros(self.n)
        order = len(word) - 1
        h = _EPS ** (1.0 / (order + 2))
        u = v / size
        upper = self._fd_word(word[1:], x + h * u)
        lower = self._fd_word(word[1:], x - h * u)
        return (upper - lower) * (size / (2.0 * h))


def _is_object_seq(A):
    from fractions import Fraction
    def probe(val):
        if isinstance(val, (list, tuple, np.ndarray)):
            return any(probe(v) for v in val)
        return isinstance(val, Fraction)
    return probe(A)


def _object_array(A):
    arr = np.empty((len(A), len(A[0]), len(A[0][0])), dtype=object)
    for j, mat in enumerate(A):
        for i, row in enumerate(mat):
            for k, val in enumerate(row):
                arr[j, i, k] = val
    return arr


def _object_zeros(drivers, n):
    arr = np.empty((drivers, n), dtype=object)
    arr[:] = 0
    return arr


def _poly_eval(poly, x, n):
    out = np.zeros(n)
    for alpha, vec in poly.items():
        mono = 1.0
        for xp, ap in zip(x, alpha):
            if ap:
                mono *= xp ** ap
        out += mono * vec
    return out


def _poly_directional(h, fj):
    """V_j(h) = Dh . f_j on sparse polynomial dicts."""
    out = {}
    for alpha, cvec in h.items():
        for p, ap in enumerate(alpha):
            if ap == 0:
                continue
            dalpha = alpha[:p] + (ap - 1,) + alpha[p + 1:]
            for beta, fvec in fj.items():
                if fvec[p] == 0:
                    continue
                expo = tuple(da + bb for da, bb in zip(dalpha, beta))
                out[expo] = out.get(expo, 0) + ap * fvec[p] * cvec
    return {k: v for k, v in out.items() if np.any(v != 0)}


def directional_derivative_tower(field, x, k_max):
    """The derivative family {f^(ok)(x)} for k = 0..k_max.

    Entry k is an array of shape (n,) + (d+1,)*k whose [i, w1, ..., wk]
    element is component i of g_(w1..wk)(x); entry 0 is x itself.  Exact
    for affine and polynomial fields.
    """
    field.require_order(k_max)
    x = np.asarray(x)
    s = field.drivers
    out = [x]
    if field.kind == "affine":
        levels = _affine_tower_levels(field, x, k_max)
        for k in range(1, k_max + 1):
            out.append(levels[k].T.reshape((field.n,) + (s,) * k))
        return out
    for k in range(1, k_max + 1):
        arr = np.zeros((field.n,) + (s,) * k)
        for idx in range(s ** k):
            word = dense.index_word(idx, s, k)
            arr[(slice(None),) + word] = field.word_tower(word, x)
        out.append(arr)
    return out


def _affine_tower_levels(field, x, k_max):
    """Dense per-level towers for an affine field: level k is (s**k, n).

    g_(w1..wk) = A_wk @ g_(w1..w_{k-1}) with the innermost value
    A_w1 x + b_w1, so each level is one batched matmul per last letter.
    Object-dtype (Fraction) fields stay exact throughout.
    """
    s = field.drivers
    exact = field.A.dtype == object
    x = np.asarray(x, dtype=object if exact else float)
    levels = [x.reshape(1, -1)]
    if k_max >= 1:
        levels.append(np.stack([field.A[j] @ x + field.b[j] for j in range(s)]))
    for _ in range(2, k_max + 1):
        prev = levels[-1]
        nxt = np.empty((prev.shape[0], s, field.n), dtype=prev.dtype)
        for j in range(s):
            nxt[:, j, :] = prev @ field.A[j].T
        levels.append(nxt.reshape(-1, field.n))
    return levels


# ---------------------------------------------------------------------------
# contraction of towers against tensor data


class _LevelData:
    """Masked nonzero support of one level: flat indices plus values.

    Words are decoded from the flat indices only when a non-affine field
    needs them; graded rescaling to a step horizon shares the indices.
    """

    __slots__ = ("s", "level", "idx", "vals", "_words")

    def __init__(self, s, level, idx, vals, words=None):
        self.s = s
        self.level = level
        self.idx = idx
        self.vals = vals
        self._words = words

    def words(self):
        if self._words is None:
            self._words = tuple(dense.index_word(int(i), self.s, self.level)
                                for i in self.idx)
        return self._words

    def scaled(self, horizon):
        """Multiply each word's value by horizon**(graded_degree/2)."""
        zeros = dense.zero_letter_counts(self.s, self.level)[self.idx]
        factors = horizon ** ((self.level + zeros) * 0.5)
        return _LevelData(self.s, self.level, self.idx, self.vals * factors,
                          self._words)


def _contraction_data(series):
    """Per-level masked nonzero support of a DenseSeries."""
    data = []
    for k, lvl in enumerate(series.levels):
        mask = dense.graded_mask(series.s, series.m, k)
        idx = np.nonzero((lvl != 0.0) & mask)[0]
        data.append(_LevelData(series.s, k, idx, lvl[idx]))
    return data


def _contraction_data_from_tensor(L):
    return _contraction_data(dense.DenseSeries.from_tensor(L))


def _contract(field, x, data, state_term=True):
    """sum_w L[w] g_w(x) for the prepared contraction data."""
    top = max((ld.level for ld in data if len(ld.idx)), default=0)
    field.require_order(top)
    x = np.asarray(x, dtype=float)
    out = np.zeros(field.n)
    if field.kind == "affine" and field.A.dtype != object:
        levels = _affine_tower_levels(field, x, top)
        for ld in data:
            if not len(ld.idx):
                continue
            if ld.level == 0:
                if state_term:
                    out = out + ld.vals[0] * x
                continue
            out = out + ld.vals @ levels[ld.level][ld.idx]
        return out
    for ld in data:
        if not len(ld.idx):
            continue
        if ld.level == 0:
            if state_term:
                out = out + ld.vals[0] * x
            continue
        for value, word in zip(ld.vals, ld.words()):
            out = out + value * field.word_tower(word, x)
    return out


def taylor_step(x, L, field, m):
    """Propagate x through the truncated stochastic-Taylor contraction.

    L is a tensor element (typically exp of a cubature Lie polynomial or
    the expected signature) truncated at graded degree m; the result is
    sum over words w of L[w] g_w(x), the empty word contributing L[()] x.
    Exact coefficients contracted against an exact (object-dtype) affine
    field stay exact.
    """
    if L.trunc > m:
        L = TensorElement(L.dim, m, L.terms)
    exact_affine = (field.kind == "affine" and field.A.dtype == object
                    and L.is_exact)
    if exact_affine:
        x = np.asarray(x, dtype=object)
        out = np.zeros(field.n, dtype=object)
        for word, coeff in L.sorted_terms():
            out = out + coeff * (x if not word else field.word_tower(word, x))
        return out
    return _contract(field, x, _contraction_data_from_tensor(L), state_term=True)


def logode_step(x, poly, field, m, ode_steps=8):
    """Integrate dz/du = sum_w ell[w] g_w(z) from z(0)=x to u=1.

    ell is the word expansion of the Lie polynomial ``poly`` truncated at
    graded degree m; a classical fixed-step 4th-order scheme keeps the
    result deterministic.
    """
    data = _contraction_data_from_tensor(poly.expand(m))
    return _rk4(field, np.asarray(x, dtype=float), data, ode_steps)


def _rk4(field, x, data, ode_steps):
    h = 1.0 / ode_steps
    z = x
    for _ in range(ode_steps):
        k1 = _contract(field, z, data, state_term=False)
        k2 = _contract(field, z + 0.5 * h * k1, data, state_term=False)
        k3 = _contract(field, z + 0.5 * h * k2, data, state_term=False)
        k4 = _contract(field, z + h * k3, data, state_term=False)
        z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(np.asarray(z, dtype=float))):
            raise NonFiniteStateError("log-ODE state is not finite")
    return z


# ---------------------------------------------------------------------------
# problems and reports


@dataclass(frozen=True, eq=False)
class SDEProblem:
    field: VectorFieldSpec
    x0: np.ndarray
    payoff: object          # callable state -> float
    payoff_name: str
    T: float
    reference: float = None
    name: str = ""


@dataclass(frozen=True)
class SolverReport:
    estimate: float
    method: str
    leaf_count: int
    step_count: int
    abs_error: float = None
    std_error: float = None
    wall_time: float = 0.0


def identity_payoff(x):
    if len(x) != 1:
        raise ValueError("identity payoff needs a one-dimensional state")
    return float(x[0])


def coordinate_payoff(i):
    def payoff(x):
        return float(x[i])
    payoff.coordinate = i
    return payoff


def make_payoff(name):
    if name == "identity":
        return identity_payoff
    if name.startswith("coordinate:"):
        return coordinate_payoff(int(name.split(":", 1)[1]))
    # treat anything else as an expression in x[0..n-1]
    import math as _math
    code = compile(name, "<payoff>", "eval")
    env = {name_: getattr(_math, name_)
           for name_ in ("exp", "log", "sqrt", "sin", "cos", "tanh")}
    env["abs"] = abs

    def payoff(x):
        return float(eval(code, {"__builtins__": {}}, dict(env, x=x)))
    return payoff


def gbm_problem(a=0.05, b=0.2, x0=1.0, T=1.0):
    """Scalar Stratonovich GBM with the analytic mean as reference."""
    ref = x0 * math.exp((a + b * b / 2.0) * T)
    return SDEProblem(VectorFieldSpec.gbm(a, b), np.array([x0]),
                      identity_payoff, "identity", T, ref, name="gbm")


def problem_from_dict(doc):
    kind = doc["kind"]
    if kind == "gbm":
        a = float(doc["params"]["a"])
        b = float(doc["params"]["b"])
        field = VectorFieldSpec.gbm(a, b)
    elif kind == "affine":
        field = VectorFieldSpec.affine(doc["params"]["A"], doc["params"].get("b"))
    elif kind == "polynomial":
        n = int(doc["state_dim"])
        d = int(doc["driving_dim"])
        polys = []
        for _ in range(d + 1):
            polys.append({})
        for term in doc["params"]["terms"]:
            j = int(term["direction"])
            polys[j][tuple(term["exponents"])] = np.asarray(term["coeffs"], dtype=float)
        field = VectorFieldSpec.polynomial(polys, n, d)
    else:
        raise ValueError(f"unknown problem kind {kind!r}")
    if int(doc["state_dim"]) != field.n or int(doc["driving_dim"]) != field.d:
        raise ValueError("state_dim/driving_dim inconsistent with the field params")
    x0 = np.asarray(doc["x0"], dtype=float)
    payoff_name = doc.get("payoff", "identity")
    reference = doc.get("reference")
    return SDEProblem(field, x0, make_payoff(payoff_name), payoff_name,
                      float(doc["T"]),
                      None if reference is None else float(reference),
                      name=doc.get("name", ""))


def load_problem(path):
    import json
    with open(path) as fh:
        return problem_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# solvers


_ENTRY_DATA_CACHE = weakref.WeakKeyDictionary()


def _entry_contractions(formula, method):
    """Per-entry horizon-1 contraction data, cached on the formula object.

    Graded scaling commutes with exp (it is an algebra automorphism), so
    the expensive per-entry exponential is computed once and rescaled to
    each step horizon by _LevelData.scaled.
    """
    per_formula = _ENTRY_DATA_CACHE.setdefault(formula, {})
    if method not in per_formula:
        if method not in ("taylor", "logode"):
            raise ValueError(f"unknown cubature method {method!r}")
        s, m = formula.dim + 1, formula.degree
        datas = []
        for _, poly in formula.entries:
            series = _dense_entry_tensor(poly, s, m)
            if method == "taylor":
                series = dense.exp(series)
            datas.append(_contraction_data(series))
        per_formula[method] = datas
    return per_formula[method]


def cubature_tree(problem, formula, steps, method="taylor", ode_steps=8,
                  leaf_budget=10 ** 6, threads=1):
    """Deterministic weak estimate over the n^k cubature tree.

    The formula is rescaled to the step horizon T/k; every root-to-leaf
    path composes one entry per step and the estimate is the weight
    product times the payoff, summed in fixed tree order (so the result
    is bit-identical for any thread count).
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if problem.field.d != formula.dim:
        raise ValueError("problem and formula disagree on the Brownian dimension")
    n_entries = len(formula.entries)
    leaf_count = n_entries ** steps
    if leaf_count > leaf_budget:
        raise LeafBudgetError(
            f"{n_entries}^{steps} = {leaf_count} leaves exceed budget {leaf_budget}")
    start = time.perf_counter()
    horizon = problem.T / steps
    weights = [float(w) for w, _ in formula.entries]
    entry_data = [[ld.scaled(horizon) for ld in data]
                  for data in _entry_contractions(formula, method)]

    field, payoff = problem.field, problem.payoff
    if method == "taylor":
        def advance(x, data):
            return _contract(field, x, data, state_term=True)
    else:
        def advance(x, data):
            return _rk4(field, x, data, ode_steps)

    def subtree(x, depth):
        if depth == steps:
            return payoff(x)
        total = 0.0
        for w, data in zip(weights, entry_data):
            total += w * subtree(advance(x, data), depth + 1)
        return total

    x0 = np.asarray(problem.x0, dtype=float)
    tasks = [(w, data) for w, data in zip(weights, entry_data)]

    def top(entry):
        w, data = entry
        return w * subtree(advance(x0, data), 1)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(top, tasks))
    else:
        partials = [top(entry) for entry in tasks]
    estimate = float(sum(partials))
    err = None if problem.reference is None else abs(estimate - problem.reference)
    return SolverReport(estimate, method, leaf_count, steps, abs_error=err,
                        wall_time=time.perf_counter() - start)


def monte_carlo(problem, paths, steps, seed=0):
    """Stratonovich-Heun Monte Carlo baseline; bit-reproducible per seed
    in single-worker mode."""
    if paths < 1 or steps < 1:
        raise ValueError("paths and steps must be >= 1")
    start = time.perf_counter()
    field = problem.field
    rng = np.random.default_rng(seed)
    n, d = field.n, field.d
    dt = problem.T / steps
    X = np.tile(np.asarray(problem.x0, dtype=float), (paths, 1))
    root_dt = math.sqrt(dt)
    affine = field.kind == "affine" and field.A.dtype != object

    def columns(states):
        if affine:
            return np.einsum("jik,pk->pij", field.A, states) + field.b.T[None, :, :]
        return np.stack([field.eval_columns(x) for x in states])

    for _ in range(steps):
        dW = rng.standard_normal((paths, d)) * root_dt
        dB = np.concatenate([np.full((paths, 1), dt), dW], axis=1)
        F0 = columns(X)
        predictor = X + np.einsum("pij,pj->pi", F0, dB)
        F1 = columns(predictor)
        X = X + 0.5 * np.einsum("pij,pj->pi", F0 + F1, dB)
    values = np.array([problem.payoff(x) for x in X])
    estimate = float(values.mean())
    std_error = float(values.std(ddof=1) / math.sqrt(paths)) if paths > 1 else None
    err = None if problem.reference is None else abs(estimate - problem.reference)
    return SolverReport(estimate, "montecarlo", paths, steps, abs_error=err,
                        std_error=std_error, wall_time=time.perf_counter() - start)


# ---------------------------------------------------------------------------
# convergence harness


@dataclass(frozen=True)
class FitResult:
    slope: float          # None if the fit was rejected
    points_used: int
    note: str = ""


@dataclass(frozen=True)
class ConvergenceResult:
    rows: tuple           # of dicts: degree, T, steps, method, estimate, abs_error
    fits: dict            # degree -> FitResult


def analytic_mean(problem, T=None):
    """Closed-form E[payoff(X_T)] for homogeneous linear fields, else None.

    For dX = A_0 X dt + sum_i A_i X o dB_i the mean solves the linear ODE
    with matrix A_0 + 1/2 sum_i A_i^2 (the Stratonovich-to-Ito drift
    correction), so E[X_T] = expm(M T) x0.
    """
    field = problem.field
    horizon = problem.T if T is None else T
    if field.kind != "affine" or field.A.dtype == object:
        return None
    if np.any(field.b != 0):
        return None
    if problem.payoff_name == "identity":
        coord = 0
    elif problem.payoff_name.startswith("coordinate:"):
        coord = int(problem.payoff_name.split(":", 1)[1])
    else:
        return None
    M = field.A[0].astype(float).copy()
    for j in range(1, field.drivers):
        M += 0.5 * (field.A[j] @ field.A[j])
    y = scipy.linalg.expm(M * horizon) @ np.asarray(problem.x0, dtype=float)
    return float(y[coord])


def convergence_experiment(problem, formulas, times, method="taylor", steps=1,
                           reference_fn=None, error_floor=1e-12, ode_steps=8,
                           leaf_budget=10 ** 6):
    """Weak error against horizon for each formula, with log-log slope fits.

    ``reference_fn(T)`` supplies the exact mean per horizon; by default
    the closed form for homogeneous linear fields is used.  Fits with
    fewer than 3 points above the error floor are rejected (slope None).
    """
    if reference_fn is None:
        if analytic_mean(problem) is None:
            raise MissingReferenceError(
                "no analytic reference for this problem; pass reference_fn")
        def reference_fn(T):
            return analytic_mean(problem, T)
    rows = []
    fits = {}
    for formula in formulas:
        errs = []
        for T in times:
            ref = reference_fn(T)
            prob_t = replace(problem, T=float(T), reference=ref)
            report = cubature_tree(prob_t, formula, steps, method=method,
                                   ode_steps=ode_steps, leaf_budget=leaf_budget)
            rows.append({"degree": formula.degree, "T": float(T), "steps": steps,
                         "method": method, "estimate": report.estimate,
                         "abs_error": report.abs_error})
            errs.append((float(T), report.abs_error))
        usable = [(T, e) for T, e in errs if e > error_floor]
        if len(usable) < 3:
            fits[formula.degree] = FitResult(None, len(usable),
                                             "fit rejected: fewer than 3 points "
                                             "above the error floor")
        else:
            logT = np.log([T for T, _ in usable])
            logE = np.log([e for _, e in usable])
            slope = float(np.polyfit(logT, logE, 1)[0])
            fits[formula.degree] = FitResult(slope, len(usable))
    return ConvergenceResult(tuple(rows), fits)


def write_convergence_csv(result, path):
    """CSV rows: degree,T,steps,method,estimate,abs_error."""
    with open(path, "w") as fh:
        fh.write("degree,T,steps,method,estimate,abs_error\n")
        for row in result.rows:
            fh.write(f"{row['degree']},{row['T']!r},{row['steps']},"
                     f"{row['method']},{row['estimate']!r},{row['abs_error']!r}\n")


# ---------------------------------------------------------------------------
# signature-level augmentation


def signature_words(n, level):
    """Index words (over state components 0..n-1) of the augmented state,
    ordered by (length, lexicographic)."""
    from itertools import product as iproduct
    out = []
    for length in range(1, level + 1):
        out.extend(iproduct(range(n), repeat=length))
    return out


def augment_initial_state(x0, level):
    """Initial augmented state: the signature of a point is (1, 0, 0, ...)."""
    x0 = np.asarray(x0, dtype=float)
    n = len(x0)
    pad = np.zeros(len(signature_words(n, level)))
    return np.concatenate([x0, pad])


def signature_level_system(field, level, state_budget=512):
    """Augment a field so the state carries its own signature coordinates.

    Coordinate S^w obeys dS^w = S^(w minus last letter) dX^(last letter),
    which is triangular: level-L dynamics only reference levels < L.
    Affine/polynomial fields augment to an exact polynomial field;
    generic fields stay generic.
    """
    if level < 1 or level > 4:
        raise ValueError("signature level must be in 1..4")
    n = field.n
    words = signature_words(n, level)
    n_aug = n + len(words)
    if n_aug > state_budget:
        raise ValueError(f"augmented state of size {n_aug} exceeds the "
                         f"budget {state_budget}")
    index = {w: n + i for i, w in enumerate(words)}

    if field.kind == "generic":
        base = field.func

        def func(y):
            x = np.asarray(y[:n], dtype=float)
            cols = np.asarray(base(x), dtype=float)
            out = np.zeros((n_aug, field.d + 1))
            out[:n] = cols
            for w, row in index.items():
                parent = 1.0 if len(w) == 1 else y[index[w[:-1]]]
                out[row] = parent * cols[w[-1]]
            return out

        return VectorFieldSpec.generic(func, n_aug, field.d, field.max_order)

    base = field.as_polynomial()
    polys = []
    for j in range(field.drivers):
        direction = {}
        for alpha, vec in base.polys[j].items():
            expo = alpha + (0,) * len(words)
            acc = np.zeros(n_aug)
            acc[:n] = vec
            direction[expo] = direction.get(expo, 0) + acc
        for w, row in index.items():
            comp = w[-1]
            for alpha, vec in base.polys[j].items():
                if vec[comp] == 0:
                    continue
                expo = list(alpha) + [0] * len(words)
                if len(w) > 1:
                    expo[index[w[:-1]]] += 1
                expo = tuple(expo)
                acc = np.zeros(n_aug)
                acc[row] = vec[comp]
                direction[expo] = direction.get(expo, 0) + acc
        polys.append(direction)
    return VectorFieldSpec.polynomial(polys, n_aug, field.d)
