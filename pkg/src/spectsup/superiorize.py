"""Superiorized EM loops.

Two acceptance rules for a perturbed step x -> P(y), y = x + beta*v:

* ``alg1``: phi(y) <= phi(x) and the decreasing inequality of the
  perturbation-resilience theorem,

      beta*max_{S-}(-v_j/y_j)*B- - beta*min_{S+}(v_j/y_j)*B+ + beta*sum_j v_j
          < I(b, Ay) - I(b, A P(y)),

  where S-/S+ are the index sets with v_j < 0 / v_j > 0 and B-/B+ combine
  the sums of P(y) over those sets with an |S|/N * sum(b) estimate of the
  (unknown) limit image mass.  Acceptance keeps beta; each rejection shrinks
  it by gamma.

* ``alg2``: the relaxed rule — phi(y) <= phi(x) and a strict decrease of
  the K-L distance I(b, A P(y)) < I(b, A x^k).  On acceptance beta shrinks
  by gamma only when the relative K-L decrease fell below q1, so the
  perturbation stays strong for many more iterations.

* ``alg2_no_phi_check``: alg2 with the phi(y) <= phi(x) test dropped
  (for thresholding schemes the test never fails; dropping it for TV slows
  the beta decay further).

When a proposal keeps being rejected, beta shrinks every try; after
max_inner_tries the loop falls back to one unperturbed EM step so progress
and K-L monotonicity are preserved (the paper's while-loop would spin
forever at a fixed point).  beta never increases, so every run either
perturbs at a vanishing rate or degenerates into classic EM.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .em import EmWorkspace, em_step_raw
from .perturb import propose_l1, propose_tv, tv_direction, tv_value
from .wavelet import WaveletSpec, dwt2, l1_norm

VARIANTS = ("alg1", "alg2", "alg2_no_phi_check")
PHI_SCHEMES = ("tv", "l1_hard", "l1_soft")


@dataclass
class SuperiorizerConfig:
    beta0: float
    gamma: float = 0.5
    q1: float = 0.01
    rho: float = 1e-6
    variant: str = "alg2"
    phi: str = "tv"
    max_inner_tries: int = 40
    max_outer_iters: int = 60
    beta_stop_threshold: float = 0.0
    xhat_estimate: str = "fraction"   # 'fraction': |S|/N * sum(b); 'iterate': sums of P(y) only
    tv_smoothing: float = 1e-8
    wavelet: WaveletSpec = None

    def __post_init__(self):
        if self.beta0 < 0:
            raise ValueError("beta0 must be >= 0")
        if not (0.0 < self.gamma < 1.0):
            raise ValueError("gamma must lie in (0, 1)")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.q1 <= 0:
            raise ValueError("q1 must be positive")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.phi not in PHI_SCHEMES:
            raise ValueError(f"phi must be one of {PHI_SCHEMES}, got {self.phi!r}")
        if self.xhat_estimate not in ("fraction", "iterate"):
            raise ValueError("xhat_estimate must be 'fraction' or 'iterate'")
        if self.phi != "tv" and self.wavelet is None:
            self.wavelet = WaveletSpec()


@dataclass
class ReconState:
    """Loop state handed to the condition evaluators."""

    x: np.ndarray
    beta: float
    kl: float            # I_A^b(x^k)
    phi: float           # phi(x^k)
    k: int
    workspace: EmWorkspace
    config: SuperiorizerConfig


@dataclass
class ConditionReport:
    lhs: float
    rhs: float
    b_minus: float
    b_plus: float
    n_minus: int
    n_plus: int
    kl_before: float     # I_A^b(y^k)
    kl_after: float      # I_A^b(x^{k+1}) = I_A^b(P(y^k))
    kl_current: float    # I_A^b(x^k)
    phi_before: float
    phi_after: float
    ieq_ok: bool         # lhs < rhs
    phi_ok: bool         # phi(y) <= phi(x)
    kl_ok: bool          # kl_after < kl_current

    def satisfied(self, variant):
        if variant == "alg1":
            return self.ieq_ok and self.phi_ok
        if variant == "alg2":
            return self.kl_ok and self.phi_ok
        if variant == "alg2_no_phi_check":
            return self.kl_ok
        raise ValueError(f"unknown variant {variant!r}")


def _condition_terms(proposal, x_next, state):
    """LHS/RHS of the decreasing inequality plus the B bounds."""
    cfg = state.config
    w = state.workspace
    beta = proposal.beta
    v = proposal.v
    y = proposal.y
    n = v.size
    b_total = float(w.b.sum())

    s_minus = proposal.s_minus
    s_plus = proposal.s_plus
    lhs = beta * float(v.sum())
    b_minus = 0.0
    b_plus = 0.0
    if s_minus.size:
        sum_next_minus = float(x_next[s_minus].sum())
        b_minus = cfg.rho + sum_next_minus
        if cfg.xhat_estimate == "fraction":
            b_minus = max(b_minus, s_minus.size / n * b_total)
        lhs += beta * float(np.max(-v[s_minus] / y[s_minus])) * b_minus
    if s_plus.size:
        sum_next_plus = float(x_next[s_plus].sum())
        b_plus = sum_next_plus
        if cfg.xhat_estimate == "fraction":
            b_plus = min(b_plus, s_plus.size / n * b_total)
        lhs -= beta * float(np.min(v[s_plus] / y[s_plus])) * b_plus

    kl_y = w.kl(y)
    kl_next = w.kl(x_next)
    rhs = kl_y - kl_next
    return lhs, rhs, b_minus, b_plus, kl_y, kl_next


def _evaluate(proposal, x_next, state):
    lhs, rhs, b_minus, b_plus, kl_y, kl_next = _condition_terms(proposal, x_next, state)
    return ConditionReport(
        lhs=lhs,
        rhs=rhs,
        b_minus=b_minus,
        b_plus=b_plus,
        n_minus=int(proposal.s_minus.size),
        n_plus=int(proposal.s_plus.size),
        kl_before=kl_y,
        kl_after=kl_next,
        kl_current=state.kl,
        phi_before=proposal.phi_before,
        phi_after=proposal.phi_after,
        ieq_ok=lhs < rhs,
        phi_ok=proposal.phi_after <= proposal.phi_before,
        kl_ok=kl_next < state.kl,
    )


def check_condition_alg1(proposal, x_next, state):
    """Full Theorem-2 condition: the decreasing inequality and phi decrease."""
    return _evaluate(proposal, x_next, state)


def check_condition_alg2(proposal, x_next, state):
    """Relaxed condition: strict K-L decrease (and phi decrease unless the
    no-phi-check variant is active)."""
    return _evaluate(proposal, x_next, state)


@dataclass
class SuperTrajectory:
    """Iterates plus per-step diagnostics of a superiorized run.

    Arrays are indexed by iterate (entry 0 describes x^0: beta[0] = beta0,
    the diagnostics are zero/nan there).  ``accepted[k]`` is 'perturbed'
    when step k took P(y), 'em' for a pure EM step (beta = 0), and
    'em_fallback' when the inner loop gave up.
    """

    iterates: list
    kl: np.ndarray
    beta: np.ndarray
    phi: np.ndarray
    inner_tries: np.ndarray
    cond_lhs: np.ndarray
    cond_rhs: np.ndarray
    accepted: list

    @property
    def final(self):
        return self.iterates[-1]

    def __len__(self):
        return len(self.iterates)


def _phi_tools(cfg):
    """Returns (phi_of_image, proposer) for the configured scheme."""
    if cfg.phi == "tv":
        def phi_fn(img2d):
            return tv_value(img2d)
    else:
        def phi_fn(img2d):
            return l1_norm(dwt2(img2d, cfg.wavelet))
    return phi_fn


def run_superiorized(workspace, x0, cfg, shape=None):
    """Run a superiorized EM loop.

    ``x0`` may be an ImageGrid or a flat array (then ``shape`` = (H, W) is
    required for the TV/wavelet objective).  With beta0 = 0 the loop
    degenerates to the classic EM iteration, bit for bit.
    """
    from .model import ImageGrid

    if isinstance(x0, ImageGrid):
        shape = (x0.height, x0.width)
        x = x0.pixels.copy()
    else:
        x = np.asarray(x0, dtype=np.float64).copy()
        if shape is None:
            raise ValueError("shape=(H, W) is required when x0 is a flat array")
    h, wdt = shape
    if x.size != h * wdt:
        raise ValueError("x0 size does not match shape")
    if np.any(x < 0):
        raise ValueError("initial image must be nonnegative")
    active = workspace.matrix.active_column_mask
    phi_fn = _phi_tools(cfg)

    beta = float(cfg.beta0)
    kl_x = workspace.kl(x)
    phi_x = phi_fn(x.reshape(h, wdt))

    iterates = [x.copy()]
    kl_log = [kl_x]
    beta_log = [beta]
    phi_log = [phi_x]
    tries_log = [0]
    lhs_log = [np.nan]
    rhs_log = [np.nan]
    accepted = ["init"]

    for k in range(cfg.max_outer_iters):
        if cfg.beta_stop_threshold > 0 and beta < cfg.beta_stop_threshold:
            break

        if beta == 0.0:
            x = em_step_raw(workspace, x)
            kl_x = workspace.kl(x)
            phi_x = phi_fn(x.reshape(h, wdt))
            iterates.append(x.copy())
            kl_log.append(kl_x)
            beta_log.append(beta)
            phi_log.append(phi_x)
            tries_log.append(0)
            lhs_log.append(np.nan)
            rhs_log.append(np.nan)
            accepted.append("em")
            continue

        img = x.reshape(h, wdt)
        if cfg.phi == "tv":
            direction = tv_direction(img, cfg.tv_smoothing)
            coeffs = None
        else:
            coeffs = dwt2(img, cfg.wavelet)
            direction = None

        state = ReconState(x=x, beta=beta, kl=kl_x, phi=phi_x, k=k,
                           workspace=workspace, config=cfg)
        report = None
        step_kind = None
        tries = 0
        while tries < cfg.max_inner_tries:
            tries += 1
            if cfg.phi == "tv":
                proposal = propose_tv(img, beta, cfg.tv_smoothing, active,
                                      direction=direction, phi_x=phi_x)
            else:
                mode = "hard" if cfg.phi == "l1_hard" else "soft"
                proposal = propose_l1(img, beta, mode, cfg.wavelet, active,
                                      coeffs=coeffs, phi_x=phi_x)
            x_cand = em_step_raw(workspace, proposal.y)
            state.beta = beta
            if cfg.variant == "alg1":
                report = check_condition_alg1(proposal, x_cand, state)
            else:
                report = check_condition_alg2(proposal, x_cand, state)
            if report.satisfied(cfg.variant):
                x = x_cand
                kl_prev = kl_x
                kl_x = report.kl_after
                step_kind = "perturbed"
                if cfg.variant != "alg1":
                    rel = (kl_prev - kl_x) / kl_prev if kl_prev > 0 else 0.0
                    if rel < cfg.q1:
                        beta *= cfg.gamma
                break
            beta *= cfg.gamma

        if step_kind is None:
            # inner loop exhausted: take an unperturbed EM step; beta keeps
            # the shrunk value so later iterations start from it
            x = em_step_raw(workspace, x)
            kl_x = workspace.kl(x)
            step_kind = "em_fallback"

        phi_x = phi_fn(x.reshape(h, wdt))
        iterates.append(x.copy())
        kl_log.append(kl_x)
        beta_log.append(state.beta if step_kind == "perturbed" else beta)
        phi_log.append(phi_x)
        tries_log.append(tries)
        lhs_log.append(report.lhs if report is not None else np.nan)
        rhs_log.append(report.rhs if report is not None else np.nan)
        accepted.append(step_kind)

    return SuperTrajectory(
        iterates=iterates,
        kl=np.asarray(kl_log),
        beta=np.asarray(beta_log),
        phi=np.asarray(phi_log),
        inner_tries=np.asarray(tries_log, dtype=np.int64),
        cond_lhs=np.asarray(lhs_log),
        cond_rhs=np.asarray(rhs_log),
        accepted=accepted,
    )
