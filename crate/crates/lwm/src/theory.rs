//! Executable checks of fact-based state abstraction on tabular MDPs.
//!
//! Ground truth lives in small explicit MDPs: build the induced abstract
//! MDP for a state aggregation, measure the one-step simulation error
//! eps_sim, plan in the abstract model, lift the policy back, and verify
//! the value-loss bound `lhs <= 2*eps_sim/(1-gamma) + eps_plan` plus the
//! three-term telescoping decomposition of the loss.
//!
//! eps_sim here is `max over (z, a, s in z)` of
//! `|R(s,a) - R_psi(z,a)| + gamma * V_span * TV(lifted P, T_psi)` with
//! `TV` the total-variation distance (half L1) and
//! `V_span = (Rmax - Rmin)/(1 - gamma)` a value-range majorant.

use thiserror::Error;

use crate::rng::SplitMix64;

pub const VI_TOLERANCE: f64 = 1e-10;
pub const BOUND_SLACK: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Finite MDP with explicit transition table `t[s][a][s']` and expected
/// rewards `r[s][a]`.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub t: Vec<Vec<Vec<f64>>>,
    pub r: Vec<Vec<f64>>,
    pub gamma: f64,
}

impl TabularMdp {
    pub fn new(
        t: Vec<Vec<Vec<f64>>>,
        r: Vec<Vec<f64>>,
        gamma: f64,
    ) -> Result<Self, TheoryError> {
        let n_states = t.len();
        if n_states == 0 {
            return Err(TheoryError::InvalidArgument("MDP needs states".into()));
        }
        let n_actions = t[0].len();
        if n_actions == 0 {
            return Err(TheoryError::InvalidArgument("MDP needs actions".into()));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(TheoryError::InvalidArgument(format!(
                "gamma must lie in [0, 1), got {gamma}"
            )));
        }
        if r.len() != n_states || r.iter().any(|row| row.len() != n_actions) {
            return Err(TheoryError::InvalidArgument(
                "reward table shape mismatch".into(),
            ));
        }
        for (s, per_action) in t.iter().enumerate() {
            if per_action.len() != n_actions {
                return Err(TheoryError::InvalidArgument(format!(
                    "state {s} has {} action rows, expected {n_actions}",
                    per_action.len()
                )));
            }
            for (a, row) in per_action.iter().enumerate() {
                if row.len() != n_states {
                    return Err(TheoryError::InvalidArgument(format!(
                        "transition row ({s},{a}) has wrong length"
                    )));
                }
                if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(TheoryError::InvalidArgument(format!(
                        "transition row ({s},{a}) has invalid probabilities"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(TheoryError::InvalidArgument(format!(
                        "transition row ({s},{a}) sums to {sum}, not 1"
                    )));
                }
            }
        }
        if r.iter().flatten().any(|x| !x.is_finite()) {
            return Err(TheoryError::InvalidArgument("rewards must be finite".into()));
        }
        Ok(Self {
            n_states,
            n_actions,
            t,
            r,
            gamma,
        })
    }

    pub fn reward_span(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in &self.r {
            for &x in row {
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        hi - lo
    }

    /// Value-range majorant `(Rmax - Rmin)/(1 - gamma)`.
    pub fn value_span(&self) -> f64 {
        self.reward_span() / (1.0 - self.gamma)
    }
}

/// Total surjective map from ground states onto `0..n_abstract`.
#[derive(Debug, Clone)]
pub struct Abstraction {
    pub psi: Vec<usize>,
    pub n_abstract: usize,
}

impl Abstraction {
    pub fn new(psi: Vec<usize>, n_abstract: usize) -> Result<Self, TheoryError> {
        if n_abstract == 0 {
            return Err(TheoryError::InvalidArgument(
                "need at least one abstract state".into(),
            ));
        }
        let mut seen = vec![false; n_abstract];
        for (s, &z) in psi.iter().enumerate() {
            if z >= n_abstract {
                return Err(TheoryError::InvalidArgument(format!(
                    "state {s} maps to out-of-range class {z}"
                )));
            }
            seen[z] = true;
        }
        if let Some(z) = seen.iter().position(|used| !used) {
            return Err(TheoryError::InvalidArgument(format!(
                "abstract class {z} is empty"
            )));
        }
        Ok(Self { psi, n_abstract })
    }

    pub fn identity(n_states: usize) -> Self {
        Self {
            psi: (0..n_states).collect(),
            n_abstract: n_states,
        }
    }

    fn classes(&self) -> Vec<Vec<usize>> {
        let mut classes = vec![Vec::new(); self.n_abstract];
        for (s, &z) in self.psi.iter().enumerate() {
            classes[z].push(s);
        }
        classes
    }
}

/// Converged state values plus the settings and sweep count that produced
/// them.
#[derive(Debug, Clone)]
pub struct ValueFunction {
    pub v: Vec<f64>,
    pub gamma: f64,
    pub tolerance: f64,
    pub sweeps: usize,
}

/// Induced abstract MDP: class rewards and transitions are uniform means
/// over each class's member states, with transition rows renormalized.
pub fn build_abstract_mdp(g: &TabularMdp, psi: &Abstraction) -> Result<TabularMdp, TheoryError> {
    if psi.psi.len() != g.n_states {
        return Err(TheoryError::InvalidArgument(format!(
            "abstraction covers {} states, MDP has {}",
            psi.psi.len(),
            g.n_states
        )));
    }
    let classes = psi.classes();
    let nz = psi.n_abstract;
    let mut t = vec![vec![vec![0.0; nz]; g.n_actions]; nz];
    let mut r = vec![vec![0.0; g.n_actions]; nz];
    for (z, members) in classes.iter().enumerate() {
        let weight = 1.0 / members.len() as f64;
        for a in 0..g.n_actions {
            for &s in members {
                r[z][a] += weight * g.r[s][a];
                for (s_next, &p) in g.t[s][a].iter().enumerate() {
                    t[z][a][psi.psi[s_next]] += weight * p;
                }
            }
            let sum: f64 = t[z][a].iter().sum();
            for p in &mut t[z][a] {
                *p /= sum;
            }
        }
    }
    TabularMdp::new(t, r, g.gamma)
}

fn q_value(m: &TabularMdp, v: &[f64], s: usize, a: usize) -> f64 {
    let expected: f64 = m.t[s][a]
        .iter()
        .zip(v)
        .map(|(p, vn)| p * vn)
        .sum();
    m.r[s][a] + m.gamma * expected
}

/// Synchronous value iteration to a sup-norm successive-residual
/// tolerance. Initialization at the reward midpoint over `1/(1-gamma)`
/// keeps the sweep count within the geometric contraction bound.
pub fn value_iteration(m: &TabularMdp, tol: f64) -> ValueFunction {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in &m.r {
        for &x in row {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    let start = (lo + hi) / 2.0 / (1.0 - m.gamma);
    let mut v = vec![start; m.n_states];
    let mut sweeps = 0usize;
    loop {
        sweeps += 1;
        let mut next = vec![0.0; m.n_states];
        let mut residual: f64 = 0.0;
        for s in 0..m.n_states {
            let mut best = f64::NEG_INFINITY;
            for a in 0..m.n_actions {
                best = best.max(q_value(m, &v, s, a));
            }
            residual = residual.max((best - v[s]).abs());
            next[s] = best;
        }
        v = next;
        if residual <= tol || sweeps >= 10_000_000 {
            break;
        }
    }
    ValueFunction {
        v,
        gamma: m.gamma,
        tolerance: tol,
        sweeps,
    }
}

/// Greedy policy for the given values, lowest action index on ties.
pub fn greedy_policy(m: &TabularMdp, vf: &ValueFunction) -> Vec<usize> {
    (0..m.n_states)
        .map(|s| {
            let mut best_a = 0;
            let mut best_q = f64::NEG_INFINITY;
            for a in 0..m.n_actions {
                let q = q_value(m, &vf.v, s, a);
                if q > best_q {
                    best_q = q;
                    best_a = a;
                }
            }
            best_a
        })
        .collect()
}

/// Iterative fixed-point evaluation of a deterministic policy.
pub fn policy_evaluation(
    m: &TabularMdp,
    policy: &[usize],
    tol: f64,
) -> Result<ValueFunction, TheoryError> {
    if policy.len() != m.n_states || policy.iter().any(|&a| a >= m.n_actions) {
        return Err(TheoryError::InvalidArgument(
            "policy must assign a valid action to every state".into(),
        ));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in &m.r {
        for &x in row {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    let start = (lo + hi) / 2.0 / (1.0 - m.gamma);
    let mut v = vec![start; m.n_states];
    let mut sweeps = 0usize;
    loop {
        sweeps += 1;
        let mut next = vec![0.0; m.n_states];
        let mut residual: f64 = 0.0;
        for s in 0..m.n_states {
            let value = q_value(m, &v, s, policy[s]);
            residual = residual.max((value - v[s]).abs());
            next[s] = value;
        }
        v = next;
        if residual <= tol || sweeps >= 10_000_000 {
            break;
        }
    }
    Ok(ValueFunction {
        v,
        gamma: m.gamma,
        tolerance: tol,
        sweeps,
    })
}

/// Worst one-step deviation between ground rows and their abstract
/// class's row, in the reward-plus-weighted-TV metric documented at the
/// module top.
pub fn epsilon_sim(g: &TabularMdp, psi: &Abstraction, abstract_mdp: &TabularMdp) -> f64 {
    let v_span = g.value_span();
    let mut worst: f64 = 0.0;
    for (s, &z) in psi.psi.iter().enumerate() {
        for a in 0..g.n_actions {
            let reward_dev = (g.r[s][a] - abstract_mdp.r[z][a]).abs();
            let mut lifted = vec![0.0; psi.n_abstract];
            for (s_next, &p) in g.t[s][a].iter().enumerate() {
                lifted[psi.psi[s_next]] += p;
            }
            let l1: f64 = lifted
                .iter()
                .zip(&abstract_mdp.t[z][a])
                .map(|(p, q)| (p - q).abs())
                .sum();
            let tv = 0.5 * l1;
            worst = worst.max(reward_dev + g.gamma * v_span * tv);
        }
    }
    worst
}

/// Compose an abstract policy with the abstraction map:
/// `pi_f(s) = abstract_policy[psi(s)]`.
pub fn lift_policy(abstract_policy: &[usize], psi: &Abstraction) -> Result<Vec<usize>, TheoryError> {
    if abstract_policy.len() != psi.n_abstract {
        return Err(TheoryError::InvalidArgument(format!(
            "abstract policy covers {} classes, abstraction has {}",
            abstract_policy.len(),
            psi.n_abstract
        )));
    }
    Ok(psi.psi.iter().map(|&z| abstract_policy[z]).collect())
}

/// Greedy abstract policy, optionally degraded: at the single abstract
/// state where doing so costs least, swap in the second-best action if
/// the induced abstract value loss stays within `eps_plan`.
pub fn eps_plan_suboptimal_policy(
    m: &TabularMdp,
    v_star: &ValueFunction,
    eps_plan: f64,
) -> Result<Vec<usize>, TheoryError> {
    let greedy = greedy_policy(m, v_star);
    if eps_plan <= 0.0 || m.n_actions < 2 {
        return Ok(greedy);
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for z in 0..m.n_states {
        let mut second: Option<usize> = None;
        let mut second_q = f64::NEG_INFINITY;
        for a in 0..m.n_actions {
            if a == greedy[z] {
                continue;
            }
            let q = q_value(m, &v_star.v, z, a);
            if q > second_q {
                second_q = q;
                second = Some(a);
            }
        }
        let Some(second) = second else { continue };
        let mut candidate = greedy.clone();
        candidate[z] = second;
        let v_cand = policy_evaluation(m, &candidate, v_star.tolerance)?;
        let loss = v_star
            .v
            .iter()
            .zip(&v_cand.v)
            .map(|(opt, got)| opt - got)
            .fold(f64::NEG_INFINITY, f64::max);
        if loss <= eps_plan && best.as_ref().map_or(true, |(l, _)| loss < *l) {
            best = Some((loss, candidate));
        }
    }
    Ok(best.map(|(_, p)| p).unwrap_or(greedy))
}

/// Value-loss bound verdict for one (MDP, abstraction, planner slack)
/// instance.
#[derive(Debug, Clone)]
pub struct BoundReport {
    /// Worst-state value loss of the lifted policy.
    pub lhs: f64,
    /// Telescoping terms (A, B, C) at the argmax-loss state.
    pub terms: (f64, f64, f64),
    pub eps_sim: f64,
    pub eps_plan: f64,
    pub bound_rhs: f64,
    pub holds: bool,
}

/// Decompose the lifted policy's value loss at its argmax state into
/// A = V*_ground - V*_abstract, B = abstract planning loss, and
/// C = abstract-to-ground evaluation gap.
pub fn decompose_value_loss(
    g: &TabularMdp,
    psi: &Abstraction,
    abstract_mdp: &TabularMdp,
    pi_l: &[usize],
) -> Result<(f64, f64, f64, f64), TheoryError> {
    let v_star_g = value_iteration(g, VI_TOLERANCE);
    let v_star_m = value_iteration(abstract_mdp, VI_TOLERANCE);
    let v_pil_m = policy_evaluation(abstract_mdp, pi_l, VI_TOLERANCE)?;
    let pi_f = lift_policy(pi_l, psi)?;
    let v_pif_g = policy_evaluation(g, &pi_f, VI_TOLERANCE)?;

    let mut s_star = 0;
    let mut worst = f64::NEG_INFINITY;
    for s in 0..g.n_states {
        let loss = v_star_g.v[s] - v_pif_g.v[s];
        if loss > worst {
            worst = loss;
            s_star = s;
        }
    }
    let z = psi.psi[s_star];
    let a = v_star_g.v[s_star] - v_star_m.v[z];
    let b = v_star_m.v[z] - v_pil_m.v[z];
    let c = v_pil_m.v[z] - v_pif_g.v[s_star];
    Ok((a, b, c, a + b + c))
}

/// Full pipeline: abstract, plan with `eps_plan` slack, lift, evaluate,
/// and test `lhs <= 2*eps_sim/(1-gamma) + eps_plan + tol`.
pub fn check_ifba_bound(
    g: &TabularMdp,
    psi: &Abstraction,
    eps_plan: f64,
    tol: f64,
) -> Result<BoundReport, TheoryError> {
    if eps_plan < 0.0 {
        return Err(TheoryError::InvalidArgument(
            "planner slack must be non-negative".into(),
        ));
    }
    let abstract_mdp = build_abstract_mdp(g, psi)?;
    let eps_sim = epsilon_sim(g, psi, &abstract_mdp);
    let v_star_m = value_iteration(&abstract_mdp, VI_TOLERANCE);
    let pi_l = eps_plan_suboptimal_policy(&abstract_mdp, &v_star_m, eps_plan)?;
    let (a, b, c, total) = decompose_value_loss(g, psi, &abstract_mdp, &pi_l)?;
    let bound_rhs = 2.0 * eps_sim / (1.0 - g.gamma) + eps_plan;
    Ok(BoundReport {
        lhs: total,
        terms: (a, b, c),
        eps_sim,
        eps_plan,
        bound_rhs,
        holds: total <= bound_rhs + tol,
    })
}

/// Qualitative model-error probe: mix `delta` of uniform noise into the
/// abstract transitions and shift rewards by `delta`, replan, and compare
/// the extra ground loss against `c_sum * delta / (1-gamma)^2`. Reported,
/// never asserted.
#[derive(Debug, Clone)]
pub struct PerturbationReport {
    pub delta: f64,
    pub base_loss: f64,
    pub perturbed_loss: f64,
    pub growth: f64,
    pub allowance: f64,
    pub within: bool,
}

pub fn perturbation_probe(
    g: &TabularMdp,
    psi: &Abstraction,
    delta: f64,
    c_sum: f64,
) -> Result<PerturbationReport, TheoryError> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(TheoryError::InvalidArgument(
            "delta must lie in [0, 1]".into(),
        ));
    }
    let abstract_mdp = build_abstract_mdp(g, psi)?;
    let v_star_g = value_iteration(g, VI_TOLERANCE);

    let loss_of = |model: &TabularMdp| -> Result<f64, TheoryError> {
        let v_star = value_iteration(model, VI_TOLERANCE);
        let pi = greedy_policy(model, &v_star);
        let lifted = lift_policy(&pi, psi)?;
        let v_pi = policy_evaluation(g, &lifted, VI_TOLERANCE)?;
        Ok(v_star_g
            .v
            .iter()
            .zip(&v_pi.v)
            .map(|(opt, got)| opt - got)
            .fold(f64::NEG_INFINITY, f64::max))
    };

    let base_loss = loss_of(&abstract_mdp)?;

    let nz = abstract_mdp.n_states;
    let uniform = 1.0 / nz as f64;
    let mut perturbed = abstract_mdp.clone();
    for z in 0..nz {
        for a in 0..perturbed.n_actions {
            for p in &mut perturbed.t[z][a] {
                *p = (1.0 - delta) * *p + delta * uniform;
            }
            perturbed.r[z][a] += if (z + a) % 2 == 0 { delta } else { -delta };
        }
    }
    let perturbed_loss = loss_of(&perturbed)?;
    let growth = perturbed_loss - base_loss;
    let allowance = c_sum * delta / (1.0 - g.gamma).powi(2);
    Ok(PerturbationReport {
        delta,
        base_loss,
        perturbed_loss,
        growth,
        allowance,
        within: growth <= allowance,
    })
}

/// Randomized sweep configuration, parsed from a flat key=value file.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub instances: usize,
    pub max_states: usize,
    pub max_actions: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub eps_plan: f64,
    pub seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            instances: 200,
            max_states: 30,
            max_actions: 4,
            gamma_min: 0.8,
            gamma_max: 0.95,
            eps_plan: 0.1,
            seed: 0,
        }
    }
}

impl SweepSpec {
    /// Parse `key = value` lines; `#` starts a comment; unknown keys are
    /// rejected.
    pub fn parse(text: &str) -> Result<Self, TheoryError> {
        let mut spec = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(TheoryError::InvalidArgument(format!(
                    "line {}: expected key=value, got {raw:?}",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            let bad = |e: std::num::ParseFloatError| {
                TheoryError::InvalidArgument(format!("line {}: {e}", lineno + 1))
            };
            let bad_int = |e: std::num::ParseIntError| {
                TheoryError::InvalidArgument(format!("line {}: {e}", lineno + 1))
            };
            match key {
                "instances" => spec.instances = value.parse().map_err(bad_int)?,
                "max_states" => spec.max_states = value.parse().map_err(bad_int)?,
                "max_actions" => spec.max_actions = value.parse().map_err(bad_int)?,
                "gamma_min" => spec.gamma_min = value.parse().map_err(bad)?,
                "gamma_max" => spec.gamma_max = value.parse().map_err(bad)?,
                "eps_plan" => spec.eps_plan = value.parse().map_err(bad)?,
                "seed" => spec.seed = value.parse().map_err(bad_int)?,
                other => {
                    return Err(TheoryError::InvalidArgument(format!(
                        "line {}: unknown key {other:?}",
                        lineno + 1
                    )))
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), TheoryError> {
        if self.instances == 0 || self.max_states < 2 || self.max_actions == 0 {
            return Err(TheoryError::InvalidArgument(
                "need instances >= 1, max_states >= 2, max_actions >= 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.gamma_min)
            || !(0.0..1.0).contains(&self.gamma_max)
            || self.gamma_min > self.gamma_max
        {
            return Err(TheoryError::InvalidArgument(
                "gamma range must satisfy 0 <= gamma_min <= gamma_max < 1".into(),
            ));
        }
        if self.eps_plan < 0.0 {
            return Err(TheoryError::InvalidArgument(
                "eps_plan must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Draw one random MDP and a random surjective aggregation of it.
pub fn random_instance(
    rng: &mut SplitMix64,
    max_states: usize,
    max_actions: usize,
    gamma_min: f64,
    gamma_max: f64,
) -> (TabularMdp, Abstraction) {
    let n_states = 2 + rng.next_below(max_states as u64 - 1) as usize;
    let n_actions = 1 + rng.next_below(max_actions as u64) as usize;
    let gamma = gamma_min + rng.next_f64() * (gamma_max - gamma_min);
    let mut t = vec![vec![vec![0.0; n_states]; n_actions]; n_states];
    let mut r = vec![vec![0.0; n_actions]; n_states];
    for s in 0..n_states {
        for a in 0..n_actions {
            let mut row: Vec<f64> = (0..n_states)
                .map(|_| -(1.0 - rng.next_f64()).ln())
                .collect();
            let sum: f64 = row.iter().sum();
            for p in &mut row {
                *p /= sum;
            }
            t[s][a] = row;
            r[s][a] = 2.0 * rng.next_f64() - 1.0;
        }
    }
    let g = TabularMdp::new(t, r, gamma).expect("generated MDP is valid");
    let n_abstract = 1 + rng.next_below(n_states as u64) as usize;
    let psi: Vec<usize> = (0..n_states)
        .map(|s| {
            if s < n_abstract {
                s
            } else {
                rng.next_below(n_abstract as u64) as usize
            }
        })
        .collect();
    let abstraction = Abstraction::new(psi, n_abstract).expect("generated abstraction is valid");
    (g, abstraction)
}

/// One sweep instance's verdict.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub instance: usize,
    pub eps_sim: f64,
    pub eps_plan: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub term_a: f64,
    pub term_b: f64,
    pub term_c: f64,
}

/// Run the randomized bound sweep described by `spec`.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, TheoryError> {
    spec.validate()?;
    let mut rng = SplitMix64::new(spec.seed);
    let mut rows = Vec::with_capacity(spec.instances);
    for instance in 0..spec.instances {
        let (g, psi) = random_instance(
            &mut rng,
            spec.max_states,
            spec.max_actions,
            spec.gamma_min,
            spec.gamma_max,
        );
        let report = check_ifba_bound(&g, &psi, spec.eps_plan, BOUND_SLACK)?;
        rows.push(SweepRow {
            instance,
            eps_sim: report.eps_sim,
            eps_plan: report.eps_plan,
            lhs: report.lhs,
            rhs: report.bound_rhs,
            holds: report.holds,
            term_a: report.terms.0,
            term_b: report.terms.1,
            term_c: report.terms.2,
        });
    }
    Ok(rows)
}

/// CSV report; the leading comment records the eps_sim metric so results
/// are interpretable on their own.
pub fn render_sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "# eps_sim = max over (z,a,s in z) of |R(s,a)-R_psi(z,a)| + gamma*V_span*TV(lifted P, T_psi); TV = half L1; V_span = (Rmax-Rmin)/(1-gamma)\n",
    );
    out.push_str("instance,eps_sim,eps_plan,lhs,rhs,holds,term_a,term_b,term_c\n");
    for row in rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{},{:.6},{:.6},{:.6}\n",
            row.instance,
            row.eps_sim,
            row.eps_plan,
            row.lhs,
            row.rhs,
            row.holds,
            row.term_a,
            row.term_b,
            row.term_c
        ));
    }
    out
}
