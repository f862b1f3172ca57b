//! Regime-aware precoders and the proactive interference-aware optimizer.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{CVec, LinkChannel};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::predictor::TrajectoryBundle;
use crate::scene::Regime;

pub type CMat = DMatrix<Complex64>;

/// Beam weights and transmit powers of every transmitter; index 0 is the serving AP.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub weights: Vec<CVec>,
    pub powers: Vec<f64>,
}

impl BeamformerSet {
    pub fn new(weights: Vec<CVec>, powers: Vec<f64>) -> Result<Self> {
        if weights.len() != powers.len() {
            return Err(Error::Dimension(format!("{} weights vs {} powers", weights.len(), powers.len())));
        }
        Ok(Self { weights, powers })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `sum_k P_k ||w_k||^2`.
    pub fn total_power(&self) -> f64 {
        self.weights.iter().zip(&self.powers).map(|(w, p)| p * w.norm_squared()).sum()
    }

    pub fn within_budget(&self, budget: f64) -> bool {
        self.total_power() <= budget + 1e-9
    }

    /// Received power of transmitter `k` through `h_eff`.
    pub fn received(&self, k: usize, h_eff: &CVec) -> f64 {
        self.powers[k] * h_eff.dotc(&self.weights[k]).norm_sqr()
    }

    /// Aggregate interference from transmitters `1..` and the serving SINR.
    pub fn interference_and_sinr(&self, links: &[LinkChannel], noise_power: f64) -> (f64, f64) {
        let int: f64 = links.iter().enumerate().skip(1).map(|(k, c)| self.received(k, &c.h_eff)).sum();
        let sig = self.received(0, &links[0].h_eff);
        (int, sig / (int + noise_power))
    }
}

/// Optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Linear SINR threshold.
    pub gamma_min: f64,
    pub max_iters: usize,
    /// Relative objective change below which iteration stops.
    pub tol: f64,
    /// ZF regularization; `None` selects `1e-6 tr(HH^H)/K`.
    pub zf_delta: Option<f64>,
    /// Network power budget, watts.
    pub power_budget: f64,
    pub noise_power: f64,
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_min > 0.0) || !(self.tol > 0.0) {
            return Err(Error::Config("gamma_min and tol must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.power_budget > 0.0) || !(self.noise_power > 0.0) {
            return Err(Error::Config("power budget and noise power must be positive".into()));
        }
        if let Some(d) = self.zf_delta {
            if !(d >= 0.0) {
                return Err(Error::Config("ZF regularization must be non-negative".into()));
            }
        }
        Ok(())
    }
}

/// Regularized zero-forcing `W = H^H (H H^H + delta I)^-1` with unit-norm
/// columns. Row `k` of `H` is `h_k^H`; the returned `w_k` serves `h_k`.
pub fn zf_precode(channels: &[CVec], delta: Option<f64>) -> Result<Vec<CVec>> {
    let k = channels.len();
    if k == 0 {
        return Err(Error::Empty("channel matrix"));
    }
    let m = channels[0].len();
    if channels.iter().any(|h| h.len() != m) {
        return Err(Error::Dimension("channels of unequal length".into()));
    }
    let hh = CMat::from_columns(channels);
    let gram = hh.adjoint() * &hh;
    let trace: f64 = (0..k).map(|i| gram[(i, i)].re).sum();
    if !(trace > 0.0) {
        return Err(Error::ZeroChannel);
    }
    let delta = delta.unwrap_or(1e-6 * trace / k as f64);
    if delta == 0.0 {
        if k > m {
            return Err(Error::RankDeficient);
        }
        let eig = gram.clone().symmetric_eigenvalues();
        let max = eig.iter().cloned().fold(0.0_f64, f64::max);
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > 1e-12 * max) {
            return Err(Error::RankDeficient);
        }
    }
    let mut reg = gram;
    for i in 0..k {
        reg[(i, i)] += Complex64::new(delta, 0.0);
    }
    let inv = reg.cholesky().ok_or(Error::RankDeficient)?.inverse();
    let w = hh * inv;
    w.column_iter()
        .map(|c| {
            let n = c.norm();
            if n > 0.0 {
                Ok(c.unscale(n))
            } else {
                Err(Error::ZeroChannel)
            }
        })
        .collect()
}

/// Conjugate beam focusing on `h`.
pub fn nf_focus(h: &CVec) -> Result<CVec> {
    let n = h.norm();
    if !(n > 0.0) {
        return Err(Error::ZeroChannel);
    }
    Ok(h.unscale(n))
}

/// `P_0 |h_0^H w_0|^2 / (sum_k P_k |h_k^H w_k|^2 + sigma^2)`.
pub fn sinr(h0: &CVec, w0: &CVec, p0: f64, interferers: &[(&CVec, &CVec, f64)], noise_power: f64) -> f64 {
    let sig = p0 * h0.dotc(w0).norm_sqr();
    let int: f64 = interferers.iter().map(|(h, w, p)| p * h.dotc(w).norm_sqr()).sum();
    sig / (int + noise_power)
}

/// Predicted interference of bundle sample `m` per step under `beams`.
pub fn aggregate_interference(bundle: &TrajectoryBundle, m: usize, beams: &BeamformerSet) -> Vec<f64> {
    bundle.trajectories[m]
        .steps
        .iter()
        .map(|s| s.links.iter().enumerate().skip(1).map(|(k, c)| beams.received(k, &c.h_eff)).sum())
        .collect()
}

/// Reactive precoding rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReactiveKind {
    /// ZF on every link, ignoring regimes.
    AllZf,
    /// Far-field links use ZF, near-field links use focusing on the served user.
    RegimeDispatch,
}

/// Reactive beams from current channels. `tagged[k]` is transmitter `k`'s
/// channel toward the tagged UE and `own[k]` toward the user it serves
/// (`own[0]` is ignored; the serving AP serves the tagged UE).
pub fn reactive_schemes(
    kind: ReactiveKind,
    tagged: &[CVec],
    own: &[CVec],
    regimes: &[Regime],
    powers: &[f64],
    delta: Option<f64>,
) -> Result<BeamformerSet> {
    let n = tagged.len();
    if own.len() != n || regimes.len() != n || powers.len() != n {
        return Err(Error::Dimension("reactive inputs of unequal length".into()));
    }
    let mut weights = Vec::with_capacity(n);
    for k in 0..n {
        let w = if k == 0 {
            match (kind, regimes[0]) {
                (ReactiveKind::RegimeDispatch, Regime::NearField) => nf_focus(&tagged[0])?,
                _ => zf_precode(std::slice::from_ref(&tagged[0]), delta)?.remove(0),
            }
        } else {
            match (kind, regimes[k]) {
                (ReactiveKind::RegimeDispatch, Regime::NearField) => nf_focus(&own[k])?,
                _ => zf_precode(&[own[k].clone(), tagged[k].clone()], delta)?.remove(0),
            }
        };
        weights.push(w);
    }
    BeamformerSet::new(weights, powers.to_vec())
}

/// Orthonormal basis of the span of `vectors` (two-pass modified Gram-Schmidt).
pub fn orthonormal_basis(vectors: &[&CVec], rel_tol: f64) -> Vec<CVec> {
    let mut basis: Vec<CVec> = Vec::new();
    for v in vectors {
        let n0 = v.norm();
        if !(n0 > 0.0) {
            continue;
        }
        let mut r = (*v).clone();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dotc(&r);
                r.axpy(-c, q, Complex64::new(1.0, 0.0));
            }
        }
        let n = r.norm();
        if n > rel_tol * n0 {
            basis.push(r.unscale(n));
        }
    }
    basis
}

/// `v - Q Q^H v` for an orthonormal `Q`.
pub fn project_out(v: &CVec, basis: &[CVec]) -> CVec {
    let mut r = v.clone();
    for _ in 0..2 {
        for q in basis {
            let c = q.dotc(&r);
            r.axpy(-c, q, Complex64::new(1.0, 0.0));
        }
    }
    r
}

/// Unit vector minimizing `sum_i |h_i^H w|^2`.
fn least_gain_direction(vectors: &[&CVec], m: usize) -> CVec {
    let mut r = CMat::zeros(m, m);
    for h in vectors {
        r.ger(Complex64::new(1.0, 0.0), *h, *h, Complex64::new(1.0, 0.0));
    }
    let eig = r.symmetric_eigen();
    let (i, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    eig.eigenvectors.column(i).into_owned()
}

/// Per-interferer null-space data, fixed for one optimizer call.
#[derive(Debug, Clone)]
struct NullSpace {
    basis: Vec<CVec>,
    fallback: Option<CVec>,
}

fn null_space(bundle: &TrajectoryBundle, k: usize) -> NullSpace {
    let stacked: Vec<&CVec> = (0..bundle.num_samples())
        .flat_map(|m| (1..=bundle.horizon()).map(move |tau| (m, tau)))
        .map(|(m, tau)| bundle.effective(m, tau, k))
        .collect();
    let dim = stacked.first().map(|h| h.len()).unwrap_or(0);
    let basis = orthonormal_basis(&stacked, 1e-10);
    let fallback = (basis.len() >= dim && dim > 0).then(|| least_gain_direction(&stacked, dim));
    NullSpace { basis, fallback }
}

/// Inputs of one proactive optimization.
#[derive(Debug, Clone, Copy)]
pub struct ProactiveProblem<'a> {
    pub bundle: &'a TrajectoryBundle,
    /// Channel of transmitter `k` toward the user it serves.
    pub own: &'a [CVec],
    /// Regime of each transmitter's link to the tagged UE, as the scheme perceives it.
    pub regimes: &'a [Regime],
    pub nominal_powers: &'a [f64],
    /// Initialization rule.
    pub init: ReactiveKind,
    /// Beams currently deployed; the serving beam is one of the candidates.
    pub previous: Option<&'a BeamformerSet>,
}

/// Iteration log of one optimizer call.
#[derive(Debug, Clone, Default)]
pub struct OptimizerTrace {
    /// Objective at initialization followed by one entry per iteration.
    pub objective: Vec<f64>,
    /// Total transmit power at initialization and after every iteration.
    pub total_power: Vec<f64>,
    /// Worst predicted SINR at initialization and after every iteration.
    pub worst_sinr: Vec<f64>,
    pub iteration_time: Vec<Duration>,
    pub converged: bool,
    /// Predicted SINR constraint satisfied, indexed `[m][tau - 1]`, at exit.
    pub feasible: Vec<Vec<bool>>,
}

impl OptimizerTrace {
    pub fn iterations(&self) -> usize {
        self.objective.len().saturating_sub(1)
    }

    pub fn all_feasible(&self) -> bool {
        self.feasible.iter().flatten().all(|f| *f)
    }

    pub fn feasible_fraction(&self) -> f64 {
        let n = self.feasible.iter().map(|r| r.len()).sum::<usize>();
        if n == 0 {
            return 1.0;
        }
        self.feasible.iter().flatten().filter(|f| **f).count() as f64 / n as f64
    }
}

#[derive(Debug, Clone)]
pub struct ProactiveOutcome {
    pub beams: BeamformerSet,
    pub trace: OptimizerTrace,
}

/// Mean over samples of the summed predicted interference, `(1/M) sum_m sum_tau I^(m)`.
pub fn expected_interference(bundle: &TrajectoryBundle, beams: &BeamformerSet, exec: Execution) -> f64 {
    let m = bundle.num_samples();
    let per: Vec<f64> = par::map_range(exec, m, |i| aggregate_interference(bundle, i, beams).iter().sum());
    per.iter().sum::<f64>() / m as f64
}

/// Predicted serving SINR for every `(m, tau)`, sample-major.
fn predicted_sinrs(bundle: &TrajectoryBundle, beams: &BeamformerSet, noise: f64) -> Vec<f64> {
    bundle
        .trajectories
        .iter()
        .flat_map(|t| t.steps.iter().map(|s| beams.interference_and_sinr(&s.links, noise).1))
        .collect()
}

fn worst(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Dominant direction of the stacked predicted serving channels (power iteration
/// on the sum of normalized outer products).
fn principal_direction(channels: &[&CVec]) -> Option<CVec> {
    let first = channels.iter().find(|h| h.norm() > 0.0)?;
    let mut x = first.unscale(first.norm());
    for _ in 0..30 {
        let mut y = CVec::zeros(x.len());
        for h in channels {
            let n2 = h.norm_squared();
            if n2 > 0.0 {
                let c = h.dotc(&x) / n2;
                y.axpy(c, *h, Complex64::new(1.0, 0.0));
            }
        }
        let n = y.norm();
        if !(n > 0.0) {
            break;
        }
        x = y.unscale(n);
    }
    Some(x)
}

fn rescale_to_budget(set: &mut BeamformerSet, budget: f64) {
    let total = set.total_power();
    if total > budget {
        let s = (budget / total).sqrt();
        for w in &mut set.weights {
            *w *= Complex64::new(s, 0.0);
        }
    }
}

/// Proactive optimization over the sampled futures in `problem.bundle`.
///
/// Initializes per regime, then alternates (a) a serving-beam update that
/// maximizes the worst predicted SINR, (b) projection of each interferer's
/// served direction onto the null space of the tagged UE's stacked predicted
/// channels, (c) power rescaling to the budget. An iterate that would raise the
/// objective is rejected. After convergence the serving power is boosted within
/// the remaining budget when the predicted SINR falls short of `gamma_min`.
pub fn proactive_optimize(problem: &ProactiveProblem, config: &OptimizerConfig, exec: Execution) -> Result<ProactiveOutcome> {
    config.validate()?;
    let bundle = problem.bundle;
    let n = bundle.num_links();
    if problem.own.len() != n || problem.regimes.len() != n || problem.nominal_powers.len() != n {
        return Err(Error::Dimension("optimizer inputs of unequal length".into()));
    }
    let noise = config.noise_power;
    let tagged_now: Vec<CVec> = (0..n).map(|k| bundle.effective(0, 1, k).clone()).collect();
    let mut own = problem.own.to_vec();
    own[0] = tagged_now[0].clone();
    let mut beams = reactive_schemes(problem.init, &tagged_now, &own, problem.regimes, problem.nominal_powers, config.zf_delta)?;
    rescale_to_budget(&mut beams, config.power_budget);

    let spaces: Vec<Option<NullSpace>> = par::map_range(exec, n, |k| (k > 0).then(|| null_space(bundle, k)));
    let serving: Vec<&CVec> = (0..bundle.num_samples())
        .flat_map(|m| (1..=bundle.horizon()).map(move |tau| (m, tau)))
        .map(|(m, tau)| bundle.effective(m, tau, 0))
        .collect();
    let principal = principal_direction(&serving);
    let mean_dir = {
        let mut acc = CVec::zeros(serving[0].len());
        for h in &serving {
            acc += *h;
        }
        let nrm = acc.norm();
        (nrm > 0.0).then(|| acc.unscale(nrm))
    };

    let mut trace = OptimizerTrace::default();
    let mut objective = expected_interference(bundle, &beams, exec);
    trace.objective.push(objective);
    trace.total_power.push(beams.total_power());
    trace.worst_sinr.push(worst(&predicted_sinrs(bundle, &beams, noise)));

    for _ in 0..config.max_iters {
        let start = Instant::now();
        let mut next = beams.clone();

        // (a) serving beam
        let mut candidates: Vec<CVec> = vec![next.weights[0].clone()];
        candidates.extend(principal.iter().cloned());
        candidates.extend(mean_dir.iter().cloned());
        if let Some(prev) = problem.previous {
            if prev.weights.first().map(|w| w.len()) == Some(next.weights[0].len()) {
                candidates.push(prev.weights[0].clone());
            }
        }
        let interference: Vec<f64> = bundle
            .trajectories
            .iter()
            .flat_map(|t| {
                t.steps
                    .iter()
                    .map(|s| s.links.iter().enumerate().skip(1).map(|(k, c)| next.received(k, &c.h_eff)).sum::<f64>())
            })
            .collect();
        let p0 = next.powers[0];
        let score = |w: &CVec| -> f64 {
            let wn = w.norm();
            if !(wn > 0.0) {
                return f64::NEG_INFINITY;
            }
            serving
                .iter()
                .zip(&interference)
                .map(|(h, i)| p0 * h.dotc(w).norm_sqr() / (wn * wn) / (i + noise))
                .fold(f64::INFINITY, f64::min)
        };
        let scores = par::map(exec, &candidates, |w| score(w));
        let best = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let w0 = &candidates[best];
        let scale = next.weights[0].norm();
        next.weights[0] = w0.unscale(w0.norm()) * Complex64::new(scale, 0.0);

        // (b) interferer null-space projection
        let projected: Vec<Option<CVec>> = par::map_range(exec, n, |k| {
            let space = spaces[k].as_ref()?;
            if let Some(f) = &space.fallback {
                return Some(f.clone());
            }
            let d = &own[k];
            let dn = d.norm();
            if !(dn > 0.0) {
                return None;
            }
            let r = project_out(&d.unscale(dn), &space.basis);
            let rn = r.norm();
            if rn > 1e-9 {
                return Some(r.unscale(rn));
            }
            let dim = d.len();
            (0..dim)
                .map(|i| {
                    let mut e = CVec::zeros(dim);
                    e[i] = Complex64::new(1.0, 0.0);
                    project_out(&e, &space.basis)
                })
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .map(|r| {
                    let rn = r.norm();
                    r.unscale(rn)
                })
        });
        for (k, p) in projected.into_iter().enumerate() {
            if let Some(w) = p {
                next.weights[k] = w;
            }
        }

        // (c) budget
        rescale_to_budget(&mut next, config.power_budget);

        let candidate = expected_interference(bundle, &next, exec);
        trace.iteration_time.push(start.elapsed());
        let accepted = candidate <= objective;
        if accepted {
            beams = next;
        }
        let new_obj = if accepted { candidate } else { objective };
        trace.objective.push(new_obj);
        trace.total_power.push(beams.total_power());
        trace.worst_sinr.push(worst(&predicted_sinrs(bundle, &beams, noise)));
        let rel = if objective > 0.0 { (objective - new_obj).abs() / objective } else { 0.0 };
        objective = new_obj;
        if !accepted || rel < config.tol {
            trace.converged = true;
            break;
        }
    }

    // SINR enforcement by boosting the serving power within the remaining budget
    let sinrs = predicted_sinrs(bundle, &beams, noise);
    let w = worst(&sinrs);
    if w < config.gamma_min && w > 0.0 {
        let w0n2 = beams.weights[0].norm_squared();
        let headroom = config.power_budget - beams.total_power();
        if headroom > 0.0 && w0n2 > 0.0 {
            let wanted = beams.powers[0] * config.gamma_min / w;
            let cap = beams.powers[0] + headroom / w0n2;
            beams.powers[0] = wanted.min(cap);
        }
    }
    let h = bundle.horizon();
    let sinrs = predicted_sinrs(bundle, &beams, noise);
    trace.feasible = sinrs.chunks(h).map(|c| c.iter().map(|s| *s >= config.gamma_min).collect()).collect();
    Ok(ProactiveOutcome { beams, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn random_vec(m: usize, r: &mut impl Rng) -> CVec {
        CVec::from_fn(m, |_, _| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
    }

    #[test]
    fn zf_single_row_is_matched_filter() {
        let mut r = rng::substream(1, &[]);
        let h = random_vec(8, &mut r);
        let w = zf_precode(std::slice::from_ref(&h), Some(0.0)).unwrap().remove(0);
        let mf = h.unscale(h.norm());
        assert!((w - mf).norm() < 1e-12);
    }

    #[test]
    fn zf_orthogonal_rows_match_filters() {
        let mut a = CVec::zeros(4);
        a[0] = Complex64::new(1.0, 1.0);
        let mut b = CVec::zeros(4);
        b[2] = Complex64::new(0.0, 2.0);
        let w = zf_precode(&[a.clone(), b.clone()], Some(0.0)).unwrap();
        assert!((&w[0] - a.unscale(a.norm())).norm() < 1e-12);
        assert!((&w[1] - b.unscale(b.norm())).norm() < 1e-12);
    }

    #[test]
    fn zf_nulls_cross_gains() {
        let mut r = rng::substream(2, &[]);
        let hs: Vec<CVec> = (0..4).map(|_| random_vec(16, &mut r)).collect();
        let w = zf_precode(&hs, Some(0.0)).unwrap();
        for (k, wk) in w.iter().enumerate() {
            assert!((wk.norm() - 1.0).abs() < 1e-12);
            for (j, hj) in hs.iter().enumerate() {
                if j != k {
                    assert!(hj.dotc(wk).norm() / hj.norm() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn zf_rank_deficiency() {
        let mut r = rng::substream(3, &[]);
        let h = random_vec(8, &mut r);
        let twice = &h * Complex64::new(2.0, 0.0);
        assert!(matches!(zf_precode(&[h.clone(), twice.clone()], Some(0.0)), Err(Error::RankDeficient)));
        assert!(zf_precode(&[h, twice], None).is_ok());
    }

    #[test]
    fn focusing() {
        let mut r = rng::substream(4, &[]);
        let h = random_vec(16, &mut r);
        let w = nf_focus(&h).unwrap();
        assert!((h.dotc(&w).norm_sqr() - h.norm_squared()).abs() < 1e-12 * h.norm_squared());
        let w2 = nf_focus(&(&h * Complex64::new(3.5, 0.0))).unwrap();
        assert!((w - w2).norm() < 1e-14);
        assert!(matches!(nf_focus(&CVec::zeros(3)), Err(Error::ZeroChannel)));
    }

    #[test]
    fn sinr_examples() {
        let mut r = rng::substream(5, &[]);
        let h0 = random_vec(8, &mut r);
        let w0 = nf_focus(&h0).unwrap();
        let s = sinr(&h0, &w0, 2.0, &[], 0.5);
        assert!((s - 2.0 * h0.norm_squared() / 0.5).abs() < 1e-12 * s);

        let h1 = random_vec(8, &mut r);
        let w1 = nf_focus(&random_vec(8, &mut r)).unwrap();
        let a = sinr(&h0, &w0, 1.0, &[(&h1, &w1, 1.0)], 1e-30);
        let b = sinr(&h0, &w0, 1.0, &[(&h1, &w1, 2.0)], 1e-30);
        assert!((a / b - 2.0).abs() < 1e-9);

        // hand-computed 2-element case
        let h0 = CVec::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
        let w0 = CVec::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let h1 = CVec::from_vec(vec![Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0)]);
        let w1 = CVec::from_vec(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]);
        let h2 = CVec::from_vec(vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)]);
        let w2 = CVec::from_vec(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        // |h0^H w0|^2 = 1; h1^H w1 = -0.6i - 0.8i... conj(i)*0.6 + 1*0.8i = -0.6i + 0.8i = 0.2i -> 0.04; h2^H w2 = 0
        let s = sinr(&h0, &w0, 3.0, &[(&h1, &w1, 5.0), (&h2, &w2, 7.0)], 0.1);
        assert!((s - 3.0 / (5.0 * 0.04 + 0.1)).abs() < 1e-12);
    }

    #[test]
    fn basis_and_projection() {
        let mut r = rng::substream(6, &[]);
        let vs: Vec<CVec> = (0..5).map(|_| random_vec(12, &mut r)).collect();
        let refs: Vec<&CVec> = vs.iter().collect();
        let q = orthonormal_basis(&refs, 1e-10);
        assert_eq!(q.len(), 5);
        let d = random_vec(12, &mut r);
        let p = project_out(&d, &q);
        for v in &vs {
            assert!(v.dotc(&p).norm() <= 1e-12 * v.norm() * p.norm());
        }
        let dup = vec![&vs[0], &vs[0]];
        assert_eq!(orthonormal_basis(&dup, 1e-10).len(), 1);
    }
}
