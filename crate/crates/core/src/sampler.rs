//! Metropolis-adjusted Langevin sampling of `e^{-N tr(λV + ½ΣX_i²)}` on
//! d-tuples of Hermitian matrices, with an optional operator-norm cut-off.
//!
//! The proposal is preconditioned by the GUE covariance, so at `λ = 0` the
//! drift is exactly the Ornstein-Uhlenbeck one:
//! `X' = X - (ε/2)(λ D_iV(X) + X_i) + √ε ξ`, `ξ ~ GUE(1/N)`.

use std::collections::HashMap;
use std::io::{self, Read, Write};

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::exec;
use crate::master::Potential;
use crate::ncpoly::{partial_color, Color, Monomial, NCPoly};
use crate::rational::to_f64;

pub type C64 = Complex<f64>;
pub type Mat = DMatrix<C64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("{have} samples recorded, at least {need} needed")]
    InsufficientSamples { have: usize, need: usize },
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("observable {0} must have constant coefficients and unindexed letters")]
    BadObservable(String),
    #[error("observable {0} was not recorded and no raw samples were kept")]
    NotRecorded(String),
}

pub const TARGET_ACCEPTANCE: f64 = 0.574;
const POWER_ITERATIONS: usize = 20;
const POWER_TOLERANCE: f64 = 1e-6;
const MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub potential: Potential,
    pub lambda: f64,
    pub n: usize,
    pub k_cut: Option<f64>,
    pub seed: u64,
    pub step_size: f64,
    pub n_steps: usize,
    pub n_burnin: usize,
    pub thinning: usize,
    pub chains: usize,
    /// Tune the step size toward [`TARGET_ACCEPTANCE`] during burn-in.
    pub adapt: bool,
    pub keep_samples: bool,
}

impl ModelConfig {
    pub fn new(potential: Potential, lambda: f64, n: usize) -> Self {
        Self {
            potential,
            lambda,
            n,
            k_cut: None,
            seed: 0,
            step_size: 0.5,
            n_steps: 10_000,
            n_burnin: 1_000,
            thinning: 1,
            chains: 1,
            adapt: true,
            keep_samples: false,
        }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        let bad = |m: &str| Err(SamplerError::InvalidConfig(m.into()));
        if self.n < 2 {
            return bad("N must be at least 2");
        }
        if self.step_size.is_nan() || self.step_size <= 0.0 {
            return bad("step_size must be positive");
        }
        if self.lambda.is_nan() || self.lambda < 0.0 {
            return bad("lambda must be non-negative");
        }
        if self.thinning == 0 || self.chains == 0 {
            return bad("thinning and chains must be positive");
        }
        if matches!(self.k_cut, Some(k) if k.is_nan() || k <= 0.0) {
            return bad("K_cut must be positive");
        }
        Ok(())
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            potential: self.potential.poly().to_string(),
            d: self.potential.d(),
            lambda: self.lambda,
            n: self.n,
            k_cut: self.k_cut,
            seed: self.seed,
            step_size: self.step_size,
            n_steps: self.n_steps,
            n_burnin: self.n_burnin,
            thinning: self.thinning,
            chains: self.chains,
            adapt: self.adapt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub potential: String,
    pub d: usize,
    pub lambda: f64,
    pub n: usize,
    pub k_cut: Option<f64>,
    pub seed: u64,
    pub step_size: f64,
    pub n_steps: usize,
    pub n_burnin: usize,
    pub thinning: usize,
    pub chains: usize,
    pub adapt: bool,
}

/// A polynomial with float coefficients over unindexed letters.
#[derive(Debug, Clone)]
struct Compiled(Vec<(f64, Vec<Color>)>);

fn word_of(m: &Monomial, name: &dyn Fn() -> String) -> Result<Vec<Color>, SamplerError> {
    m.letters()
        .iter()
        .map(|l| if l.index.is_empty() { Ok(l.color) } else { Err(SamplerError::BadObservable(name())) })
        .collect()
}

impl Compiled {
    fn new(p: &NCPoly) -> Result<Self, SamplerError> {
        let name = || p.to_string();
        let mut terms = Vec::new();
        for (m, c) in p.sorted_terms() {
            let c = c.as_constant().ok_or_else(|| SamplerError::BadObservable(name()))?;
            terms.push((to_f64(&c), word_of(m, &name)?));
        }
        Ok(Self(terms))
    }
}

/// Memoized products of letter words at a fixed point.
struct Products<'a> {
    xs: &'a [Mat],
    memo: HashMap<Vec<Color>, Mat>,
}

impl<'a> Products<'a> {
    fn new(xs: &'a [Mat]) -> Self {
        Self { xs, memo: HashMap::new() }
    }

    fn letter(&self, c: Color) -> &Mat {
        &self.xs[c as usize - 1]
    }

    fn product(&mut self, w: &[Color]) -> Mat {
        match w.len() {
            0 => Mat::identity(self.xs[0].nrows(), self.xs[0].nrows()),
            1 => self.letter(w[0]).clone(),
            _ => {
                if let Some(m) = self.memo.get(w) {
                    return m.clone();
                }
                let head = self.product(&w[..w.len() - 1]);
                let m = head * self.letter(w[w.len() - 1]);
                self.memo.insert(w.to_vec(), m.clone());
                m
            }
        }
    }

    fn trace(&mut self, w: &[Color]) -> C64 {
        match w.len() {
            0 => C64::new(self.xs[0].nrows() as f64, 0.0),
            1 => self.letter(w[0]).trace(),
            _ => {
                let head = self.product(&w[..w.len() - 1]);
                trace_of_product(&head, self.letter(w[w.len() - 1]))
            }
        }
    }

    fn eval(&mut self, p: &Compiled) -> Mat {
        let n = self.xs[0].nrows();
        let mut out = Mat::zeros(n, n);
        for (c, w) in &p.0 {
            out += self.product(w) * C64::new(*c, 0.0);
        }
        out
    }

    fn trace_poly(&mut self, p: &Compiled) -> C64 {
        p.0.iter().map(|(c, w)| self.trace(w) * *c).sum()
    }
}

/// `tr(AB)` without forming the product.
pub fn trace_of_product(a: &Mat, b: &Mat) -> C64 {
    let n = a.nrows();
    let mut s = C64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            s += a[(j, k)] * b[(k, j)];
        }
    }
    s
}

fn frobenius_sq(a: &Mat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

fn hermitian_part(a: &Mat) -> Mat {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

fn gue_with(rng: &mut impl Rng, n: usize) -> Mat {
    let diag = (1.0 / n as f64).sqrt();
    let off = (0.5 / n as f64).sqrt();
    let mut m = Mat::zeros(n, n);
    for j in 0..n {
        let x: f64 = rng.sample(StandardNormal);
        m[(j, j)] = C64::new(diag * x, 0.0);
        for k in j + 1..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = C64::new(off * re, off * im);
            m[(j, k)] = z;
            m[(k, j)] = z.conj();
        }
    }
    m
}

/// `d` independent GUE matrices with entry variance `1/N`.
pub fn gue_sample(n: usize, d: usize, seed: u64) -> Vec<Mat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..d).map(|_| gue_with(&mut rng, n)).collect()
}

/// The potential and its cyclic gradient, ready for matrix evaluation.
#[derive(Debug, Clone)]
pub struct Model {
    lambda: f64,
    v: Compiled,
    dv: Vec<Compiled>,
}

impl Model {
    pub fn new(v: &Potential, lambda: f64) -> Self {
        let compile = |p: &NCPoly| Compiled::new(p).expect("potentials have rational coefficients");
        Self {
            lambda,
            v: compile(v.poly()),
            dv: (1..=v.d()).map(|i| compile(v.cyclic_derivative(i as Color))).collect(),
        }
    }

    pub fn d(&self) -> usize {
        self.dv.len()
    }

    /// `tr(λV + ½ΣX_i²)`.
    pub fn energy(&self, xs: &[Mat]) -> f64 {
        let mut prod = Products::new(xs);
        self.energy_with(&mut prod)
    }

    fn energy_with(&self, prod: &mut Products) -> f64 {
        let quad: f64 = prod.xs.iter().map(frobenius_sq).sum::<f64>() * 0.5;
        self.lambda * prod.trace_poly(&self.v).re + quad
    }

    /// `λ D_iV(X) + X_i` for each colour, Hermitian-symmetrized.
    pub fn grad(&self, xs: &[Mat]) -> Vec<Mat> {
        let mut prod = Products::new(xs);
        self.grad_with(&mut prod)
    }

    fn grad_with(&self, prod: &mut Products) -> Vec<Mat> {
        let xs = prod.xs;
        self.dv
            .iter()
            .zip(xs)
            .map(|(dv, x)| hermitian_part(&(prod.eval(dv) * C64::new(self.lambda, 0.0) + x)))
            .collect()
    }

    fn energy_and_grad(&self, xs: &[Mat]) -> (f64, Vec<Mat>) {
        let mut prod = Products::new(xs);
        let g = self.grad_with(&mut prod);
        (self.energy_with(&mut prod), g)
    }
}

/// `λ D_iV(X) + X_i` for each colour.
pub fn grad_potential(xs: &[Mat], v: &Potential, lambda: f64) -> Vec<Mat> {
    Model::new(v, lambda).grad(xs)
}

/// Operator norm of a Hermitian matrix, by power iteration on `X²`.
/// Stops early once the estimate moves by less than the relative tolerance.
pub fn spectral_norm_estimate(x: &Mat) -> f64 {
    let n = x.nrows();
    let mut v = DVector::from_fn(n, |j, _| C64::new(1.0 + (j as f64 * 0.7).sin() * 0.5, (j as f64 * 1.3).cos() * 0.25));
    let mut est = 0.0;
    for _ in 0..POWER_ITERATIONS {
        v /= C64::new(v.norm(), 0.0);
        let xv = x * &v;
        let next = xv.norm();
        v = x * xv;
        if v.norm() == 0.0 {
            return 0.0;
        }
        if (next - est).abs() <= POWER_TOLERANCE * next {
            return next;
        }
        est = next;
    }
    est
}

fn within_cut(xs: &[Mat], k_cut: Option<f64>) -> bool {
    let Some(k) = k_cut else { return true };
    // the Frobenius norm bounds the operator norm
    xs.iter().all(|x| frobenius_sq(x) <= k * k || spectral_norm_estimate(x) <= k)
}

#[derive(Debug, Clone)]
pub struct ChainState {
    pub xs: Vec<Mat>,
    /// `tr(λV + ½ΣX_i²)` at `xs`.
    pub energy: f64,
    pub grads: Vec<Mat>,
    rng: ChaCha8Rng,
}

impl ChainState {
    pub fn new(model: &Model, xs: Vec<Mat>, rng: ChaCha8Rng) -> Self {
        let (energy, grads) = model.energy_and_grad(&xs);
        Self { xs, energy, grads, rng }
    }

    pub fn n(&self) -> usize {
        self.xs[0].nrows()
    }
}

/// One MALA update in place; returns whether the proposal was accepted.
pub fn mala_step(state: &mut ChainState, model: &Model, eps: f64, k_cut: Option<f64>) -> bool {
    let n = state.n();
    let nf = n as f64;
    let half = C64::new(eps / 2.0, 0.0);
    let root = C64::new(eps.sqrt(), 0.0);
    let proposal: Vec<Mat> = state
        .xs
        .iter()
        .zip(&state.grads)
        .map(|(x, g)| x - g * half + gue_with(&mut state.rng, n) * root)
        .collect();
    let u: f64 = state.rng.random();
    if !within_cut(&proposal, k_cut) {
        return false;
    }
    let (energy, grads) = model.energy_and_grad(&proposal);
    let mut fwd = 0.0;
    let mut bwd = 0.0;
    for i in 0..proposal.len() {
        fwd += frobenius_sq(&(&proposal[i] - &state.xs[i] + &state.grads[i] * half));
        bwd += frobenius_sq(&(&state.xs[i] - &proposal[i] + &grads[i] * half));
    }
    let log_ratio = -nf * (energy - state.energy) - nf / (2.0 * eps) * (bwd - fwd);
    if u.ln() < log_ratio {
        state.xs = proposal;
        state.energy = energy;
        state.grads = grads;
        true
    } else {
        false
    }
}

#[derive(Debug, Clone)]
pub enum Observable {
    /// `ts P(X)`
    Trace(NCPoly),
    /// `ts⊗ts(∂_iP) - ts(P·(λD_iV + X_i))`
    SdResidual(NCPoly, Color),
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::Trace(p) => format!("ts({p})"),
            Observable::SdResidual(p, i) => format!("sd({p}; {i})"),
        }
    }
}

enum CompiledObservable {
    Trace(Compiled),
    Sd { p: Compiled, tensor: Vec<(f64, Vec<Color>, Vec<Color>)>, color: Color },
}

impl CompiledObservable {
    fn new(o: &Observable) -> Result<Self, SamplerError> {
        Ok(match o {
            Observable::Trace(p) => Self::Trace(Compiled::new(p)?),
            Observable::SdResidual(p, i) => {
                let name = || o.name();
                let mut tensor = Vec::new();
                for ((a, b), c) in partial_color(p, *i).terms() {
                    let c = c.as_constant().ok_or_else(|| SamplerError::BadObservable(name()))?;
                    tensor.push((to_f64(&c), word_of(a, &name)?, word_of(b, &name)?));
                }
                tensor.sort_by(|x, y| (&x.1, &x.2).cmp(&(&y.1, &y.2)));
                Self::Sd { p: Compiled::new(p)?, tensor, color: *i }
            }
        })
    }

    fn value(&self, xs: &[Mat], grads: &[Mat]) -> f64 {
        let nf = xs[0].nrows() as f64;
        let mut prod = Products::new(xs);
        match self {
            Self::Trace(p) => prod.trace_poly(p).re / nf,
            Self::Sd { p, tensor, color } => {
                let lhs: f64 = tensor.iter().map(|(c, a, b)| c * (prod.trace(a) * prod.trace(b)).re / (nf * nf)).sum();
                let g = &grads[*color as usize - 1];
                let rhs: f64 = p.0.iter().map(|(c, w)| c * trace_of_product(&prod.product(w), g).re).sum::<f64>() / nf;
                lhs - rhs
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Chain {
    pub acceptance_rate: f64,
    /// Step size after burn-in adaptation.
    pub step_size: f64,
    /// One recorded series per observable, in the order given to [`run_chains`].
    pub series: Vec<Vec<f64>>,
    /// Thinned samples with their gradients, when requested.
    pub samples: Vec<(Vec<Mat>, Vec<Mat>)>,
}

#[derive(Debug, Clone)]
pub struct ChainSet {
    pub config: ConfigEcho,
    pub observables: Vec<Observable>,
    pub chains: Vec<Chain>,
}

fn run_chain(config: &ModelConfig, model: &Model, observables: &[CompiledObservable], index: usize) -> Chain {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(index as u64));
    let d = model.d();
    let start: Vec<Mat> = (0..d).map(|_| gue_with(&mut rng, config.n)).collect();
    let start = if within_cut(&start, config.k_cut) { start } else { vec![Mat::zeros(config.n, config.n); d] };
    let mut state = ChainState::new(model, start, rng);
    let mut eps = config.step_size;
    for t in 0..config.n_burnin {
        let acc = mala_step(&mut state, model, eps, config.k_cut);
        if config.adapt {
            let rate = 0.1 / (1.0 + t as f64 / 100.0).sqrt();
            eps *= (rate * ((acc as u8 as f64) - TARGET_ACCEPTANCE)).exp();
        }
    }
    let mut accepted = 0usize;
    let mut series = vec![Vec::with_capacity(config.n_steps / config.thinning); observables.len()];
    let mut samples = Vec::new();
    for t in 0..config.n_steps {
        accepted += mala_step(&mut state, model, eps, config.k_cut) as usize;
        if (t + 1) % config.thinning == 0 {
            for (s, o) in series.iter_mut().zip(observables) {
                s.push(o.value(&state.xs, &state.grads));
            }
            if config.keep_samples {
                samples.push((state.xs.clone(), state.grads.clone()));
            }
        }
    }
    Chain {
        acceptance_rate: if config.n_steps == 0 { 0.0 } else { accepted as f64 / config.n_steps as f64 },
        step_size: eps,
        series,
        samples,
    }
}

/// Runs `config.chains` independent chains, recording each observable at every thinned step.
pub fn run_chains(config: &ModelConfig, observables: &[Observable]) -> Result<ChainSet, SamplerError> {
    config.validate()?;
    let model = Model::new(&config.potential, config.lambda);
    let compiled = observables.iter().map(CompiledObservable::new).collect::<Result<Vec<_>, _>>()?;
    let chains = exec::map((0..config.chains).collect(), |c| run_chain(config, &model, &compiled, c));
    Ok(ChainSet { config: config.echo(), observables: observables.to_vec(), chains })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub ess: f64,
}

/// Batch means with `⌊√n⌋`-sized batches.
pub fn batch_means(xs: &[f64]) -> Result<Estimate, SamplerError> {
    let n = xs.len();
    if n < MIN_SAMPLES {
        return Err(SamplerError::InsufficientSamples { have: n, need: MIN_SAMPLES });
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let b = (nf.sqrt() as usize).max(1);
    let nb = n / b;
    let bm: Vec<f64> = xs.chunks_exact(b).take(nb).map(|c| c.iter().sum::<f64>() / b as f64).collect();
    let bmean = bm.iter().sum::<f64>() / nb as f64;
    let sigma2 = b as f64 * bm.iter().map(|m| (m - bmean).powi(2)).sum::<f64>() / (nb as f64 - 1.0);
    let ess = if sigma2 > 0.0 { (nf * var / sigma2).min(nf) } else { nf };
    Ok(Estimate { mean, stderr: (sigma2 / nf).sqrt(), ess })
}

/// Combines per-chain estimates of equal weight into one.
pub fn pool(ests: &[(Estimate, usize)]) -> Estimate {
    let total: usize = ests.iter().map(|(_, n)| n).sum();
    let t = total as f64;
    let mean = ests.iter().map(|(e, n)| e.mean * *n as f64).sum::<f64>() / t;
    let var = ests.iter().map(|(e, n)| (e.stderr * *n as f64).powi(2)).sum::<f64>() / (t * t);
    Estimate { mean, stderr: var.sqrt(), ess: ests.iter().map(|(e, _)| e.ess).sum() }
}

impl ChainSet {
    fn estimate_observable(&self, o: &Observable) -> Result<Estimate, SamplerError> {
        let name = o.name();
        let series: Vec<Vec<f64>> = match self.observables.iter().position(|r| r.name() == name) {
            Some(k) => self.chains.iter().map(|c| c.series[k].clone()).collect(),
            None if self.chains.iter().any(|c| !c.samples.is_empty()) => {
                let co = CompiledObservable::new(o)?;
                self.chains.iter().map(|c| c.samples.iter().map(|(x, g)| co.value(x, g)).collect()).collect()
            }
            None => return Err(SamplerError::NotRecorded(name)),
        };
        let ests = series.iter().map(|s| Ok((batch_means(s)?, s.len()))).collect::<Result<Vec<_>, SamplerError>>()?;
        Ok(pool(&ests))
    }

    pub fn mean_acceptance(&self) -> f64 {
        self.chains.iter().map(|c| c.acceptance_rate).sum::<f64>() / self.chains.len() as f64
    }

    pub fn summary(&self) -> Result<Summary, SamplerError> {
        let observables = self
            .observables
            .iter()
            .map(|o| Ok(ObservableSummary { name: o.name(), estimate: self.estimate_observable(o)? }))
            .collect::<Result<_, SamplerError>>()?;
        Ok(Summary {
            config: self.config.clone(),
            acceptance_rate: self.chains.iter().map(|c| c.acceptance_rate).collect(),
            step_size: self.chains.iter().map(|c| c.step_size).collect(),
            observables,
        })
    }
}

/// Pooled mean and standard error of `ts P` across chains.
pub fn estimate(set: &ChainSet, p: &NCPoly) -> Result<Estimate, SamplerError> {
    set.estimate_observable(&Observable::Trace(p.clone()))
}

/// Pooled Schwinger-Dyson residual for `P` in colour `i`.
pub fn sd_residual(set: &ChainSet, p: &NCPoly, i: Color) -> Result<Estimate, SamplerError> {
    set.estimate_observable(&Observable::SdResidual(p.clone(), i))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableSummary {
    pub name: String,
    #[serde(flatten)]
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub config: ConfigEcho,
    pub acceptance_rate: Vec<f64>,
    pub step_size: Vec<f64>,
    pub observables: Vec<ObservableSummary>,
}

pub const DUMP_MAGIC: &[u8; 4] = b"MMCH";

/// Writes samples as `"MMCH"`, `N: u32`, `d: u32`, `count: u64`, then for each
/// sample and colour the `N×N` entries row-major as `(re, im)` `f64` pairs, all little-endian.
pub fn write_dump(w: &mut impl Write, samples: &[Vec<Mat>]) -> io::Result<()> {
    let (n, d) = samples.first().map(|s| (s[0].nrows(), s.len())).unwrap_or((0, 0));
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&(d as u32).to_le_bytes())?;
    w.write_all(&(samples.len() as u64).to_le_bytes())?;
    for s in samples {
        for m in s {
            for j in 0..n {
                for k in 0..n {
                    w.write_all(&m[(j, k)].re.to_le_bytes())?;
                    w.write_all(&m[(j, k)].im.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

pub fn read_dump(r: &mut impl Read) -> io::Result<Vec<Vec<Mat>>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad magic"));
    }
    let mut u32b = [0u8; 4];
    let mut u64b = [0u8; 8];
    r.read_exact(&mut u32b)?;
    let n = u32::from_le_bytes(u32b) as usize;
    r.read_exact(&mut u32b)?;
    let d = u32::from_le_bytes(u32b) as usize;
    r.read_exact(&mut u64b)?;
    let count = u64::from_le_bytes(u64b) as usize;
    let mut f = || -> io::Result<f64> {
        r.read_exact(&mut u64b)?;
        Ok(f64::from_le_bytes(u64b))
    };
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut s = Vec::with_capacity(d);
        for _ in 0..d {
            let mut m = Mat::zeros(n, n);
            for j in 0..n {
                for k in 0..n {
                    let re = f()?;
                    m[(j, k)] = C64::new(re, f()?);
                }
            }
            s.push(m);
        }
        out.push(s);
    }
    Ok(out)
}
