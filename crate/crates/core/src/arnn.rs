//! Autoregressive model for the squared Schmidt coefficients.
//!
//! Output `i` is `sigmoid(v_i · tanh(W x_{<i} + b) + c_i)`, where `x_{<i}` is the
//! input bitstring with positions `≥ i` zeroed. The model is the product of the
//! Bernoulli conditionals, so it is normalised exactly and can be sampled
//! ancestrally. Conditionals are clamped to `[ε, 1 - ε]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};

pub const DEFAULT_HIDDEN: usize = 32;
pub const DEFAULT_CLAMP: f64 = 1e-7;
pub const CHECKPOINT_VERSION: u32 = 1;

/// Largest bit count for which full enumeration is allowed.
pub const ENUMERATION_LIMIT: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct ArnnModel {
    n: usize,
    hidden: usize,
    clamp: f64,
    /// Flat layout: `W` (hidden × n, row-major), `b` (hidden), `V` (n × hidden), `c` (n).
    params: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn bit(sigma: usize, i: usize) -> bool {
    (sigma >> i) & 1 == 1
}

impl ArnnModel {
    /// Hidden weights uniform on `±1/√n`, everything else zero, which makes
    /// the initial distribution exactly uniform.
    pub fn new<R: Rng + ?Sized>(n_bits: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        let mut model = ArnnModel::zeros(n_bits, hidden)?;
        let bound = 1.0 / (n_bits as f64).sqrt();
        for w in &mut model.params[..hidden * n_bits] {
            *w = rng.gen_range(-bound..=bound);
        }
        Ok(model)
    }

    pub fn zeros(n_bits: usize, hidden: usize) -> Result<Self> {
        if n_bits == 0 || n_bits >= usize::BITS as usize {
            return Err(ForgeError::arg(format!("unsupported bit count {n_bits}")));
        }
        if hidden == 0 {
            return Err(ForgeError::arg("hidden width must be positive"));
        }
        let len = 2 * hidden * n_bits + hidden + n_bits;
        Ok(ArnnModel { n: n_bits, hidden, clamp: DEFAULT_CLAMP, params: vec![0.0; len] })
    }

    pub fn with_clamp(mut self, clamp: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&clamp) {
            return Err(ForgeError::arg(format!("clamp {clamp} outside [0, 0.5)")));
        }
        self.clamp = clamp;
        Ok(self)
    }

    pub fn n_bits(&self) -> usize {
        self.n
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn clamp(&self) -> f64 {
        self.clamp
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(ForgeError::arg(format!(
                "expected {} network parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let w = self.hidden * self.n;
        (w, w + self.hidden, w + self.hidden + self.n * self.hidden)
    }

    /// Output bias of bit `i`; used to pin models in tests and examples.
    pub fn output_bias_mut(&mut self, i: usize) -> &mut f64 {
        let (_, _, c0) = self.offsets();
        &mut self.params[c0 + i]
    }

    fn check_sigma(&self, sigma: usize) -> Result<()> {
        if self.n < usize::BITS as usize && sigma >> self.n != 0 {
            return Err(ForgeError::arg(format!("bitstring {sigma:#b} wider than {} bits", self.n)));
        }
        Ok(())
    }

    /// Walk the autoregressive chain. `visit(i, hidden, raw_prob, logit)` sees
    /// each position's hidden activations before bit `i` is folded in.
    fn forward<F: FnMut(usize, &[f64], f64)>(&self, sigma: usize, mut visit: F) {
        let (b0, v0, c0) = self.offsets();
        let h = self.hidden;
        let mut pre: Vec<f64> = self.params[b0..b0 + h].to_vec();
        let mut act = vec![0.0; h];
        for i in 0..self.n {
            for (a, p) in act.iter_mut().zip(&pre) {
                *a = p.tanh();
            }
            let v = &self.params[v0 + i * h..v0 + (i + 1) * h];
            let logit = self.params[c0 + i] + v.iter().zip(&act).map(|(a, b)| a * b).sum::<f64>();
            visit(i, &act, logit);
            if bit(sigma, i) {
                for (k, p) in pre.iter_mut().enumerate() {
                    *p += self.params[k * self.n + i];
                }
            }
        }
    }

    fn clamped(&self, logit: f64) -> (f64, bool) {
        let p = sigmoid(logit);
        if p < self.clamp {
            (self.clamp, true)
        } else if p > 1.0 - self.clamp {
            (1.0 - self.clamp, true)
        } else {
            (p, false)
        }
    }

    /// `σ̂_i = p(σ_i = 1 | σ_{<i})` for every position.
    pub fn conditionals(&self, sigma: usize) -> Result<Vec<f64>> {
        self.check_sigma(sigma)?;
        let mut out = Vec::with_capacity(self.n);
        self.forward(sigma, |_, _, logit| out.push(self.clamped(logit).0));
        Ok(out)
    }

    pub fn log_prob(&self, sigma: usize) -> Result<f64> {
        self.check_sigma(sigma)?;
        let mut lp = 0.0;
        self.forward(sigma, |i, _, logit| {
            let p = self.clamped(logit).0;
            lp += if bit(sigma, i) { p.ln() } else { (1.0 - p).ln() };
        });
        Ok(lp)
    }

    /// Schmidt coefficient `λ(σ) = √p(σ)`.
    pub fn amplitude(&self, sigma: usize) -> Result<f64> {
        Ok((0.5 * self.log_prob(sigma)?).exp())
    }

    /// `ln p(σ)` for every bitstring, in index order.
    pub fn log_probs_all(&self) -> Result<Vec<f64>> {
        self.check_enumerable()?;
        (0..1usize << self.n).map(|s| self.log_prob(s)).collect()
    }

    pub fn probabilities(&self) -> Result<Vec<f64>> {
        Ok(self.log_probs_all()?.into_iter().map(f64::exp).collect())
    }

    pub fn check_enumerable(&self) -> Result<()> {
        if self.n > ENUMERATION_LIMIT {
            return Err(ForgeError::resource(format!(
                "enumerating {} bits exceeds the limit of {ENUMERATION_LIMIT}",
                self.n
            )));
        }
        Ok(())
    }

    /// Exact ancestral samples.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Vec<usize>> {
        if count == 0 {
            return Err(ForgeError::arg("sample count must be at least 1"));
        }
        Ok((0..count).map(|_| self.sample_one(rng)).collect())
    }

    fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let (b0, v0, c0) = self.offsets();
        let h = self.hidden;
        let mut pre: Vec<f64> = self.params[b0..b0 + h].to_vec();
        let mut sigma = 0usize;
        for i in 0..self.n {
            let v = &self.params[v0 + i * h..v0 + (i + 1) * h];
            let logit = self.params[c0 + i] + v.iter().zip(&pre).map(|(w, p)| w * p.tanh()).sum::<f64>();
            let p = self.clamped(logit).0;
            if rng.gen::<f64>() < p {
                sigma |= 1 << i;
                for (k, x) in pre.iter_mut().enumerate() {
                    *x += self.params[k * self.n + i];
                }
            }
        }
        sigma
    }

    /// `R(σ, σ') = λ(σ') / λ(σ)`.
    pub fn lambda_ratio(&self, sigma: usize, sigma_prime: usize) -> Result<f64> {
        if sigma == sigma_prime {
            self.check_sigma(sigma)?;
            return Ok(1.0);
        }
        Ok((0.5 * (self.log_prob(sigma_prime)? - self.log_prob(sigma)?)).exp())
    }

    /// `∇_θ ln p(σ)` by explicit backpropagation through the chain.
    pub fn grad_log_prob(&self, sigma: usize) -> Result<Vec<f64>> {
        self.check_sigma(sigma)?;
        let (b0, v0, c0) = self.offsets();
        let (n, h) = (self.n, self.hidden);
        let mut grad = vec![0.0; self.params.len()];
        self.forward(sigma, |i, act, logit| {
            let (p, saturated) = self.clamped(logit);
            if saturated {
                return;
            }
            // d/dlogit of the Bernoulli log-likelihood
            let delta = if bit(sigma, i) { 1.0 - p } else { -p };
            grad[c0 + i] += delta;
            let v = &self.params[v0 + i * h..v0 + (i + 1) * h];
            for k in 0..h {
                grad[v0 + i * h + k] += delta * act[k];
                let back = delta * v[k] * (1.0 - act[k] * act[k]);
                grad[b0 + k] += back;
                for j in (0..i).filter(|&j| bit(sigma, j)) {
                    grad[k * n + j] += back;
                }
            }
        });
        Ok(grad)
    }

    /// `∇_θ R(σ, σ') = R · ½ (∇ ln p(σ') - ∇ ln p(σ))`.
    pub fn grad_lambda_ratio(&self, sigma: usize, sigma_prime: usize) -> Result<Vec<f64>> {
        if sigma == sigma_prime {
            self.check_sigma(sigma)?;
            return Ok(vec![0.0; self.params.len()]);
        }
        let r = self.lambda_ratio(sigma, sigma_prime)?;
        let gp = self.grad_log_prob(sigma_prime)?;
        let g = self.grad_log_prob(sigma)?;
        Ok(gp.iter().zip(&g).map(|(a, b)| 0.5 * r * (a - b)).collect())
    }

    pub fn to_checkpoint(&self) -> ArnnCheckpoint {
        ArnnCheckpoint {
            format_version: CHECKPOINT_VERSION,
            n_bits: self.n,
            hidden: self.hidden,
            clamp: self.clamp,
            params: self.params.clone(),
        }
    }

    pub fn from_checkpoint(ckpt: &ArnnCheckpoint) -> Result<Self> {
        if ckpt.format_version != CHECKPOINT_VERSION {
            return Err(ForgeError::Format(format!(
                "network checkpoint version {} (expected {CHECKPOINT_VERSION})",
                ckpt.format_version
            )));
        }
        let mut model = ArnnModel::zeros(ckpt.n_bits, ckpt.hidden)?.with_clamp(ckpt.clamp)?;
        model
            .set_params(&ckpt.params)
            .map_err(|e| ForgeError::Format(e.to_string()))?;
        Ok(model)
    }
}

/// On-disk form of the network: header fields plus the flat parameter array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArnnCheckpoint {
    pub format_version: u32,
    pub n_bits: usize,
    pub hidden: usize,
    pub clamp: f64,
    pub params: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_model(n: usize, hidden: usize, seed: u64) -> ArnnModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = ArnnModel::new(n, hidden, &mut rng).unwrap();
        for p in m.params_mut() {
            *p = rng.gen_range(-1.5..1.5);
        }
        m
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = ArnnModel::zeros(4, 8).unwrap();
        assert_eq!(m.conditionals(0b1011).unwrap(), vec![0.5; 4]);
        for s in 0..16 {
            assert!((m.log_prob(s).unwrap() - (1.0f64 / 16.0).ln()).abs() < 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let fresh = ArnnModel::new(4, 8, &mut rng).unwrap();
        assert_eq!(fresh.conditionals(0b0110).unwrap(), vec![0.5; 4]);
    }

    #[test]
    fn last_bit_never_feeds_conditionals() {
        let m = random_model(5, 6, 1);
        for s in 0..16 {
            assert_eq!(m.conditionals(s).unwrap(), m.conditionals(s | 1 << 4).unwrap());
        }
    }

    #[test]
    fn normalisation_by_enumeration() {
        for n in [4, 8] {
            let m = random_model(n, 7, n as u64);
            let total: f64 = m.probabilities().unwrap().iter().sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn log_prob_is_chain_rule_product() {
        let m = random_model(6, 5, 3);
        for s in [0, 17, 42, 63] {
            let cond = m.conditionals(s).unwrap();
            let direct: f64 = cond
                .iter()
                .enumerate()
                .map(|(i, &p)| if bit(s, i) { p } else { 1.0 - p })
                .product();
            assert!((m.log_prob(s).unwrap() - direct.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn pinned_model_samples_all_ones() {
        let mut m = ArnnModel::zeros(5, 4).unwrap();
        for i in 0..5 {
            *m.output_bias_mut(i) = 60.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(m.sample(200, &mut rng).unwrap().iter().all(|&s| s == 0b11111));
        assert!(m.sample(0, &mut rng).is_err());
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let m = ArnnModel::zeros(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let draws = m.sample(100_000, &mut rng).unwrap();
        for k in 0..4 {
            let f = draws.iter().filter(|&&s| s == k).count() as f64 / 1e5;
            assert!((f - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn sampling_chi_square() {
        const CHI2_15_999: f64 = 37.697;
        let m = random_model(4, 6, 12);
        let probs = m.probabilities().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let draws = m.sample(100_000, &mut rng).unwrap();
        let mut counts = [0usize; 16];
        for d in draws {
            counts[d] += 1;
        }
        let chi2: f64 = probs
            .iter()
            .zip(counts)
            .filter(|(p, _)| **p * 1e5 > 5.0)
            .map(|(p, c)| (c as f64 - p * 1e5).powi(2) / (p * 1e5))
            .sum();
        assert!(chi2 < CHI2_15_999, "χ² = {chi2}");
    }

    #[test]
    fn ratio_identities() {
        let m = random_model(4, 5, 7);
        assert_eq!(m.lambda_ratio(3, 3).unwrap(), 1.0);
        let z = ArnnModel::zeros(4, 5).unwrap();
        assert!((z.lambda_ratio(1, 14).unwrap() - 1.0).abs() < 1e-15);
        for (a, b) in [(0, 15), (3, 9), (7, 8)] {
            let r = m.lambda_ratio(a, b).unwrap() * m.lambda_ratio(b, a).unwrap();
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn score_has_zero_mean() {
        let m = random_model(4, 6, 8);
        let probs = m.probabilities().unwrap();
        let mut mean = vec![0.0; m.n_params()];
        for (s, p) in probs.iter().enumerate() {
            for (acc, g) in mean.iter_mut().zip(m.grad_log_prob(s).unwrap()) {
                *acc += p * g;
            }
        }
        assert!(mean.iter().all(|v| v.abs() < 1e-10));
    }

    fn finite_difference<F: Fn(&ArnnModel) -> f64>(m: &ArnnModel, h: f64, f: F) -> Vec<f64> {
        let mut probe = m.clone();
        (0..m.n_params())
            .map(|k| {
                let orig = m.params[k];
                probe.params[k] = orig + h;
                let a = f(&probe);
                probe.params[k] = orig - h;
                let b = f(&probe);
                probe.params[k] = orig;
                (a - b) / (2.0 * h)
            })
            .collect()
    }

    fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
        a.iter().zip(b).map(|(x, y)| (x - y).abs() / scale).fold(0.0, f64::max)
    }

    #[test]
    fn grad_log_prob_matches_finite_difference() {
        for seed in 0..4 {
            let m = random_model(5, 6, 100 + seed);
            let s = (seed as usize * 7) % 32;
            let g = m.grad_log_prob(s).unwrap();
            let fd = finite_difference(&m, 1e-6, |mm| mm.log_prob(s).unwrap());
            assert!(max_rel_err(&g, &fd) < 1e-4);
        }
    }

    #[test]
    fn zero_model_output_bias_gradient() {
        let m = ArnnModel::zeros(4, 3).unwrap();
        let s = 0b0110;
        let g = m.grad_log_prob(s).unwrap();
        let (_, _, c0) = m.offsets();
        let expected: Vec<f64> = (0..4).map(|i| if bit(s, i) { 0.5 } else { -0.5 }).collect();
        assert_eq!(&g[c0..], &expected[..]);
    }

    #[test]
    fn grad_ratio_matches_finite_difference() {
        let m = random_model(4, 5, 31);
        let zero = m.grad_lambda_ratio(6, 6).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        for (a, b) in [(0, 5), (9, 2), (15, 1)] {
            let g = m.grad_lambda_ratio(a, b).unwrap();
            let fd = finite_difference(&m, 1e-6, |mm| mm.lambda_ratio(a, b).unwrap());
            assert!(max_rel_err(&g, &fd) < 1e-4);
            let r = m.lambda_ratio(a, b).unwrap();
            let swapped = m.grad_lambda_ratio(b, a).unwrap();
            for (x, y) in g.iter().zip(&swapped) {
                assert!((x + r * r * y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = random_model(4, 3, 44);
        let text = serde_json::to_string(&m.to_checkpoint()).unwrap();
        let back = ArnnModel::from_checkpoint(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, m);
        let mut bad = m.to_checkpoint();
        bad.format_version = 99;
        assert!(ArnnModel::from_checkpoint(&bad).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]
            #[test]
            fn masking_holds(seed in 0u64..1000, sigma in 0usize..256, j in 0usize..8, flips in 1usize..256) {
                let m = random_model(8, 5, seed);
                let perturbed = sigma ^ ((flips << j) & 0xff);
                let lowest = (sigma ^ perturbed).trailing_zeros() as usize;
                let a = m.conditionals(sigma).unwrap();
                let b = m.conditionals(perturbed).unwrap();
                for i in 0..=lowest.min(7) {
                    prop_assert_eq!(a[i], b[i]);
                }
            }

            #[test]
            fn amplitudes_bounded_below(seed in 0u64..1000) {
                let m = random_model(4, 4, seed);
                for s in 0..16 {
                    prop_assert!(m.amplitude(s).unwrap() >= DEFAULT_CLAMP.powf(2.0));
                }
            }
        }
    }
}
