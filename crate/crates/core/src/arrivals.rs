//! Finite-support IID arrival model.
//!
//! Each period one resource arrives whose marginal-utility vector is one of
//! `L` known types `β_ℓ ∈ [0,1]^n`, drawn with probability `p_ℓ`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrivalDistribution {
    support: Vec<Vec<f64>>,
    probs: Vec<f64>,
    #[serde(skip)]
    cdf: Vec<f64>,
}

impl ArrivalDistribution {
    pub fn new(support: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        if let Some(v) = validate(&support, &probs) {
            return Err(Error::InvalidDistribution(v.message));
        }
        let cdf = cumulative(&probs);
        Ok(Self {
            support,
            probs,
            cdf,
        })
    }

    /// Parses the `{"support": [[…] × L], "probs": […]}` format. Errors carry
    /// the line of the offending entry.
    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            support: Vec<Vec<f64>>,
            probs: Vec<f64>,
        }
        let raw: Raw = serde_json::from_str(text).map_err(|e| {
            Error::InvalidDistribution(format!("line {}: {e}", e.line()))
        })?;
        match validate(&raw.support, &raw.probs) {
            None => Self::new(raw.support, raw.probs),
            Some(v) => {
                let line = locate(text, v.key, &v.path).unwrap_or(1);
                Err(Error::InvalidDistribution(format!("line {line}: {}", v.message)))
            }
        }
    }

    pub fn from_json_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidDistribution(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain numeric data serializes")
    }

    pub fn types(&self) -> usize {
        self.probs.len()
    }

    pub fn agents(&self) -> usize {
        self.support[0].len()
    }

    pub fn support(&self) -> &[Vec<f64>] {
        &self.support
    }

    pub fn utilities(&self, ty: usize) -> &[f64] {
        &self.support[ty]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Inverse-CDF draw of one type index from a single uniform.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cdf.len() - 1)
    }
}

struct Violation {
    key: &'static str,
    path: Vec<usize>,
    message: String,
}

fn validate(support: &[Vec<f64>], probs: &[f64]) -> Option<Violation> {
    let bad = |key, path: Vec<usize>, message: String| Some(Violation { key, path, message });
    if support.is_empty() {
        return bad("support", vec![], "support must contain at least one type".into());
    }
    let n = support[0].len();
    if n == 0 {
        return bad("support", vec![0], "types must have at least one agent".into());
    }
    for (l, row) in support.iter().enumerate() {
        if row.len() != n {
            return bad(
                "support",
                vec![l],
                format!("support[{l}] has {} entries, expected {n}", row.len()),
            );
        }
        for (i, &b) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&b) {
                return bad(
                    "support",
                    vec![l, i],
                    format!("support[{l}][{i}] = {b} lies outside [0, 1]"),
                );
            }
        }
    }
    if probs.len() != support.len() {
        return bad(
            "probs",
            vec![],
            format!("{} probabilities for {} types", probs.len(), support.len()),
        );
    }
    for (l, &p) in probs.iter().enumerate() {
        if !(p > 0.0 && p <= 1.0) {
            return bad(
                "probs",
                vec![l],
                format!("probs[{l}] = {p} must lie in (0, 1]"),
            );
        }
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_SUM_TOL {
        return bad("probs", vec![], format!("probabilities sum to {total}, not 1"));
    }
    None
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    // absorb rounding so the last bucket always catches u < 1
    *cdf.last_mut().unwrap() = f64::INFINITY;
    cdf
}

/// Line number (1-based) of `"key"`'s value, descending into nested array
/// elements by `path`. Returns `None` if the text does not have that shape.
fn locate(text: &str, key: &str, path: &[usize]) -> Option<usize> {
    let bytes = text.as_bytes();
    let needle = format!("\"{key}\"");
    let mut pos = text.find(&needle)? + needle.len();
    pos += text[pos..].find(':')? + 1;
    for &target in path {
        // skip to the opening bracket of the current array
        pos += text[pos..].find('[')? + 1;
        let mut depth = 0usize;
        let mut index = 0usize;
        let mut in_string = false;
        while index < target {
            let c = *bytes.get(pos)?;
            match c {
                b'"' => in_string = !in_string,
                b'\\' if in_string => pos += 1,
                b'[' | b'{' if !in_string => depth += 1,
                b']' | b'}' if !in_string => {
                    if depth == 0 {
                        return None;
                    }
                    depth -= 1;
                }
                b',' if !in_string && depth == 0 => index += 1,
                _ => {}
            }
            pos += 1;
        }
        while bytes.get(pos)?.is_ascii_whitespace() {
            pos += 1;
        }
    }
    while bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        pos += 1;
    }
    Some(text[..pos].matches('\n').count() + 1)
}

/// Realized arrival types `b_1 … b_T` as indices into the support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrivalSequence {
    types: Vec<usize>,
}

impl ArrivalSequence {
    pub fn new(types: Vec<usize>) -> Self {
        Self { types }
    }

    pub fn horizon(&self) -> usize {
        self.types.len()
    }

    pub fn types(&self) -> &[usize] {
        &self.types
    }

    pub fn prefix(&self, t: usize) -> ArrivalSequence {
        Self::new(self.types[..t].to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypeCounts {
    counts: Vec<u64>,
}

impl TypeCounts {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn as_weights(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }
}

/// Key of one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    /// ChaCha8 keyed by the master seed; the stream index selects the
    /// 64-bit stream id, so distinct indices never overlap.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// A fresh master seed for an independent family of streams, e.g. the
    /// trajectories of instance `domain`.
    pub fn derive(master_seed: u64, domain: u64) -> u64 {
        splitmix64(splitmix64(master_seed) ^ domain.wrapping_mul(0xD6E8_FEB8_6659_FD93))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn sample_sequence(dist: &ArrivalDistribution, horizon: usize, seed: SeedSpec) -> ArrivalSequence {
    let mut rng = seed.rng();
    ArrivalSequence::new((0..horizon).map(|_| dist.draw(&mut rng)).collect())
}

pub fn count_types(seq: &ArrivalSequence, types: usize) -> Result<TypeCounts> {
    let mut counts = vec![0u64; types];
    for (t, &ty) in seq.types().iter().enumerate() {
        match counts.get_mut(ty) {
            Some(c) => *c += 1,
            None => {
                return Err(Error::CorruptSequence {
                    period: t + 1,
                    index: ty,
                    types,
                })
            }
        }
    }
    Ok(TypeCounts::new(counts))
}

/// Monte Carlo estimate of `E|N − T/2| / √T` for `N ~ Bin(T, 1/2)`.
pub fn binomial_abs_deviation(horizon: u64, reps: u64, seed: SeedSpec) -> Result<f64> {
    if horizon == 0 || reps == 0 {
        return Err(Error::InvalidArgument(
            "binomial deviation needs T ≥ 1 and reps ≥ 1".into(),
        ));
    }
    let mut rng = seed.rng();
    let words = horizon / 64;
    let rest = horizon % 64;
    let half = horizon as f64 / 2.0;
    let mut acc = 0.0;
    for _ in 0..reps {
        let mut heads: u64 = (0..words).map(|_| rng.next_u64().count_ones() as u64).sum();
        if rest > 0 {
            heads += (rng.next_u64() & ((1u64 << rest) - 1)).count_ones() as u64;
        }
        acc += (heads as f64 - half).abs();
    }
    Ok(acc / reps as f64 / (horizon as f64).sqrt())
}

/// Gamma(shape, 1) by Marsaglia–Tsang, boosted by `U^{1/shape}` when shape < 1.
pub fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let u: f64 = rng.random();
        return sample_gamma(rng, shape + 1.0) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.random();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

pub fn sample_beta<R: Rng + ?Sized>(rng: &mut R, alpha: f64, beta: f64) -> f64 {
    let x = sample_gamma(rng, alpha);
    let y = sample_gamma(rng, beta);
    if x + y == 0.0 {
        // both gammas underflowed (tiny shapes); fall back to a fair coin
        return if rng.random::<bool>() { 1.0 } else { 0.0 };
    }
    x / (x + y)
}

/// Uniform point on the probability simplex via normalized exponentials.
pub fn sample_simplex<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..dim)
        .map(|_| {
            // (0, 1] keeps the logarithm finite
            let u: f64 = 1.0 - rng.random::<f64>();
            -u.ln()
        })
        .collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|e| e / total).collect()
}

/// Random instance with `p ~ Unif(Δ_L)` and `β_ℓⁱ ~ Beta(α, β)` i.i.d.
pub fn random_distribution<R: Rng + ?Sized>(
    rng: &mut R,
    agents: usize,
    types: usize,
    alpha: f64,
    beta: f64,
) -> Result<ArrivalDistribution> {
    if agents == 0 || types == 0 || !(alpha > 0.0) || !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "random instance needs n, L ≥ 1 and positive Beta parameters (got n={agents}, L={types}, α={alpha}, β={beta})"
        )));
    }
    let mut probs = sample_simplex(rng, types);
    // a draw can underflow to exactly 0 only with negligible probability
    for p in probs.iter_mut() {
        *p = p.max(f64::MIN_POSITIVE);
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    let support = (0..types)
        .map(|_| (0..agents).map(|_| sample_beta(rng, alpha, beta)).collect())
        .collect();
    ArrivalDistribution::new(support, probs)
}
