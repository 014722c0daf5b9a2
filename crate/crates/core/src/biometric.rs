//! Synthetic biometric sources with Bernoulli capture noise.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};

pub type Template = BitString;

pub const DEFAULT_FEATURE_MAX: u64 = 255;

pub fn hamming(a: &Template, b: &Template) -> Result<usize> {
    a.hamming(b)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiometricSource {
    noise_prob: f64,
    #[serde(rename = "users")]
    truths: BTreeMap<usize, Template>,
}

impl BiometricSource {
    /// `users` independent uniform templates of length `m`.
    pub fn generate<R: Rng + ?Sized>(users: usize, m: usize, noise_prob: f64, rng: &mut R) -> Result<Self> {
        let truths = (0..users).map(|i| (i, BitString::random(m, rng))).collect();
        Self::from_templates(truths, noise_prob)
    }

    pub fn from_templates(truths: BTreeMap<usize, Template>, noise_prob: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&noise_prob) {
            return Err(Error::InvalidParams(format!("noise probability {noise_prob} not in [0, 0.5)")));
        }
        let mut lens = truths.values().map(BitString::len);
        if let Some(first) = lens.next() {
            if let Some(other) = lens.find(|&l| l != first) {
                return Err(Error::LengthMismatch { expected: first, actual: other });
            }
        }
        Ok(BiometricSource { noise_prob, truths })
    }

    pub fn noise_prob(&self) -> f64 {
        self.noise_prob
    }

    pub fn users(&self) -> usize {
        self.truths.len()
    }

    pub fn template_len(&self) -> usize {
        self.truths.values().next().map_or(0, BitString::len)
    }

    pub fn user_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.truths.keys().copied()
    }

    pub fn ground_truth(&self, user: usize) -> Result<&Template> {
        self.truths.get(&user).ok_or(Error::UnknownUser(user))
    }

    /// Fresh noisy reading of `user`.
    pub fn capture<R: Rng + ?Sized>(&self, user: usize, rng: &mut R) -> Result<Template> {
        let truth = self.ground_truth(user)?;
        let p = self.noise_prob;
        Ok(truth.iter().map(|b| b ^ (p > 0.0 && rng.gen_bool(p))).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BiometricSource = serde_json::from_str(text)?;
        Self::from_templates(raw.truths, raw.noise_prob)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub fmr: f64,
    pub fnmr: f64,
}

/// Monte Carlo rates against enrolled references (the ground truths): FNMR from fresh
/// captures of the same user, FMR from captures of a different user.
pub fn estimate_rates<R: Rng + ?Sized>(
    source: &BiometricSource,
    threshold: usize,
    trials: usize,
    rng: &mut R,
) -> Result<ErrorRates> {
    if trials == 0 {
        return Err(Error::InvalidParams("need at least one trial".into()));
    }
    let ids: Vec<usize> = source.user_ids().collect();
    if ids.is_empty() {
        return Err(Error::InvalidParams("empty population".into()));
    }
    let mut false_match = 0usize;
    let mut impostor_trials = 0usize;
    let mut false_non_match = 0usize;
    for _ in 0..trials {
        let u = ids[rng.gen_range(0..ids.len())];
        let reference = source.ground_truth(u)?;
        let b = source.capture(u, rng)?;
        if hamming(reference, &b)? > threshold {
            false_non_match += 1;
        }
        if ids.len() > 1 {
            let v = loop {
                let v = ids[rng.gen_range(0..ids.len())];
                if v != u {
                    break v;
                }
            };
            let c = source.capture(v, rng)?;
            impostor_trials += 1;
            if hamming(reference, &c)? <= threshold {
                false_match += 1;
            }
        }
    }
    Ok(ErrorRates {
        fmr: if impostor_trials == 0 { 0.0 } else { false_match as f64 / impostor_trials as f64 },
        fnmr: false_non_match as f64 / trials as f64,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<u64>);

impl FeatureVector {
    pub fn random<R: Rng + ?Sized>(k: usize, feature_max: u64, rng: &mut R) -> Self {
        FeatureVector((0..k).map(|_| rng.gen_range(0..=feature_max)).collect())
    }

    /// Copy with each feature moved by at most `delta`, clamped to the range.
    pub fn perturbed<R: Rng + ?Sized>(&self, delta: u64, feature_max: u64, rng: &mut R) -> Self {
        if delta == 0 {
            return self.clone();
        }
        FeatureVector(
            self.0
                .iter()
                .map(|&v| {
                    let d = rng.gen_range(-(delta as i64)..=delta as i64);
                    (v as i64 + d).clamp(0, feature_max as i64) as u64
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
