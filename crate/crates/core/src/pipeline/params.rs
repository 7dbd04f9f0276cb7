//! Receiver structure and its trainable scalars.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detect::DetectorKind;
use crate::error::{config, input, Result};
use crate::ldpc::{DampingParams, DampingPolicy};
use crate::numkit::Real;

/// Which channel the receiver works with.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsiMode {
    /// The true channel.
    #[default]
    Perfect,
    /// Least-squares pilot estimates with the error folded into the noise.
    Estimated,
}

/// Alternating detector/decoder stages: stage `i` detects once and then runs
/// `iters[i]` decoder iterations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub detector: DetectorKind,
    #[serde(rename = "N_i")]
    pub iters: Vec<usize>,
    #[serde(default)]
    pub csi: CsiMode,
}

impl PipelineSpec {
    pub fn new(detector: DetectorKind, iters: Vec<usize>) -> Result<Self> {
        let s = PipelineSpec { detector, iters, csi: CsiMode::Perfect };
        s.validate()?;
        Ok(s)
    }

    /// `stages` stages sharing `n_mp` decoder iterations evenly.
    pub fn even(detector: DetectorKind, stages: usize, n_mp: usize) -> Result<Self> {
        if stages == 0 || !n_mp.is_multiple_of(stages) {
            return Err(config(format!("{n_mp} iterations cannot be split evenly over {stages} stages")));
        }
        Self::new(detector, vec![n_mp / stages; stages])
    }

    pub fn with_csi(mut self, csi: CsiMode) -> Self {
        self.csi = csi;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.iters.is_empty() {
            return Err(config("pipeline needs at least one stage"));
        }
        if self.iters.contains(&0) {
            return Err(config("every stage needs at least one decoder iteration"));
        }
        Ok(())
    }

    /// Number of detector stages `I`.
    pub fn stages(&self) -> usize {
        self.iters.len()
    }

    /// Total decoder iterations `N_MP`.
    pub fn n_mp(&self) -> usize {
        self.iters.iter().sum()
    }

    /// Short label, e.g. `mmse-pic_I2_6-6_perfect`.
    pub fn id(&self) -> String {
        let n: Vec<String> = self.iters.iter().map(|n| n.to_string()).collect();
        let csi = match self.csi {
            CsiMode::Perfect => "perfect",
            CsiMode::Estimated => "estimated",
        };
        format!("{}_I{}_{}_{csi}", self.detector, self.stages(), n.join("-"))
    }
}

/// Receiver scalars in evaluation form, generic over the scalar type so
/// that gradients can flow through them.
#[derive(Clone, Debug, PartialEq)]
pub struct Params<T: Real> {
    /// Scales the decoder APP LLRs fed to detector `i` (unused for `i = 0`).
    pub alpha: Vec<T>,
    /// Scales the decoder priors subtracted from them.
    pub beta: Vec<T>,
    /// Scales the detector output fed to the decoder.
    pub delta: Vec<T>,
    /// Scales the detector priors subtracted from it.
    pub epsilon: Vec<T>,
    /// LoCo-PIC interpolation weight per stage.
    pub zeta: Vec<T>,
    /// `gamma[i]` scales decoder messages entering stage `i + 1`.
    pub gamma: Vec<T>,
    pub mu: Vec<T>,
    pub xi: Vec<T>,
}

impl<T: Real> Params<T> {
    /// Splits a flat vector ordered `alpha, beta, delta, epsilon, zeta`
    /// (`I` each), `gamma` (`I - 1`), `mu`, `xi` (`N_MP` each).
    pub fn from_flat(spec: &PipelineSpec, flat: &[T]) -> Result<Self> {
        let (i, n) = (spec.stages(), spec.n_mp());
        if flat.len() != flat_len(spec) {
            return Err(config(format!("expected {} parameters, got {}", flat_len(spec), flat.len())));
        }
        let mut it = flat.iter().copied();
        let mut take = |k: usize| -> Vec<T> { it.by_ref().take(k).collect() };
        Ok(Params {
            alpha: take(i),
            beta: take(i),
            delta: take(i),
            epsilon: take(i),
            zeta: take(i),
            gamma: take(i - 1),
            mu: take(n),
            xi: take(n),
        })
    }

    pub fn damping(&self) -> DampingParams<T> {
        DampingParams { mu: self.mu.clone(), xi: self.xi.clone(), policy: DampingPolicy::Raw }
    }

    pub fn check(&self, spec: &PipelineSpec) -> Result<()> {
        let (i, n) = (spec.stages(), spec.n_mp());
        let ok = [&self.alpha, &self.beta, &self.delta, &self.epsilon, &self.zeta].iter().all(|v| v.len() == i)
            && self.gamma.len() == i - 1
            && self.mu.len() == n
            && self.xi.len() == n;
        if !ok {
            return Err(config(format!("parameters are not dimensioned for {} stages and {n} iterations", i)));
        }
        Ok(())
    }
}

/// Number of scalars in the flat parameter vector of `spec`.
pub fn flat_len(spec: &PipelineSpec) -> usize {
    6 * spec.stages() - 1 + 2 * spec.n_mp()
}

/// Names of the flat parameter coordinates, e.g. `alpha[0]`.
pub fn flat_names(spec: &PipelineSpec) -> Vec<String> {
    let (i, n) = (spec.stages(), spec.n_mp());
    let mut out = Vec::with_capacity(flat_len(spec));
    for (name, k) in
        [("alpha", i), ("beta", i), ("delta", i), ("epsilon", i), ("zeta", i), ("gamma", i - 1), ("mu", n), ("xi", n)]
    {
        out.extend((0..k).map(|j| format!("{name}[{j}]")));
    }
    out
}

/// Persistent form of a receiver: structure plus every scalar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperParamSet {
    pub detector: DetectorKind,
    #[serde(rename = "I")]
    pub stages: usize,
    #[serde(rename = "N_i")]
    pub iters: Vec<usize>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub delta: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub zeta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub mu: Vec<f64>,
    pub xi: Vec<f64>,
    #[serde(default)]
    pub trained_at: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub csi: CsiMode,
}

/// Classical IDD settings: intrinsic feedback into the detector (`alpha = 1`,
/// `beta = 0`), detector output passed straight to the decoder, messages
/// kept across stages and no damping.
pub fn classical_init(spec: &PipelineSpec) -> HyperParamSet {
    let (i, n) = (spec.stages(), spec.n_mp());
    let mut zeta = vec![0.5; i];
    zeta[0] = 1.0;
    HyperParamSet {
        detector: spec.detector,
        stages: i,
        iters: spec.iters.clone(),
        alpha: vec![1.0; i],
        beta: vec![0.0; i],
        delta: vec![1.0; i],
        epsilon: vec![0.0; i],
        zeta,
        gamma: vec![1.0; i - 1],
        mu: vec![0.0; n],
        xi: vec![0.0; n],
        trained_at: None,
        seed: None,
        csi: spec.csi,
    }
}

impl HyperParamSet {
    pub fn spec(&self) -> PipelineSpec {
        PipelineSpec { detector: self.detector, iters: self.iters.clone(), csi: self.csi }
    }

    /// Extrinsic exchange in both directions (`alpha = beta = delta = 1`, `epsilon = 0`).
    pub fn with_extrinsic_feedback(mut self) -> Self {
        self.beta.iter_mut().for_each(|b| *b = 1.0);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.spec();
        spec.validate()?;
        if self.stages != spec.stages() {
            return Err(config(format!("I = {} but N_i has {} entries", self.stages, spec.stages())));
        }
        Params::from_flat(&spec, &self.flat())?.check(&spec)?;
        if self.flat().iter().any(|x| !x.is_finite()) {
            return Err(config("parameters must be finite"));
        }
        Ok(())
    }

    pub fn flat(&self) -> Vec<f64> {
        [&self.alpha, &self.beta, &self.delta, &self.epsilon, &self.zeta, &self.gamma, &self.mu, &self.xi]
            .into_iter()
            .flatten()
            .copied()
            .collect()
    }

    /// Replaces every scalar from a flat vector (see [`Params::from_flat`]).
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        let p = Params::from_flat(&self.spec(), flat)?;
        self.alpha = p.alpha;
        self.beta = p.beta;
        self.delta = p.delta;
        self.epsilon = p.epsilon;
        self.zeta = p.zeta;
        self.gamma = p.gamma;
        self.mu = p.mu;
        self.xi = p.xi;
        Ok(())
    }

    pub fn params<T: Real>(&self) -> Params<T> {
        let flat: Vec<T> = self.flat().into_iter().map(T::cst).collect();
        Params::from_flat(&self.spec(), &flat).expect("validated dimensions")
    }

    /// Moves every damping pair `(mu_j, xi_j)` into `mu, xi >= 0`, `mu + xi <= 1`.
    pub fn project(&mut self) {
        for (m, x) in self.mu.iter_mut().zip(self.xi.iter_mut()) {
            (*m, *x) = project_damping(*m, *x);
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| input(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut p: HyperParamSet =
            serde_json::from_str(text).map_err(|e| input(format!("hyperparameter file: {e}")))?;
        p.validate()?;
        p.project();
        Ok(p)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Projection onto the triangle `mu, xi >= 0`, `mu + xi <= 1`.
pub fn project_damping(mu: f64, xi: f64) -> (f64, f64) {
    let (m, x) = (mu.max(0.0), xi.max(0.0));
    if m + x <= 1.0 {
        return (m, x);
    }
    let t = ((m - x + 1.0) / 2.0).clamp(0.0, 1.0);
    (t, 1.0 - t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classical_init_values() {
        let spec = PipelineSpec::even(DetectorKind::MmsePic, 2, 12).unwrap();
        let p = classical_init(&spec);
        assert_eq!((p.alpha.clone(), p.beta.clone()), (vec![1.0, 1.0], vec![0.0, 0.0]));
        assert_eq!((p.delta.clone(), p.epsilon.clone()), (vec![1.0, 1.0], vec![0.0, 0.0]));
        assert_eq!(p.gamma, vec![1.0]);
        assert_eq!(p.zeta, vec![1.0, 0.5]);
        assert_eq!((p.mu.len(), p.xi.len()), (12, 12));
        assert!(p.mu.iter().chain(&p.xi).all(|x| *x == 0.0));
        assert_eq!(p.flat().len(), flat_len(&spec));
        assert_eq!(flat_names(&spec).len(), 35);
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let spec = PipelineSpec::even(DetectorKind::LocoPic, 3, 12).unwrap();
        let mut p = classical_init(&spec);
        p.alpha[1] = 0.123_456_789_012_345_68;
        p.mu[3] = 1.0 / 3.0;
        p.seed = Some(7);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        p.save(&path).unwrap();
        assert_eq!(HyperParamSet::load(&path).unwrap(), p);
        let v: serde_json::Value = serde_json::from_str(&p.to_json().unwrap()).unwrap();
        for key in ["detector", "I", "N_i", "alpha", "beta", "delta", "epsilon", "zeta", "gamma", "mu", "xi", "trained_at", "seed"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["detector"], "loco-pic");
    }

    #[test]
    fn flat_roundtrip_and_dimension_errors() {
        let spec = PipelineSpec::new(DetectorKind::MmsePic, vec![4, 8]).unwrap();
        let mut p = classical_init(&spec);
        let flat: Vec<f64> = (0..flat_len(&spec)).map(|k| k as f64).collect();
        p.set_flat(&flat).unwrap();
        assert_eq!(p.flat(), flat);
        assert_eq!(p.gamma, vec![10.0]);
        assert!(p.set_flat(&flat[1..]).is_err());
        let mut bad = classical_init(&spec);
        bad.mu.pop();
        assert!(matches!(bad.validate(), Err(crate::Error::Config(_))));
        assert!(PipelineSpec::new(DetectorKind::Lmmse, vec![]).is_err());
        assert!(PipelineSpec::new(DetectorKind::Lmmse, vec![3, 0]).is_err());
        assert!(PipelineSpec::even(DetectorKind::Lmmse, 5, 12).is_err());
    }

    #[test]
    fn damping_projection() {
        assert_eq!(project_damping(0.2, 0.3), (0.2, 0.3));
        assert_eq!(project_damping(-0.1, 0.3), (0.0, 0.3));
        let (m, x) = project_damping(0.8, 0.6);
        assert!((m - 0.6).abs() < 1e-15 && m + x == 1.0);
        assert_eq!(project_damping(1.5, -1.0), (1.0, 0.0));
    }

    #[test]
    fn spec_ids() {
        let s = PipelineSpec::even(DetectorKind::Lmmse, 1, 12).unwrap();
        assert_eq!(s.id(), "lmmse_I1_12_perfect");
        assert_eq!(s.with_csi(CsiMode::Estimated).id(), "lmmse_I1_12_estimated");
    }
}
