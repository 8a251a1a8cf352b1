//! Experiment configuration: JSON input, per-experiment defaults, command
//! line overrides and validation.

use crate::Experiment;
use hyperhol::connections::BundleKind;
use hyperhol::error::{HyperholError, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A named connection constructor with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "constructor", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConnectionSpec {
    /// The trivial connection `d`.
    Zero,
    /// A flat connection with holonomy `A = Σ θ_μ X dx_μ`.
    ConstantCommuting {
        /// Holonomy angles per coordinate direction.
        theta: [f64; 4],
    },
    /// `A = X dx₁ + Y dx₂` for skew-Hermitian `X, Y` given as rows of
    /// `[re, im]` pairs.
    ConstantNoncommuting {
        /// Coefficient of `dx₁`.
        x: Vec<Vec<[f64; 2]>>,
        /// Coefficient of `dx₂`.
        y: Vec<Vec<[f64; 2]>>,
    },
    /// Gaussian Hermitian potential on frequencies `‖k‖_∞ ≤ bandwidth`,
    /// seeded by the experiment seed.
    SeededRandom {
        /// Frequency bandwidth of the potential.
        bandwidth: i32,
        /// Overall scale.
        amplitude: f64,
    },
    /// A connection in the library's JSON format.
    File {
        /// Path of the JSON file.
        path: String,
    },
}

/// Pass thresholds.  Upper-bound tolerances are multiplied by `scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Multiplier applied to every upper-bound tolerance.
    pub scale: f64,
    /// Operator identities (relative residuals).
    pub identity: f64,
    /// Pointwise Bogomolov–Gieseker relations (relative to `‖Θ‖²`).
    pub bg: f64,
    /// Deformation series invariants and the deformation equation.
    pub deformation: f64,
    /// Agreement of the two residual formulations.
    pub agreement: f64,
    /// Bound on `‖η‖ / ‖ρ‖` in the smallest amplitude decade.
    pub norm_bound: f64,
    /// Quadratic cone membership threshold.
    pub cone: f64,
    /// Tangent-space structure relations.
    pub tangent: f64,
    /// Target residual of the Yang–Mills flow.
    pub flow: f64,
    /// Lower bound on singular values that certify bijectivity.
    pub min_singular_value: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            scale: 1.0,
            identity: 1e-10,
            bg: 1e-10,
            deformation: 1e-9,
            agreement: 1e-10,
            norm_bound: 0.25,
            cone: 1e-9,
            tangent: 1e-9,
            flow: 1e-6,
            min_singular_value: 1e-6,
        }
    }
}

/// Parameters of the `bg` experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BgConfig {
    /// Accepted samples (with `‖Θ_{2,0}‖` above `min_holomorphic_norm`).
    pub samples: usize,
    /// Ranks cycled through by the sampler.
    pub ranks: Vec<usize>,
    /// Samples with a smaller `(2,0)` part are skipped.
    pub min_holomorphic_norm: f64,
    /// Samples whose constraint projection moves them by a larger fraction
    /// of their norm are rejected and redrawn.
    pub max_projection_fraction: f64,
}

impl Default for BgConfig {
    fn default() -> Self {
        BgConfig { samples: 1000, ranks: vec![1, 2, 3], min_holomorphic_norm: 1e-6, max_projection_fraction: 0.95 }
    }
}

/// Parameters of the `kuranishi` experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KuranishiConfig {
    /// Number of seeded inputs per amplitude.
    pub seeds: usize,
    /// Input norms `‖ρ‖`, one decade each.
    pub amplitudes: Vec<f64>,
    /// Highest order of the series.
    pub max_order: usize,
    /// Fourier modes of the random section `s` in `ρ = ∂s`.
    pub modes: usize,
    /// Probes measuring the norm of `Γ`.
    pub gamma_probes: usize,
}

impl Default for KuranishiConfig {
    fn default() -> Self {
        KuranishiConfig { seeds: 20, amplitudes: vec![1e-4, 1e-3, 1e-2], max_order: 6, modes: 3, gamma_probes: 32 }
    }
}

/// Parameters of the `cone` experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConeConfig {
    /// Number of constant `ρ = X dz₁ + Y dz₂` samples.
    pub samples: usize,
}

impl Default for ConeConfig {
    fn default() -> Self {
        ConeConfig { samples: 500 }
    }
}

/// Parameters of the `flow` experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    /// Number of seeded perturbations.
    pub runs: usize,
    /// Maximum accepted steps per run.
    pub steps: usize,
    /// Initial step size.
    pub rate: f64,
    /// Amplitude of the perturbation of the flat connection.
    pub amplitude: f64,
    /// The flow stops once the residual is at most this value.
    pub stop_residual: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { runs: 10, steps: 200, rate: 0.2, amplitude: 0.002, stop_residual: 1e-7 }
    }
}

/// Output options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    /// Directory receiving the report files.
    pub dir: String,
    /// Whether to write CSV tables next to the JSON report.
    pub csv: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { dir: "reports".into(), csv: true }
    }
}

/// A complete experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Experiment name; must match the subcommand when given in a file.
    pub experiment: Experiment,
    /// Working frequency cutoff `N_work`.
    pub cutoff: i32,
    /// Rank of the bundle.
    pub rank: usize,
    /// Fundamental bundle or its endomorphisms.
    pub bundle: BundleKind,
    /// Background connection.
    pub connection: ConnectionSpec,
    /// Sampled forms per identity.
    pub samples: usize,
    /// Random induced structures on top of `I, J, K`.
    pub extra_structures: usize,
    /// Seed of every random choice.
    pub seed: u64,
    /// Allow products to be truncated at the cutoff (recorded in reports).
    pub allow_truncation: bool,
    /// Pass thresholds.
    pub tolerances: Tolerances,
    /// Output options; not echoed into reports, so relocating the output
    /// does not change report bytes.
    #[serde(default, skip_serializing)]
    pub outputs: Outputs,
    /// `bg` parameters.
    pub bg: BgConfig,
    /// `kuranishi` parameters.
    pub kuranishi: KuranishiConfig,
    /// `cone` parameters.
    pub cone: ConeConfig,
    /// `flow` parameters.
    pub flow: FlowConfig,
}

impl ExperimentConfig {
    /// Defaults of an experiment: the desk-scale setting it is meant for.
    pub fn default_for(experiment: Experiment) -> Self {
        let (cutoff, rank, bundle, connection) = match experiment {
            Experiment::Identities => (2, 1, BundleKind::Fundamental, ConnectionSpec::Zero),
            Experiment::Analyze => (
                2,
                2,
                BundleKind::Fundamental,
                ConnectionSpec::ConstantCommuting { theta: [0.3, -0.2, 0.1, 0.4] },
            ),
            Experiment::Bg => (1, 2, BundleKind::Fundamental, ConnectionSpec::Zero),
            Experiment::Kuranishi => (7, 2, BundleKind::Endomorphism, ConnectionSpec::Zero),
            Experiment::Cone => (0, 2, BundleKind::Endomorphism, ConnectionSpec::Zero),
            Experiment::Sl2 | Experiment::PqTable => (1, 1, BundleKind::Fundamental, ConnectionSpec::Zero),
            Experiment::Tangent => (1, 2, BundleKind::Endomorphism, ConnectionSpec::Zero),
            Experiment::Flow => (1, 2, BundleKind::Fundamental, ConnectionSpec::Zero),
        };
        ExperimentConfig {
            experiment,
            cutoff,
            rank,
            bundle,
            connection,
            samples: 50,
            extra_structures: 2,
            seed: 1,
            allow_truncation: false,
            tolerances: Tolerances::default(),
            outputs: Outputs::default(),
            bg: BgConfig::default(),
            kuranishi: KuranishiConfig::default(),
            cone: ConeConfig::default(),
            flow: FlowConfig::default(),
        }
    }

    /// Parses a JSON document on top of the defaults of `experiment`.
    /// Objects are merged key by key, except `connection`, which replaces
    /// the default as a whole; unknown keys are rejected.
    pub fn from_json(experiment: Experiment, text: &str) -> Result<Self> {
        let user: Value = serde_json::from_str(text).map_err(|e| HyperholError::ConfigInvalid(e.to_string()))?;
        if !user.is_object() {
            return Err(HyperholError::ConfigInvalid("the configuration must be a JSON object".into()));
        }
        let mut merged = serde_json::to_value(Self::default_for(experiment)).expect("defaults serialize");
        merge(&mut merged, user, true);
        let config: ExperimentConfig =
            serde_json::from_value(merged).map_err(|e| HyperholError::ConfigInvalid(e.to_string()))?;
        if config.experiment != experiment {
            return Err(HyperholError::ConfigInvalid(format!(
                "configuration is for experiment {:?} but {:?} was requested",
                config.experiment.name(),
                experiment.name()
            )));
        }
        config.validate()?;
        Ok(config)
    }

    /// Range checks that the JSON types alone do not express.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HyperholError::ConfigInvalid(msg));
        if !(0..=12).contains(&self.cutoff) {
            return bad(format!("cutoff {} is outside 0..=12", self.cutoff));
        }
        if !(1..=4).contains(&self.rank) {
            return bad(format!("rank {} is outside 1..=4", self.rank));
        }
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("scale", t.scale),
            ("identity", t.identity),
            ("bg", t.bg),
            ("deformation", t.deformation),
            ("agreement", t.agreement),
            ("norm_bound", t.norm_bound),
            ("cone", t.cone),
            ("tangent", t.tangent),
            ("flow", t.flow),
            ("min_singular_value", t.min_singular_value),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("tolerance {name} must be positive and finite, got {v}"));
            }
        }
        if !(self.bg.max_projection_fraction > 0.0 && self.bg.max_projection_fraction <= 1.0) {
            return bad("bg max_projection_fraction must lie in (0, 1]".into());
        }
        if self.bg.samples == 0 || self.bg.ranks.is_empty() || self.bg.ranks.iter().any(|r| !(1..=4).contains(r)) {
            return bad("bg needs positive samples and ranks in 1..=4".into());
        }
        let k = &self.kuranishi;
        if k.seeds == 0 || k.amplitudes.is_empty() || k.amplitudes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return bad("kuranishi needs positive seeds and positive amplitudes".into());
        }
        if k.max_order < 2 || k.modes == 0 || k.gamma_probes == 0 {
            return bad("kuranishi needs max_order ≥ 2, modes ≥ 1 and gamma_probes ≥ 1".into());
        }
        if self.cone.samples == 0 {
            return bad("cone samples must be positive".into());
        }
        let f = &self.flow;
        if f.runs == 0 || f.steps == 0 || !(f.rate > 0.0 && f.amplitude > 0.0 && f.stop_residual > 0.0) {
            return bad("flow needs positive runs, steps, rate, amplitude and stop_residual".into());
        }
        match &self.connection {
            ConnectionSpec::ConstantNoncommuting { x, y } => {
                for m in [x, y] {
                    if m.len() != self.rank || m.iter().any(|row| row.len() != self.rank) {
                        return bad(format!("constant-noncommuting matrices must be {0}×{0}", self.rank));
                    }
                }
            }
            ConnectionSpec::SeededRandom { bandwidth, amplitude } => {
                if *bandwidth < 0 || !amplitude.is_finite() {
                    return bad("seeded-random needs a nonnegative bandwidth and a finite amplitude".into());
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn merge(base: &mut Value, patch: Value, top: bool) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                let replace = top && k == "connection";
                match b.get_mut(&k) {
                    Some(slot) if !replace => merge(slot, v, false),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Command-line overrides applied after the configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    /// `--seed`.
    pub seed: Option<u64>,
    /// `--out`.
    pub out: Option<String>,
    /// `--allow-truncation`.
    pub allow_truncation: bool,
    /// `--tol-scale`.
    pub tol_scale: Option<f64>,
}

impl Overrides {
    /// Applies the overrides and re-validates.
    pub fn apply(&self, config: &mut ExperimentConfig) -> Result<()> {
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(o) = &self.out {
            config.outputs.dir = o.clone();
        }
        if self.allow_truncation {
            config.allow_truncation = true;
        }
        if let Some(t) = self.tol_scale {
            config.tolerances.scale = t;
        }
        config.validate()
    }
}
