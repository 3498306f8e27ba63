//! Partition of the (F1, F2, F3) space into vowel regions.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::acoustics::FormantTriple;
use crate::constraints::{ideal_domain_sample, ConstraintSpec};
use crate::error::{Error, Result};
use crate::forward::{ForwardMap, Synthesizer};
use crate::vowel::Vowel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VowelPrototype {
    pub vowel: Vowel,
    /// Mean formants, Hz.
    pub mean: [f64; 3],
    /// Per-formant standard deviations, Hz.
    pub std_dev: [f64; 3],
}

impl VowelPrototype {
    pub fn new(vowel: Vowel, mean: [f64; 3], std_dev: [f64; 3]) -> Result<Self> {
        FormantTriple::from_array(mean)?;
        if std_dev.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Config(format!(
                "/{vowel}/ prototype needs positive deviations"
            )));
        }
        Ok(VowelPrototype {
            vowel,
            mean,
            std_dev,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMode {
    /// Nearest mean in Euclidean distance.
    Voronoi,
    /// Nearest mean in per-formant deviation units.
    Weighted,
}

impl std::str::FromStr for PartitionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "voronoi" => Ok(PartitionMode::Voronoi),
            "weighted" => Ok(PartitionMode::Weighted),
            other => Err(Error::Parse(format!("unknown partition mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionModel {
    prototypes: Vec<VowelPrototype>,
    pub mode: PartitionMode,
}

impl PartitionModel {
    /// Prototypes are kept in vowel-table order so that ties resolve toward
    /// the earlier vowel regardless of input order.
    pub fn new(mut prototypes: Vec<VowelPrototype>, mode: PartitionMode) -> Result<Self> {
        if prototypes.len() < 2 {
            return Err(Error::Config("a partition needs at least two prototypes".into()));
        }
        prototypes.sort_by_key(|p| p.vowel);
        if prototypes.windows(2).any(|w| w[0].vowel == w[1].vowel) {
            return Err(Error::Config("duplicate vowel prototype".into()));
        }
        Ok(PartitionModel { prototypes, mode })
    }

    pub fn prototypes(&self) -> &[VowelPrototype] {
        &self.prototypes
    }

    pub fn prototype(&self, v: Vowel) -> Option<&VowelPrototype> {
        self.prototypes.iter().find(|p| p.vowel == v)
    }

    pub fn with_mode(&self, mode: PartitionMode) -> PartitionModel {
        PartitionModel {
            prototypes: self.prototypes.clone(),
            mode,
        }
    }

    /// Export as CSV: `vowel,mu1,mu2,mu3,s1,s2,s3`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("vowel,mu1,mu2,mu3,s1,s2,s3\n");
        for p in &self.prototypes {
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                p.vowel, p.mean[0], p.mean[1], p.mean[2], p.std_dev[0], p.std_dev[1], p.std_dev[2]
            );
        }
        out
    }

    /// Parses the [`PartitionModel::to_csv`] format; blank lines and `#`
    /// comments are skipped.
    pub fn from_csv(text: &str, mode: PartitionMode) -> Result<Self> {
        let mut prototypes = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("vowel") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 7 {
                return Err(Error::Parse(format!(
                    "prototype line {}: expected 7 fields",
                    lineno + 1
                )));
            }
            let vowel: Vowel = fields[0].parse()?;
            let mut nums = [0.0; 6];
            for (slot, f) in nums.iter_mut().zip(&fields[1..]) {
                *slot = f.parse().map_err(|_| {
                    Error::Parse(format!("prototype line {}: invalid number `{f}`", lineno + 1))
                })?;
            }
            prototypes.push(VowelPrototype::new(
                vowel,
                [nums[0], nums[1], nums[2]],
                [nums[3], nums[4], nums[5]],
            )?);
        }
        PartitionModel::new(prototypes, mode)
    }
}

/// Distance of `f` to a prototype under `mode`; squared for both modes.
pub fn prototype_distance(f: &FormantTriple, p: &VowelPrototype, mode: PartitionMode) -> f64 {
    f.to_array()
        .iter()
        .zip(p.mean.iter().zip(p.std_dev.iter()))
        .map(|(fi, (mu, s))| {
            let d = match mode {
                PartitionMode::Voronoi => fi - mu,
                PartitionMode::Weighted => (fi - mu) / s,
            };
            d * d
        })
        .sum()
}

pub fn classify(f: &FormantTriple, pm: &PartitionModel) -> Vowel {
    let mut best = &pm.prototypes[0];
    let mut best_d = prototype_distance(f, best, pm.mode);
    for p in &pm.prototypes[1..] {
        let d = prototype_distance(f, p, pm.mode);
        if d < best_d {
            best = p;
            best_d = d;
        }
    }
    best.vowel
}

/// Formants of ideal-domain samples of `vowel`.
pub fn ideal_formants(
    synth: &Synthesizer,
    spec: &ConstraintSpec,
    vowel: Vowel,
    n: usize,
    seed: u64,
) -> Result<Vec<FormantTriple>> {
    // Rare shapes inside the domain can still lack three resonances; draw
    // extra candidates rather than fail.
    let mut out = Vec::with_capacity(n);
    let mut round = 0u64;
    while out.len() < n {
        if round > 16 {
            return Err(Error::SamplingFailed {
                vowel: vowel.sampa(),
                attempts: out.len(),
            });
        }
        let draws = ideal_domain_sample(vowel, spec, &synth.model, n - out.len(), seed.wrapping_add(round.wrapping_mul(0x5851_F42D_4C95_7F2D)))?;
        out.extend(draws.iter().filter_map(|v| synth.formants(v).ok()));
        round += 1;
    }
    Ok(out)
}

fn mean_and_std(samples: &[FormantTriple]) -> ([f64; 3], [f64; 3]) {
    let n = samples.len() as f64;
    let mut mean = [0.0; 3];
    for f in samples {
        for (m, x) in mean.iter_mut().zip(f.to_array()) {
            *m += x / n;
        }
    }
    let mut var = [0.0; 3];
    for f in samples {
        for ((v, m), x) in var.iter_mut().zip(mean).zip(f.to_array()) {
            *v += (x - m) * (x - m) / (n - 1.0);
        }
    }
    (mean, var.map(f64::sqrt))
}

/// Per-vowel mean and deviation of formants synthesised from `n` ideal-domain
/// samples each.
pub fn calibrate_prototypes(
    synth: &Synthesizer,
    spec: &ConstraintSpec,
    n: usize,
    seed: u64,
    mode: PartitionMode,
) -> Result<PartitionModel> {
    if n < 10 {
        return Err(Error::Config("calibration needs at least 10 samples per vowel".into()));
    }
    let mut prototypes = Vec::with_capacity(Vowel::ALL.len());
    for vowel in Vowel::ALL {
        let formants = ideal_formants(synth, spec, vowel, n, seed)?;
        let (mean, std_dev) = mean_and_std(&formants);
        prototypes.push(VowelPrototype::new(vowel, mean, std_dev)?);
    }
    PartitionModel::new(prototypes, mode)
}

/// Classification of fresh ideal-domain samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    /// `confusion[true][classified]`, in vowel-table order.
    pub confusion: [[usize; 10]; 10],
    pub samples_per_vowel: usize,
}

impl ConsistencyReport {
    pub fn own_rate(&self, v: Vowel) -> f64 {
        self.confusion[v.index()][v.index()] as f64 / self.samples_per_vowel as f64
    }

    /// Fraction of all samples classified to their own vowel.
    pub fn inclusion_rate(&self) -> f64 {
        let diag: usize = (0..10).map(|i| self.confusion[i][i]).sum();
        diag as f64 / (10 * self.samples_per_vowel) as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("vowel");
        for v in Vowel::ALL {
            let _ = write!(out, ",{v}");
        }
        out.push_str(",own_rate\n");
        for v in Vowel::ALL {
            let _ = write!(out, "{v}");
            for c in self.confusion[v.index()] {
                let _ = write!(out, ",{c}");
            }
            let _ = writeln!(out, ",{:.6}", self.own_rate(v));
        }
        out
    }
}

/// The seed is offset from the calibration seed space so that the report
/// never reuses calibration draws.
pub fn consistency_report(
    pm: &PartitionModel,
    spec: &ConstraintSpec,
    synth: &Synthesizer,
    n: usize,
    seed: u64,
) -> Result<ConsistencyReport> {
    let mut confusion = [[0usize; 10]; 10];
    for vowel in Vowel::ALL {
        let formants = ideal_formants(synth, spec, vowel, n, seed ^ 0xC0FF_EE00_D15E_A5E5)?;
        for f in &formants {
            confusion[vowel.index()][classify(f, pm).index()] += 1;
        }
    }
    Ok(ConsistencyReport {
        confusion,
        samples_per_vowel: n,
    })
}
