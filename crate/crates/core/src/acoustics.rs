//! Lossless tube acoustics: glottis-to-lips transfer function, formant
//! picking and the bark scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::AreaFunction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormantTriple {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

impl FormantTriple {
    pub fn new(f1: f64, f2: f64, f3: f64) -> Result<Self> {
        if 0.0 < f1 && f1 < f2 && f2 < f3 && f3.is_finite() {
            Ok(FormantTriple { f1, f2, f3 })
        } else {
            Err(Error::FormantOrder(f1, f2, f3))
        }
    }

    pub fn from_array(a: [f64; 3]) -> Result<Self> {
        FormantTriple::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.f1, self.f2, self.f3]
    }

    /// Per-formant bark values.
    pub fn to_bark(self) -> [f64; 3] {
        [bark(self.f1), bark(self.f2), bark(self.f3)]
    }
}

/// `f1,f2,f3` in Hz.
impl std::str::FromStr for FormantTriple {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(Error::Parse(format!("formant triple needs 3 values, got {}", parts.len())));
        };
        let num = |p: &str| p.parse::<f64>().map_err(|_| Error::Parse(format!("invalid number `{p}`")));
        FormantTriple::new(num(a)?, num(b)?, num(c)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossModel {
    /// Lossless walls, closed glottis and ideal (zero-pressure) open lips.
    Lossless,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcousticConfig {
    /// cm/s
    pub speed_of_sound: f64,
    pub min_hz: f64,
    pub max_hz: f64,
    pub step_hz: f64,
    pub refine_tolerance_hz: f64,
    pub loss_model: LossModel,
    /// Minimum open area for analysis, cm². Shapes at or below are closed.
    pub epsilon_closure: f64,
}

impl Default for AcousticConfig {
    fn default() -> Self {
        AcousticConfig {
            speed_of_sound: 35_000.0,
            min_hz: 100.0,
            max_hz: 6000.0,
            step_hz: 10.0,
            refine_tolerance_hz: 0.5,
            loss_model: LossModel::Lossless,
            epsilon_closure: 0.05,
        }
    }
}

impl AcousticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_hz > 0.0 && self.min_hz < self.max_hz) {
            return Err(Error::Config("frequency grid needs 0 < min < max".into()));
        }
        if !(self.step_hz > 0.0) || !(self.refine_tolerance_hz > 0.0) {
            return Err(Error::Config("grid step and tolerance must be positive".into()));
        }
        if !(self.speed_of_sound > 0.0) {
            return Err(Error::Config("speed_of_sound must be positive".into()));
        }
        Ok(())
    }
}

/// Sections grouped for repeated evaluation: sections sharing a length share
/// one phase per frequency.
struct Chain {
    /// Distinct section lengths, cm.
    lengths: Vec<f64>,
    /// Per section: index into `lengths`, `1 / area` and `area`.
    sections: Vec<(usize, f64, f64)>,
}

impl Chain {
    fn new(af: &AreaFunction) -> Self {
        let mut lengths: Vec<f64> = Vec::new();
        let sections = af
            .sections()
            .iter()
            .map(|s| {
                let run = match lengths.iter().position(|&l| l == s.length) {
                    Some(i) => i,
                    None => {
                        lengths.push(s.length);
                        lengths.len() - 1
                    }
                };
                (run, 1.0 / s.area, s.area)
            })
            .collect();
        Chain { lengths, sections }
    }

    /// `D` element of the chain matrix product, which maps lip volume velocity
    /// to glottal volume velocity when the lip pressure is zero, given
    /// `(sin, cos)` of each run's phase.
    ///
    /// Each lossless section has the chain matrix
    /// `[[cos kl, j Z sin kl], [j sin kl / Z, cos kl]]` with `Z ∝ 1/A`; its
    /// diagonal stays real and its off-diagonal purely imaginary under
    /// multiplication, so only four reals are carried. The characteristic
    /// impedances enter as ratios, which makes the result invariant to a common
    /// area scale.
    fn d(&self, trig: &[(f64, f64)]) -> f64 {
        // Running product [[a, j b], [j c, d]] starting from the identity.
        let (mut a, mut b, mut c, mut d) = (1.0, 0.0, 0.0, 1.0);
        for &(run, z, y) in &self.sections {
            let (sn, cs) = trig[run];
            // [[a, jb], [jc, d]] * [[cs, j z sn], [j sn / z, cs]]
            let zs = z * sn;
            let ys = y * sn;
            let na = a * cs - b * ys;
            let nb = a * zs + b * cs;
            let nc = c * cs + d * ys;
            let nd = d * cs - c * zs;
            (a, b, c, d) = (na, nb, nc, nd);
        }
        d
    }

    fn trig(&self, freq: f64, speed_of_sound: f64) -> Vec<(f64, f64)> {
        let k = 2.0 * std::f64::consts::PI * freq / speed_of_sound;
        self.lengths.iter().map(|l| (k * l).sin_cos()).collect()
    }

    fn magnitude(&self, freq: f64, speed_of_sound: f64) -> f64 {
        1.0 / self.d(&self.trig(freq, speed_of_sound)).abs()
    }
}

/// Grid frequencies evaluated together. The chain recurrence is a long
/// dependency chain; independent lanes keep the floating-point units busy.
const LANES: usize = 8;

/// Transfer magnitudes over a uniform frequency grid, computed in blocks of
/// [`LANES`] with phases advanced by exact rotation.
struct GridScan<'a> {
    chain: &'a Chain,
    sin: Vec<[f64; LANES]>,
    cos: Vec<[f64; LANES]>,
    /// `(sin, cos)` of one block's phase increment per run.
    step: Vec<(f64, f64)>,
    block: [f64; LANES],
    next: usize,
}

impl<'a> GridScan<'a> {
    fn new(chain: &'a Chain, f0: f64, df: f64, speed_of_sound: f64) -> Self {
        let runs = chain.lengths.len();
        let (mut sin, mut cos) = (vec![[0.0; LANES]; runs], vec![[0.0; LANES]; runs]);
        for l in 0..LANES {
            for (r, (s, c)) in chain.trig(f0 + l as f64 * df, speed_of_sound).into_iter().enumerate() {
                sin[r][l] = s;
                cos[r][l] = c;
            }
        }
        let step = chain.trig(LANES as f64 * df, speed_of_sound);
        let mut scan = GridScan { chain, sin, cos, step, block: [0.0; LANES], next: 0 };
        scan.fill();
        scan
    }

    fn fill(&mut self) {
        let (mut a, mut b, mut c, mut d) = ([1.0; LANES], [0.0; LANES], [0.0; LANES], [1.0; LANES]);
        for &(run, z, y) in &self.chain.sections {
            let (sn, cs) = (&self.sin[run], &self.cos[run]);
            for l in 0..LANES {
                let zs = z * sn[l];
                let ys = y * sn[l];
                let na = a[l] * cs[l] - b[l] * ys;
                let nb = a[l] * zs + b[l] * cs[l];
                let nc = c[l] * cs[l] + d[l] * ys;
                let nd = d[l] * cs[l] - c[l] * zs;
                (a[l], b[l], c[l], d[l]) = (na, nb, nc, nd);
            }
        }
        self.block = d.map(|x| 1.0 / x.abs());
        for ((sn, cs), &(ds, dc)) in self.sin.iter_mut().zip(&mut self.cos).zip(&self.step) {
            for l in 0..LANES {
                (sn[l], cs[l]) = (sn[l] * dc + cs[l] * ds, cs[l] * dc - sn[l] * ds);
            }
        }
    }

    fn next_magnitude(&mut self) -> f64 {
        if self.next == LANES {
            self.fill();
            self.next = 0;
        }
        self.next += 1;
        self.block[self.next - 1]
    }
}

fn ensure_open(af: &AreaFunction, cfg: &AcousticConfig) -> Result<()> {
    if af.is_empty() {
        return Err(Error::EmptyAreaFunction);
    }
    let min_area = af.min_area();
    if min_area <= cfg.epsilon_closure {
        return Err(Error::Closure { min_area });
    }
    Ok(())
}


/// |U_lips / U_glottis| at `freq` Hz.
pub fn transfer_magnitude(af: &AreaFunction, freq: f64, cfg: &AcousticConfig) -> Result<f64> {
    ensure_open(af, cfg)?;
    if !(freq > 0.0) {
        return Err(Error::NonPositiveFrequency(freq));
    }
    Ok(Chain::new(af).magnitude(freq, cfg.speed_of_sound))
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section maximisation of the magnitude on `[lo, hi]`.
fn refine_peak(chain: &Chain, mut lo: f64, mut hi: f64, cfg: &AcousticConfig) -> f64 {
    let c = cfg.speed_of_sound;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut m1 = chain.magnitude(x1, c);
    let mut m2 = chain.magnitude(x2, c);
    while hi - lo > cfg.refine_tolerance_hz {
        if m1 >= m2 {
            hi = x2;
            x2 = x1;
            m2 = m1;
            x1 = hi - INV_PHI * (hi - lo);
            m1 = chain.magnitude(x1, c);
        } else {
            lo = x1;
            x1 = x2;
            m1 = m2;
            x2 = lo + INV_PHI * (hi - lo);
            m2 = chain.magnitude(x2, c);
        }
    }
    0.5 * (lo + hi)
}

/// First three formants: the three lowest local maxima of the transfer
/// magnitude on the analysis grid, each refined by golden-section search.
pub fn formants(af: &AreaFunction, cfg: &AcousticConfig) -> Result<FormantTriple> {
    ensure_open(af, cfg)?;
    let c = cfg.speed_of_sound;
    let n = ((cfg.max_hz - cfg.min_hz) / cfg.step_hz).floor() as usize;
    let freq = |i: usize| cfg.min_hz + i as f64 * cfg.step_hz;

    let chain = Chain::new(af);
    let mut grid = GridScan::new(&chain, cfg.min_hz, cfg.step_hz, c);
    let mut next_mag = || grid.next_magnitude();
    let mut peaks = [0.0; 3];
    let mut found = 0;
    let mut prev = next_mag();
    let mut cur = next_mag();
    for i in 1..n {
        let next = next_mag();
        if cur > prev && cur >= next {
            peaks[found] = refine_peak(&chain, freq(i - 1), freq(i + 1), cfg);
            found += 1;
            if found == 3 {
                break;
            }
        }
        prev = cur;
        cur = next;
    }
    if found < 3 {
        return Err(Error::PeakDeficit {
            found,
            max_hz: cfg.max_hz,
        });
    }
    FormantTriple::new(peaks[0], peaks[1], peaks[2])
}

/// Traunmüller's bark scale. Total over all reals; see [`hz_to_bark`] for
/// the checked version.
#[inline]
pub fn bark(hz: f64) -> f64 {
    26.81 / (1.0 + 1960.0 / hz) - 0.53
}

/// Inverse of [`bark`].
pub fn bark_to_hz(z: f64) -> f64 {
    1960.0 / (26.81 / (z + 0.53) - 1.0)
}

pub fn hz_to_bark(hz: f64) -> Result<f64> {
    if !(hz > 0.0) {
        return Err(Error::NonPositiveFrequency(hz));
    }
    Ok(bark(hz))
}

/// Largest per-formant difference in bark.
pub fn bark_distance(a: &FormantTriple, b: &FormantTriple) -> f64 {
    let (za, zb) = (a.to_bark(), b.to_bark());
    za.iter()
        .zip(zb.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
