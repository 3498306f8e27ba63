//! Formant-track inversion: per-frame candidates from the codebook, then a
//! dynamic-programming path trading articulator velocity against phonetic
//! score.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::acoustics::{bark_distance, FormantTriple};
use crate::codebook::Codebook;
use crate::constraints::{phonetic_score, ConstraintSpec, PhoneticScore};
use crate::error::{Error, Result};
use crate::forward::ForwardMap;
use crate::model::{ArticulatoryVector, DIM};
use crate::partition::{classify, PartitionModel};
use crate::vowel::Vowel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub t_ms: f64,
    pub formants: FormantTriple,
}

/// Frames with strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct FormantTrack {
    frames: Vec<Frame>,
}

impl FormantTrack {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Parse("formant track has no frames".into()));
        }
        if let Some(w) = frames.windows(2).find(|w| !(w[1].t_ms > w[0].t_ms)) {
            return Err(Error::Parse(format!(
                "frame times must increase strictly ({} then {})",
                w[0].t_ms, w[1].t_ms
            )));
        }
        Ok(FormantTrack { frames })
    }

    /// `n` frames `step_ms` apart, linearly interpolated in Hz from `from` to `to`.
    pub fn interpolated(from: &FormantTriple, to: &FormantTriple, n: usize, step_ms: f64) -> Result<Self> {
        let (a, b) = (from.to_array(), to.to_array());
        let frames = (0..n)
            .map(|i| {
                let s = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                let f: [f64; 3] = std::array::from_fn(|k| a[k] + s * (b[k] - a[k]));
                Ok(Frame { t_ms: i as f64 * step_ms, formants: FormantTriple::from_array(f)? })
            })
            .collect::<Result<Vec<_>>>()?;
        FormantTrack::new(frames)
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Parses CSV with header `t_ms,f1,f2,f3`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty formant track".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["t_ms", "f1", "f2", "f3"] {
            return Err(Error::Parse(format!("expected header `t_ms,f1,f2,f3`, got `{header}`")));
        }
        let mut frames = Vec::new();
        for (i, line) in lines.enumerate() {
            let values = line
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("track row {}: {e}", i + 1)))?;
            let [t_ms, f1, f2, f3] = values[..] else {
                return Err(Error::Parse(format!("track row {}: expected 4 fields", i + 1)));
            };
            frames.push(Frame { t_ms, formants: FormantTriple::new(f1, f2, f3)? });
        }
        FormantTrack::new(frames)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_ms,f1,f2,f3\n");
        for f in &self.frames {
            let _ = writeln!(
                out,
                "{:.6},{:.6},{:.6},{:.6}",
                f.t_ms, f.formants.f1, f.formants.f2, f.formants.f3
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub vector: ArticulatoryVector,
    pub phonetic: PhoneticScore,
    /// Bark distance between the candidate's formants and the frame target.
    pub acoustic_error: f64,
    /// Vowel the frame was classified as; the score is against it.
    pub vowel: Vowel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InversionOptions {
    pub dyn_weight: f64,
    pub phon_weight: f64,
    /// Candidates kept per frame.
    pub candidates: usize,
    pub tolerance_bark: f64,
    /// Inverse samples requested from each matching cube.
    pub samples_per_cube: usize,
    /// Matching cubes sampled per frame, spread evenly over the matches.
    pub max_cubes: usize,
    /// Divide step costs by the frame interval relative to the mean interval.
    pub scale_by_frame_interval: bool,
    pub seed: u64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        InversionOptions {
            dyn_weight: 1.0,
            phon_weight: 1.0,
            candidates: 64,
            tolerance_bark: 0.3,
            samples_per_cube: 4,
            max_cubes: 2048,
            scale_by_frame_interval: false,
            seed: 0,
        }
    }
}

impl InversionOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.dyn_weight >= 0.0 && self.phon_weight >= 0.0) {
            return Err(Error::Config("cost weights must be non-negative".into()));
        }
        if self.candidates == 0 || self.samples_per_cube == 0 || self.max_cubes == 0 {
            return Err(Error::Config("candidate, sample and cube counts must be positive".into()));
        }
        if !(self.tolerance_bark > 0.0) {
            return Err(Error::Config("tolerance_bark must be positive".into()));
        }
        Ok(())
    }
}

/// Seed of the inverse samples drawn from cube `cube` for the target `f`.
/// Equal targets draw equal samples wherever they occur in a track.
pub fn candidate_seed(seed: u64, f: &FormantTriple, cube: usize) -> u64 {
    let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
    for x in [f.f1.to_bits(), f.f2.to_bits(), f.f3.to_bits(), cube as u64] {
        h = (h ^ x).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h ^= h >> 31;
    }
    h
}

/// At most `max` of `ids`, evenly spaced through the list.
fn spread(ids: Vec<usize>, max: usize) -> Vec<usize> {
    if ids.len() <= max {
        return ids;
    }
    (0..max).map(|k| ids[k * ids.len() / max]).collect()
}

/// Verified inverse solutions of `f` from the matching cubes (at most
/// `opts.max_cubes` of them), scored against the vowel `f` classifies as,
/// best first.
pub fn inverse_solutions(
    f: &FormantTriple,
    cb: &Codebook,
    spec: &ConstraintSpec,
    pm: &PartitionModel,
    opts: &InversionOptions,
) -> Vec<Candidate> {
    let synth = cb.synthesizer();
    let vowel = classify(f, pm);
    let mut out = Vec::new();
    for id in spread(cb.lookup(f), opts.max_cubes) {
        let seed = candidate_seed(opts.seed, f, id);
        // Rank-deficient cubes contribute nothing.
        let Ok(points) =
            cb.cube(id).sample_inverse(synth, f, opts.samples_per_cube, opts.tolerance_bark, seed)
        else {
            continue;
        };
        for vector in points {
            let Ok(g) = synth.formants(&vector) else { continue };
            let acoustic_error = bark_distance(&g, f);
            if acoustic_error <= opts.tolerance_bark {
                let phonetic = phonetic_score(&vector, vowel, spec, &synth.model);
                out.push(Candidate { vector, phonetic, acoustic_error, vowel });
            }
        }
    }
    // Stable: equal keys keep generation order.
    out.sort_by(|a, b| {
        b.phonetic
            .overall
            .total_cmp(&a.phonetic.overall)
            .then(a.acoustic_error.total_cmp(&b.acoustic_error))
    });
    out
}

/// The `opts.candidates` best inverse solutions of `f`.
pub fn invert_frame(
    f: &FormantTriple,
    cb: &Codebook,
    spec: &ConstraintSpec,
    pm: &PartitionModel,
    opts: &InversionOptions,
    frame: usize,
) -> Result<Vec<Candidate>> {
    let mut out = inverse_solutions(f, cb, spec, pm, opts);
    if out.is_empty() {
        return Err(Error::Unreachable { frame });
    }
    out.truncate(opts.candidates);
    Ok(out)
}

pub fn generate_candidates(
    track: &FormantTrack,
    cb: &Codebook,
    spec: &ConstraintSpec,
    pm: &PartitionModel,
    opts: &InversionOptions,
) -> Result<Vec<Vec<Candidate>>> {
    track
        .frames()
        .iter()
        .enumerate()
        .map(|(i, fr)| invert_frame(&fr.formants, cb, spec, pm, opts, i))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathCost {
    pub dynamic_cost: f64,
    pub phonetic_cost: f64,
}

impl PathCost {
    pub fn total(&self) -> f64 {
        self.dynamic_cost + self.phonetic_cost
    }
}

/// Minimal items the path optimiser needs from a candidate.
pub trait PathNode {
    fn point(&self) -> &[f64; DIM];
    fn score(&self) -> f64;
}

impl PathNode for Candidate {
    fn point(&self) -> &[f64; DIM] {
        self.vector.as_array()
    }

    fn score(&self) -> f64 {
        self.phonetic.overall
    }
}

fn step_cost(a: &[f64; DIM], b: &[f64; DIM]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exact minimiser of `sum dyn * |x_t - x_{t-1}|^2 / scale_t + sum phon * (1 - s_t)`
/// over one candidate per frame; `step_scale[t - 1]` divides the step into
/// frame `t`. Equal costs resolve to the lowest candidate index.
pub fn dp_optimize_scaled<N: PathNode>(
    frames: &[Vec<N>],
    dyn_weight: f64,
    phon_weight: f64,
    step_scale: &[f64],
) -> Vec<usize> {
    if frames.is_empty() {
        return Vec::new();
    }
    assert!(frames.iter().all(|f| !f.is_empty()), "every frame needs a candidate");
    assert_eq!(step_scale.len() + 1, frames.len());
    let mut cost: Vec<f64> = frames[0].iter().map(|c| phon_weight * (1.0 - c.score())).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(frames.len());
    back.push(Vec::new());
    for t in 1..frames.len() {
        let (prev, cur) = (&frames[t - 1], &frames[t]);
        let w = dyn_weight / step_scale[t - 1];
        let mut next = Vec::with_capacity(cur.len());
        let mut from = Vec::with_capacity(cur.len());
        for c in cur {
            let (mut best, mut arg) = (f64::INFINITY, 0);
            for (i, p) in prev.iter().enumerate() {
                let v = cost[i] + w * step_cost(p.point(), c.point());
                if v < best {
                    best = v;
                    arg = i;
                }
            }
            next.push(best + phon_weight * (1.0 - c.score()));
            from.push(arg);
        }
        cost = next;
        back.push(from);
    }
    let mut j = (0..cost.len()).fold(0, |b, i| if cost[i] < cost[b] { i } else { b });
    let mut path = vec![0; frames.len()];
    for t in (0..frames.len()).rev() {
        path[t] = j;
        if t > 0 {
            j = back[t][j];
        }
    }
    path
}

pub fn dp_optimize<N: PathNode>(frames: &[Vec<N>], dyn_weight: f64, phon_weight: f64) -> Vec<usize> {
    let ones = vec![1.0; frames.len().saturating_sub(1)];
    dp_optimize_scaled(frames, dyn_weight, phon_weight, &ones)
}

/// Objective of `path`, accumulated in the same order as the optimiser so
/// that equal paths give bitwise-equal totals.
pub fn path_objective<N: PathNode>(
    frames: &[Vec<N>],
    path: &[usize],
    dyn_weight: f64,
    phon_weight: f64,
) -> f64 {
    let mut total = phon_weight * (1.0 - frames[0][path[0]].score());
    for t in 1..frames.len() {
        let (a, b) = (&frames[t - 1][path[t - 1]], &frames[t][path[t]]);
        total += dyn_weight * step_cost(a.point(), b.point());
        total += phon_weight * (1.0 - b.score());
    }
    total
}

pub fn path_cost<N: PathNode>(
    frames: &[Vec<N>],
    path: &[usize],
    dyn_weight: f64,
    phon_weight: f64,
    step_scale: &[f64],
) -> PathCost {
    let mut c = PathCost::default();
    for (t, &j) in path.iter().enumerate() {
        c.phonetic_cost += phon_weight * (1.0 - frames[t][j].score());
        if t > 0 {
            let prev = frames[t - 1][path[t - 1]].point();
            c.dynamic_cost += dyn_weight * step_cost(prev, frames[t][j].point()) / step_scale[t - 1];
        }
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryFrame {
    pub t_ms: f64,
    pub vector: ArticulatoryVector,
    pub score: f64,
    pub acoustic_error: f64,
    pub vowel: Vowel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub frames: Vec<TrajectoryFrame>,
    pub cost: PathCost,
}

impl Trajectory {
    /// CSV with header `t_ms,p1..p7,score,acoustic_error_bark`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_ms,p1,p2,p3,p4,p5,p6,p7,score,acoustic_error_bark\n");
        for f in &self.frames {
            let _ = write!(out, "{:.6}", f.t_ms);
            for x in f.vector.as_array() {
                let _ = write!(out, ",{x:.6}");
            }
            let _ = writeln!(out, ",{:.6},{:.6}", f.score, f.acoustic_error);
        }
        out
    }
}

fn step_scales(track: &FormantTrack, opts: &InversionOptions) -> Vec<f64> {
    let gaps: Vec<f64> = track.frames().windows(2).map(|w| w[1].t_ms - w[0].t_ms).collect();
    if !opts.scale_by_frame_interval || gaps.is_empty() {
        return vec![1.0; gaps.len()];
    }
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    gaps.iter().map(|g| g / mean).collect()
}

/// Optimal path through precomputed candidate sets.
pub fn select_trajectory(
    track: &FormantTrack,
    sets: &[Vec<Candidate>],
    opts: &InversionOptions,
) -> Trajectory {
    let scales = step_scales(track, opts);
    let path = dp_optimize_scaled(sets, opts.dyn_weight, opts.phon_weight, &scales);
    let cost = path_cost(sets, &path, opts.dyn_weight, opts.phon_weight, &scales);
    let frames = track
        .frames()
        .iter()
        .zip(&path)
        .zip(sets)
        .map(|((fr, &j), set)| {
            let c = set[j];
            TrajectoryFrame {
                t_ms: fr.t_ms,
                vector: c.vector,
                score: c.phonetic.overall,
                acoustic_error: c.acoustic_error,
                vowel: c.vowel,
            }
        })
        .collect();
    Trajectory { frames, cost }
}

pub fn invert_track(
    track: &FormantTrack,
    cb: &Codebook,
    spec: &ConstraintSpec,
    pm: &PartitionModel,
    opts: &InversionOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    let sets = generate_candidates(track, cb, spec, pm, opts)?;
    Ok(select_trajectory(track, &sets, opts))
}

/// Whether `map` reproduces `f` at `v` within `tolerance_bark`.
pub fn verifies<M: ForwardMap + ?Sized>(map: &M, v: &ArticulatoryVector, f: &FormantTriple, tolerance_bark: f64) -> bool {
    map.is_valid(v) && map.formants(v).is_ok_and(|g| bark_distance(&g, f) <= tolerance_bark)
}
