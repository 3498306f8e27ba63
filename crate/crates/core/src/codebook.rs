//! Hypercube codebook of the articulatory-to-acoustic map.
//!
//! The root cube `[-3, 3]^7` is split recursively into `2^7` children until
//! each cube passes a bark-domain linearity test. Accepted cubes keep their
//! vertex formants and a centre Jacobian, which [`Hypercube::sample_inverse`]
//! uses to walk the local four-dimensional solution set of a formant triple.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use nalgebra::{SMatrix, SVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acoustics::{bark, bark_distance, AcousticConfig, FormantTriple};
use crate::error::{Error, Result};
use crate::forward::{ForwardMap, Synthesizer};
use crate::model::{ArticulatoryVector, ModelConfig, DIM, PARAM_LIMIT};

/// Vertices per cube. Bit `k` of a vertex index selects `+half_edge` on axis `k`.
pub const VERTEX_COUNT: usize = 1 << DIM;

/// Centre plus the 14 face centres.
const TEST_POINT_COUNT: usize = 1 + 2 * DIM;

/// Smallest-to-largest eigenvalue ratio of `J J^T` below which a Jacobian
/// counts as rank deficient.
const RANK_TOLERANCE: f64 = 1e-12;

type Jacobian = SMatrix<f64, 3, DIM>;
type PseudoInverse = SMatrix<f64, DIM, 3>;
type Point = SVector<f64, DIM>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestPointScheme {
    /// Cube centre and the centres of its 14 faces.
    CenterAndFaces,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    /// Maximum per-formant interpolation error, bark.
    pub linearity_threshold: f64,
    /// Cubes are never split into children smaller than this half edge.
    pub min_half_edge: f64,
    /// The root cube has depth 0.
    pub max_depth: u32,
    /// Largest tolerated fraction of invalid vertices in an accepted cube.
    pub invalid_ratio_threshold: f64,
    pub test_points: TestPointScheme,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            linearity_threshold: 0.3,
            min_half_edge: 0.375,
            max_depth: 4,
            invalid_ratio_threshold: 0.25,
            test_points: TestPointScheme::CenterAndFaces,
        }
    }
}

impl BuildConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.linearity_threshold > 0.0 && self.linearity_threshold.is_finite()) {
            return Err(Error::Config("linearity_threshold must be positive".into()));
        }
        if !(self.min_half_edge > 0.0 && self.min_half_edge <= PARAM_LIMIT) {
            return Err(Error::Config("min_half_edge must be in (0, 3]".into()));
        }
        if !(self.invalid_ratio_threshold > 0.0 && self.invalid_ratio_threshold <= 1.0) {
            return Err(Error::Config("invalid_ratio_threshold must be in (0, 1]".into()));
        }
        if self.max_depth > 8 {
            return Err(Error::Config("max_depth above 8 is not supported".into()));
        }
        Ok(())
    }

    fn can_split(&self, half_edge: f64, depth: u32) -> bool {
        depth < self.max_depth && half_edge / 2.0 >= self.min_half_edge * (1.0 - 1e-12)
    }

    /// Depth of the smallest cubes the build can produce.
    pub fn finest_depth(&self) -> u32 {
        let (mut h, mut d) = (PARAM_LIMIT, 0);
        while self.can_split(h, d) {
            h /= 2.0;
            d += 1;
        }
        d
    }
}

/// Integer coordinates on the build lattice: `x = -3 + key * unit`.
pub type LatticeKey = [u16; DIM];

/// A linearity-certified axis-aligned cube of articulatory space.
///
/// Vertex formants live in the owning [`Codebook`], shared between
/// neighbouring cubes; see [`Codebook::vertex_formants`].
#[derive(Debug, Clone, PartialEq)]
pub struct Hypercube {
    pub center: [f64; DIM],
    pub half_edge: f64,
    pub depth: u32,
    pub lattice_center: LatticeKey,
    /// Half edge in lattice units.
    pub lattice_half: u16,
    pub center_formants: FormantTriple,
    /// `dF/dx` at the centre, Hz per σ-unit.
    pub jacobian: [[f64; DIM]; 3],
    pub validity_ratio: f64,
    /// Maximum bark error over the test points.
    pub linearity_error: f64,
    /// Mean absolute Hz error over test points and formants.
    pub interp_error_hz: f64,
}

impl Hypercube {
    pub fn vertex(&self, index: usize) -> [f64; DIM] {
        let mut p = self.center;
        for (k, x) in p.iter_mut().enumerate() {
            *x += if index >> k & 1 == 1 { self.half_edge } else { -self.half_edge };
        }
        p
    }

    pub fn vertex_key(&self, index: usize) -> LatticeKey {
        let mut p = self.lattice_center;
        for (k, x) in p.iter_mut().enumerate() {
            *x = if index >> k & 1 == 1 { *x + self.lattice_half } else { *x - self.lattice_half };
        }
        p
    }

    /// Closed-box membership.
    pub fn contains(&self, v: &ArticulatoryVector) -> bool {
        let tol = 1e-12;
        v.as_array()
            .iter()
            .zip(self.center)
            .all(|(x, c)| (x - c).abs() <= self.half_edge + tol)
    }

    pub fn volume(&self) -> f64 {
        (2.0 * self.half_edge).powi(DIM as i32)
    }

    fn clamp(&self, x: &Point) -> Point {
        Point::from_fn(|k, _| {
            x[k].clamp(self.center[k] - self.half_edge, self.center[k] + self.half_edge)
        })
    }

    fn pseudo_inverse(&self) -> Result<(Jacobian, PseudoInverse)> {
        let j = Jacobian::from_fn(|r, c| self.jacobian[r][c]);
        pseudo_inverse(&j).map(|p| (j, p)).ok_or(Error::DegenerateCube)
    }

    /// Points of this cube whose formants match `target` within
    /// `tolerance_bark`, drawn from the linearised solution set.
    ///
    /// The first attempt is the minimum-norm solution nearest the centre;
    /// later attempts project uniform cube points onto the solution set.
    /// Each point is refined by chord-Newton steps with the true forward map,
    /// and only valid points that verify within tolerance are returned.
    pub fn sample_inverse<M: ForwardMap + ?Sized>(
        &self,
        map: &M,
        target: &FormantTriple,
        n: usize,
        tolerance_bark: f64,
        seed: u64,
    ) -> Result<Vec<ArticulatoryVector>> {
        if n == 0 {
            return Ok(Vec::new());
        }
        let (j, pinv) = self.pseudo_inverse()?;
        let c = Point::from(self.center);
        let rhs = SVector::<f64, 3>::from(target.to_array())
            - SVector::<f64, 3>::from(self.center_formants.to_array());
        let goal = SVector::<f64, 3>::from(target.to_array());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        let attempts = 4 * n + 4;
        for attempt in 0..attempts {
            if out.len() == n {
                break;
            }
            let start = if attempt == 0 {
                c
            } else {
                Point::from_fn(|k, _| {
                    self.center[k] + self.half_edge * rng.random_range(-1.0..=1.0)
                })
            };
            // Alternating projections between the affine solution set and the cube.
            let mut x = start;
            for _ in 0..32 {
                let residual = j * (x - c) - rhs;
                x = self.clamp(&(x - pinv * residual));
                if (j * (x - c) - rhs).norm() < 1e-9 {
                    break;
                }
            }
            let mut found = None;
            for _ in 0..6 {
                let v = ArticulatoryVector::clamped(x.into());
                if !map.is_valid(&v) {
                    break;
                }
                let Ok(f) = map.formants(&v) else { break };
                if bark_distance(&f, target) <= tolerance_bark {
                    found = Some(v);
                    if bark_distance(&f, target) < 1e-3 * tolerance_bark {
                        break;
                    }
                }
                let step = pinv * (SVector::<f64, 3>::from(f.to_array()) - goal);
                let next = self.clamp(&(x - step));
                if (next - x).norm() < 1e-12 {
                    break;
                }
                x = next;
            }
            if let Some(v) = found {
                out.push(v);
            }
        }
        Ok(out)
    }
}

/// `J^T (J J^T)^{-1}` when `J` has full row rank.
fn pseudo_inverse(j: &Jacobian) -> Option<PseudoInverse> {
    if !j.iter().all(|x| x.is_finite()) {
        return None;
    }
    let gram = j * j.transpose();
    let eig = SymmetricEigen::new(gram);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0 && min > RANK_TOLERANCE * max) {
        return None;
    }
    gram.try_inverse().map(|g| j.transpose() * g)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CodebookStats {
    /// Distinct forward-map evaluations during the build.
    pub points_sampled: u64,
    pub cube_count: u64,
    pub vertex_count: u64,
    /// Accepted volume over the root volume `6^7`.
    pub volume_fraction_kept: f64,
    /// Mean over cubes of their mean absolute interpolation error, Hz.
    pub mean_interp_error_hz: f64,
}

/// Regular-grid bucket index over per-cube bark bounding boxes.
#[derive(Debug, Clone, Default)]
struct AcousticIndex {
    cell: f64,
    lo: Vec<[f64; 3]>,
    hi: Vec<[f64; 3]>,
    buckets: HashMap<[i32; 3], Vec<u32>>,
}

impl AcousticIndex {
    const CELL_BARK: f64 = 1.0;

    fn new(bounds: impl Iterator<Item = ([f64; 3], [f64; 3])>, expand: f64) -> Self {
        let mut index = AcousticIndex { cell: Self::CELL_BARK, ..Default::default() };
        for (id, (mut lo, mut hi)) in bounds.enumerate() {
            for i in 0..3 {
                lo[i] -= expand;
                hi[i] += expand;
            }
            let a = lo.map(|z| index.key(z));
            let b = hi.map(|z| index.key(z));
            for k0 in a[0]..=b[0] {
                for k1 in a[1]..=b[1] {
                    for k2 in a[2]..=b[2] {
                        index.buckets.entry([k0, k1, k2]).or_default().push(id as u32);
                    }
                }
            }
            index.lo.push(lo);
            index.hi.push(hi);
        }
        index
    }

    fn key(&self, z: f64) -> i32 {
        (z / self.cell).floor() as i32
    }

    fn query(&self, z: [f64; 3]) -> Vec<usize> {
        let Some(ids) = self.buckets.get(&z.map(|x| self.key(x))) else {
            return Vec::new();
        };
        ids.iter()
            .map(|&id| id as usize)
            .filter(|&id| (0..3).all(|i| self.lo[id][i] <= z[i] && z[i] <= self.hi[id][i]))
            .collect()
    }
}

/// The articulatory table: accepted cubes, their acoustic index, build
/// statistics and the configuration they were built with.
#[derive(Debug, Clone)]
pub struct Codebook {
    synth: Synthesizer,
    build: BuildConfig,
    /// Formants of every vertex of an accepted cube.
    vertices: HashMap<LatticeKey, Option<FormantTriple>>,
    cubes: Vec<Hypercube>,
    stats: CodebookStats,
    index: AcousticIndex,
}

impl PartialEq for Codebook {
    fn eq(&self, other: &Self) -> bool {
        self.synth == other.synth
            && self.build == other.build
            && self.vertices == other.vertices
            && self.cubes == other.cubes
            && self.stats == other.stats
    }
}

impl Codebook {
    pub fn build(synth: &Synthesizer, cfg: &BuildConfig) -> Result<Codebook> {
        Self::build_with(synth, synth.clone(), cfg)
    }

    /// Builds over an arbitrary forward map; `snapshot` is recorded as the
    /// configuration the map stands for.
    pub fn build_with<M: ForwardMap + ?Sized>(
        map: &M,
        snapshot: Synthesizer,
        cfg: &BuildConfig,
    ) -> Result<Codebook> {
        cfg.validate()?;
        let mut root = Builder::new(map, cfg);
        let half = root.root_half();
        let center = [half; DIM];
        if let Some(cube) = root.assess(&center, half, 0) {
            root.accepted.push(cube);
        } else if cfg.can_split(PARAM_LIMIT, 0) {
            // Top-level subtrees run independently, each with its own cache,
            // and merge in child order, so results do not depend on scheduling.
            let parts: Vec<Builder<'_, M>> = (0..VERTEX_COUNT)
                .into_par_iter()
                .map(|child| {
                    let mut b = Builder::new(map, cfg);
                    b.visit(corner(&center, half / 2, child), half / 2, 1);
                    b.cache = HashMap::new();
                    b
                })
                .collect();
            for b in parts {
                root.accepted.extend(b.accepted);
                root.pool.extend(b.pool);
                root.points_sampled += b.points_sampled;
            }
        }
        let Builder { accepted, pool, points_sampled, .. } = root;
        Ok(Self::assemble(snapshot, cfg.clone(), pool, accepted, points_sampled))
    }

    fn assemble(
        synth: Synthesizer,
        build: BuildConfig,
        vertices: HashMap<LatticeKey, Option<FormantTriple>>,
        cubes: Vec<Hypercube>,
        points_sampled: u64,
    ) -> Codebook {
        let root = (2.0 * PARAM_LIMIT).powi(DIM as i32);
        let volume: f64 = cubes.iter().map(Hypercube::volume).sum();
        let mean_err = if cubes.is_empty() {
            0.0
        } else {
            cubes.iter().map(|c| c.interp_error_hz).sum::<f64>() / cubes.len() as f64
        };
        let stats = CodebookStats {
            points_sampled,
            cube_count: cubes.len() as u64,
            vertex_count: (VERTEX_COUNT * cubes.len()) as u64,
            volume_fraction_kept: volume / root,
            mean_interp_error_hz: mean_err,
        };
        let bounds = cubes.iter().map(|c| bark_bounds(c, &vertices));
        let index = AcousticIndex::new(bounds, build.linearity_threshold);
        Codebook { synth, build, vertices, cubes, stats, index }
    }

    pub fn cubes(&self) -> &[Hypercube] {
        &self.cubes
    }

    pub fn cube(&self, id: usize) -> &Hypercube {
        &self.cubes[id]
    }

    /// Formants of the vertices of cube `id`, in vertex order.
    pub fn vertex_formants(&self, id: usize) -> Vec<Option<FormantTriple>> {
        let cube = &self.cubes[id];
        (0..VERTEX_COUNT).map(|i| self.vertices[&cube.vertex_key(i)]).collect()
    }

    /// Distinct lattice points stored as vertices.
    pub fn stored_vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn stats(&self) -> &CodebookStats {
        &self.stats
    }

    pub fn build_config(&self) -> &BuildConfig {
        &self.build
    }

    /// Model and acoustic configuration of the build.
    pub fn synthesizer(&self) -> &Synthesizer {
        &self.synth
    }

    /// Ids of all cubes whose threshold-expanded bark box contains `f`,
    /// in ascending order.
    pub fn lookup(&self, f: &FormantTriple) -> Vec<usize> {
        self.index.query(f.to_bark())
    }

    /// Id of the accepted cube containing `v`, if any.
    pub fn locate(&self, v: &ArticulatoryVector) -> Option<usize> {
        self.cubes.iter().position(|c| c.contains(v))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Codebook> {
        Self::from_bytes(&fs::read(path)?)
    }
}

/// Recomputes the test points of cube `id` with `map` and returns the maximum
/// per-formant bark error of interpolating them from the stored vertices.
pub fn linearity_test<M: ForwardMap + ?Sized>(cb: &Codebook, id: usize, map: &M) -> Result<f64> {
    let cube = cb.cube(id);
    let vertices = cb.vertex_formants(id);
    if vertices.iter().all(Option::is_none) {
        return Err(Error::Untestable);
    }
    let tests: Vec<Option<FormantTriple>> = test_points(&cube.center, cube.half_edge)
        .iter()
        .map(|p| evaluate(map, p))
        .collect();
    Ok(interpolation_error(&vertices, &tests).0)
}

/// Per-formant bark bounds of the valid vertices and the centre of `cube`.
fn bark_bounds(cube: &Hypercube, vertices: &HashMap<LatticeKey, Option<FormantTriple>>) -> ([f64; 3], [f64; 3]) {
    let mut lo = cube.center_formants.to_bark();
    let mut hi = lo;
    for i in 0..VERTEX_COUNT {
        if let Some(f) = vertices[&cube.vertex_key(i)] {
            for (k, z) in f.to_bark().into_iter().enumerate() {
                lo[k] = lo[k].min(z);
                hi[k] = hi[k].max(z);
            }
        }
    }
    (lo, hi)
}

fn evaluate<M: ForwardMap + ?Sized>(map: &M, p: &[f64; DIM]) -> Option<FormantTriple> {
    map.evaluate(&ArticulatoryVector::new(*p).ok()?)
}

/// Test point `0` is the centre; `1 + 2k` and `2 + 2k` are the `-` and `+`
/// face centres on axis `k`.
fn test_points(center: &[f64; DIM], half_edge: f64) -> [[f64; DIM]; TEST_POINT_COUNT] {
    let mut out = [*center; TEST_POINT_COUNT];
    for k in 0..DIM {
        out[1 + 2 * k][k] -= half_edge;
        out[2 + 2 * k][k] += half_edge;
    }
    out
}

/// Vertex pairs symmetric about test point `t`. Their midpoints average to
/// the multilinear interpolant at `t`.
fn stencil(t: usize) -> Vec<(usize, usize)> {
    let full = VERTEX_COUNT - 1;
    match t {
        0 => (0..VERTEX_COUNT).filter(|&i| i < full ^ i).map(|i| (i, full ^ i)).collect(),
        _ => {
            let axis = (t - 1) / 2;
            let side = (t - 1) % 2;
            let flip = full ^ (1 << axis);
            (0..VERTEX_COUNT)
                .filter(|&i| (i >> axis) & 1 == side && i < flip ^ i)
                .map(|i| (i, flip ^ i))
                .collect()
        }
    }
}

/// Interpolation at a test point from the valid pairs of its stencil.
fn interpolate(vertices: &[Option<FormantTriple>], t: usize) -> Option<[f64; 3]> {
    let mut sum = [0.0; 3];
    let mut pairs = 0;
    for (a, b) in stencil(t) {
        if let (Some(fa), Some(fb)) = (vertices[a], vertices[b]) {
            let (fa, fb) = (fa.to_array(), fb.to_array());
            for i in 0..3 {
                sum[i] += 0.5 * (fa[i] + fb[i]);
            }
            pairs += 1;
        }
    }
    (pairs > 0).then(|| sum.map(|s| s / pairs as f64))
}

/// Bark and summed absolute Hz error at test point `t`; infinite when the
/// point is invalid or has no valid stencil pair.
fn point_errors(vertices: &[Option<FormantTriple>], t: usize, direct: &Option<FormantTriple>) -> (f64, f64) {
    let (Some(direct), Some(interp)) = (direct, interpolate(vertices, t)) else {
        return (f64::INFINITY, f64::INFINITY);
    };
    let mut worst = 0.0f64;
    let mut hz = 0.0;
    for (i, d) in direct.to_array().into_iter().enumerate() {
        if !(interp[i] > 0.0) {
            return (f64::INFINITY, f64::INFINITY);
        }
        worst = worst.max((bark(interp[i]) - bark(d)).abs());
        hz += (interp[i] - d).abs();
    }
    (worst, hz)
}

fn point_error(vertices: &[Option<FormantTriple>], t: usize, direct: &Option<FormantTriple>) -> f64 {
    point_errors(vertices, t, direct).0
}

/// `(max bark error, mean absolute Hz error)` over all test points.
fn interpolation_error(
    vertices: &[Option<FormantTriple>],
    tests: &[Option<FormantTriple>],
) -> (f64, f64) {
    let mut worst = 0.0f64;
    let mut hz_sum = 0.0;
    for (t, direct) in tests.iter().enumerate() {
        let (bark_err, hz) = point_errors(vertices, t, direct);
        worst = worst.max(bark_err);
        hz_sum += hz;
    }
    (worst, hz_sum / (3 * tests.len()) as f64)
}

/// Lattice spacing fine enough to hold every vertex, test point and Jacobian
/// stencil point of the finest cubes, so evaluations are keyed exactly.
fn lattice_unit(cfg: &BuildConfig) -> f64 {
    PARAM_LIMIT / f64::from(1u32 << (cfg.finest_depth() + 2))
}

fn lattice_coords(p: &LatticeKey, unit: f64) -> [f64; DIM] {
    p.map(|i| f64::from(i) * unit - PARAM_LIMIT)
}

fn offset(p: &LatticeKey, axis: usize, delta: i32) -> LatticeKey {
    let mut q = *p;
    q[axis] = (i32::from(q[axis]) + delta) as u16;
    q
}

fn corner(center: &LatticeKey, half: u16, index: usize) -> LatticeKey {
    let mut p = *center;
    for (k, x) in p.iter_mut().enumerate() {
        *x = if index >> k & 1 == 1 { *x + half } else { *x - half };
    }
    p
}

/// Recursive subdivision with memoised evaluations.
struct Builder<'a, M: ?Sized> {
    map: &'a M,
    cfg: &'a BuildConfig,
    unit: f64,
    cache: HashMap<LatticeKey, Option<FormantTriple>>,
    pool: HashMap<LatticeKey, Option<FormantTriple>>,
    accepted: Vec<Hypercube>,
    points_sampled: u64,
}

impl<'a, M: ForwardMap + ?Sized> Builder<'a, M> {
    fn new(map: &'a M, cfg: &'a BuildConfig) -> Self {
        Builder {
            map,
            cfg,
            unit: lattice_unit(cfg),
            cache: HashMap::new(),
            pool: HashMap::new(),
            accepted: Vec::new(),
            points_sampled: 0,
        }
    }

    fn root_half(&self) -> u16 {
        (PARAM_LIMIT / self.unit).round() as u16
    }

    fn eval(&mut self, p: LatticeKey) -> Option<FormantTriple> {
        if let Some(f) = self.cache.get(&p) {
            return *f;
        }
        let f = evaluate(self.map, &lattice_coords(&p, self.unit));
        self.cache.insert(p, f);
        self.points_sampled += 1;
        f
    }

    fn visit(&mut self, center: LatticeKey, half: u16, depth: u32) {
        if let Some(cube) = self.assess(&center, half, depth) {
            self.accepted.push(cube);
            return;
        }
        let h = f64::from(half) * self.unit;
        if !self.cfg.can_split(h, depth) {
            return;
        }
        let child_half = half / 2;
        for child in 0..VERTEX_COUNT {
            self.visit(corner(&center, child_half, child), child_half, depth + 1);
        }
    }

    fn assess(&mut self, center: &LatticeKey, half: u16, depth: u32) -> Option<Hypercube> {
        let keys: Vec<LatticeKey> = (0..VERTEX_COUNT).map(|v| corner(center, half, v)).collect();
        let vertices: Vec<Option<FormantTriple>> = keys.iter().map(|&k| self.eval(k)).collect();
        let valid = vertices.iter().filter(|f| f.is_some()).count();
        let validity_ratio = valid as f64 / VERTEX_COUNT as f64;
        if 1.0 - validity_ratio > self.cfg.invalid_ratio_threshold {
            return None;
        }
        // Test points one at a time so that failing cubes stop early.
        let mut tests = [None; TEST_POINT_COUNT];
        for (t, slot) in tests.iter_mut().enumerate() {
            let p = match t {
                0 => *center,
                _ => offset(center, (t - 1) / 2, if t % 2 == 0 { half.into() } else { -i32::from(half) }),
            };
            *slot = self.eval(p);
            if !(point_error(&vertices, t, slot) <= self.cfg.linearity_threshold) {
                return None;
            }
        }
        let (linearity_error, interp_error_hz) = interpolation_error(&vertices, &tests);
        let step = i32::from(half / 4);
        let span = 2.0 * f64::from(step) * self.unit;
        let mut jacobian = [[0.0; DIM]; 3];
        for k in 0..DIM {
            let flo = self.eval(offset(center, k, -step))?;
            let fhi = self.eval(offset(center, k, step))?;
            for (r, (a, b)) in flo.to_array().into_iter().zip(fhi.to_array()).enumerate() {
                jacobian[r][k] = (b - a) / span;
            }
        }
        pseudo_inverse(&Jacobian::from_fn(|r, c| jacobian[r][c]))?;
        for (k, f) in keys.into_iter().zip(vertices) {
            self.pool.insert(k, f);
        }
        Some(Hypercube {
            center: lattice_coords(center, self.unit),
            half_edge: f64::from(half) * self.unit,
            depth,
            lattice_center: *center,
            lattice_half: half,
            center_formants: tests[0]?,
            jacobian,
            validity_ratio,
            linearity_error,
            interp_error_hz,
        })
    }
}

/// Configuration snapshot stored in codebook files.
#[derive(Serialize, Deserialize)]
struct Snapshot {
    model: ModelConfig,
    acoustic: AcousticConfig,
    build: BuildConfig,
}

const MAGIC: &[u8; 4] = b"AACB";
const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 4;

impl Codebook {
    /// Binary layout (little-endian), documented in `docs/codebook-format.md`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut payload = Vec::new();
        let snapshot = Snapshot {
            model: self.synth.model.clone(),
            acoustic: self.synth.acoustic.clone(),
            build: self.build.clone(),
        };
        let text = toml::to_string(&snapshot).expect("configuration serializes");
        put_u32(&mut payload, text.len() as u32);
        payload.extend_from_slice(text.as_bytes());
        let s = &self.stats;
        put_u64(&mut payload, s.points_sampled);
        put_u64(&mut payload, s.cube_count);
        put_u64(&mut payload, s.vertex_count);
        put_f64(&mut payload, s.volume_fraction_kept);
        put_f64(&mut payload, s.mean_interp_error_hz);
        let mut keys: Vec<&LatticeKey> = self.vertices.keys().collect();
        keys.sort_unstable();
        put_u64(&mut payload, keys.len() as u64);
        for k in keys {
            k.iter().for_each(|&x| put_u16(&mut payload, x));
            put_triple(&mut payload, self.vertices[k]);
        }
        for cube in &self.cubes {
            write_cube(&mut payload, cube);
        }
        let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, FORMAT_VERSION);
        put_u64(&mut out, payload.len() as u64);
        put_u32(&mut out, crc32fast::hash(&payload));
        out.extend_from_slice(&payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Codebook> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::BadMagic);
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let len = r.u64()? as usize;
        let crc = r.u32()?;
        let payload = r.take(len)?;
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        if crc32fast::hash(payload) != crc {
            return Err(Error::ChecksumMismatch);
        }
        let mut r = Reader { bytes: payload, pos: 0 };
        let text_len = r.u32()? as usize;
        let text = std::str::from_utf8(r.take(text_len)?)
            .map_err(|_| Error::Format("configuration snapshot is not UTF-8".into()))?;
        let snapshot: Snapshot =
            toml::from_str(text).map_err(|e| Error::Format(format!("configuration snapshot: {e}")))?;
        snapshot.build.validate()?;
        let synth = Synthesizer::new(snapshot.model, snapshot.acoustic)?;
        let unit = lattice_unit(&snapshot.build);
        let stored = CodebookStats {
            points_sampled: r.u64()?,
            cube_count: r.u64()?,
            vertex_count: r.u64()?,
            volume_fraction_kept: r.f64()?,
            mean_interp_error_hz: r.f64()?,
        };
        let vertex_records = r.u64()?;
        let mut vertices = HashMap::new();
        for _ in 0..vertex_records {
            let mut key = [0u16; DIM];
            for x in &mut key {
                *x = r.u16()?;
            }
            vertices.insert(key, r.triple()?);
        }
        let mut cubes = Vec::new();
        for _ in 0..stored.cube_count {
            let cube = read_cube(&mut r, unit)?;
            if !(0..VERTEX_COUNT).all(|i| vertices.contains_key(&cube.vertex_key(i))) {
                return Err(Error::Format("cube vertex missing from vertex table".into()));
            }
            cubes.push(cube);
        }
        if r.pos != payload.len() {
            return Err(Error::Format("cube count does not match payload".into()));
        }
        let cb = Self::assemble(synth, snapshot.build, vertices, cubes, stored.points_sampled);
        if stored != cb.stats {
            return Err(Error::Format("stored statistics disagree with cubes".into()));
        }
        Ok(cb)
    }
}

fn put_u16(out: &mut Vec<u8>, x: u16) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_u32(out: &mut Vec<u8>, x: u32) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, x: u64) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, x: f64) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_triple(out: &mut Vec<u8>, f: Option<FormantTriple>) {
    let a = f.map_or([f64::NAN; 3], FormantTriple::to_array);
    a.into_iter().for_each(|x| put_f64(out, x));
}

fn write_cube(out: &mut Vec<u8>, c: &Hypercube) {
    c.lattice_center.iter().for_each(|&x| put_u16(out, x));
    put_u16(out, c.lattice_half);
    put_u32(out, c.depth);
    put_f64(out, c.validity_ratio);
    put_f64(out, c.linearity_error);
    put_f64(out, c.interp_error_hz);
    put_triple(out, Some(c.center_formants));
    c.jacobian.iter().flatten().for_each(|&x| put_f64(out, x));
}

fn read_cube(r: &mut Reader<'_>, unit: f64) -> Result<Hypercube> {
    let mut lattice_center = [0u16; DIM];
    for x in &mut lattice_center {
        *x = r.u16()?;
    }
    let lattice_half = r.u16()?;
    let root = (PARAM_LIMIT / unit).round() as u16;
    if lattice_half == 0
        || lattice_center.iter().any(|&x| x < lattice_half || x + lattice_half > 2 * root)
    {
        return Err(Error::Format("cube outside the root cube".into()));
    }
    let depth = r.u32()?;
    let validity_ratio = r.f64()?;
    let linearity_error = r.f64()?;
    let interp_error_hz = r.f64()?;
    let center_formants =
        r.triple()?.ok_or_else(|| Error::Format("cube centre formants missing".into()))?;
    let mut jacobian = [[0.0; DIM]; 3];
    for x in jacobian.iter_mut().flatten() {
        *x = r.f64()?;
    }
    Ok(Hypercube {
        center: lattice_coords(&lattice_center, unit),
        half_edge: f64::from(lattice_half) * unit,
        depth,
        lattice_center,
        lattice_half,
        center_formants,
        jacobian,
        validity_ratio,
        linearity_error,
        interp_error_hz,
    })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(Error::Truncated)?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn triple(&mut self) -> Result<Option<FormantTriple>> {
        let a = [self.f64()?, self.f64()?, self.f64()?];
        if a.iter().all(|x| x.is_nan()) {
            return Ok(None);
        }
        FormantTriple::from_array(a)
            .map(Some)
            .map_err(|_| Error::Format("stored formants out of order".into()))
    }
}
