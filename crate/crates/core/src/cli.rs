//! Command-line front end. [`dispatch`] is the whole program; `main` only
//! forwards the process arguments and exit code.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::acoustics::FormantTriple;
use crate::codebook::Codebook;
use crate::config::Config;
use crate::constraints::{phonetic_score, ConstraintType};
use crate::error::{Error, Result};
use crate::forward::ForwardMap;
use crate::inversion::{self, Candidate, FormantTrack};
use crate::model::{self, ArticulatoryVector, ModelConfig};
use crate::partition::{self, PartitionMode, PartitionModel};
use crate::vowel::Vowel;

/// Seed used by every subcommand when `--seed` is omitted.
pub const DEFAULT_SEED: u64 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_UNREACHABLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "artinv", version, about = "Phonetically constrained acoustic-to-articulatory inversion")]
pub struct Cli {
    /// TOML configuration file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Area function and formants of one articulatory vector.
    Synth {
        /// Seven comma-separated parameters in σ units.
        #[arg(long, allow_hyphen_values = true)]
        vector: ArticulatoryVector,
        /// Write the area CSV here instead of after the formants.
        #[arg(long)]
        area_out: Option<PathBuf>,
    },
    /// Build or inspect a codebook file.
    #[command(subcommand)]
    Codebook(CodebookCommand),
    /// Vowel region of a formant triple.
    Classify {
        #[arg(long)]
        prototypes: PathBuf,
        #[arg(long)]
        formants: FormantTriple,
        #[arg(long)]
        mode: Option<PartitionMode>,
    },
    /// Phonetic score of a vector for a vowel.
    Score {
        #[arg(long, allow_hyphen_values = true)]
        vector: ArticulatoryVector,
        #[arg(long)]
        vowel: Vowel,
    },
    /// Self-calibrated vowel prototypes as CSV.
    Calibrate {
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        mode: Option<PartitionMode>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Confusion matrix of fresh ideal-domain samples.
    Consistency {
        #[arg(long)]
        prototypes: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        mode: Option<PartitionMode>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Articulatory trajectory of a formant track.
    Invert {
        #[command(flatten)]
        inputs: InversionInputs,
        /// Formant track CSV with header `t_ms,f1,f2,f3`.
        #[arg(long)]
        track: PathBuf,
        #[arg(long)]
        dyn_weight: Option<f64>,
        #[arg(long)]
        phon_weight: Option<f64>,
        #[arg(long)]
        candidates: Option<usize>,
        #[arg(long)]
        tolerance_bark: Option<f64>,
        /// Matching codebook cubes sampled per frame.
        #[arg(long)]
        max_cubes: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Constriction place, area and score of the inverse solutions of one triple.
    ConstrictionScatter {
        #[command(flatten)]
        inputs: InversionInputs,
        #[arg(long)]
        formants: FormantTriple,
        /// Maximum number of solutions listed.
        #[arg(long, default_value_t = 1000)]
        candidates: usize,
        #[arg(long)]
        tolerance_bark: Option<f64>,
        #[arg(long)]
        max_cubes: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct InversionInputs {
    #[arg(long)]
    pub codebook: PathBuf,
    #[arg(long)]
    pub prototypes: PathBuf,
    #[arg(long)]
    pub mode: Option<PartitionMode>,
}

#[derive(Debug, Subcommand)]
pub enum CodebookCommand {
    Build {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        max_depth: Option<u32>,
        #[arg(long)]
        threshold_bark: Option<f64>,
        #[arg(long)]
        min_half_edge: Option<f64>,
        #[arg(long)]
        invalid_ratio: Option<f64>,
    },
    Info {
        path: PathBuf,
    },
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn dispatch<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let shown = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let text = e.render().to_string();
            if shown {
                let _ = out.write_all(text.as_bytes());
                return EXIT_OK;
            }
            let _ = err.write_all(text.as_bytes());
            return EXIT_USAGE;
        }
    };
    match run(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Unreachable { .. } => EXIT_UNREACHABLE,
                _ => EXIT_DATA,
            }
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    match &cli.config {
        Some(path) => Config::load(path),
        None => Ok(Config::default()),
    }
}

fn emit(out: &mut dyn Write, path: &Option<PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load_prototypes(path: &PathBuf, mode: Option<PartitionMode>, cfg: &Config) -> Result<PartitionModel> {
    let text = std::fs::read_to_string(path)?;
    PartitionModel::from_csv(&text, mode.unwrap_or(cfg.calibration.mode))
}

fn formants_csv(f: &FormantTriple) -> String {
    format!("f1,f2,f3\n{:.6},{:.6},{:.6}\n", f.f1, f.f2, f.f3)
}

/// `section,x_cm,length_cm,area_cm2` with `x_cm` at each section midpoint.
pub fn area_csv(v: &ArticulatoryVector, cfg: &ModelConfig) -> String {
    let af = model::to_area_function(v, cfg);
    let mut out = String::from("section,x_cm,length_cm,area_cm2\n");
    let mut start = 0.0;
    for (i, s) in af.sections().iter().enumerate() {
        let _ = writeln!(out, "{i},{:.6},{:.6},{:.6}", start + 0.5 * s.length, s.length, s.area);
        start += s.length;
    }
    out
}

/// One `place_cm,area_cm2,score` row per candidate, best score first.
pub fn emit_scatter(candidates: &[Candidate], cfg: &ModelConfig) -> String {
    let mut rows = Vec::with_capacity(candidates.len());
    for c in candidates {
        let k = model::constriction_profile(&model::to_area_function(&c.vector, cfg))
            .expect("model area functions have sections");
        rows.push((k.place, k.area, c.phonetic.overall));
    }
    rows.sort_by(|a, b| b.2.total_cmp(&a.2));
    let mut out = String::from("place_cm,area_cm2,score\n");
    for (place, area, score) in rows {
        let _ = writeln!(out, "{place:.6},{area:.6},{score:.6}");
    }
    out
}

fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(cli)?;
    match &cli.command {
        Command::Synth { vector, area_out } => {
            let synth = cfg.synthesizer()?;
            let f = synth.formants(vector)?;
            let area = area_csv(vector, &synth.model);
            match area_out {
                Some(p) => {
                    std::fs::write(p, area)?;
                    out.write_all(formants_csv(&f).as_bytes())?;
                }
                None => write!(out, "{}\n{area}", formants_csv(&f))?,
            }
        }
        Command::Codebook(CodebookCommand::Build { out: path, max_depth, threshold_bark, min_half_edge, invalid_ratio }) => {
            let b = &mut cfg.build;
            b.max_depth = max_depth.unwrap_or(b.max_depth);
            b.linearity_threshold = threshold_bark.unwrap_or(b.linearity_threshold);
            b.min_half_edge = min_half_edge.unwrap_or(b.min_half_edge);
            b.invalid_ratio_threshold = invalid_ratio.unwrap_or(b.invalid_ratio_threshold);
            let cb = Codebook::build(&cfg.synthesizer()?, &cfg.build)?;
            cb.save(path)?;
            out.write_all(info_text(&cb).as_bytes())?;
        }
        Command::Codebook(CodebookCommand::Info { path }) => {
            out.write_all(info_text(&Codebook::load(path)?).as_bytes())?;
        }
        Command::Classify { prototypes, formants, mode } => {
            let pm = load_prototypes(prototypes, *mode, &cfg)?;
            writeln!(out, "{}", partition::classify(formants, &pm))?;
        }
        Command::Score { vector, vowel } => {
            let s = phonetic_score(vector, *vowel, &cfg.spec()?, &cfg.model);
            let mut text = String::from("vowel,overall");
            for t in ConstraintType::ALL {
                let _ = write!(text, ",{}", t.letter());
            }
            let _ = write!(text, "\n{vowel},{:.6}", s.overall);
            for t in ConstraintType::ALL {
                let _ = write!(text, ",{:.6}", s.component(t));
            }
            writeln!(out, "{text}")?;
        }
        Command::Calibrate { samples, mode, out: path } => {
            let n = samples.unwrap_or(cfg.calibration.samples_per_vowel);
            let mode = mode.unwrap_or(cfg.calibration.mode);
            let pm = partition::calibrate_prototypes(&cfg.synthesizer()?, &cfg.spec()?, n, cli.seed, mode)?;
            emit(out, path, &pm.to_csv())?;
        }
        Command::Consistency { prototypes, samples, mode, out: path } => {
            let pm = load_prototypes(prototypes, *mode, &cfg)?;
            let rep = partition::consistency_report(&pm, &cfg.spec()?, &cfg.synthesizer()?, *samples, cli.seed)?;
            emit(out, path, &rep.to_csv())?;
        }
        Command::Invert { inputs, track, dyn_weight, phon_weight, candidates, tolerance_bark, max_cubes, out: path } => {
            let o = &mut cfg.inversion;
            o.dyn_weight = dyn_weight.unwrap_or(o.dyn_weight);
            o.phon_weight = phon_weight.unwrap_or(o.phon_weight);
            o.candidates = candidates.unwrap_or(o.candidates);
            o.tolerance_bark = tolerance_bark.unwrap_or(o.tolerance_bark);
            o.max_cubes = max_cubes.unwrap_or(o.max_cubes);
            o.seed = cli.seed;
            let track = FormantTrack::from_csv(&std::fs::read_to_string(track)?)?;
            let (cb, pm) = inversion_inputs(inputs, &cfg)?;
            let spec = spec_for(&cb, &cfg)?;
            let traj = inversion::invert_track(&track, &cb, &spec, &pm, &cfg.inversion)?;
            emit(out, path, &traj.to_csv())?;
        }
        Command::ConstrictionScatter { inputs, formants, candidates, tolerance_bark, max_cubes, out: path } => {
            let o = &mut cfg.inversion;
            o.tolerance_bark = tolerance_bark.unwrap_or(o.tolerance_bark);
            o.max_cubes = max_cubes.unwrap_or(o.max_cubes);
            o.seed = cli.seed;
            o.validate()?;
            let (cb, pm) = inversion_inputs(inputs, &cfg)?;
            let spec = spec_for(&cb, &cfg)?;
            let mut sols = inversion::inverse_solutions(formants, &cb, &spec, &pm, &cfg.inversion);
            if sols.is_empty() {
                return Err(Error::Unreachable { frame: 0 });
            }
            sols.truncate(*candidates);
            emit(out, path, &emit_scatter(&sols, &cb.synthesizer().model))?;
        }
    }
    Ok(())
}

fn inversion_inputs(inputs: &InversionInputs, cfg: &Config) -> Result<(Codebook, PartitionModel)> {
    let cb = Codebook::load(&inputs.codebook)?;
    let pm = load_prototypes(&inputs.prototypes, inputs.mode, cfg)?;
    Ok((cb, pm))
}

/// Constraint spec on the axes of the model the codebook was built with.
fn spec_for(cb: &Codebook, cfg: &Config) -> Result<crate::constraints::ConstraintSpec> {
    let mut cfg = cfg.clone();
    cfg.model = cb.synthesizer().model.clone();
    cfg.spec()
}

fn info_text(cb: &Codebook) -> String {
    let s = cb.stats();
    let b = cb.build_config();
    format!(
        "points_sampled={}\ncube_count={}\nvertex_count={}\nvolume_fraction_kept={:.6}\nmean_interp_error_hz={:.6}\n\
         linearity_threshold_bark={}\nmin_half_edge={}\nmax_depth={}\ninvalid_ratio_threshold={}\n",
        s.points_sampled,
        s.cube_count,
        s.vertex_count,
        s.volume_fraction_kept,
        s.mean_interp_error_hz,
        b.linearity_threshold,
        b.min_half_edge,
        b.max_depth,
        b.invalid_ratio_threshold,
    )
}
