//! Command implementations. Usage problems are reported as [`Failure::Usage`]
//! before any file is read or written.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use mvot_core::eval::{
    bench_scaling, format_results, list_frames, load_mot_sequence, parse_mot, report_csv, report_text,
    run_vot_rt, scaling_csv, scaling_table, synth_sequence, Image, LatencyModel, OracleTracker, SynthSpec,
};
use mvot_core::proposal::InertiaTraining;
use mvot_core::tracker::{Tracker, TrackerConfig};
use mvot_core::weights::{NetworkConfig, NetworkWeights};

use crate::args::{
    parse_list, BenchArgs, EvalArgs, InitWeightsArgs, Penalty, SynthArgs, TrackArgs, TrackerFlags,
};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<mvot_core::Error> for Failure {
    fn from(e: mvot_core::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn required<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T, Failure> {
    value
        .as_ref()
        .ok_or_else(|| Failure::Usage(format!("--{flag} is required")))
}

/// Tracker configuration and the source of its weights, checked without I/O.
struct TrackerPlan {
    config: TrackerConfig,
    weights: Option<PathBuf>,
    seed: u64,
}

impl TrackerPlan {
    /// Seeded weights are accepted without `--weights` only in
    /// correlation-only mode or when `allow_seeded` is set.
    fn from_flags(flags: &TrackerFlags, allow_seeded: bool) -> Result<Self, Failure> {
        if flags.weights.is_none() && !flags.correlation_only && !allow_seeded {
            return Err(Failure::Usage(
                "--weights is required unless --correlation-only is set".into(),
            ));
        }
        let mut config = if flags.correlation_only {
            TrackerConfig::correlation_only()
        } else {
            TrackerConfig::default()
        };
        let p = &mut config.penalty;
        for d in &flags.disable_penalty {
            match d {
                Penalty::Shape => p.shape = false,
                Penalty::Distractor => p.distractor = false,
                Penalty::Erosion => p.erosion = false,
                Penalty::Spatial => p.spatial = false,
            }
        }
        if let Some(v) = flags.beta {
            p.beta = v;
        }
        if let Some(v) = flags.window_influence {
            p.window_influence = v;
        }
        if let Some(v) = flags.tau {
            p.tau = v;
        }
        config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(TrackerPlan {
            config,
            weights: flags.weights.clone(),
            seed: flags.seed.unwrap_or(0),
        })
    }

    fn weights(&self) -> anyhow::Result<NetworkWeights> {
        match &self.weights {
            Some(path) => {
                NetworkWeights::load(path).with_context(|| format!("loading weights {}", path.display()))
            }
            None => Ok(NetworkWeights::init(&NetworkConfig::default(), self.seed)),
        }
    }

    fn tracker(&self) -> anyhow::Result<Tracker> {
        Ok(Tracker::new(self.weights()?, self.config.clone())?)
    }
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn track(args: &TrackArgs) -> Outcome {
    let frames_dir = required(&args.frames, "frames")?;
    let init = required(&args.init, "init")?;
    let out = required(&args.out, "out")?;
    let plan = TrackerPlan::from_flags(&args.tracker, false)?;

    let text = fs::read_to_string(init).with_context(|| format!("reading {}", init.display()))?;
    let boxes: Vec<_> = parse_mot(&text)?
        .frames
        .get(&1)
        .map(|b| b.iter().map(|(id, b)| (*id, *b)).collect())
        .unwrap_or_default();
    if boxes.is_empty() {
        return Err(anyhow::anyhow!("{} has no boxes for frame 1", init.display()).into());
    }
    let paths =
        list_frames(frames_dir).with_context(|| format!("listing frames in {}", frames_dir.display()))?;
    if paths.is_empty() {
        return Err(anyhow::anyhow!("no .ppm frames in {}", frames_dir.display()).into());
    }

    let mut tracker = plan.tracker()?;
    let mut rows = Vec::new();
    for (i, path) in paths.iter().enumerate() {
        let frame = Image::load_ppm(path)
            .with_context(|| format!("reading {}", path.display()))?
            .to_tensor();
        if i == 0 {
            tracker.init_targets(&frame, &boxes)?;
            rows.extend(boxes.iter().map(|(id, b)| (1, *id, *b, 1.0)));
            continue;
        }
        for o in tracker.track_frame(&frame)? {
            rows.push((i + 1, o.id, o.bbox, o.confidence));
        }
    }
    write(out, &format_results(&rows))?;
    log::info!("tracked {} targets over {} frames", boxes.len(), paths.len());
    Ok(())
}

fn budget_label(fps: f64) -> String {
    format!("{fps}").replace('.', "_")
}

pub fn eval(args: &EvalArgs) -> Outcome {
    let frames_dir = required(&args.frames, "frames")?;
    let gt = required(&args.gt, "gt")?;
    let out = required(&args.out, "out")?;
    let budgets: Vec<f64> =
        parse_list(args.fps_budget.as_deref().unwrap_or("20,25"), "fps budget").map_err(Failure::Usage)?;
    if budgets.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
        return Err(Failure::Usage("fps budgets must be positive".into()));
    }
    let latency = match args.latency_inject_ms {
        Some(ms) => LatencyModel::injected(ms).map_err(|e| Failure::Usage(e.to_string()))?,
        None => LatencyModel::Measured,
    };
    let plan = if args.oracle {
        None
    } else {
        Some(TrackerPlan::from_flags(&args.tracker, false)?)
    };

    let seq = load_mot_sequence(gt, frames_dir, budgets[0]).with_context(|| {
        format!(
            "loading {} with frames from {}",
            gt.display(),
            frames_dir.display()
        )
    })?;
    if seq.is_empty() {
        return Err(anyhow::anyhow!("no .ppm frames in {}", frames_dir.display()).into());
    }
    let weights = plan.as_ref().map(|p| p.weights()).transpose()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for &fps in &budgets {
        let report = match (&plan, &weights) {
            (Some(p), Some(w)) => run_vot_rt(
                &mut Tracker::new(w.clone(), p.config.clone())?,
                &seq,
                fps,
                latency,
            )?,
            _ => run_vot_rt(
                &mut OracleTracker::new(seq.ground_truth.clone()),
                &seq,
                fps,
                latency,
            )?,
        };
        let stem = out.join(format!("report_fps{}", budget_label(fps)));
        write(&stem.with_extension("txt"), &report_text(&report))?;
        write(&stem.with_extension("csv"), &report_csv(&report))?;
        println!(
            "fps {fps}: accuracy {:.4} robustness {:.4} failures {}",
            report.accuracy, report.robustness, report.failures
        );
    }
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Outcome {
    let out = required(&args.out, "out")?;
    let spec = SynthSpec::lanes(
        args.objects.unwrap_or(4),
        args.width.unwrap_or(640),
        args.height.unwrap_or(480),
        args.length.unwrap_or(60),
        args.seed.unwrap_or(0),
    )
    .map_err(|e| Failure::Usage(e.to_string()))?;
    if spec.frames == 0 {
        return Err(Failure::Usage("--length must be positive".into()));
    }
    let seq = synth_sequence(&spec)?;
    seq.save(out)
        .with_context(|| format!("writing sequence to {}", out.display()))?;
    log::info!("wrote {} frames to {}", seq.len(), out.display());
    Ok(())
}

pub fn init_weights(args: &InitWeightsArgs) -> Outcome {
    let out = required(&args.out, "out")?;
    let seed = args.seed.unwrap_or(0);
    let cfg = NetworkConfig::default();
    let weights = if args.train_inertia {
        let training = InertiaTraining {
            seed,
            ..InertiaTraining::default()
        };
        NetworkWeights::init_trained(&cfg, seed, &training)?
    } else {
        NetworkWeights::init(&cfg, seed)
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    weights
        .save(out)
        .with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

pub fn bench(args: &BenchArgs) -> Outcome {
    let counts: Vec<usize> =
        parse_list(args.targets.as_deref().unwrap_or("1,8,32"), "target count").map_err(Failure::Usage)?;
    if counts.contains(&0) {
        return Err(Failure::Usage("target counts must be positive".into()));
    }
    let repetitions = args.repetitions.unwrap_or(3);
    if repetitions == 0 {
        return Err(Failure::Usage("--repetitions must be positive".into()));
    }
    // Timing does not depend on trained values, so seeded weights are allowed.
    let plan = TrackerPlan::from_flags(&args.tracker, true)?;
    let frame = (args.width.unwrap_or(640), args.height.unwrap_or(480));
    let rows = bench_scaling(&plan.weights()?, &plan.config, frame, &counts, repetitions)?;
    print!("{}", scaling_table(&rows));
    if let Some(out) = &args.out {
        write(out, &scaling_csv(&rows))?;
    }
    Ok(())
}
