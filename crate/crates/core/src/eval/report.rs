//! Text and comma-separated renderings of an evaluation report.

use std::fmt::Write as _;

use crate::eval::vot::{EvalReport, REINIT_DELAY, ROBUSTNESS_FORMULA};

fn config_echo(r: &EvalReport) -> Vec<(&'static str, String)> {
    vec![
        ("protocol", "vot-rt".into()),
        ("fps_budget", r.fps_budget.to_string()),
        ("gamma", r.gamma.to_string()),
        ("robustness_formula", ROBUSTNESS_FORMULA.into()),
        ("failure_rule", "iou==0".into()),
        ("reinit_delay_frames", REINIT_DELAY.to_string()),
        ("aggregation", "unweighted_mean_over_targets".into()),
        ("accuracy_includes_fallback", "true".into()),
        ("latency", r.latency.describe()),
    ]
}

fn fmt_acc(a: Option<f64>) -> String {
    a.map_or_else(|| "nan".into(), |v| format!("{v:.6}"))
}

/// Key-value header followed by a per-target table.
pub fn report_text(r: &EvalReport) -> String {
    let mut out = String::from("# tracking evaluation report\n");
    for (k, v) in config_echo(r) {
        writeln!(out, "{k} = {v}").unwrap();
    }
    let mean_latency = if r.latencies_ms.len() > 1 {
        r.latencies_ms[1..].iter().sum::<f64>() / (r.latencies_ms.len() - 1) as f64
    } else {
        0.0
    };
    for (k, v) in [
        ("frames", r.frames.to_string()),
        ("fresh_predictions", r.fresh_predictions().to_string()),
        ("skipped_frames", r.skipped_frames().to_string()),
        ("mean_latency_ms", format!("{mean_latency:.3}")),
        ("accuracy", format!("{:.6}", r.accuracy)),
        ("robustness", format!("{:.6}", r.robustness)),
        ("failures", r.failures.to_string()),
    ] {
        writeln!(out, "{k} = {v}").unwrap();
    }
    writeln!(
        out,
        "\n{:>8} {:>10} {:>10} {:>8} {:>9}",
        "id", "accuracy", "robustness", "failures", "evaluated"
    )
    .unwrap();
    for t in &r.per_target {
        writeln!(
            out,
            "{:>8} {:>10} {:>10.6} {:>8} {:>9}",
            t.id,
            fmt_acc(t.accuracy),
            t.robustness,
            t.failures,
            t.evaluated_frames
        )
        .unwrap();
    }
    out
}

/// Config echo as a comment line, then one row per target and an `all` row.
pub fn report_csv(r: &EvalReport) -> String {
    let echo: Vec<String> = config_echo(r)
        .into_iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    let mut out = format!("# {}\n", echo.join(";"));
    out.push_str("id,accuracy,robustness,failures,evaluated_frames,accuracy_frames\n");
    for t in &r.per_target {
        writeln!(
            out,
            "{},{},{:.6},{},{},{}",
            t.id,
            fmt_acc(t.accuracy),
            t.robustness,
            t.failures,
            t.evaluated_frames,
            t.accuracy_frames
        )
        .unwrap();
    }
    let evaluated: usize = r.per_target.iter().map(|t| t.evaluated_frames).sum();
    let acc_frames: usize = r.per_target.iter().map(|t| t.accuracy_frames).sum();
    writeln!(
        out,
        "all,{:.6},{:.6},{},{},{}",
        r.accuracy, r.robustness, r.failures, evaluated, acc_frames
    )
    .unwrap();
    out
}
