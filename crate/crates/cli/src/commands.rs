use std::collections::BTreeSet;
use std::path::PathBuf;

use salient_quant::analysis::table::{fmt_sci, overlap_csv, read_sweep_csv, SweepRow};
use salient_quant::analysis::{iou, reconstruction_error, run_sweep, write_outputs, OverlapRecord};
use salient_quant::io::{load_calibration, load_matrix, parse_config, CalibrationBatch, WeightMatrix};
use salient_quant::quant::{quantize_residual, QuantConfig};
use salient_quant::saliency::{score_layer, top_k_select, Method, ScoreParams, SelectionMask};
use salient_quant::{Error, Result};

use crate::svg::{self, Series};
use crate::{Knobs, OverlapArgs, QuantizeArgs, ReportArgs, SweepArgs};

impl Knobs {
    fn quant_config(&self) -> Result<QuantConfig> {
        QuantConfig::new(self.bits, self.clip)
    }

    fn score_params(&self) -> Result<ScoreParams> {
        if self.rank == 0 {
            return Err(Error::Usage("--rank must be at least 1".into()));
        }
        if !(self.damping.is_finite() && self.damping > 0.0) {
            return Err(Error::Usage(format!("--damping must be > 0, got {}", self.damping)));
        }
        Ok(ScoreParams {
            rank: self.rank,
            damping: self.damping,
            seed: self.seed,
        })
    }

    fn require_calib(&self, methods: &[Method]) -> Result<()> {
        match methods.iter().find(|m| m.needs_calibration()) {
            Some(m) if self.calib.is_none() => Err(Error::Usage(format!(
                "method {m} ranks weights by calibration activations; pass --calib PATH"
            ))),
            _ => Ok(()),
        }
    }

    fn load(&self, weights: &PathBuf) -> Result<(WeightMatrix, Option<CalibrationBatch>)> {
        let w = load_matrix(weights)?;
        let x = match &self.calib {
            Some(p) => Some(load_calibration(p, &w)?),
            None => None,
        };
        Ok((w, x))
    }
}

fn select(
    w: &WeightMatrix,
    x: Option<&CalibrationBatch>,
    method: Method,
    k: usize,
    params: &ScoreParams,
) -> Result<SelectionMask> {
    Ok(match score_layer(w, x, method, params)? {
        Some(s) => top_k_select(&s, k),
        None => SelectionMask::empty(w.name(), Method::None),
    })
}

pub fn quantize(a: QuantizeArgs) -> Result<()> {
    let cfg = a.knobs.quant_config()?;
    let params = a.knobs.score_params()?;
    a.knobs.require_calib(&[a.method])?;
    if a.method == Method::None && a.budget != 0 {
        return Err(Error::Usage(format!(
            "method none is the unprotected baseline and takes --budget 0, got {}",
            a.budget
        )));
    }

    let (w, x) = a.knobs.load(&a.weights)?;
    let mask = select(&w, x.as_ref(), a.method, a.budget, &params)?;
    let q = quantize_residual(&w, &mask, &cfg)?;
    q.save(&a.out)?;
    mask.save(&a.out)?;
    let frob = reconstruction_error(&w, &q)?;
    println!(
        "layer={} method={} k={} scale={} frob_rel={}",
        w.name(),
        a.method,
        mask.k(),
        fmt_sci(q.scale() as f64),
        fmt_sci(frob)
    );
    Ok(())
}

pub fn overlap(a: OverlapArgs) -> Result<()> {
    let params = a.knobs.score_params()?;
    if a.methods.len() < 2 {
        return Err(Error::Usage("--methods needs at least two heuristics, e.g. svd,spqr".into()));
    }
    if a.methods.contains(&Method::None) {
        return Err(Error::Usage("method none selects nothing and has no overlap".into()));
    }
    a.knobs.require_calib(&a.methods)?;

    let (w, x) = a.knobs.load(&a.weights)?;
    let mut records = Vec::new();
    for (i, &ma) in a.methods.iter().enumerate() {
        for &mb in &a.methods[i + 1..] {
            for &k in &a.budget {
                let sa = select(&w, x.as_ref(), ma, k, &params)?;
                let sb = select(&w, x.as_ref(), mb, k, &params)?;
                records.push(OverlapRecord {
                    layer: w.name().to_owned(),
                    method_a: ma,
                    method_b: mb,
                    k,
                    iou: iou(&sa, &sb)?,
                });
            }
        }
    }

    println!("{:<16} {:<8} {:<8} {:>8} {:>9}", "layer", "method_a", "method_b", "k", "iou");
    for r in &records {
        println!(
            "{:<16} {:<8} {:<8} {:>8} {:>9.6}",
            r.layer,
            r.method_a.as_str(),
            r.method_b.as_str(),
            r.k,
            r.iou
        );
    }
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        let path = dir.join("overlap.csv");
        std::fs::write(&path, overlap_csv(&records)).map_err(|e| Error::Io { path, source: e })?;
    }
    Ok(())
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let mut cfg = parse_config(&a.config)?;
    cfg.record_wall_clock |= a.timing;
    let report = run_sweep(&cfg)?;
    write_outputs(&report, &a.out)?;
    println!(
        "{} error rows, {} overlap rows written to {}",
        report.errors.len(),
        report.overlaps.len(),
        a.out.display()
    );
    Ok(())
}

/// Mean of the finite values per (method, budget), methods in order of
/// first appearance.
fn aggregate(rows: &[SweepRow], metric: &str) -> Result<(Vec<usize>, Vec<Series>)> {
    let value = |r: &SweepRow| match metric {
        "out_rel" => r.out_rel,
        _ => Some(r.frob_rel),
    };
    if rows.iter().all(|r| value(r).is_none()) {
        return Err(Error::DataIntegrity(format!("column {metric} is empty in every row")));
    }

    let budgets: Vec<usize> = rows.iter().map(|r| r.k).collect::<BTreeSet<_>>().into_iter().collect();
    let mut methods: Vec<&str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }

    let series = methods
        .into_iter()
        .map(|m| {
            let points = budgets
                .iter()
                .filter_map(|&k| {
                    let vals: Vec<f64> = rows
                        .iter()
                        .filter(|r| r.method == m && r.k == k)
                        .filter_map(value)
                        .filter(|v| v.is_finite())
                        .collect();
                    (!vals.is_empty()).then(|| (k, vals.iter().sum::<f64>() / vals.len() as f64))
                })
                .collect();
            Series {
                name: m.to_owned(),
                points,
            }
        })
        .collect();
    Ok((budgets, series))
}

pub fn report(a: ReportArgs) -> Result<()> {
    let rows = read_sweep_csv(&a.input)?;
    let (budgets, series) = aggregate(&rows, &a.metric)?;
    let out = a.out.clone().unwrap_or_else(|| a.input.with_extension("svg"));
    let doc = svg::render(&series, &budgets, &a.metric);
    std::fs::write(&out, doc).map_err(|e| Error::Io {
        path: out.clone(),
        source: e,
    })?;

    let layers = rows.iter().map(|r| r.layer.as_str()).collect::<BTreeSet<_>>().len();
    println!("mean {} over {layers} layer(s); lower is better", a.metric);
    print!("{:<8}", "method");
    for k in &budgets {
        print!(" {:>12}", format!("k={k}"));
    }
    println!();
    for s in &series {
        print!("{:<8}", s.name);
        for k in &budgets {
            match s.points.iter().find(|(pk, _)| pk == k) {
                Some((_, v)) => print!(" {:>12}", format!("{v:.4e}")),
                None => print!(" {:>12}", "-"),
            }
        }
        println!();
    }
    println!("chart written to {}", out.display());
    Ok(())
}
