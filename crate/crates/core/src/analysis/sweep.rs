use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use super::metrics::{iou, output_error, reconstruction_error};
use crate::error::{Error, Result};
use crate::io::{load_calibration, load_matrix, CalibrationBatch, SweepConfig, WeightMatrix};
use crate::quant::{quantize_residual, QuantConfig};
use crate::saliency::{score_layer, top_k_select, Method, ScoreMatrix, ScoreParams, SelectionMask};

/// Error metrics for one (layer, method, budget) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub layer: String,
    pub method: Method,
    pub k: usize,
    /// `+∞` marks a degenerate (zero) denominator.
    #[serde(serialize_with = "metric")]
    pub frob_rel: f64,
    /// Absent when the layer has no calibration batch.
    #[serde(serialize_with = "opt_metric")]
    pub out_rel: Option<f64>,
    /// Selection, quantization and measurement time. Excluded from equality
    /// checks between runs.
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapRecord {
    pub layer: String,
    pub method_a: Method,
    pub method_b: Method,
    pub k: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub errors: Vec<ErrorRecord>,
    pub overlaps: Vec<OverlapRecord>,
}

impl SweepReport {
    /// Records with wall-clock fields zeroed, for run-to-run comparison.
    pub fn without_timings(&self) -> (Vec<ErrorRecord>, Vec<OverlapRecord>) {
        let errors = self
            .errors
            .iter()
            .cloned()
            .map(|mut r| {
                r.wall_ms = 0.0;
                r
            })
            .collect();
        (errors, self.overlaps.clone())
    }
}

fn metric<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

fn opt_metric<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => metric(v, s),
        None => s.serialize_none(),
    }
}

/// Order in which cells are evaluated. Results are identical for every
/// order; the non-canonical ones exist to check exactly that.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellOrder {
    Canonical,
    Reversed,
    Shuffled(u64),
}

struct Layer {
    weights: WeightMatrix,
    calibration: Option<CalibrationBatch>,
}

#[derive(Clone, Copy)]
struct Cell {
    layer: usize,
    method: usize,
    budget: usize,
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    run_sweep_ordered(cfg, CellOrder::Canonical)
}

/// Scores, selects, quantizes and measures every (layer, method, budget)
/// cell, then computes pairwise IoU between the selecting methods.
///
/// Cells run in parallel. Random and SVD sketches are seeded from the
/// config seed and the layer name only, so results do not depend on
/// scheduling and selections are nested across budgets.
pub fn run_sweep_ordered(cfg: &SweepConfig, order: CellOrder) -> Result<SweepReport> {
    let entries = cfg.resolve_layers()?;
    let layers: Vec<Layer> = entries
        .par_iter()
        .map(|e| {
            let weights = load_matrix(&e.weights)?.with_name(e.name.clone());
            let calibration = match &e.calibration {
                Some(p) => Some(load_calibration(p, &weights)?),
                None => None,
            };
            Ok(Layer {
                weights,
                calibration,
            })
        })
        .collect::<Result<_>>()?;
    run_on_layers(cfg, &layers, order)
}

/// Runs a sweep on in-memory layers; the config's `layers` and
/// `calibration` fields are ignored.
pub fn run_sweep_in_memory(
    cfg: &SweepConfig,
    layers: &[(WeightMatrix, Option<CalibrationBatch>)],
    order: CellOrder,
) -> Result<SweepReport> {
    let layers: Vec<Layer> = layers
        .iter()
        .map(|(w, x)| {
            if let Some(x) = x {
                x.check_layer(w, "sweep calibration")?;
            }
            Ok(Layer {
                weights: w.clone(),
                calibration: x.clone(),
            })
        })
        .collect::<Result<_>>()?;
    run_on_layers(cfg, &layers, order)
}

fn permute<T>(items: &mut [T], order: CellOrder) {
    match order {
        CellOrder::Canonical => {}
        CellOrder::Reversed => items.reverse(),
        CellOrder::Shuffled(seed) => items.shuffle(&mut ChaCha8Rng::seed_from_u64(seed)),
    }
}

fn score(layer: &Layer, method: Method, cfg: &SweepConfig) -> Result<Option<ScoreMatrix>> {
    let params = ScoreParams {
        rank: cfg.rank,
        damping: cfg.damping,
        seed: cfg.seed,
    };
    score_layer(&layer.weights, layer.calibration.as_ref(), method, &params)
}

fn run_on_layers(cfg: &SweepConfig, layers: &[Layer], order: CellOrder) -> Result<SweepReport> {
    let qcfg = cfg.quant_config();
    let n_methods = cfg.methods.len();
    let n_budgets = cfg.budgets.len();

    // scores are budget-independent: one per (layer, method)
    let mut pairs: Vec<(usize, usize)> = (0..layers.len())
        .flat_map(|l| (0..n_methods).map(move |m| (l, m)))
        .collect();
    permute(&mut pairs, order);
    let mut scored: Vec<((usize, usize), Result<Option<ScoreMatrix>>)> = pairs
        .par_iter()
        .map(|&(l, m)| ((l, m), score(&layers[l], cfg.methods[m], cfg)))
        .collect();
    scored.sort_by_key(|(key, _)| *key);
    let mut scores = Vec::with_capacity(scored.len());
    for ((l, m), s) in scored {
        let s = s.map_err(|e| Error::Cell {
            layer: layers[l].weights.name().to_owned(),
            method: cfg.methods[m].to_string(),
            k: cfg.budgets[0],
            source: Box::new(e),
        })?;
        scores.push(s);
    }

    let mut cells: Vec<(usize, Cell)> = (0..layers.len())
        .flat_map(|layer| {
            (0..n_methods).flat_map(move |method| {
                (0..n_budgets).map(move |budget| Cell {
                    layer,
                    method,
                    budget,
                })
            })
        })
        .enumerate()
        .collect();
    permute(&mut cells, order);

    let mut done: Vec<(usize, Result<(ErrorRecord, SelectionMask)>)> = cells
        .par_iter()
        .map(|&(idx, cell)| {
            let s = scores[cell.layer * n_methods + cell.method].as_ref();
            (idx, run_cell(cfg, &qcfg, &layers[cell.layer], cell, s))
        })
        .collect();
    done.sort_by_key(|(idx, _)| *idx);

    let mut errors = Vec::with_capacity(done.len());
    let mut masks = Vec::with_capacity(done.len());
    for (idx, res) in done {
        let cell = cell_at(idx, n_methods, n_budgets);
        let (rec, mask) = res.map_err(|e| Error::Cell {
            layer: layers[cell.layer].weights.name().to_owned(),
            method: cfg.methods[cell.method].to_string(),
            k: cfg.budgets[cell.budget],
            source: Box::new(e),
        })?;
        errors.push(rec);
        masks.push(mask);
    }

    let mut overlaps = Vec::new();
    for (l, layer) in layers.iter().enumerate() {
        for a in 0..n_methods {
            for b in a + 1..n_methods {
                let (ma, mb) = (cfg.methods[a], cfg.methods[b]);
                if !(ma.selects() && mb.selects()) {
                    continue;
                }
                for (bi, &k) in cfg.budgets.iter().enumerate() {
                    let at = |m: usize| (l * n_methods + m) * n_budgets + bi;
                    overlaps.push(OverlapRecord {
                        layer: layer.weights.name().to_owned(),
                        method_a: ma,
                        method_b: mb,
                        k,
                        iou: iou(&masks[at(a)], &masks[at(b)])?,
                    });
                }
            }
        }
    }

    Ok(SweepReport {
        config: cfg.clone(),
        errors,
        overlaps,
    })
}

fn cell_at(idx: usize, n_methods: usize, n_budgets: usize) -> Cell {
    Cell {
        layer: idx / (n_methods * n_budgets),
        method: (idx / n_budgets) % n_methods,
        budget: idx % n_budgets,
    }
}

fn run_cell(
    cfg: &SweepConfig,
    qcfg: &QuantConfig,
    layer: &Layer,
    cell: Cell,
    scores: Option<&ScoreMatrix>,
) -> Result<(ErrorRecord, SelectionMask)> {
    let w = &layer.weights;
    let method = cfg.methods[cell.method];
    let k = cfg.budgets[cell.budget];
    let start = Instant::now();
    let mask = match scores {
        Some(s) => top_k_select(s, k),
        None => SelectionMask::from_indices(w.name(), Method::None, k, Vec::new()),
    };
    let q = quantize_residual(w, &mask, qcfg)?;
    let frob_rel = reconstruction_error(w, &q)?;
    let out_rel = match &layer.calibration {
        Some(x) => Some(output_error(w, &q, x)?),
        None => None,
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok((
        ErrorRecord {
            layer: w.name().to_owned(),
            method,
            k,
            frob_rel,
            out_rel,
            wall_ms,
        },
        mask,
    ))
}

/// Writes `sweep.csv`, `overlap.csv` and `report.json` into `dir`.
pub fn write_outputs(report: &SweepReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    };
    write("sweep.csv", super::table::sweep_csv(report))?;
    write("overlap.csv", super::table::overlap_csv(&report.overlaps))?;
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    write("report.json", json)
}
