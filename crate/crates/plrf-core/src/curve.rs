//! Loss-curve container and its CSV representation.
//!
//! Every producer in the workspace (stochastic runs, ODE integrations, the
//! Volterra oracle) emits the same shape: sampled (time, loss, flops) rows with
//! per-point standard errors and curve-level metadata. Flops follow the budget
//! convention 𝔣 = t · B · d.

use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};

/// Where a curve came from; decides which CSV columns are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveSource {
    Stochastic,
    Ode,
    Volterra,
}

impl CurveSource {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveSource::Stochastic => "stochastic",
            CurveSource::Ode => "ode",
            CurveSource::Volterra => "volterra",
        }
    }
}

/// Identifying metadata carried by every curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub algorithm: String,
    pub alpha: f64,
    pub beta: f64,
    pub d: usize,
    pub v: usize,
    /// Named schedule exponents (κ₁, κ₂, κ₃, δ, …) when applicable.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tags: BTreeMap<String, f64>,
}

/// A sampled loss trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossCurve {
    /// Iteration index (stochastic) or continuous time (ODE), ascending.
    pub times: Vec<f64>,
    /// Population risk (mean over seeds for stochastic curves).
    pub losses: Vec<f64>,
    /// Per-point standard error of the mean; zeros for deterministic curves.
    pub stderr: Vec<f64>,
    /// t · B · d at each sample.
    pub flops: Vec<f64>,
    /// Set when the trajectory blew past the divergence threshold; the curve is
    /// truncated at the last finite point.
    pub diverged: bool,
    pub source: CurveSource,
    /// ODE variant name (`simplified`, `exact`, `coinflip`) or empty.
    pub variant: String,
    pub meta: CurveMeta,
}

impl LossCurve {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Log-log linear interpolation of the loss at a given flops budget.
    /// Returns `None` outside the curve's flops support.
    pub fn loss_at_flops(&self, flops: f64) -> Option<f64> {
        interp_loglog(&self.flops, &self.losses, flops)
    }

    /// Log-log linear interpolation of the loss at a given time.
    pub fn loss_at_time(&self, t: f64) -> Option<f64> {
        interp_loglog(&self.times, &self.losses, t)
    }

    /// Write this curve as CSV. Stochastic curves use the base schema
    /// {t, flops, loss_mean, loss_stderr, d, v, alpha, beta, algorithm, diverged};
    /// ODE/Volterra curves append {source, variant}.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let extra = self.source != CurveSource::Stochastic;
        let mut header = vec![
            "t", "flops", "loss_mean", "loss_stderr", "d", "v", "alpha", "beta",
            "algorithm", "diverged",
        ];
        if extra {
            header.push("source");
            header.push("variant");
        }
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = vec![
                fmt_f64(self.times[i]),
                fmt_f64(self.flops[i]),
                fmt_f64(self.losses[i]),
                fmt_f64(self.stderr[i]),
                self.meta.d.to_string(),
                self.meta.v.to_string(),
                fmt_f64(self.meta.alpha),
                fmt_f64(self.meta.beta),
                self.meta.algorithm.clone(),
                self.diverged.to_string(),
            ];
            if extra {
                rec.push(self.source.as_str().to_string());
                rec.push(self.variant.clone());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read back curves written by [`write_csv`]. Rows are grouped into curves by
    /// (algorithm, d, v, alpha, beta, variant); `#`-prefixed comment lines are
    /// skipped, so config-hash headers are harmless.
    pub fn read_csv<R: io::Read>(input: R) -> csv::Result<Vec<LossCurve>> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .has_headers(true)
            .flexible(true)
            .from_reader(input);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let (it, ifl, ilm, ils) = (
            col("t").expect("t column"),
            col("flops").expect("flops column"),
            col("loss_mean").expect("loss_mean column"),
            col("loss_stderr").expect("loss_stderr column"),
        );
        let (id, iv, ia, ib, ialg, idiv) = (
            col("d").expect("d column"),
            col("v").expect("v column"),
            col("alpha").expect("alpha column"),
            col("beta").expect("beta column"),
            col("algorithm").expect("algorithm column"),
            col("diverged").expect("diverged column"),
        );
        let isrc = col("source");
        let ivar = col("variant");

        let mut groups: Vec<(String, LossCurve)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let get = |i: usize| rec.get(i).unwrap_or("").to_string();
            let variant = ivar.map(&get).unwrap_or_default();
            let source = match isrc.map(&get).as_deref() {
                Some("ode") => CurveSource::Ode,
                Some("volterra") => CurveSource::Volterra,
                _ => CurveSource::Stochastic,
            };
            let key = format!(
                "{}|{}|{}|{}|{}|{}",
                get(ialg), get(id), get(iv), get(ia), get(ib), variant
            );
            let idx = match groups.iter().position(|(k, _)| *k == key) {
                Some(i) => i,
                None => {
                    let meta = CurveMeta {
                        algorithm: get(ialg),
                        alpha: get(ia).parse().unwrap_or(f64::NAN),
                        beta: get(ib).parse().unwrap_or(f64::NAN),
                        d: get(id).parse().unwrap_or(0),
                        v: get(iv).parse().unwrap_or(0),
                        tags: BTreeMap::new(),
                    };
                    groups.push((
                        key,
                        LossCurve {
                            times: vec![],
                            losses: vec![],
                            stderr: vec![],
                            flops: vec![],
                            diverged: false,
                            source,
                            variant,
                            meta,
                        },
                    ));
                    groups.len() - 1
                }
            };
            let curve = &mut groups[idx].1;
            curve.times.push(get(it).parse().unwrap_or(f64::NAN));
            curve.flops.push(get(ifl).parse().unwrap_or(f64::NAN));
            curve.losses.push(get(ilm).parse().unwrap_or(f64::NAN));
            curve.stderr.push(get(ils).parse().unwrap_or(0.0));
            curve.diverged |= get(idiv) == "true";
        }
        Ok(groups.into_iter().map(|(_, c)| c).collect())
    }
}

fn fmt_f64(x: f64) -> String {
    // Shortest round-trip representation: deterministic and lossless, which is
    // what makes manifest replays bit-exact.
    format!("{x}")
}

fn interp_loglog(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    // Queries a rounding error past either end count as the endpoint.
    let (first, last) = (xs[0], *xs.last().unwrap());
    let slack = 1e-9 * (1.0 + x.abs());
    let x = if x > last && x - last < slack {
        last
    } else if x < first && first - x < slack {
        first
    } else {
        x
    };
    if x < first || x > last {
        return None;
    }
    let i = match xs.binary_search_by(|a| a.partial_cmp(&x).unwrap()) {
        Ok(i) => return Some(ys[i]),
        Err(i) => i,
    };
    let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
    if !(y0 > 0.0 && y1 > 0.0) {
        // Fall back to linear interpolation when a log is unavailable.
        return Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0));
    }
    if x0 <= 0.0 {
        let w = (x - x0) / (x1 - x0);
        return Some((y0.ln() + (y1.ln() - y0.ln()) * w).exp());
    }
    let w = (x.ln() - x0.ln()) / (x1.ln() - x0.ln());
    Some((y0.ln() + (y1.ln() - y0.ln()) * w).exp())
}

/// `count` log-spaced points from `min` to `max` inclusive, with the
/// endpoints pinned exactly.
pub fn log_space(min: f64, max: f64, count: usize) -> Vec<f64> {
    assert!(min > 0.0 && max > min && count >= 2, "log_space wants 0 < min < max, count ≥ 2");
    let (a, b) = (min.ln(), max.ln());
    (0..count)
        .map(|i| {
            if i == 0 {
                min
            } else if i == count - 1 {
                max
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

/// Default evaluation grid for iterative runs: {0, 1, …} thinned to roughly
/// `per_decade` points per decade, capped at `cap` points, always ending at
/// `max_iter`.
pub fn iteration_grid(max_iter: u64, per_decade: usize, cap: usize) -> Vec<u64> {
    assert!(max_iter >= 1 && per_decade > 0 && cap > 2);
    let decades = (max_iter as f64).log10().max(1e-9);
    let n = ((decades * per_decade as f64).ceil() as usize).min(cap);
    let mut grid = vec![0u64, 1u64];
    for i in 0..=n {
        let t = (10f64).powf(decades * i as f64 / n as f64).round() as u64;
        let t = t.min(max_iter);
        if *grid.last().unwrap() < t {
            grid.push(t);
        }
    }
    if *grid.last().unwrap() != max_iter {
        grid.push(max_iter);
    }
    grid
}
