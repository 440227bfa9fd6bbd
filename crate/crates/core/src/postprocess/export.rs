//! Plot-ready CSV files.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{HmtmError, Result};
use crate::sampler::state::McmcTrace;

use super::{posterior_means, posterior_mode_path, regime_maps, RegimeSummary};

fn csv_err(path: &Path, e: csv::Error) -> HmtmError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HmtmError::io(path, io),
        other => HmtmError::Parse(format!("{}: {other:?}", path.display())),
    }
}

/// Writes `latent_regime_<k>.csv` per regime into `dir` with columns
/// `node,label,dim_1..dim_R,cluster`; nodes are 0-based and `cluster` is
/// empty when no clustering was done. Returns the written paths.
pub fn export_latent(summaries: &[RegimeSummary], node_labels: Option<&[String]>, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| HmtmError::io(dir, e))?;
    let mut written = Vec::with_capacity(summaries.len());
    for s in summaries {
        let path = dir.join(format!("latent_regime_{}.csv", s.regime));
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        let rank = s.u_mean.ncols();
        let mut header = vec!["node".to_string(), "label".to_string()];
        header.extend((1..=rank).map(|r| format!("dim_{r}")));
        header.push("cluster".into());
        w.write_record(&header).map_err(|e| csv_err(&path, e))?;
        for i in 0..s.u_mean.nrows() {
            let mut rec = vec![
                i.to_string(),
                node_labels.map_or_else(|| i.to_string(), |l| l[i].clone()),
            ];
            rec.extend((0..rank).map(|r| s.u_mean[(i, r)].to_string()));
            rec.push(s.cluster_labels.as_ref().map_or(String::new(), |c| c[i].to_string()));
            w.write_record(&rec).map_err(|e| csv_err(&path, e))?;
        }
        w.flush().map_err(|e| HmtmError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Writes one row per layer with columns `t,regime,v_1..v_R` followed by
/// `v_r_lower,v_r_upper` (95% credible bounds). Layers and regimes are
/// 1-based; columns follow the same convention as the latent export.
pub fn export_rules(trace: &McmcTrace, path: &Path) -> Result<()> {
    let means = posterior_means(trace)?;
    let mode = posterior_mode_path(trace);
    let maps = regime_maps(&means, &mode);
    let rank = means.v.ncols();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header = vec!["t".to_string(), "regime".to_string()];
    header.extend((1..=rank).map(|r| format!("v_{r}")));
    for r in 1..=rank {
        header.push(format!("v_{r}_lower"));
        header.push(format!("v_{r}_upper"));
    }
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (t, &k) in mode.iter().enumerate() {
        let row = |m: &DMatrix<f64>| maps[k].apply_v_row(&m.row(t).iter().copied().collect::<Vec<_>>());
        let (v, lo, hi) = (row(&means.v), row(&means.v_lower), row(&means.v_upper));
        let mut rec = vec![(t + 1).to_string(), (k + 1).to_string()];
        rec.extend(v.iter().map(f64::to_string));
        for r in 0..rank {
            rec.push(lo[r].to_string());
            rec.push(hi[r].to_string());
        }
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| HmtmError::io(path, e))
}

fn read_records(path: &Path) -> Result<(csv::StringRecord, Vec<csv::StringRecord>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let rows = r.records().collect::<std::result::Result<Vec<_>, _>>().map_err(|e| csv_err(path, e))?;
    Ok((header, rows))
}

fn field(path: &Path, s: &str) -> Result<f64> {
    s.parse().map_err(|_| HmtmError::Parse(format!("{}: bad number `{s}`", path.display())))
}

/// Positions and optional cluster labels from a latent export.
pub fn read_latent_csv(path: &Path) -> Result<(DMatrix<f64>, Option<Vec<usize>>)> {
    let (header, rows) = read_records(path)?;
    let rank = header.len() - 3;
    let mut u = DMatrix::zeros(rows.len(), rank);
    let mut clusters = Vec::with_capacity(rows.len());
    for (i, rec) in rows.iter().enumerate() {
        for r in 0..rank {
            u[(i, r)] = field(path, &rec[2 + r])?;
        }
        let c = &rec[2 + rank];
        if !c.is_empty() {
            clusters.push(field(path, c)? as usize);
        }
    }
    let clusters = (clusters.len() == rows.len() && !rows.is_empty()).then_some(clusters);
    Ok((u, clusters))
}

/// Means, lower and upper bounds from a rules export.
pub fn read_rules_csv(path: &Path) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let (header, rows) = read_records(path)?;
    let rank = (header.len() - 2) / 3;
    let mut v = DMatrix::zeros(rows.len(), rank);
    let mut lo = v.clone();
    let mut hi = v.clone();
    for (t, rec) in rows.iter().enumerate() {
        for r in 0..rank {
            v[(t, r)] = field(path, &rec[2 + r])?;
            lo[(t, r)] = field(path, &rec[2 + rank + 2 * r])?;
            hi[(t, r)] = field(path, &rec[3 + rank + 2 * r])?;
        }
    }
    Ok((v, lo, hi))
}
