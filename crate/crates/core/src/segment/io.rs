//! Segment files: `theta,v_1,…,v_d` rows in ascending θ, plus a sidecar
//! JSON record `{r, dt, T_hist, tail_mode}` stored next to the CSV as
//! `<file>.json`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Segment, TailMode};
use crate::error::{Result, SfdeError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentMeta {
    pub r: f64,
    pub dt: f64,
    #[serde(rename = "T_hist")]
    pub t_hist: f64,
    pub tail_mode: TailMode,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn write_segment_csv_to<W: Write>(seg: &Segment, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["theta".to_string()];
    header.extend((1..=seg.dim()).map(|i| format!("v_{i}")));
    w.write_record(&header)?;
    for k in (0..=seg.steps()).rev() {
        let mut rec = vec![format!("{}", -(k as f64) * seg.dt())];
        rec.extend(seg.row(k).iter().map(|v| format!("{v}")));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| SfdeError::io("<segment>", e))?;
    Ok(())
}

pub fn write_segment_csv(seg: &Segment, rate: f64, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| SfdeError::io(path, e))?;
    write_segment_csv_to(seg, BufWriter::new(file))?;
    let meta =
        SegmentMeta { r: rate, dt: seg.dt(), t_hist: seg.window(), tail_mode: seg.tail_mode() };
    let side = sidecar_path(path);
    std::fs::write(&side, serde_json::to_string_pretty(&meta)?)
        .map_err(|e| SfdeError::io(side, e))?;
    Ok(())
}

pub fn read_segment_csv(path: &Path) -> Result<(Segment, SegmentMeta)> {
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| SfdeError::io(&side, e))?;
    let meta: SegmentMeta = serde_json::from_str(&text)?;
    if !(meta.dt > 0.0) || !(meta.t_hist > 0.0) || !(meta.r > 0.0) {
        return Err(SfdeError::config(format!("{}: r, dt and T_hist must be positive", side.display())));
    }
    let file = File::open(path).map_err(|e| SfdeError::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let dim = rdr.headers()?.len().saturating_sub(1);
    if dim == 0 {
        return Err(SfdeError::config(format!("{}: no value columns", path.display())));
    }
    let mut thetas = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let mut nums = Vec::with_capacity(dim + 1);
        for field in rec.iter() {
            nums.push(field.trim().parse::<f64>().map_err(|e| {
                SfdeError::config(format!("{}: bad number {field:?}: {e}", path.display()))
            })?);
        }
        if nums.len() != dim + 1 {
            return Err(SfdeError::config(format!("{}: ragged row", path.display())));
        }
        thetas.push(nums[0]);
        rows.push(nums[1..].to_vec());
    }
    let n = rows.len();
    let tol = 1e-9 * meta.dt.max(1.0);
    if n < 2 || thetas[n - 1].abs() > tol {
        return Err(SfdeError::config(format!("{}: rows must end at theta = 0", path.display())));
    }
    for (i, pair) in thetas.windows(2).enumerate() {
        if ((pair[1] - pair[0]) - meta.dt).abs() > 1e-6 * meta.dt {
            return Err(SfdeError::config(format!(
                "{}: theta spacing at row {} differs from dt = {}",
                path.display(),
                i + 1,
                meta.dt
            )));
        }
    }
    if ((n - 1) as f64 * meta.dt - meta.t_hist).abs() > 1e-6 * meta.t_hist {
        return Err(SfdeError::config(format!(
            "{}: {} rows do not cover T_hist = {}",
            path.display(),
            n,
            meta.t_hist
        )));
    }
    let values: Vec<f64> = rows.into_iter().rev().flatten().collect();
    let seg = Segment::new(dim, meta.dt, values, meta.tail_mode)?;
    Ok((seg, meta))
}
