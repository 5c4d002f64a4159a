use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::store::{Manifest, OutputDir};
use crate::error::Result;
use crate::landscape::{GaussianMixture2D, SYNTHETIC_W1, SYNTHETIC_W2};
use crate::path::{optimize_path, FourierPath, PathConfig, PathTracePoint};

pub const SYNTHETIC_LAMBDAS: [f64; 3] = [10.0, 100.0, 1000.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthPath {
    pub lambda: f64,
    pub height: f64,
    pub best_iteration: usize,
    pub total_loss: f64,
    /// `b_1 .. b_N_F`, each a point in the plane.
    pub coefficients: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOutput {
    pub straight_line_height: f64,
    pub paths: Vec<SynthPath>,
    #[serde(skip)]
    pub profiles: Vec<Vec<f64>>,
    #[serde(skip)]
    pub manifest: Option<Manifest>,
}

/// Optimized paths between the two minima of the synthetic surface for each
/// `lambda` in [`SYNTHETIC_LAMBDAS`], plus the straight line.
pub fn cmd_synth(out: &Path) -> Result<SynthOutput> {
    let started = Instant::now();
    let land = GaussianMixture2D::default();
    let mut dir = OutputDir::create(out)?;
    let mut straight = None;
    let mut paths = Vec::new();
    let mut profiles = Vec::new();
    let mut traces: Vec<Vec<PathTracePoint>> = Vec::new();
    let mut curves: Vec<(f64, FourierPath)> = Vec::new();
    for lambda in SYNTHETIC_LAMBDAS {
        let cfg = PathConfig::synthetic(lambda);
        let opt = optimize_path(&SYNTHETIC_W1, &SYNTHETIC_W2, &land, &cfg)?;
        if straight.is_none() {
            profiles.push(opt.straight_line.losses.clone());
            straight = Some(opt.straight_line.clone());
        }
        profiles.push(opt.report.losses.clone());
        paths.push(SynthPath {
            lambda,
            height: opt.report.height,
            best_iteration: opt.best_iteration,
            total_loss: opt.report.total_loss,
            coefficients: opt.path.coefficients().chunks_exact(2).map(|c| [c[0], c[1]]).collect(),
        });
        traces.push(opt.trace);
        curves.push((lambda, opt.path));
    }
    let straight = straight.unwrap();
    let grid = curves[0].1.grid().to_vec();

    let mut csv = String::from("t,straight");
    for l in SYNTHETIC_LAMBDAS {
        csv.push_str(&format!(",lambda_{l}"));
    }
    csv.push('\n');
    for (m, t) in grid.iter().enumerate() {
        csv.push_str(&format!("{t:e}"));
        for p in &profiles {
            csv.push_str(&format!(",{:e}", p[m]));
        }
        csv.push('\n');
    }
    dir.write("paths/synthetic_profiles.csv", csv.as_bytes())?;

    let mut pts = String::from("lambda,t,x,y\n");
    for (lambda, path) in &curves {
        for p in path.points().iter().zip(&grid) {
            pts.push_str(&format!("{lambda},{:e},{:e},{:e}\n", p.1, p.0[0], p.0[1]));
        }
    }
    dir.write("paths/synthetic_points.csv", pts.as_bytes())?;

    let mut tr = String::from("lambda,iteration,total_loss,height\n");
    for (lambda, trace) in SYNTHETIC_LAMBDAS.iter().zip(&traces) {
        for (k, p) in trace.iter().enumerate() {
            tr.push_str(&format!("{lambda},{k},{:e},{:e}\n", p.total_loss, p.height));
        }
    }
    dir.write("paths/synthetic_trace.csv", tr.as_bytes())?;

    let mut output = SynthOutput {
        straight_line_height: straight.height,
        paths,
        profiles,
        manifest: None,
    };
    dir.write_json("stats/synthetic_heights.json", &output)?;
    let config = serde_json::json!({
        "endpoints": [SYNTHETIC_W1, SYNTHETIC_W2],
        "paths": SYNTHETIC_LAMBDAS.iter().map(|&l| PathConfig::synthetic(l)).collect::<Vec<_>>(),
    });
    output.manifest = Some(dir.finish("synth", config, BTreeMap::new(), started.elapsed().as_secs_f64())?);
    Ok(output)
}
