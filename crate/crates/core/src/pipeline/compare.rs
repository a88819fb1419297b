use serde::{Deserialize, Serialize};

use super::{MatchConfig, MatchMode, Matcher};
use crate::energy::{linear_path, DerivativeMode};
use crate::error::{Error, Result};
use crate::metric::{srnf, srnf_l2_distance, MetricWeights};
use crate::sphere::{SphericalGrid, SurfaceGrid};

/// Lengths of the linear path for one `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub t_count: usize,
    /// Split-metric length at weights `(0, ½, 1, 0)`.
    pub linear_length: f64,
    /// `L²` length of the SRNF image polygon.
    pub srnf_length: f64,
    /// `|linear_length − srnf_length| / srnf_length`.
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    /// `‖q(f1) − q(f2)‖`, a lower bound for every path length.
    pub srnf_distance: f64,
    /// Distance of the optimized parametrized geodesic, if requested.
    pub geodesic_distance: Option<f64>,
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("T,L_l,L_L2,rel_error\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e}\n",
                r.t_count, r.linear_length, r.srnf_length, r.relative_error
            ));
        }
        s
    }
}

/// Compares the linear path's split-metric length with the length of its
/// SRNF image for every `T` in `t_list`.
///
/// The split-metric length uses central differences so that both lengths
/// are second-order accurate in `ΔT`. With `geodesic = Some(cfg)` the pair is
/// also matched in parametrized mode to report the geodesic distance.
pub fn srnf_comparison(
    grid: &SphericalGrid,
    f1: &SurfaceGrid,
    f2: &SurfaceGrid,
    t_list: &[usize],
    geodesic: Option<&MatchConfig>,
) -> Result<ComparisonTable> {
    if t_list.is_empty() {
        return Err(Error::invalid("T", "need at least one value"));
    }
    let w = MetricWeights::SRNF;
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let path = linear_path(grid, f1, f2, t)?;
        let linear_length = path.length(grid, &w, DerivativeMode::Central)?;
        let qs = path
            .frames()
            .iter()
            .map(|f| srnf(grid, f))
            .collect::<Result<Vec<_>>>()?;
        let srnf_length: f64 = qs.windows(2).map(|p| srnf_l2_distance(grid, &p[0], &p[1])).sum();
        rows.push(ComparisonRow {
            t_count: t,
            linear_length,
            srnf_length,
            relative_error: (linear_length - srnf_length).abs() / srnf_length.max(f64::MIN_POSITIVE),
        });
    }
    let srnf_distance = srnf_l2_distance(grid, &srnf(grid, f1)?, &srnf(grid, f2)?);
    let geodesic_distance = match geodesic {
        Some(cfg) => {
            let cfg = MatchConfig { outer: 0, ..cfg.clone() };
            Some(Matcher::new(grid, w, cfg)?.run(MatchMode::Param, f1, f2)?.distance)
        }
        None => None,
    };
    Ok(ComparisonTable {
        rows,
        srnf_distance,
        geodesic_distance,
    })
}
