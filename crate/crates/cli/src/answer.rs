//! Query execution and the versioned answer schema.

use std::io::Write;

use clap::ValueEnum;
use rangeclust::{ClusteringAnswer, ExtentAnswer, Objective, RangeIndex, Rect, Result, SolverTag};
use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryType {
    Kmedian,
    Kmeans,
    Kcenter,
    Diameter,
    Radius,
}

impl QueryType {
    pub fn needs_k(self) -> bool {
        matches!(self, QueryType::Kmedian | QueryType::Kmeans | QueryType::Kcenter)
    }

    fn name(self) -> &'static str {
        match self {
            QueryType::Kmedian => "kmedian",
            QueryType::Kmeans => "kmeans",
            QueryType::Kcenter => "kcenter",
            QueryType::Diameter => "diameter",
            QueryType::Radius => "radius",
        }
    }
}

/// One query answer. Coordinates and costs are in input units; for
/// diameter and radius queries `cost` holds the estimate itself.
#[derive(Clone, Debug, Serialize)]
pub struct Answer {
    pub schema: u32,
    #[serde(rename = "type")]
    pub kind: QueryType,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub eps: f64,
    pub centers: Vec<Vec<f64>>,
    pub cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverTag>,
    /// Additive slack of a k-center cost.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inflation: Option<f64>,
    pub range_weight: f64,
    pub coreset_size: usize,
    pub point_accesses: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl Answer {
    fn from_clustering(kind: QueryType, a: ClusteringAnswer) -> Answer {
        Answer {
            schema: SCHEMA,
            kind,
            k: Some(a.k),
            eps: a.eps,
            centers: a.centers.iter().map(|c| c.coords().to_vec()).collect(),
            cost: a.cost,
            solver: Some(a.solver),
            inflation: (kind == QueryType::Kcenter).then_some(a.inflation),
            range_weight: a.range_weight,
            coreset_size: a.coreset_size,
            point_accesses: a.point_accesses,
            wall_ms: Some(a.wall_ms),
            warning: None,
        }
    }

    fn from_extent(kind: QueryType, eps: f64, a: ExtentAnswer) -> Answer {
        Answer {
            schema: SCHEMA,
            kind,
            k: None,
            eps,
            centers: a.center.iter().map(|c| c.coords().to_vec()).collect(),
            cost: a.value,
            solver: None,
            inflation: None,
            range_weight: a.range_weight,
            coreset_size: a.coreset_size,
            point_accesses: a.point_accesses,
            wall_ms: Some(a.wall_ms),
            warning: None,
        }
    }
}

/// Answers one query; `k` is ignored by diameter and radius queries.
pub fn answer(index: &RangeIndex, kind: QueryType, q: &Rect, k: usize, eps: f64, timing: bool) -> Result<Answer> {
    let mut ans = match kind {
        QueryType::Kmedian => Answer::from_clustering(kind, index.cluster_query(q, k, eps, Objective::Median)?),
        QueryType::Kmeans => Answer::from_clustering(kind, index.cluster_query(q, k, eps, Objective::Means)?),
        QueryType::Kcenter => Answer::from_clustering(kind, index.kcenter_query(q, k, eps)?),
        QueryType::Diameter => Answer::from_extent(kind, eps, index.diameter_query(q, eps)?),
        QueryType::Radius => Answer::from_extent(kind, eps, index.radius_query(q, eps)?),
    };
    if ans.range_weight == 0.0 {
        ans.cost = 0.0;
        ans.centers.clear();
        ans.warning = Some("the range contains no points".into());
    }
    if !timing {
        ans.wall_ms = None;
    }
    Ok(ans)
}

/// Writes answers as CSV, one row per center (one row for an answer without centers).
pub fn write_csv<W: Write>(w: W, answers: &[Answer], d: usize, timing: bool) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = ["type", "k", "eps", "cost", "range_weight", "coreset_size", "point_accesses"]
        .map(String::from)
        .to_vec();
    if timing {
        header.push("wall_ms".into());
    }
    header.push("center".into());
    header.extend((1..=d).map(|i| format!("x{i}")));
    wtr.write_record(&header)?;
    for a in answers {
        let mut base = vec![
            a.kind.name().to_string(),
            a.k.map_or(String::new(), |k| k.to_string()),
            a.eps.to_string(),
            a.cost.to_string(),
            a.range_weight.to_string(),
            a.coreset_size.to_string(),
            a.point_accesses.to_string(),
        ];
        if timing {
            base.push(a.wall_ms.map_or(String::new(), |t| t.to_string()));
        }
        if a.centers.is_empty() {
            let mut row = base.clone();
            row.extend(std::iter::repeat_n(String::new(), d + 1));
            wtr.write_record(&row)?;
        }
        for (i, c) in a.centers.iter().enumerate() {
            let mut row = base.clone();
            row.push(i.to_string());
            row.extend(c.iter().map(|x| x.to_string()));
            wtr.write_record(&row)?;
        }
    }
    wtr.flush()?;
    Ok(())
}
