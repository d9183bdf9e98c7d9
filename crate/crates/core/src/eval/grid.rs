use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::EvalError;
use crate::predictions::Task;
use crate::video::{is_valid_pair, MAX_BLINK, MAX_SPEED, MIN_BLINK, MIN_SPEED};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    Mae,
    RoundedAccuracy,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Mae => "mae",
            Metric::RoundedAccuracy => "rounded_accuracy",
        }
    }

    pub fn lower_is_better(self) -> bool {
        matches!(self, Metric::Mae)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Value,
    /// Cellwise comparison of two grids; positive means the second grid did better.
    Difference,
}

/// A metric over the (S, V) cells that actually received samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGrid {
    pub task: Task,
    pub metric: Metric,
    pub kind: GridKind,
    pub cells: BTreeMap<(u8, u8), f64>,
    pub counts: BTreeMap<(u8, u8), u64>,
    /// Sample-weighted aggregate.
    pub overall: Option<f64>,
    /// Unweighted mean over populated cells.
    pub cell_mean: Option<f64>,
}

impl MetricGrid {
    pub fn get(&self, speed: u8, blink: u8) -> Option<f64> {
        self.cells.get(&(speed, blink)).copied()
    }

    pub fn total_count(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn label(&self) -> String {
        match self.kind {
            GridKind::Value => self.metric.as_str().to_string(),
            GridKind::Difference => format!("{}_diff", self.metric.as_str()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    sum: f64,
    n: u64,
}

/// Running sums per cell. Samples must be fed in a fixed order (the manifest
/// order) for bit-stable output.
#[derive(Debug, Clone)]
pub(crate) struct GridBuilder {
    task: Task,
    metric: Metric,
    cells: BTreeMap<(u8, u8), Acc>,
    total: Acc,
}

impl GridBuilder {
    pub(crate) fn new(task: Task, metric: Metric) -> Self {
        GridBuilder {
            task,
            metric,
            cells: BTreeMap::new(),
            total: Acc::default(),
        }
    }

    pub(crate) fn add(&mut self, speed: u8, blink: u8, value: f64) {
        debug_assert!(is_valid_pair(speed, blink));
        let acc = self.cells.entry((speed, blink)).or_default();
        acc.sum += value;
        acc.n += 1;
        self.total.sum += value;
        self.total.n += 1;
    }

    pub(crate) fn finish(self) -> MetricGrid {
        let cells: BTreeMap<_, _> = self.cells.iter().map(|(&k, a)| (k, a.sum / a.n as f64)).collect();
        let counts = self.cells.iter().map(|(&k, a)| (k, a.n)).collect();
        let cell_mean = (!cells.is_empty()).then(|| cells.values().sum::<f64>() / cells.len() as f64);
        MetricGrid {
            task: self.task,
            metric: self.metric,
            kind: GridKind::Value,
            overall: (self.total.n > 0).then(|| self.total.sum / self.total.n as f64),
            cells,
            counts,
            cell_mean,
        }
    }
}

/// Cellwise `b` relative to `a`, oriented so positive values mean `b` performed
/// better: `a - b` for error metrics, `b - a` for accuracies.
pub fn diff_grid(a: &MetricGrid, b: &MetricGrid) -> Result<MetricGrid, EvalError> {
    if a.metric != b.metric || a.task != b.task || a.kind != b.kind {
        return Err(EvalError::DomainMismatch(format!(
            "{} {} vs {} {}",
            a.task,
            a.label(),
            b.task,
            b.label()
        )));
    }
    if !a.cells.keys().eq(b.cells.keys()) {
        return Err(EvalError::DomainMismatch(format!(
            "{} {}: cell sets differ ({} vs {} cells)",
            a.task,
            a.label(),
            a.cells.len(),
            b.cells.len()
        )));
    }
    let orient = |x: f64, y: f64| if a.metric.lower_is_better() { x - y } else { y - x };
    let both = |x: Option<f64>, y: Option<f64>| Some(orient(x?, y?));
    Ok(MetricGrid {
        task: a.task,
        metric: a.metric,
        kind: GridKind::Difference,
        cells: a.cells.iter().map(|(k, &x)| (*k, orient(x, b.cells[k]))).collect(),
        counts: a.counts.iter().map(|(k, &n)| (*k, n.min(b.counts[k]))).collect(),
        overall: both(a.overall, b.overall),
        cell_mean: both(a.cell_mean, b.cell_mean),
    })
}

pub const CSV_FIXED_COLUMNS: &str = "task,metric,S";

/// One block of six S-rows per grid under a shared header `task,metric,S,1..12`.
/// Cells without samples, and pairs with S·V ≥ 50, are left empty.
pub fn grids_to_csv(grids: &[&MetricGrid]) -> String {
    let mut out = String::from(CSV_FIXED_COLUMNS);
    for v in MIN_BLINK..=MAX_BLINK {
        write!(out, ",{v}").unwrap();
    }
    out.push('\n');
    for g in grids {
        for s in MIN_SPEED..=MAX_SPEED {
            write!(out, "{},{},{s}", g.task, g.label()).unwrap();
            for v in MIN_BLINK..=MAX_BLINK {
                out.push(',');
                if let Some(x) = g.get(s, v) {
                    write!(out, "{x}").unwrap();
                }
            }
            out.push('\n');
        }
    }
    out
}

#[derive(Serialize)]
pub(crate) struct CellDoc {
    s: u8,
    v: u8,
    value: f64,
    count: u64,
}

#[derive(Serialize)]
pub(crate) struct GridDoc {
    task: &'static str,
    metric: &'static str,
    kind: GridKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    orientation: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    overall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cell_mean: Option<f64>,
    total_count: u64,
    cells: Vec<CellDoc>,
}

impl From<&MetricGrid> for GridDoc {
    fn from(g: &MetricGrid) -> Self {
        GridDoc {
            task: g.task.as_str(),
            metric: g.metric.as_str(),
            kind: g.kind,
            orientation: (g.kind == GridKind::Difference).then_some(if g.metric.lower_is_better() {
                "first - second; positive = second better"
            } else {
                "second - first; positive = second better"
            }),
            overall: g.overall,
            cell_mean: g.cell_mean,
            total_count: g.total_count(),
            cells: g
                .cells
                .iter()
                .map(|(&(s, v), &value)| CellDoc {
                    s,
                    v,
                    value,
                    count: g.counts[&(s, v)],
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::video::valid_pairs;

    fn grid(metric: Metric, f: impl Fn(u8, u8) -> f64) -> MetricGrid {
        let mut b = GridBuilder::new(Task::Speed, metric);
        for (s, v) in valid_pairs() {
            b.add(s, v, f(s, v));
        }
        b.finish()
    }

    #[test]
    fn self_diff_is_zero() {
        let g = grid(Metric::Mae, |s, v| s as f64 * 0.1 + v as f64);
        let d = diff_grid(&g, &g).unwrap();
        assert_eq!(d.cells.len(), 65);
        assert!(d.cells.values().all(|&x| x == 0.0));
        assert_eq!(d.kind, GridKind::Difference);
    }

    #[test]
    fn diff_orientation_and_antisymmetry() {
        let worse = grid(Metric::Mae, |_, _| 0.5);
        let better = grid(Metric::Mae, |_, _| 0.2);
        let d = diff_grid(&worse, &better).unwrap();
        assert!(d.cells.values().all(|&x| (x - 0.3).abs() < 1e-12));
        let r = diff_grid(&better, &worse).unwrap();
        for (k, x) in &d.cells {
            assert_eq!(*x, -r.cells[k]);
        }
        let acc_lo = grid(Metric::Accuracy, |_, _| 0.5);
        let acc_hi = grid(Metric::Accuracy, |_, _| 0.75);
        assert!(diff_grid(&acc_lo, &acc_hi).unwrap().cells.values().all(|&x| x == 0.25));
    }

    #[test]
    fn domain_mismatch() {
        let a = grid(Metric::Mae, |_, _| 0.0);
        let b = grid(Metric::RoundedAccuracy, |_, _| 0.0);
        assert!(matches!(diff_grid(&a, &b), Err(EvalError::DomainMismatch(_))));
        let mut c = a.clone();
        c.cells.remove(&(1, 1));
        assert!(matches!(diff_grid(&a, &c), Err(EvalError::DomainMismatch(_))));
    }

    #[test]
    fn csv_has_65_numbers() {
        let g = grid(Metric::Mae, |s, v| (s * v) as f64);
        let csv = grids_to_csv(&[&g]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "task,metric,S,1,2,3,4,5,6,7,8,9,10,11,12");
        assert_eq!(lines.len(), 7);
        let numeric = lines[1..]
            .iter()
            .flat_map(|l| l.split(',').skip(3))
            .filter(|f| !f.is_empty())
            .inspect(|f| {
                f.parse::<f64>().unwrap();
            })
            .count();
        assert_eq!(numeric, 65);
        assert_eq!(lines[6], "speed,mae,6,6,12,18,24,30,36,42,48,,,,");
    }

    #[test]
    fn empty_builder() {
        let g = GridBuilder::new(Task::Digit, Metric::Accuracy).finish();
        assert!(g.cells.is_empty());
        assert_eq!(g.overall, None);
        assert_eq!(grids_to_csv(&[]).lines().count(), 1);
    }
}
