//! MORscore: the area under a normalized error graph, condensing one
//! method/norm pair into a single number in `[0, 1)`.
//!
//! The reduced order is normalized to `n / n_max` and the relative error to
//! `log10(eps) / floor(log10(eps_mach))`, clamped into `[eps_mach, 1]`. The
//! area is the trapezoid rule over the given abscissae, so integration
//! starts at `phi_n(1)` and the attainable maximum is `1 - 1/n_max`.

use crate::error::{Error, Result};
use crate::norms::{ComposeMode, NormId};

/// Order normalization `n / n_max`.
pub fn phi_n(n: usize, n_max: usize) -> f64 {
    n as f64 / n_max as f64
}

/// Floored decimal exponent of the working precision, `-16` for double.
pub fn eps_exponent(eps_mach: f64) -> i32 {
    eps_mach.log10().floor() as i32
}

/// Error normalization `log10(eps) / floor(log10(eps_mach))` with `eps`
/// clamped into `[eps_mach, 1]`.
pub fn phi_eps(eps: f64, eps_mach: f64) -> f64 {
    let clamped = eps.clamp(eps_mach, 1.0);
    clamped.log10() / eps_exponent(eps_mach) as f64
}

/// Graph identity carried through to the emitted files.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphMeta {
    pub method: String,
    pub flavor: String,
    pub norm: String,
    pub variant: String,
    pub mode: String,
}

/// Relative errors per reduced order, complete over `1..=n_max`.
#[derive(Debug, Clone)]
pub struct ErrorGraph {
    pub n_max: usize,
    pub points: Vec<(usize, f64)>,
    pub meta: GraphMeta,
}

impl ErrorGraph {
    pub fn new(n_max: usize, points: Vec<(usize, f64)>, meta: GraphMeta) -> Self {
        ErrorGraph {
            n_max,
            points,
            meta,
        }
    }

    /// Points sorted by order, checked for completeness and range.
    fn validated(&self) -> Result<Vec<f64>> {
        if self.n_max == 0 {
            return Err(Error::InvalidGraph {
                reason: "n_max must be positive".into(),
            });
        }
        if self.points.len() != self.n_max {
            return Err(Error::InvalidGraph {
                reason: format!(
                    "expected {} points covering orders 1..={}, got {}",
                    self.n_max,
                    self.n_max,
                    self.points.len()
                ),
            });
        }
        let mut sorted = self.points.clone();
        sorted.sort_by_key(|(n, _)| *n);
        let mut errors = Vec::with_capacity(self.n_max);
        for (k, (n, eps)) in sorted.iter().enumerate() {
            if *n != k + 1 {
                return Err(Error::InvalidGraph {
                    reason: format!("missing or duplicate order {}", k + 1),
                });
            }
            if !(*eps > 0.0 && *eps <= 1.0) {
                return Err(Error::InvalidGraph {
                    reason: format!("error at order {n} outside (0, 1]: {eps}"),
                });
            }
            errors.push(*eps);
        }
        Ok(errors)
    }
}

/// The MORscore `mu`: trapezoid area under the normalized error graph.
pub fn morscore(graph: &ErrorGraph, eps_mach: f64) -> Result<f64> {
    let errors = graph.validated()?;
    let ys: Vec<f64> = errors.iter().map(|e| phi_eps(*e, eps_mach)).collect();
    let mut area = 0.0;
    for k in 0..ys.len().saturating_sub(1) {
        area += 0.5 * (ys[k] + ys[k + 1]) / graph.n_max as f64;
    }
    Ok(area)
}

/// Aggregates per-parameter unstable-ROM counts: arithmetic mean (L1),
/// root-sum-square (L2) or maximum (Linf).
pub fn aggregate_unstable(counts: &[usize], mode: ComposeMode) -> f64 {
    if counts.is_empty() {
        return 0.0;
    }
    match mode {
        ComposeMode::L1 => counts.iter().sum::<usize>() as f64 / counts.len() as f64,
        ComposeMode::L2 => counts.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt(),
        ComposeMode::Linf => counts.iter().copied().max().unwrap_or(0) as f64,
    }
}

/// One table row: a method with its per-norm scores and unstable count.
#[derive(Debug, Clone)]
pub struct MorScoreRow {
    pub label: String,
    pub scores: Vec<f64>,
    pub unstable: f64,
}

/// MORscore table shaped like the benchmark tables: one row per
/// method/flavor, one column per norm plus the unstable-ROM count.
#[derive(Debug, Clone)]
pub struct MorScoreTable {
    pub norms: Vec<NormId>,
    pub rows: Vec<MorScoreRow>,
    pub n_max: usize,
    pub eps_exponent: i32,
}

fn format_count(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// CSV rendering at full precision.
pub fn render_table_csv(table: &MorScoreTable) -> String {
    let mut out = String::from("method");
    for id in &table.norms {
        out.push(',');
        out.push_str(id.label());
    }
    out.push_str(",unstable\n");
    for row in &table.rows {
        out.push_str(&row.label);
        for v in &row.scores {
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(",{}\n", row.unstable));
    }
    out
}

/// Aligned Markdown rendering, scores at two decimals, counts as given.
pub fn render_table_markdown(table: &MorScoreTable) -> String {
    let mut header: Vec<String> = vec!["Method".into()];
    header.extend(table.norms.iter().map(|n| n.label().to_string()));
    header.push("L".into());
    let mut body: Vec<Vec<String>> = Vec::new();
    for row in &table.rows {
        let mut cells = vec![row.label.clone()];
        cells.extend(row.scores.iter().map(|v| format!("{v:.2}")));
        cells.push(format_count(row.unstable));
        body.push(cells);
    }
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &body {
        for (k, cell) in row.iter().enumerate() {
            widths[k] = widths[k].max(cell.len());
        }
    }
    let render_row = |cells: &[String]| {
        let mut line = String::from("|");
        for (k, cell) in cells.iter().enumerate() {
            line.push_str(&format!(" {cell:<width$} |", width = widths[k]));
        }
        line.push('\n');
        line
    };
    let mut out = render_row(&header);
    out.push('|');
    for w in &widths {
        out.push_str(&format!("{:-<width$}|", "", width = w + 2));
    }
    out.push('\n');
    for row in &body {
        out.push_str(&render_row(row));
    }
    out
}

/// Serializes one error graph as a two-column CSV.
pub fn render_graph_csv(graph: &ErrorGraph) -> String {
    let mut out = String::from("n,error\n");
    let mut sorted = graph.points.clone();
    sorted.sort_by_key(|(n, _)| *n);
    for (n, eps) in sorted {
        out.push_str(&format!("{n},{eps:e}\n"));
    }
    out
}

/// Parses a two-column CSV produced by [`render_graph_csv`].
pub fn parse_graph_csv(text: &str, meta: GraphMeta) -> Result<ErrorGraph> {
    let mut points = Vec::new();
    for (lno, line) in text.lines().enumerate() {
        if lno == 0 || line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let bad = || Error::InvalidGraph {
            reason: format!("line {}: expected `n,error`", lno + 1),
        };
        let n: usize = parts
            .next()
            .ok_or_else(bad)?
            .trim()
            .parse()
            .map_err(|_| bad())?;
        let eps: f64 = parts
            .next()
            .ok_or_else(bad)?
            .trim()
            .parse()
            .map_err(|_| bad())?;
        points.push((n, eps));
    }
    let n_max = points.iter().map(|(n, _)| *n).max().unwrap_or(0);
    Ok(ErrorGraph::new(n_max, points, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn graph(errors: &[f64]) -> ErrorGraph {
        ErrorGraph::new(
            errors.len(),
            errors
                .iter()
                .enumerate()
                .map(|(k, e)| (k + 1, *e))
                .collect(),
            GraphMeta::default(),
        )
    }

    #[test]
    fn phi_n_examples() {
        assert_eq!(phi_n(50, 50), 1.0);
        assert_eq!(phi_n(1, 50), 0.02);
        assert_eq!(phi_n(25, 50), 0.5);
    }

    #[test]
    fn phi_eps_examples() {
        assert_eq!(phi_eps(1e-16, 1e-16), 1.0);
        assert_eq!(phi_eps(1.0, 1e-16), 0.0);
        assert_eq!(phi_eps(1e-8, 1e-16), 0.5);
        // Clamping from both sides.
        assert_eq!(phi_eps(1e-30, 1e-16), 1.0);
        assert_eq!(phi_eps(7.5, 1e-16), 0.0);
    }

    #[test]
    fn eps_exponent_double_precision() {
        assert_eq!(eps_exponent(1e-16), -16);
        assert_eq!(eps_exponent(2.2e-16), -16);
    }

    #[test]
    fn morscore_flat_worst_case_is_zero() {
        let g = graph(&[1.0; 10]);
        assert_eq!(morscore(&g, 1e-16).unwrap(), 0.0);
    }

    #[test]
    fn morscore_two_point_hand_trapezoid() {
        let g = graph(&[1e-8, 1e-16]);
        assert_relative_eq!(morscore(&g, 1e-16).unwrap(), 0.375, epsilon = 1e-12);
    }

    #[test]
    fn morscore_constant_best_case() {
        let g = graph(&[1e-16; 50]);
        assert_relative_eq!(morscore(&g, 1e-16).unwrap(), 0.98, epsilon = 1e-12);
    }

    #[test]
    fn morscore_is_order_invariant() {
        let mut pts: Vec<(usize, f64)> = (1..=6).map(|n| (n, 10f64.powi(-(n as i32)))).collect();
        let a = morscore(
            &ErrorGraph::new(6, pts.clone(), GraphMeta::default()),
            1e-16,
        )
        .unwrap();
        pts.reverse();
        let b = morscore(&ErrorGraph::new(6, pts, GraphMeta::default()), 1e-16).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn morscore_rejects_incomplete_graphs() {
        let g = ErrorGraph::new(3, vec![(1, 0.5), (3, 0.25)], GraphMeta::default());
        assert!(morscore(&g, 1e-16).is_err());
        let dup = ErrorGraph::new(2, vec![(1, 0.5), (1, 0.25)], GraphMeta::default());
        assert!(morscore(&dup, 1e-16).is_err());
        let out_of_range = graph(&[0.5, 1.5]);
        assert!(morscore(&out_of_range, 1e-16).is_err());
    }

    #[test]
    fn aggregate_examples() {
        for mode in ComposeMode::ALL {
            assert_eq!(aggregate_unstable(&[0, 0, 0], mode), 0.0);
        }
        assert_eq!(aggregate_unstable(&[3, 4], ComposeMode::L2), 5.0);
        assert_eq!(aggregate_unstable(&[10, 20], ComposeMode::Linf), 20.0);
        assert_eq!(aggregate_unstable(&[3, 4], ComposeMode::L1), 3.5);
    }

    #[test]
    fn graph_csv_roundtrip() {
        let g = graph(&[0.5, 1e-3, 1e-12]);
        let text = render_graph_csv(&g);
        let back = parse_graph_csv(&text, GraphMeta::default()).unwrap();
        assert_eq!(back.n_max, 3);
        assert_eq!(back.points, g.points);
        assert_eq!(
            morscore(&back, 1e-16).unwrap(),
            morscore(&g, 1e-16).unwrap()
        );
    }

    #[test]
    fn count_formatting_matches_table_style() {
        assert_eq!(format_count(37.0), "37");
        assert_eq!(format_count(37.5), "37.5");
        assert_eq!(format_count(118.66), "118.66");
        assert_eq!(format_count(105.004), "105");
    }

    #[test]
    fn markdown_table_is_aligned() {
        let table = MorScoreTable {
            norms: vec![NormId::L2, NormId::Hankel],
            rows: vec![
                MorScoreRow {
                    label: "PM(WC)".into(),
                    scores: vec![0.415, 0.52],
                    unstable: 0.0,
                },
                MorScoreRow {
                    label: "BT(WC,WO)".into(),
                    scores: vec![0.37, 0.36],
                    unstable: 25.0,
                },
            ],
            n_max: 50,
            eps_exponent: -16,
        };
        let md = render_table_markdown(&table);
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].contains("| L2 "));
        assert!(lines[2].contains("0.42") || lines[2].contains("0.41"));
        let widths: Vec<usize> = lines.iter().map(|l| l.len()).collect();
        assert!(widths.windows(2).all(|w| w[0] == w[1]));
        let csv = render_table_csv(&table);
        assert!(csv.starts_with("method,L2,Ha,unstable\n"));
        assert!(csv.contains("PM(WC),0.415,0.52,0\n"));
    }
}
