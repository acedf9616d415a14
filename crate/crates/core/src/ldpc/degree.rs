//! Edge-perspective degree distributions and the shipped presets.

use crate::error::{Error, Result};

/// Fractions of edges attached to variable/check nodes of each degree.
#[derive(Clone, Debug)]
pub struct DegreeDistribution {
    var_edges: Vec<(usize, f64)>,
    chk_edges: Vec<(usize, f64)>,
}

impl DegreeDistribution {
    /// Builds a distribution from (degree, edge fraction) lists. Fractions
    /// may carry published rounding; they are renormalized exactly.
    pub fn new(var_edges: Vec<(usize, f64)>, chk_edges: Vec<(usize, f64)>) -> Result<Self> {
        for (name, side) in [("variable", &var_edges), ("check", &chk_edges)] {
            if side.is_empty() {
                return Err(Error::InvalidArgument(format!("{name} side is empty")));
            }
            if side.iter().any(|&(d, f)| d == 0 || f <= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} side has a zero degree or fraction")));
            }
            let total: f64 = side.iter().map(|&(_, f)| f).sum();
            if (total - 1.0).abs() > 5e-3 {
                return Err(Error::InvalidArgument(format!(
                    "{name} edge fractions sum to {total}, expected 1"
                )));
            }
        }
        let normalize = |mut side: Vec<(usize, f64)>| {
            let total: f64 = side.iter().map(|&(_, f)| f).sum();
            for (_, f) in &mut side {
                *f /= total;
            }
            side.sort_by_key(|&(d, _)| d);
            side
        };
        Ok(Self { var_edges: normalize(var_edges), chk_edges: normalize(chk_edges) })
    }

    pub fn regular(var_degree: usize, chk_degree: usize) -> Self {
        Self::new(vec![(var_degree, 1.0)], vec![(chk_degree, 1.0)])
            .expect("regular distribution is valid")
    }

    pub fn var_edges(&self) -> &[(usize, f64)] {
        &self.var_edges
    }

    pub fn chk_edges(&self) -> &[(usize, f64)] {
        &self.chk_edges
    }

    /// 1 - (sum eta_j/j)/(sum lambda_i/i).
    pub fn design_rate(&self) -> f64 {
        let v: f64 = self.var_edges.iter().map(|&(d, f)| f / d as f64).sum();
        let c: f64 = self.chk_edges.iter().map(|&(d, f)| f / d as f64).sum();
        1.0 - c / v
    }

    /// (sum lambda_i/i)^{-1}: edges per variable node on average.
    pub fn avg_variable_degree(&self) -> f64 {
        self.var_edges.iter().map(|&(d, f)| f / d as f64).sum::<f64>().recip()
    }

    pub fn preset_names() -> &'static [&'static str] {
        &[
            "table1-k10-b1",
            "table1-k10-b1.5",
            "table1-k50-b1",
            "table1-k50-b1.5",
            "table1-turbo-k10",
            "table1-turbo-k50",
            "regular-3-6",
        ]
    }

    /// Named optimized distributions (verbatim published values) plus the
    /// regular (3,6) baseline.
    pub fn preset(name: &str) -> Result<Self> {
        let (var, chk): (Vec<(usize, f64)>, Vec<(usize, f64)>) = match name {
            "table1-k10-b1" => (
                vec![
                    (2, 0.3707),
                    (3, 0.2329),
                    (9, 0.1815),
                    (10, 0.0002),
                    (27, 0.0003),
                    (28, 0.1516),
                    (29, 0.0620),
                    (30, 0.0005),
                ],
                vec![(7, 1.0)],
            ),
            "table1-k10-b1.5" => (
                vec![
                    (2, 0.4233),
                    (3, 0.0677),
                    (15, 0.0053),
                    (16, 0.2586),
                    (80, 0.1426),
                    (200, 0.1025),
                ],
                vec![(8, 1.0)],
            ),
            "table1-k50-b1" => (
                vec![
                    (2, 0.4624),
                    (3, 0.0028),
                    (14, 0.1924),
                    (15, 0.0743),
                    (70, 0.1649),
                    (150, 0.0322),
                    (200, 0.0711),
                ],
                vec![(8, 1.0)],
            ),
            "table1-k50-b1.5" => (
                vec![
                    (2, 0.5082),
                    (21, 0.3238),
                    (22, 0.0002),
                    (130, 0.0001),
                    (140, 0.0005),
                    (150, 0.0018),
                    (200, 0.1652),
                ],
                vec![(7, 1.0)],
            ),
            "table1-turbo-k10" => (
                vec![
                    (2, 0.4400),
                    (10, 0.0577),
                    (11, 0.2256),
                    (50, 0.0401),
                    (60, 0.1665),
                    (250, 0.0298),
                    (300, 0.0403),
                ],
                vec![(8, 1.0)],
            ),
            "table1-turbo-k50" => (
                vec![
                    (2, 0.3377),
                    (12, 0.0481),
                    (13, 0.2288),
                    (60, 0.1012),
                    (70, 0.1454),
                    (300, 0.1388),
                ],
                vec![(6, 0.2), (12, 0.8)],
            ),
            "regular-3-6" => (vec![(3, 1.0)], vec![(6, 1.0)]),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown code preset '{other}' (known: {})",
                    Self::preset_names().join(", ")
                )))
            }
        };
        Self::new(var, chk)
    }
}
