use std::io::Write;

use clap::Args;
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use woundwave::equilibria::{census, classify_point_at, EquilibriumKind, EquilibriumRecord, Tolerances};
use woundwave::{Params, Report};

use crate::config::ParamArgs;
use crate::output::{header, round_sig};
use crate::CliError;

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EquilibriaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
}

const DIGITS: usize = 12;

#[derive(Debug, Clone, Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl ComplexValue {
    fn new(z: Complex<f64>) -> Self {
        Self {
            re: round_sig(z.re, DIGITS),
            im: round_sig(z.im, DIGITS),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Entry {
    pub label: String,
    pub u: ComplexValue,
    pub w: ComplexValue,
    pub real: bool,
    pub in_quadrant: bool,
    /// Linear type of the desingularised flow; absent for complex points.
    #[serde(rename = "type")]
    pub linear_type: Option<String>,
    pub folded_type: Option<String>,
    pub sheet: Option<String>,
    pub eigenvalues: Option<[ComplexValue; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Curves {
    pub c1: f64,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriaReport {
    pub header: String,
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    pub equilibria: Vec<Entry>,
    pub real_roots: usize,
    pub descartes_bound: u8,
    pub curves: Curves,
}

fn entry(r: &EquilibriumRecord<f64>, in_quadrant: bool) -> Entry {
    let real = |x: f64| ComplexValue::new(Complex::new(x, 0.0));
    Entry {
        label: r.kind.label(),
        u: real(r.location.u),
        w: real(r.location.w),
        real: true,
        in_quadrant,
        linear_type: Some(r.classification.linear_type.label().into()),
        folded_type: r.classification.folded_type.map(|t| t.label().into()),
        sheet: Some(r.classification.side.label().into()),
        eigenvalues: Some(r.eigen.values.map(ComplexValue::new)),
    }
}

pub fn report(p: &Params, rep: &Report, header: String) -> EquilibriaReport {
    let quadrant = |r: &EquilibriumRecord<f64>| r.location.u >= 0.0 && r.location.w >= 0.0;
    let mut equilibria: Vec<Entry> = rep
        .records
        .iter()
        .filter(|r| !matches!(r.kind, EquilibriumKind::FoldRoot(_)))
        .map(|r| entry(r, quadrant(r)))
        .collect();
    // Every quartic root, in root order, whether or not it is admissible.
    for (k, root) in rep.hole_roots.iter().enumerate() {
        let kind = EquilibriumKind::FoldRoot(k as u8 + 1);
        if let Some(r) = rep.find(kind) {
            equilibria.push(entry(r, true));
        } else if root.is_real {
            let pt = woundwave::Point::new(root.u.re, root.w.re);
            equilibria.push(entry(&classify_point_at(kind, pt, p, &Tolerances::default()), false));
        } else {
            equilibria.push(Entry {
                label: kind.label(),
                u: ComplexValue::new(root.u),
                w: ComplexValue::new(root.w),
                real: false,
                in_quadrant: false,
                linear_type: None,
                folded_type: None,
                sheet: None,
                eigenvalues: None,
            });
        }
    }
    EquilibriaReport {
        header,
        alpha: p.alpha(),
        beta: p.beta(),
        c: p.c(),
        equilibria,
        real_roots: rep.real_root_count(),
        descartes_bound: rep.descartes_bound,
        curves: Curves {
            c1: rep.c1,
            c2: rep.c2,
            c3: rep.c3,
        },
    }
}

pub fn run(args: &EquilibriaArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let p = args.params.params()?;
    let rep = census(&p).map_err(|e| CliError::Solver(e.to_string()))?;
    let r = report(&p, &rep, header("equilibria", &p));
    let text = serde_json::to_string_pretty(&r).map_err(|e| CliError::Solver(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| CliError::io("<stdout>", e))
}
