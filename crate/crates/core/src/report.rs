//! Table rendering for convergence studies.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::estimators::{ReportRow, Variant};
use crate::study::{eoc, RunReport};

/// C-style `%.4e`, e.g. `1.4481e-03`.
pub fn sci(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.4e}");
    let (mant, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Markdown => "md",
        }
    }
}

/// Which reconstruction variants to include in the tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantFilter {
    Two,
    Three,
    Both,
}

impl VariantFilter {
    pub fn includes(self, v: Variant) -> bool {
        matches!(
            (self, v),
            (VariantFilter::Both, _) | (VariantFilter::Two, Variant::TwoLevel) | (VariantFilter::Three, Variant::ThreeLevel)
        )
    }
}

/// A rendered table: a title, headers and already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub title: &'static str,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn render(&self, format: Format) -> String {
        let mut s = String::new();
        match format {
            Format::Csv => {
                s.push_str(&self.headers.join(","));
                s.push('\n');
                for r in &self.rows {
                    s.push_str(&r.join(","));
                    s.push('\n');
                }
            }
            Format::Markdown => {
                s.push_str(&format!("## {}\n\n", self.title));
                s.push_str(&format!("| {} |\n", self.headers.join(" | ")));
                s.push_str(&format!("|{}\n", "---|".repeat(self.headers.len())));
                for r in &self.rows {
                    s.push_str(&format!("| {} |\n", r.join(" | ")));
                }
            }
        }
        s
    }
}

enum Col {
    /// A quantity followed by its EOC column.
    WithEoc(&'static str, fn(&RunReport) -> f64),
    Plain(&'static str, fn(&RunReport) -> f64),
    Index(&'static str, fn(&RunReport) -> f64),
}

fn build(name: &'static str, title: &'static str, runs: &[RunReport], cols: Vec<Col>) -> Table {
    let mut headers = vec!["h = k".to_string()];
    let mut columns: Vec<Vec<String>> = vec![runs.iter().map(|r| sci(r.h)).collect()];
    let h: Vec<f64> = runs.iter().map(|r| r.h).collect();
    for c in cols {
        match c {
            Col::WithEoc(head, f) => {
                let v: Vec<f64> = runs.iter().map(f).collect();
                headers.push(head.to_string());
                headers.push(format!("EOC {head}"));
                columns.push(v.iter().map(|x| sci(*x)).collect());
                let e = eoc(&v, &h).unwrap_or_else(|_| vec![f64::NAN; v.len().saturating_sub(1)]);
                let mut cells = Vec::with_capacity(v.len());
                if !v.is_empty() {
                    cells.push(String::new());
                }
                cells.extend(e.iter().map(|x| if x.is_finite() { format!("{x:.2}") } else { String::new() }));
                columns.push(cells);
            }
            Col::Plain(head, f) => {
                headers.push(head.to_string());
                columns.push(runs.iter().map(|r| sci(f(r))).collect());
            }
            Col::Index(head, f) => {
                headers.push(head.to_string());
                columns.push(runs.iter().map(|r| format!("{:.0}", f(r))).collect());
            }
        }
    }
    let rows = (0..runs.len()).map(|i| columns.iter().map(|c| c[i].clone()).collect()).collect();
    Table {
        name,
        title,
        headers,
        rows,
    }
}

fn last(r: &RunReport) -> &ReportRow {
    r.final_row()
}

/// The four summary tables: errors, reconstruction, time and space estimators.
pub fn tables(runs: &[RunReport], variants: VariantFilter) -> Vec<Table> {
    let two = variants.includes(Variant::TwoLevel);
    let three = variants.includes(Variant::ThreeLevel);

    let mut err = vec![
        Col::WithEoc("max_error", |r| r.max_error),
        Col::WithEoc("e_total", |r| r.e_total),
    ];
    if two {
        err.push(Col::Plain("total_two", |r| last(r).total_two));
        err.push(Col::Index("EI_two", |r| r.effectivity_two));
        err.push(Col::Plain("bound_two", |r| last(r).bound_two));
    }
    if three {
        err.push(Col::Plain("total_three", |r| last(r).total_three));
        err.push(Col::Index("EI_three", |r| r.effectivity_three));
        err.push(Col::Plain("bound_three", |r| last(r).bound_three));
    }

    let mut rec = vec![Col::WithEoc("E_ell", |r| last(r).e_ell)];
    if two {
        rec.push(Col::WithEoc("E_rec_two", |r| last(r).e_rec_two));
    }
    if three {
        rec.push(Col::WithEoc("E_rec_three", |r| last(r).e_rec_three));
    }

    let mut time = Vec::new();
    if two {
        time.push(Col::WithEoc("E_T1_two", |r| last(r).e_t1_two));
    }
    if three {
        time.push(Col::WithEoc("E_T1_three", |r| last(r).e_t1_three));
    }
    time.push(Col::WithEoc("E_T2", |r| last(r).e_t2));
    if three {
        time.push(Col::WithEoc("E_T3", |r| last(r).e_t3));
    }

    let mut space = Vec::new();
    if two {
        space.push(Col::WithEoc("E_S1_two", |r| last(r).e_s1_two));
    }
    if three {
        space.push(Col::WithEoc("E_S1_three", |r| last(r).e_s1_three));
    }
    space.push(Col::WithEoc("E_S2", |r| last(r).e_s2));

    vec![
        build("errors", "Errors", runs, err),
        build("reconstruction", "Reconstruction Error Estimators", runs, rec),
        build("time", "Time Estimators", runs, time),
        build("space", "Space Estimators", runs, space),
    ]
}

/// Writes the four tables and one estimator history per run into `dir`;
/// returns the paths written.
pub fn emit(runs: &[RunReport], format: Format, variants: VariantFilter, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for t in tables(runs, variants) {
        let path = dir.join(format!("{}.{}", t.name, format.extension()));
        fs::write(&path, t.render(format))?;
        written.push(path);
    }
    for r in runs {
        let path = dir.join(format!("estimators_case{}_L{}.csv", r.case_id, r.level));
        let mut out = BufWriter::new(fs::File::create(&path)?);
        r.estimators.write_csv(&mut out)?;
        out.flush()?;
        written.push(path);
    }
    Ok(written)
}
