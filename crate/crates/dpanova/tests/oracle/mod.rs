//! Reference implementations written directly from the definitions, used to
//! check the library's statistics and sensitivity bounds.

#![allow(dead_code)]

use dpanova::core::mechanism::{sens_sa, sens_se, sens_sqa, sens_sqe, sens_var_q};
use dpanova::core::stats::{f1_statistic, f_statistic, fq_statistic, sa_se, sqa_sqe, var_q};
use dpanova::core::Dataset;

pub const GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const QS: [f64; 4] = [0.5, 1.0, 1.5, 2.0];

/// `(between_q, within_q)` by explicit loops over groups.
pub fn brute_terms(k: usize, rows: &[(usize, f64)], q: f64) -> (f64, f64) {
    let n = rows.len() as f64;
    let grand = rows.iter().map(|r| r.1).sum::<f64>() / n;
    let mut between = 0.0;
    let mut within = 0.0;
    for j in 0..k {
        let members: Vec<f64> = rows.iter().filter(|r| r.0 == j).map(|r| r.1).collect();
        if members.is_empty() {
            continue;
        }
        let mean = members.iter().sum::<f64>() / members.len() as f64;
        between += members.len() as f64 * (mean - grand).abs().powf(q);
        within += members.iter().map(|y| (y - mean).abs().powf(q)).sum::<f64>();
    }
    (between, within)
}

pub fn brute_ratio(k: usize, rows: &[(usize, f64)], q: f64) -> f64 {
    let (b, w) = brute_terms(k, rows, q);
    let n = rows.len() as f64;
    (b / (k as f64 - 1.0)) / (w / (n - k as f64))
}

pub fn brute_var_q(rows: &[(usize, f64)], q: f64) -> f64 {
    let n = rows.len() as f64;
    let m = rows.iter().map(|r| r.1).sum::<f64>() / n;
    rows.iter().map(|r| (r.1 - m).abs().powf(q)).sum()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Compares F, F1 and Fq (q in [`QS`]) against the brute-force values.
/// Returns a description of the first mismatch.
pub fn check_exact(k: usize, rows: &[(usize, f64)]) -> Result<(), String> {
    let d = Dataset::new(k, rows.iter().copied()).map_err(|e| e.to_string())?;
    let pairs = [
        ("F", f_statistic(&d).map(|s| s.statistic), 2.0),
        ("F1", f1_statistic(&d).map(|s| s.statistic), 1.0),
    ];
    let mut checks: Vec<(String, f64, f64)> = Vec::new();
    for (name, got, q) in pairs {
        let got = got.map_err(|e| format!("{name}: {e}"))?;
        checks.push((name.into(), got, brute_ratio(k, rows, q)));
    }
    for q in QS {
        let got = fq_statistic(&d, q).map_err(|e| e.to_string())?.statistic;
        checks.push((format!("F_q(q={q})"), got, brute_ratio(k, rows, q)));
    }
    for (name, got, want) in checks {
        if !rel_close(got, want, 1e-9) {
            return Err(format!("{name}: library {got} vs brute force {want} on {rows:?}"));
        }
    }
    Ok(())
}

/// Every multiset of `n` rows drawn from `k` categories and [`GRID`] values.
pub fn multisets(k: usize, n: usize) -> Vec<Vec<(usize, f64)>> {
    let cells: Vec<(usize, f64)> = (0..k).flat_map(|c| GRID.iter().map(move |&v| (c, v))).collect();
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    fn rec(cells: &[(usize, f64)], start: usize, n: usize, cur: &mut Vec<(usize, f64)>, out: &mut Vec<Vec<(usize, f64)>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for i in start..cells.len() {
            cur.push(cells[i]);
            rec(cells, i, n, cur, out);
            cur.pop();
        }
    }
    rec(&cells, 0, n, &mut current, &mut out);
    out
}

#[derive(Debug, Default, Clone)]
pub struct SensitivityReport {
    pub datasets: usize,
    pub pairs: usize,
    pub violations: Vec<String>,
    /// Largest observed change divided by its bound, per quantity.
    pub worst_ratio: Vec<(String, f64)>,
}

fn quantities(d: &Dataset) -> Vec<f64> {
    let (sa, se) = sa_se(d);
    let mut v = vec![se, sa];
    for q in QS {
        let (a, e) = sqa_sqe(d, q).expect("valid q");
        v.extend([e, a, var_q(d, q).expect("valid q")]);
    }
    v
}

fn names() -> Vec<String> {
    let mut v = vec!["SE".to_string(), "SA".to_string()];
    for q in QS {
        v.extend([format!("SQE(q={q})"), format!("SQA(q={q})"), format!("VAR_q(q={q})")]);
    }
    v
}

fn bounds(n: usize) -> Vec<f64> {
    let mut v = vec![sens_se(), sens_sa()];
    for q in QS {
        v.extend([sens_sqe(q, n).unwrap(), sens_sqa(q, n).unwrap(), sens_var_q(q, n).unwrap()]);
    }
    v
}

/// Changes each distinct row of every multiset to every other grid row and
/// compares the change in each quantity with its bound.
pub fn enumerate_neighbors(k: usize, n: usize) -> SensitivityReport {
    let names = names();
    let bound = bounds(n);
    let cells: Vec<(usize, f64)> = (0..k).flat_map(|c| GRID.iter().map(move |&v| (c, v))).collect();
    let mut report = SensitivityReport {
        worst_ratio: names.iter().map(|n| (n.clone(), 0.0)).collect(),
        ..Default::default()
    };
    for rows in multisets(k, n) {
        report.datasets += 1;
        let base = quantities(&Dataset::new(k, rows.iter().copied()).unwrap());
        for i in 0..n {
            if i > 0 && rows[i] == rows[i - 1] {
                continue;
            }
            for &cell in &cells {
                if cell == rows[i] {
                    continue;
                }
                let mut changed = rows.clone();
                changed[i] = cell;
                report.pairs += 1;
                let other = quantities(&Dataset::new(k, changed.iter().copied()).unwrap());
                for (j, (a, b)) in base.iter().zip(&other).enumerate() {
                    let delta = (a - b).abs();
                    let ratio = delta / bound[j];
                    if ratio > report.worst_ratio[j].1 {
                        report.worst_ratio[j].1 = ratio;
                    }
                    if delta > bound[j] + 1e-12 && report.violations.len() < 20 {
                        report.violations.push(format!(
                            "{} changed by {delta} > bound {} (k={k}, N={n}): {rows:?} -> {changed:?}",
                            names[j], bound[j]
                        ));
                    }
                }
            }
        }
    }
    report
}
