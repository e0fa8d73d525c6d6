//! Plain-text rendering helpers.

use bellkit_core::conditions::ConditionReport;
use bellkit_core::geometry::DeterministicStrategy;

/// `v` with `digits` significant digits, switching to scientific notation
/// for very small or very large magnitudes.
pub fn sig(v: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if exp < -4 || exp >= digits as i32 {
        format!("{:.*e}", digits - 1, v)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    }
}

/// Left-aligned columns separated by two spaces.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

pub fn condition_rows(reports: &[ConditionReport], digits: usize) -> Vec<Vec<String>> {
    reports
        .iter()
        .map(|r| {
            vec![
                r.condition.name().to_string(),
                if r.holds { "holds" } else { "FAILS" }.to_string(),
                sig(r.max_deviation, digits),
                r.vacuous_cells.to_string(),
                r.worst_cell_description(),
            ]
        })
        .collect()
}

pub fn strategy_label(d: &DeterministicStrategy) -> String {
    let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("");
    format!("A:{} B:{}", join(&d.alice), join(&d.bob))
}
