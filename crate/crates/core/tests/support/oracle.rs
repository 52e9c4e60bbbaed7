//! Straightforward reference implementations used to check the library.
//! They favour the textbook formula over speed or numerical care.
#![allow(dead_code)]

/// `(precision, recall, f1)` computed from the definition: recall averages
/// each reference row's best match, precision each candidate column's.
pub fn entity_prf(rows: &[Vec<f64>], n_cols: usize) -> (f64, f64, f64) {
    let n_rows = rows.len();
    match (n_rows, n_cols) {
        (0, 0) => return (1.0, 1.0, 1.0),
        (0, _) | (_, 0) => return (0.0, 0.0, 0.0),
        _ => {}
    }
    let mut recall = 0.0;
    for row in rows {
        let mut best = f64::NEG_INFINITY;
        for &v in row {
            if v > best {
                best = v;
            }
        }
        recall += best;
    }
    recall /= n_rows as f64;
    let mut precision = 0.0;
    for j in 0..n_cols {
        let mut best = f64::NEG_INFINITY;
        for row in rows {
            if row[j] > best {
                best = row[j];
            }
        }
        precision += best;
    }
    precision /= n_cols as f64;
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    (precision, recall, f1)
}

/// Pearson r from raw sums.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..x.len() {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt()
}

/// Rank by counting: 1 + (values below) + (other values equal) / 2.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let below = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            1.0 + below + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

/// Kendall tau-b by enumerating all pairs.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> f64 {
    let (mut conc, mut disc, mut tie_x, mut tie_y) = (0.0f64, 0.0, 0.0, 0.0);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                continue;
            } else if dx == 0.0 {
                tie_x += 1.0;
            } else if dy == 0.0 {
                tie_y += 1.0;
            } else if (dx > 0.0) == (dy > 0.0) {
                conc += 1.0;
            } else {
                disc += 1.0;
            }
        }
    }
    (conc - disc) / ((conc + disc + tie_x) * (conc + disc + tie_y)).sqrt()
}

/// `(slope, intercept, r2, rmse)` from the 2x2 normal equations.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let mean_y = sy / n;
    let mut sse = 0.0;
    let mut sst = 0.0;
    for i in 0..x.len() {
        let e = y[i] - (intercept + slope * x[i]);
        sse += e * e;
        sst += (y[i] - mean_y) * (y[i] - mean_y);
    }
    let r2 = if sst == 0.0 { 0.0 } else { 1.0 - sse / sst };
    (slope, intercept, r2, (sse / n).sqrt())
}

/// Two-sided p-value of a t statistic with one or two degrees of freedom,
/// where the distribution has a closed form.
pub fn t_two_sided_p_closed_form(t: f64, df: u32) -> f64 {
    let t = t.abs();
    match df {
        1 => 1.0 - 2.0 / std::f64::consts::PI * t.atan(),
        2 => 1.0 - t / (2.0 + t * t).sqrt(),
        _ => panic!("closed form only for df 1 or 2"),
    }
}

/// Sentence spans for text without line breaks, by walking
/// whitespace-separated words: a word ending in `.`, `!` or `?` closes a
/// sentence unless it is a guarded abbreviation.
pub fn sentences_by_words(text: &str, guarded: &[&str]) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let mut words = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        words.push((start, i));
    }
    let mut out = Vec::new();
    let mut open: Option<usize> = None;
    for &(s, e) in &words {
        let first = *open.get_or_insert(s);
        let word: String = chars[s..e].iter().collect::<String>().to_lowercase();
        let last = chars[e - 1];
        let stripped = word.trim_start_matches(|c: char| !c.is_alphanumeric());
        let closes = matches!(last, '.' | '!' | '?') && !(last == '.' && guarded.contains(&stripped));
        if closes {
            out.push((first, e));
            open = None;
        }
    }
    if let (Some(first), Some(&(_, e))) = (open, words.last()) {
        out.push((first, e));
    }
    out
}
