//! Argument value parsers.

/// `h:<d>` with `d >= 1`.
pub fn group(s: &str) -> Result<usize, String> {
    let d = s
        .strip_prefix("h:")
        .ok_or_else(|| format!("group must look like h:<d>, got '{s}'"))?
        .parse::<usize>()
        .map_err(|e| format!("bad Heisenberg dimension in '{s}': {e}"))?;
    if d == 0 {
        return Err("Heisenberg dimension must be at least 1".into());
    }
    Ok(d)
}

/// A decimal, a rational `p/q`, or a power of two `2^k`.
pub fn scalar(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v = if let Some(exp) = s.strip_prefix("2^") {
        let k: i32 = exp.parse().map_err(|_| format!("bad exponent in '{s}'"))?;
        2f64.powi(k)
    } else if let Some((p, q)) = s.split_once('/') {
        let p: f64 = p.trim().parse().map_err(|_| format!("bad numerator in '{s}'"))?;
        let q: f64 = q.trim().parse().map_err(|_| format!("bad denominator in '{s}'"))?;
        if q == 0.0 {
            return Err(format!("zero denominator in '{s}'"));
        }
        p / q
    } else {
        s.parse().map_err(|_| format!("not a number: '{s}'"))?
    };
    if !v.is_finite() {
        return Err(format!("'{s}' is not finite"));
    }
    Ok(v)
}

/// Comma-separated scalars; an item `2^a..2^b` expands to every power of two
/// from `2^a` to `2^b` inclusive, in that order.
pub fn list(s: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match item.split_once("..") {
            Some((a, b)) => {
                let exp = |t: &str| -> Result<i32, String> {
                    t.trim()
                        .strip_prefix("2^")
                        .and_then(|e| e.parse().ok())
                        .ok_or_else(|| format!("range endpoints must be powers of two, got '{t}'"))
                };
                let (a, b) = (exp(a)?, exp(b)?);
                let step = if b >= a { 1 } else { -1 };
                let mut k = a;
                loop {
                    out.push(2f64.powi(k));
                    if k == b {
                        break;
                    }
                    k += step;
                }
            }
            None => out.push(scalar(item)?),
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

/// Rows separated by `;`, entries by `,`.
pub fn matrix(s: &str) -> Result<Vec<Vec<f64>>, String> {
    let rows = s
        .split(';')
        .map(|r| r.split(',').map(scalar).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(format!("matrix must be square, got {n} rows of lengths {:?}", rows.iter().map(Vec::len).collect::<Vec<_>>()));
    }
    Ok(rows)
}
