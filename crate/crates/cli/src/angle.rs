use std::f64::consts::PI;

use spheredyn::sweep::Axis;

/// Parses reals written as `0.3`, `1/3`, `pi`, `-pi/6`, `2pi/3` or `2*pi/3`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let t: String = s.trim().to_ascii_lowercase().chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err("empty number".into());
    }
    let bad = || format!("cannot read {s:?} as a number");
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (t.as_str(), None),
    };
    let num = if let Some(coef) = num.strip_suffix("pi") {
        let coef = coef.strip_suffix('*').unwrap_or(coef);
        let c = match coef {
            "" | "+" => 1.0,
            "-" => -1.0,
            c => c.parse::<f64>().map_err(|_| bad())?,
        };
        c * PI
    } else {
        num.parse::<f64>().map_err(|_| bad())?
    };
    let value = match den {
        Some(d) => {
            let d = parse_real(d)?;
            if d == 0.0 {
                return Err(format!("division by zero in {s:?}"));
            }
            num / d
        }
        None => num,
    };
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(value)
}

/// `start:stop:step`, or a single value.
pub fn parse_axis(s: &str) -> Result<Axis, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [v] => Ok(Axis::point(parse_real(v)?)),
        [a, b, c] => Axis::new(parse_real(a)?, parse_real(b)?, parse_real(c)?).map_err(|e| e.to_string()),
        _ => Err(format!("expected start:stop:step, got {s:?}")),
    }
}

pub fn parse_point(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(parse_real).collect()
}
