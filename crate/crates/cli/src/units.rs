//! Flag value parsers.

/// Aliases keep clap from treating list-valued flags as repeated flags.
pub type NsList = Vec<f64>;
pub type NumberList = Vec<f64>;
pub type PhotonList = Vec<usize>;

/// Nanoseconds per unit suffix.
fn unit_scale(suffix: &str) -> Option<f64> {
    match suffix {
        "" | "ns" => Some(1.0),
        "us" | "µs" => Some(1e3),
        "ms" => Some(1e6),
        _ => None,
    }
}

fn split_unit(s: &str) -> (&str, &str) {
    let end = s
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_alphabetic())
        .last()
        .map_or(s.len(), |(i, _)| i);
    (&s[..end], &s[end..])
}

/// `"20us"` → 20000. A bare number is in ns.
pub fn duration_ns(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let (num, unit) = split_unit(s);
    let scale = unit_scale(unit).ok_or_else(|| format!("unknown time unit `{unit}` in `{s}` (use ns, us or ms)"))?;
    let v: f64 = num.trim().parse().map_err(|_| format!("`{s}` is not a duration"))?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(format!("duration `{s}` must be finite and non-negative"));
    }
    Ok(v * scale)
}

/// Comma-separated durations. A unit on the last item applies to every
/// item without its own: `0,0.2,1,5us` is four values in µs.
pub fn duration_list_ns(s: &str) -> Result<Vec<f64>, String> {
    let items: Vec<&str> = s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect();
    if items.is_empty() {
        return Err("empty duration list".into());
    }
    let (_, tail_unit) = split_unit(items[items.len() - 1]);
    items
        .iter()
        .map(|item| {
            let (_, unit) = split_unit(item);
            if unit.is_empty() && !tail_unit.is_empty() {
                duration_ns(&format!("{item}{tail_unit}"))
            } else {
                duration_ns(item)
            }
        })
        .collect()
}

pub fn number_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<f64>().map_err(|_| format!("`{x}` is not a number")))
        .collect()
}

/// `3`, `1..10` (inclusive) or `1,2,5`.
pub fn photon_range(s: &str) -> Result<Vec<usize>, String> {
    let bad = || format!("`{s}` is not a photon count, range a..b or list");
    let v: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if v.is_empty() || v.contains(&0) {
        return Err("photon counts must be at least 1".into());
    }
    Ok(v)
}
