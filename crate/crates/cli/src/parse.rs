//! Argument value parsers: inclusive ranges, exact statistics, pair lists.

use std::ops::RangeInclusive;

use num_rational::Ratio;

/// `lo..hi` (inclusive) or a single value.
pub fn range(s: &str) -> Result<RangeInclusive<u64>, String> {
    let parse = |t: &str| {
        t.trim()
            .parse::<u64>()
            .map_err(|_| format!("`{t}` is not a non-negative integer"))
    };
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(format!("empty range `{s}`"));
    }
    Ok(lo..=hi)
}

/// `p/q`, an integer, or a decimal such as `0.502`, read exactly.
pub fn statistic(s: &str) -> Result<Ratio<u64>, String> {
    let bad = || format!("`{s}` is not a fraction p/q or a decimal");
    let s = s.trim();
    let r = if let Some((p, q)) = s.split_once('/') {
        let p: u64 = p.trim().parse().map_err(|_| bad())?;
        let q: u64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err("denominator is zero".into());
        }
        Ratio::new(p, q)
    } else {
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 18 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let scale = 10u64.pow(frac.len() as u32);
        let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        Ratio::new(int * scale + frac, scale)
    };
    Ok(r)
}

/// A parsed `m:n,m:n,...` list (a newtype so clap treats it as one value).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairList(pub Vec<(u64, u64)>);

/// A parsed `a:b:c,d,...` list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowList(pub Vec<Vec<u64>>);

/// `m:n` pairs separated by commas.
pub fn pairs(s: &str) -> Result<PairList, String> {
    let items: Result<Vec<_>, String> = s
        .split(',')
        .map(|item| {
            let (m, n) = item
                .split_once(':')
                .ok_or_else(|| format!("`{item}` is not of the form m:n"))?;
            let m = m.trim().parse().map_err(|_| format!("bad size in `{item}`"))?;
            let n = n.trim().parse().map_err(|_| format!("bad size in `{item}`"))?;
            Ok((m, n))
        })
        .collect();
    items.map(PairList)
}

/// Comma-separated rows; each row is one or more `:`-separated integers.
pub fn rows(s: &str) -> Result<RowList, String> {
    s.split(',')
        .map(|item| {
            item.split(':')
                .map(|t| t.trim().parse().map_err(|_| format!("bad row `{item}`")))
                .collect()
        })
        .collect::<Result<_, _>>()
        .map(RowList)
}
