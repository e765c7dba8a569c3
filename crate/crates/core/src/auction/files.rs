//! Text formats for bids and auction configuration.
//!
//! Bid file: one bidder per line, `bidder_id, k1, b1, …, km, bm`.
//! Config file: `key = value` lines with keys `m`, `capacities`, `weights`,
//! `w`, `f` and `s`; list values are comma separated. `#` starts a comment.

use super::{AuctionConfig, AuctionError, Bid};

fn strip(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

fn number(line: usize, s: &str) -> Result<u64, AuctionError> {
    s.trim()
        .parse()
        .map_err(|_| AuctionError::Parse { line, msg: format!("expected an unsigned integer, got {:?}", s.trim()) })
}

fn list(line: usize, s: &str) -> Result<Vec<u64>, AuctionError> {
    s.split(',').map(|x| number(line, x)).collect()
}

/// Parses a bid file for `m` VM types. Returns `(id, bid)` in file order.
pub fn parse_bids(text: &str, m: usize) -> Result<Vec<(String, Bid)>, AuctionError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = strip(raw);
        if body.is_empty() {
            continue;
        }
        let mut fields = body.split(',');
        let id = fields.next().unwrap_or("").trim();
        if id.is_empty() {
            return Err(AuctionError::Parse { line, msg: "missing bidder id".into() });
        }
        let values: Vec<u64> = fields.map(|f| number(line, f)).collect::<Result<_, _>>()?;
        if values.len() != 2 * m {
            return Err(AuctionError::Parse {
                line,
                msg: format!("expected {} values for {m} VM types, got {}", 2 * m, values.len()),
            });
        }
        let bid = Bid {
            quantities: values.iter().step_by(2).copied().collect(),
            prices: values.iter().skip(1).step_by(2).copied().collect(),
        };
        out.push((id.to_string(), bid));
    }
    Ok(out)
}

pub fn write_bids(bids: &[(String, Bid)]) -> String {
    let mut s = String::new();
    for (id, b) in bids {
        s.push_str(id);
        for (k, p) in b.quantities.iter().zip(&b.prices) {
            s.push_str(&format!(", {k}, {p}"));
        }
        s.push('\n');
    }
    s
}

/// Parses a configuration file. Missing `w`, `f`, `s` take the defaults 16, 8,
/// 10; missing weights default to 1. `m` must agree with the list lengths.
pub fn parse_config(text: &str) -> Result<AuctionConfig, AuctionError> {
    let mut m = None;
    let mut capacities = None;
    let mut weights = None;
    let mut cfg = AuctionConfig::uniform(1, 0);
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = strip(raw);
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| AuctionError::Parse { line, msg: "expected key = value".into() })?;
        let small = |v: u64| -> Result<usize, AuctionError> {
            usize::try_from(v).ok().filter(|&x| x <= 1 << 16).ok_or(AuctionError::Parse {
                line,
                msg: format!("{v} is out of range"),
            })
        };
        match key.trim() {
            "m" => m = Some(small(number(line, value)?)?),
            "capacities" => capacities = Some(list(line, value)?),
            "weights" => weights = Some(list(line, value)?),
            "w" => cfg.width = small(number(line, value)?)?,
            "f" => cfg.frac_bits = small(number(line, value)?)?,
            "s" => cfg.copies = small(number(line, value)?)?,
            other => return Err(AuctionError::Parse { line, msg: format!("unknown key {other:?}") }),
        }
    }
    let capacities = capacities.ok_or(AuctionError::Config("missing capacities".into()))?;
    let m = m.unwrap_or(capacities.len());
    if capacities.len() != m {
        return Err(AuctionError::Config(format!("m = {m} but {} capacities", capacities.len())));
    }
    cfg.weights = weights.unwrap_or_else(|| vec![1; m]);
    cfg.capacities = capacities;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bids_round_trip() {
        let text = "# id, k1, b1, k2, b2\nalice, 1, 10, 0, 0\n\nbob,2,6,3,99  # trailing\n";
        let bids = parse_bids(text, 2).unwrap();
        assert_eq!(bids.len(), 2);
        assert_eq!(bids[1].0, "bob");
        assert_eq!(bids[1].1, Bid { quantities: vec![2, 3], prices: vec![6, 99] });
        assert_eq!(parse_bids(&write_bids(&bids), 2).unwrap(), bids);
    }

    #[test]
    fn bid_errors_carry_line_numbers() {
        assert_eq!(
            parse_bids("a, 1, 2\nb, 1\n", 1),
            Err(AuctionError::Parse { line: 2, msg: "expected 2 values for 1 VM types, got 1".into() })
        );
        assert!(matches!(parse_bids("a, x, 2\n", 1), Err(AuctionError::Parse { line: 1, .. })));
        assert!(matches!(parse_bids(", 1, 2\n", 1), Err(AuctionError::Parse { line: 1, .. })));
    }

    #[test]
    fn config_parsing() {
        let cfg = parse_config("m = 2\ncapacities = 5, 7\nweights = 1, 3\nw = 12\nf = 4\ns = 6\n").unwrap();
        assert_eq!(cfg.capacities, vec![5, 7]);
        assert_eq!(cfg.weights, vec![1, 3]);
        assert_eq!((cfg.width, cfg.frac_bits, cfg.copies), (12, 4, 6));

        let cfg = parse_config("capacities = 100, 100, 100\n").unwrap();
        assert_eq!(cfg, AuctionConfig::uniform(3, 100));

        assert!(parse_config("m = 3\ncapacities = 1, 2\n").is_err());
        assert!(parse_config("capacities = 1\nweights = 0\n").is_err());
        assert!(parse_config("colour = blue\n").is_err());
        assert!(parse_config("w = 16\n").is_err());
    }
}
