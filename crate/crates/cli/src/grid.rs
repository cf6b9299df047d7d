//! Grid arguments: `a,b,c` or inclusive `start:stop:step`.

pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Err("empty grid".into());
    }
    if text.contains(':') {
        let parts: Vec<f64> = text
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad grid bound {p:?}")))
            .collect::<Result<_, _>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(format!("range grid needs start:stop:step, got {text:?}"));
        };
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err("grid bounds must be finite".into());
        }
        if step <= 0.0 {
            return Err(format!("grid step must be positive, got {step}"));
        }
        if stop < start {
            return Err("empty grid".into());
        }
        let span = (stop - start) / step;
        if span > 1e7 {
            return Err(format!("grid has too many points ({span:.0})"));
        }
        let n = (span + 1e-9).floor() as usize + 1;
        return Ok((0..n).map(|k| snap(start + k as f64 * step)).collect());
    }
    let values: Vec<f64> = text
        .split(',')
        .map(|p| match p.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(format!("bad grid value {p:?}")),
        })
        .collect::<Result<_, _>>()?;
    Ok(values)
}

/// Drops last-bit noise from `start + k·step`.
fn snap(x: f64) -> f64 {
    format!("{x:.12e}").parse().unwrap_or(x)
}

/// Comma-separated lattice coordinate, e.g. `2,3`.
pub fn parse_coord(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad coordinate component {p:?}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_are_inclusive() {
        let g = parse_grid("0:0.2:0.01").unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[20], 0.2);
        assert_eq!(g[15], 0.15);
        assert_eq!(parse_grid("1:1:0.5").unwrap(), vec![1.0]);
        assert_eq!(parse_grid("0:1:0.3").unwrap().len(), 4);
    }

    #[test]
    fn lists() {
        assert_eq!(parse_grid("0, 0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("0").unwrap(), vec![0.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(parse_grid("").unwrap_err(), "empty grid");
        assert_eq!(parse_grid("  ").unwrap_err(), "empty grid");
        assert_eq!(parse_grid("1:0:0.1").unwrap_err(), "empty grid");
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("0,nan").is_err());
        assert!(parse_grid("0,").is_err());
    }

    #[test]
    fn coords() {
        assert_eq!(parse_coord("2, 3").unwrap(), vec![2, 3]);
        assert!(parse_coord("2,-1").is_err());
    }
}
