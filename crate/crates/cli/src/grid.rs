use std::str::FromStr;

/// Values of `N`: `a:b:step`, `dyadic:a:b` (powers of two from `a` to `b`), or a comma list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid(pub Vec<usize>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("not a positive integer: {t:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        let values = match parts.as_slice() {
            ["dyadic", a, b] => {
                let (a, b) = (num(a)?, num(b)?);
                if !a.is_power_of_two() || !b.is_power_of_two() || a > b {
                    return Err(format!("dyadic bounds must be powers of two with a <= b, got {a}:{b}"));
                }
                std::iter::successors(Some(a), |&v| v.checked_mul(2)).take_while(|&v| v <= b).collect()
            }
            [a, b, step] => {
                let (a, b, step) = (num(a)?, num(b)?, num(step)?);
                if step == 0 || a > b {
                    return Err(format!("range needs a <= b and step >= 1, got {s}"));
                }
                (a..=b).step_by(step).collect()
            }
            [list] => list.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
            _ => return Err(format!("unrecognized grid {s:?}")),
        };
        if values.is_empty() || values.contains(&0) {
            return Err("grid values must be positive".into());
        }
        Ok(Grid(values))
    }
}
