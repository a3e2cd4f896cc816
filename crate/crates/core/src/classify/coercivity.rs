use serde::{Deserialize, Serialize};

use super::{bisect, ClassifyError, HFunc, Window};
use crate::expr::Expr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoercivityLabel {
    NondegeneratelyCoercive,
    DegeneratelyCoercive,
    Coercive,
    NotCoercive,
    Undetermined,
}

/// A maximal interval on which `h − c < 0`. Open ends (`None`) run past the
/// extended scan range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub offset: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub f_a: Option<f64>,
    pub f_b: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffsetVerdict {
    pub offset: f64,
    pub coercive: bool,
    pub degenerate: bool,
    pub nondegenerate: bool,
    /// `h − c` stays negative on the whole extended range.
    pub undecided: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivityClass {
    pub label: CoercivityLabel,
    pub window: Window,
    pub offsets_scanned: usize,
    /// Offset that decided the label, if any.
    pub deciding_offset: Option<f64>,
    pub witnesses: Vec<Witness>,
    pub verdicts: Vec<OffsetVerdict>,
}

const SAMPLES: usize = 6000;

/// Labels `f` on `window` by scanning offsets of its antiderivative.
///
/// Offsets are the midpoints of `n_offsets` equal cells of the range of `h`
/// on the window, together with the critical values of `h` there. For each
/// offset the negative intervals of `h − c` meeting the window are located
/// on the window extended by one width on each side; an interval that does
/// not close inside the extension is treated as a ray. The label is the
/// strongest property witnessed by some offset, checked in the order
/// degenerately coercive, nondegenerate, coercive.
pub fn classify_coercivity(
    f: &Expr,
    window: Window,
    n_offsets: usize,
    tol_f: f64,
    tol_h: f64,
) -> Result<CoercivityClass, ClassifyError> {
    if !(window.lo.is_finite() && window.hi.is_finite() && window.lo < window.hi) {
        return Err(ClassifyError::BadWindow {
            lo: window.lo,
            hi: window.hi,
        });
    }
    let width = window.width();
    let (ext_lo, ext_hi) = (window.lo - width, window.hi + width);
    let h = HFunc::new(f.clone(), 0.5 * (window.lo + window.hi), 1e-13);
    let grid: Vec<f64> = (0..=SAMPLES)
        .map(|i| ext_lo + (ext_hi - ext_lo) * i as f64 / SAMPLES as f64)
        .collect();
    let hv = grid.iter().map(|&s| h.eval(s)).collect::<Result<Vec<_>, _>>()?;
    let fv = grid.iter().map(|&s| f.eval(s)).collect::<Result<Vec<_>, _>>()?;

    // Zeros of f (sign changes) on the extended range.
    let mut crit = Vec::new();
    for i in 0..SAMPLES {
        if fv[i] == 0.0 {
            crit.push(grid[i]);
        } else if fv[i] * fv[i + 1] < 0.0 {
            crit.push(bisect(|s| f.eval(s), grid[i], grid[i + 1], 1e-14)?);
        }
    }
    if fv[SAMPLES] == 0.0 {
        crit.push(grid[SAMPLES]);
    }
    let crit_h = crit.iter().map(|&s| h.eval(s)).collect::<Result<Vec<_>, _>>()?;

    let inside: Vec<f64> = grid
        .iter()
        .zip(&hv)
        .filter(|(s, _)| window.contains(**s))
        .map(|(_, v)| *v)
        .collect();
    let h_min = inside.iter().cloned().fold(f64::INFINITY, f64::min);
    let h_max = inside.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = h_max - h_min;

    let mut offsets: Vec<f64> = (0..n_offsets)
        .map(|k| h_min + (k as f64 + 0.5) * spread / n_offsets as f64)
        .collect();
    for (&s, &c) in crit.iter().zip(&crit_h) {
        if window.contains(s) && c > h_min + tol_h {
            offsets.push(c);
        }
    }
    offsets.sort_by(|a, b| a.total_cmp(b));
    offsets.dedup_by(|a, b| (*a - *b).abs() <= tol_h);

    let mut verdicts = Vec::with_capacity(offsets.len());
    let mut intervals_by_offset = Vec::with_capacity(offsets.len());
    for &c in &offsets {
        let ivs = negative_intervals(&h, f, &grid, &hv, &crit, &crit_h, c, tol_h)?;
        let ivs: Vec<Witness> = ivs
            .into_iter()
            .filter(|w| w.a.map_or(true, |a| a <= window.hi) && w.b.map_or(true, |b| b >= window.lo))
            .collect();
        verdicts.push(judge(c, &ivs, tol_f));
        intervals_by_offset.push(ivs);
    }

    let pick = |pred: fn(&OffsetVerdict) -> bool| verdicts.iter().position(pred);
    let (label, idx) = if let Some(i) = pick(|v| v.degenerate) {
        (CoercivityLabel::DegeneratelyCoercive, Some(i))
    } else if let Some(i) = pick(|v| v.nondegenerate) {
        (CoercivityLabel::NondegeneratelyCoercive, Some(i))
    } else if let Some(i) = pick(|v| v.coercive) {
        (CoercivityLabel::Coercive, Some(i))
    } else if verdicts.iter().any(|v| !v.undecided) {
        (CoercivityLabel::NotCoercive, None)
    } else {
        (CoercivityLabel::Undetermined, None)
    };
    let witnesses = match idx {
        Some(i) => intervals_by_offset[i].clone(),
        None => intervals_by_offset.into_iter().flatten().collect(),
    };
    Ok(CoercivityClass {
        label,
        window,
        offsets_scanned: offsets.len(),
        deciding_offset: idx.map(|i| offsets[i]),
        witnesses,
        verdicts,
    })
}

#[allow(clippy::too_many_arguments)]
fn negative_intervals(
    h: &HFunc,
    f: &Expr,
    grid: &[f64],
    hv: &[f64],
    crit: &[f64],
    crit_h: &[f64],
    c: f64,
    tol_h: f64,
) -> Result<Vec<Witness>, ClassifyError> {
    // Zeros of h − c: sign changes on the grid and critical points touching c.
    let mut cuts: Vec<f64> = Vec::new();
    let g = |s: f64| h.eval(s).map(|v| v - c);
    for i in 0..grid.len() - 1 {
        let (ga, gb) = (hv[i] - c, hv[i + 1] - c);
        if ga < 0.0 && gb >= 0.0 || ga >= 0.0 && gb < 0.0 {
            cuts.push(bisect(g, grid[i], grid[i + 1], 1e-12)?);
        }
    }
    for (&s, &hs) in crit.iter().zip(crit_h) {
        if (hs - c).abs() <= tol_h && !cuts.iter().any(|z| (z - s).abs() < 1e-9) {
            cuts.push(s);
        }
    }
    cuts.sort_by(|a, b| a.total_cmp(b));

    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let mut bounds = vec![lo];
    bounds.extend(cuts.iter().copied());
    bounds.push(hi);
    let mut out = Vec::new();
    for pair in bounds.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b - a <= 0.0 {
            continue;
        }
        if g(0.5 * (a + b))? >= 0.0 {
            continue;
        }
        let a = (a > lo).then_some(a);
        let b = (b < hi).then_some(b);
        out.push(Witness {
            offset: c,
            a,
            b,
            f_a: a.map(|s| f.eval(s)).transpose()?,
            f_b: b.map(|s| f.eval(s)).transpose()?,
        });
    }
    Ok(out)
}

fn judge(c: f64, ivs: &[Witness], tol_f: f64) -> OffsetVerdict {
    let zero = |v: Option<f64>| v.is_some_and(|x| x.abs() <= tol_f);
    let undecided = ivs.is_empty() || ivs.iter().any(|w| w.a.is_none() && w.b.is_none());
    let mut coercive = !undecided;
    let mut degenerate = !undecided;
    let mut nondegenerate = !undecided;
    for w in ivs {
        match (w.a, w.b) {
            (Some(_), Some(_)) => {
                if zero(w.f_a) && zero(w.f_b) {
                    coercive = false;
                }
                if !(zero(w.f_a) || zero(w.f_b)) {
                    degenerate = false;
                }
                if zero(w.f_a) || zero(w.f_b) {
                    nondegenerate = false;
                }
            }
            _ => {
                nondegenerate = false;
                if zero(w.f_a) || zero(w.f_b) {
                    coercive = false;
                }
            }
        }
    }
    OffsetVerdict {
        offset: c,
        coercive,
        degenerate: coercive && degenerate,
        nondegenerate,
        undecided,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn label(f: &str) -> CoercivityLabel {
        classify_coercivity(&parse(f).unwrap(), Window::symmetric(10.0), 64, 1e-8, 1e-9)
            .unwrap()
            .label
    }

    #[test]
    fn reference_labels() {
        assert_eq!(label("s"), CoercivityLabel::NondegeneratelyCoercive);
        assert_eq!(label("cos(s)"), CoercivityLabel::NondegeneratelyCoercive);
        assert_eq!(label("1"), CoercivityLabel::DegeneratelyCoercive);
        assert_eq!(label("s^2"), CoercivityLabel::DegeneratelyCoercive);
        assert_eq!(label("1 + cos(s)/2"), CoercivityLabel::DegeneratelyCoercive);
        assert_eq!(label("s^3 - s"), CoercivityLabel::DegeneratelyCoercive);
    }

    #[test]
    fn degenerate_witness_has_a_vanishing_end() {
        let c = classify_coercivity(&parse("s^3 - s").unwrap(), Window::symmetric(10.0), 64, 1e-8, 1e-9).unwrap();
        let w = c
            .witnesses
            .iter()
            .find(|w| w.a.is_some() && w.b.is_some())
            .expect("bounded witness");
        assert!(w.f_a.unwrap().abs() <= 1e-8 || w.f_b.unwrap().abs() <= 1e-8);
    }

    #[test]
    fn bad_window() {
        let r = classify_coercivity(&parse("s").unwrap(), Window { lo: 1.0, hi: 1.0 }, 8, 1e-8, 1e-9);
        assert!(matches!(r, Err(ClassifyError::BadWindow { .. })));
    }
}
