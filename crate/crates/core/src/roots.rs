//! Bracketing bisection with a Newton polish.

/// Settings for [`smallest_root`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Number of equal cells the bracket is scanned in for sign changes.
    pub scan_cells: usize,
    pub max_bisections: usize,
    pub max_newton: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions { scan_cells: 512, max_bisections: 200, max_newton: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    /// More than one sign change was seen while scanning the bracket.
    pub multiple: bool,
    pub bisections: usize,
    pub newton_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoSignChange {
    pub f_lo: f64,
    pub f_hi: f64,
}

/// Finds the smallest root of `f` on `[lo, hi]`.
///
/// The bracket is scanned on `scan_cells` equal cells; the first cell whose
/// endpoints straddle zero is bisected, then Newton steps using `df` polish
/// the estimate as long as they stay inside the cell and shrink `|f|`.
pub fn smallest_root<F, D>(f: F, df: D, lo: f64, hi: f64, opts: RootOptions) -> Result<Root, NoSignChange>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let cells = opts.scan_cells.max(1);
    let width = (hi - lo) / cells as f64;
    let f_lo = f(lo);
    if f_lo == 0.0 {
        return Ok(Root { x: lo, residual: 0.0, multiple: false, bisections: 0, newton_steps: 0 });
    }

    let mut first: Option<(f64, f64, f64, f64)> = None;
    let mut changes = 0usize;
    let (mut a, mut fa) = (lo, f_lo);
    let mut f_hi = f_lo;
    for k in 1..=cells {
        let b = if k == cells { hi } else { lo + width * k as f64 };
        let fb = f(b);
        f_hi = fb;
        if fb == 0.0 || (fa < 0.0) != (fb < 0.0) {
            changes += 1;
            if first.is_none() {
                first = Some((a, fa, b, fb));
            }
            if fb == 0.0 && k < cells {
                // Exact zero on a grid node: step past it so it counts once.
                let nb = lo + width * (k as f64 + 0.5);
                a = nb;
                fa = f(nb);
                continue;
            }
        }
        a = b;
        fa = fb;
    }

    let Some((mut a, mut fa, mut b, fb)) = first else {
        return Err(NoSignChange { f_lo, f_hi });
    };
    if fb == 0.0 {
        return Ok(Root { x: b, residual: 0.0, multiple: changes > 1, bisections: 0, newton_steps: 0 });
    }

    let mut bisections = 0;
    while bisections < opts.max_bisections {
        let m = a + (b - a) / 2.0;
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        bisections += 1;
        if fm == 0.0 {
            return Ok(Root { x: m, residual: 0.0, multiple: changes > 1, bisections, newton_steps: 0 });
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }

    let (cell_lo, cell_hi) = (a, b);
    let mut x = a + (b - a) / 2.0;
    let mut fx = f(x);
    let mut newton_steps = 0;
    while newton_steps < opts.max_newton && fx != 0.0 {
        let d = df(x);
        if !(d.is_finite()) || d == 0.0 {
            break;
        }
        let next = x - fx / d;
        if !(next >= cell_lo && next <= cell_hi) {
            break;
        }
        let fnext = f(next);
        newton_steps += 1;
        if fnext.abs() >= fx.abs() {
            break;
        }
        x = next;
        fx = fnext;
    }
    Ok(Root { x, residual: fx, multiple: changes > 1, bisections, newton_steps })
}
