//! Tridiagonal solves by twisted (two-sided) elimination.
//!
//! Elimination runs from both ends and meets at the middle row, so a system
//! that is the mirror image of another produces the mirrored solution bit for
//! bit. The evolution schemes rely on this for exact reflection and parity
//! properties.

/// Rows `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`.
///
/// `sub[0]` and `sup[m-1]` are ignored.
#[derive(Debug, Clone, Default)]
pub struct Tridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn with_len(m: usize) -> Self {
        Self { sub: vec![0.0; m], diag: vec![0.0; m], sup: vec![0.0; m] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Solve for `x`; `None` if a pivot vanishes or the result is not finite.
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let m = self.len();
        assert_eq!(rhs.len(), m, "right-hand side length");
        if m == 0 {
            return Some(Vec::new());
        }
        let (a, b, c) = (&self.sub, &self.diag, &self.sup);
        let p = m / 2;

        // top rows 0..p reduce to  bt[i] x[i] + c[i] x[i+1] = dt[i]
        let mut bt = vec![0.0; p];
        let mut dt = vec![0.0; p];
        for i in 0..p {
            if i == 0 {
                bt[0] = b[0];
                dt[0] = rhs[0];
            } else {
                let w = a[i] / bt[i - 1];
                bt[i] = b[i] - w * c[i - 1];
                dt[i] = rhs[i] - w * dt[i - 1];
            }
            if bt[i] == 0.0 || !bt[i].is_finite() {
                return None;
            }
        }

        // bottom rows p+1..m reduce to  a[i] x[i-1] + bb[i] x[i] = db[i]
        let mut bb = vec![0.0; m];
        let mut db = vec![0.0; m];
        for i in (p + 1..m).rev() {
            if i == m - 1 {
                bb[i] = b[i];
                db[i] = rhs[i];
            } else {
                let w = c[i] / bb[i + 1];
                bb[i] = b[i] - w * a[i + 1];
                db[i] = rhs[i] - w * db[i + 1];
            }
            if bb[i] == 0.0 || !bb[i].is_finite() {
                return None;
            }
        }

        let (mut lb, mut ld, mut rb, mut rd) = (0.0, 0.0, 0.0, 0.0);
        if p > 0 {
            lb = a[p] * c[p - 1] / bt[p - 1];
            ld = a[p] * dt[p - 1] / bt[p - 1];
        }
        if p + 1 < m {
            rb = c[p] * a[p + 1] / bb[p + 1];
            rd = c[p] * db[p + 1] / bb[p + 1];
        }
        let pivot = b[p] - (lb + rb);
        if pivot == 0.0 || !pivot.is_finite() {
            return None;
        }
        let mut x = vec![0.0; m];
        x[p] = (rhs[p] - (ld + rd)) / pivot;
        for i in (0..p).rev() {
            x[i] = (dt[i] - c[i] * x[i + 1]) / bt[i];
        }
        for i in p + 1..m {
            x[i] = (db[i] - a[i] * x[i - 1]) / bb[i];
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn apply(t: &Tridiagonal, x: &[f64]) -> Vec<f64> {
        let m = x.len();
        (0..m)
            .map(|i| {
                let mut s = t.diag[i] * x[i];
                if i > 0 {
                    s += t.sub[i] * x[i - 1];
                }
                if i + 1 < m {
                    s += t.sup[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn tiny_systems() {
        for m in 1..6 {
            let mut t = Tridiagonal::with_len(m);
            for i in 0..m {
                t.sub[i] = -1.0;
                t.diag[i] = 4.0;
                t.sup[i] = -1.5;
            }
            let rhs: Vec<f64> = (0..m).map(|i| i as f64 + 1.0).collect();
            let x = t.solve(&rhs).unwrap();
            for (r, y) in apply(&t, &x).iter().zip(&rhs) {
                assert!((r - y).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn singular_returns_none() {
        let mut t = Tridiagonal::with_len(3);
        t.diag = vec![0.0, 1.0, 1.0];
        assert!(t.solve(&[1.0, 1.0, 1.0]).is_none());
    }

    proptest! {
        #[test]
        fn solves_diagonally_dominant(
            rows in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -5.0f64..5.0), 1..60)
        ) {
            let m = rows.len();
            let mut t = Tridiagonal::with_len(m);
            for (i, (a, c, _)) in rows.iter().enumerate() {
                t.sub[i] = *a;
                t.sup[i] = *c;
                t.diag[i] = 2.5 + a.abs() + c.abs();
            }
            let rhs: Vec<f64> = rows.iter().map(|r| r.2).collect();
            let x = t.solve(&rhs).unwrap();
            for (r, y) in apply(&t, &x).iter().zip(&rhs) {
                prop_assert!((r - y).abs() < 1e-12);
            }
        }

        #[test]
        fn mirrored_system_gives_mirrored_solution(
            half in prop::collection::vec((0.1f64..1.0, 0.1f64..1.0, -5.0f64..5.0), 1..40),
            middle in (0.1f64..1.0, 0.1f64..1.0, -5.0f64..5.0),
        ) {
            let mut rows = half.clone();
            rows.push(middle);
            rows.extend(half.iter().rev().cloned());
            let m = rows.len();
            let mut t = Tridiagonal::with_len(m);
            for (i, (a, c, _)) in rows.iter().enumerate() {
                t.sub[i] = -a;
                t.sup[i] = -c;
                t.diag[i] = 2.0 + a + c;
            }
            let rhs: Vec<f64> = rows.iter().map(|r| r.2).collect();
            let mut r = Tridiagonal::with_len(m);
            for i in 0..m {
                r.sub[i] = t.sup[m - 1 - i];
                r.sup[i] = t.sub[m - 1 - i];
                r.diag[i] = t.diag[m - 1 - i];
            }
            let rrhs: Vec<f64> = rhs.iter().rev().cloned().collect();
            let x = t.solve(&rhs).unwrap();
            let mut y = r.solve(&rrhs).unwrap();
            y.reverse();
            prop_assert_eq!(x, y);
        }
    }
}
