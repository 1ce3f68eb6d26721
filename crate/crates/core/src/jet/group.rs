use serde::Serialize;

/// Explicit structure constants of a compact Lie algebra.
#[derive(Clone, Debug)]
pub struct GroupData {
    pub name: &'static str,
    pub dim: usize,
    /// Dense `f[a][b][c]`, zero-based.
    f: Vec<f64>,
    /// Nonzero entries `(a, b, c, value)`, zero-based.
    nonzero: Vec<(u8, u8, u8, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupName {
    Su2,
    Su3,
}

impl GroupName {
    pub fn parse(s: &str) -> Option<GroupName> {
        match s {
            "su2" => Some(GroupName::Su2),
            "su3" => Some(GroupName::Su3),
            _ => None,
        }
    }

    pub fn data(self) -> GroupData {
        match self {
            GroupName::Su2 => GroupData::su2(),
            GroupName::Su3 => GroupData::su3(),
        }
    }
}

impl GroupData {
    /// Build from a list of independent components (one-based), filling in
    /// the totally antisymmetric completion. Panics if the Jacobi identity fails.
    pub fn from_components(name: &'static str, dim: usize, comps: &[([usize; 3], f64)]) -> Self {
        let mut f = vec![0.0; dim * dim * dim];
        let at = |a: usize, b: usize, c: usize| (a * dim + b) * dim + c;
        for &([a, b, c], v) in comps {
            let (a, b, c) = (a - 1, b - 1, c - 1);
            for (p, s) in [([a, b, c], 1.0), ([b, c, a], 1.0), ([c, a, b], 1.0), ([b, a, c], -1.0), ([a, c, b], -1.0), ([c, b, a], -1.0)] {
                f[at(p[0], p[1], p[2])] = s * v;
            }
        }
        let mut nonzero = Vec::new();
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    let v = f[at(a, b, c)];
                    if v != 0.0 {
                        nonzero.push((a as u8, b as u8, c as u8, v));
                    }
                }
            }
        }
        let g = GroupData { name, dim, f, nonzero };
        let err = g.jacobi_violation();
        assert!(err < 1e-15, "{name}: Jacobi identity violated by {err}");
        g
    }

    pub fn su2() -> Self {
        GroupData::from_components("su2", 3, &[([1, 2, 3], 1.0)])
    }

    pub fn su3() -> Self {
        let h = 0.5;
        let r = 3f64.sqrt() / 2.0;
        GroupData::from_components(
            "su3",
            8,
            &[
                ([1, 2, 3], 1.0),
                ([1, 4, 7], h),
                ([2, 4, 6], h),
                ([2, 5, 7], h),
                ([3, 4, 5], h),
                ([1, 5, 6], -h),
                ([3, 6, 7], -h),
                ([4, 5, 8], r),
                ([6, 7, 8], r),
            ],
        )
    }

    /// `f^{abc}` with one-based indices.
    pub fn f(&self, a: usize, b: usize, c: usize) -> f64 {
        self.f[((a - 1) * self.dim + (b - 1)) * self.dim + (c - 1)]
    }

    /// Nonzero entries, zero-based.
    pub fn nonzero(&self) -> &[(u8, u8, u8, f64)] {
        &self.nonzero
    }

    /// Largest violation of `f^{abe} f^{ecd} + f^{bce} f^{ead} + f^{cae} f^{ebd} = 0`.
    pub fn jacobi_violation(&self) -> f64 {
        let n = self.dim;
        let f = |a: usize, b: usize, c: usize| self.f[(a * n + b) * n + c];
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let s: f64 = (0..n)
                            .map(|e| f(a, b, e) * f(e, c, d) + f(b, c, e) * f(e, a, d) + f(c, a, e) * f(e, b, d))
                            .sum();
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structure_constants() {
        let g = GroupData::su2();
        assert_eq!(g.f(1, 2, 3), 1.0);
        assert_eq!(g.f(2, 1, 3), -1.0);
        assert_eq!(g.nonzero().len(), 6);
        let s = GroupData::su3();
        assert_eq!(s.f(4, 5, 8), 3f64.sqrt() / 2.0);
        assert_eq!(s.f(6, 5, 1), 0.5);
        assert_eq!(s.nonzero().len(), 54);
        assert!(s.jacobi_violation() < 1e-15);
    }

    #[test]
    #[should_panic(expected = "Jacobi")]
    fn broken_constants_rejected() {
        GroupData::from_components("bad", 8, &[([1, 2, 3], 1.0), ([1, 4, 7], 0.5)]);
    }
}
