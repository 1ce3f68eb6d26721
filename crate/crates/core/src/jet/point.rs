use std::collections::BTreeMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eval::{evaluate_at, Assignment};
use super::{GroupData, JetError};
use crate::canon::ConstraintSet;
use crate::expr::{FieldDecl, Index, IndexKind, Name};

pub const MAX_ORDER: usize = 3;

/// Derivative multi-indices as counts per direction, ordered by total order.
fn multi_indices() -> &'static (Vec<[u8; 4]>, [u8; 256]) {
    use std::sync::OnceLock;
    static TABLE: OnceLock<(Vec<[u8; 4]>, [u8; 256])> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut all = Vec::new();
        for n0 in 0..4u8 {
            for n1 in 0..4u8 {
                for n2 in 0..4u8 {
                    for n3 in 0..4u8 {
                        if usize::from(n0 + n1 + n2 + n3) <= MAX_ORDER {
                            all.push([n0, n1, n2, n3]);
                        }
                    }
                }
            }
        }
        all.sort_by_key(|c| (c.iter().sum::<u8>(), std::cmp::Reverse(*c)));
        let mut id = [u8::MAX; 256];
        for (k, c) in all.iter().enumerate() {
            id[code(c)] = k as u8;
        }
        (all, id)
    })
}

fn code(c: &[u8; 4]) -> usize {
    usize::from(c[0]) + 4 * usize::from(c[1]) + 16 * usize::from(c[2]) + 64 * usize::from(c[3])
}

/// Position of a derivative multi-index in the jet table, `None` past order 3.
pub fn multi_index_id(counts: &[u8; 4]) -> Option<usize> {
    if counts.iter().map(|&n| usize::from(n)).sum::<usize>() > MAX_ORDER {
        return None;
    }
    Some(usize::from(multi_indices().1[code(counts)]))
}

pub fn multi_index_count() -> usize {
    multi_indices().0.len()
}

/// All jet coordinates of one field: value per (derivative, Lorentz, adjoint) component.
#[derive(Clone, Debug)]
pub struct FieldJet {
    pub decl: FieldDecl,
    pub values: Vec<f64>,
    /// First Grassmann generator for odd fields; one generator per coordinate.
    pub gen_base: Option<u32>,
    dim: usize,
}

impl FieldJet {
    fn components(&self) -> usize {
        4usize.pow(self.decl.n_lorentz as u32) * self.dim.pow(self.decl.n_adjoint as u32)
    }

    /// Flat offset; Lorentz components 0..4, adjoint components zero-based.
    pub fn offset(&self, deriv: usize, lorentz: &[u8], adjoint: &[u8]) -> usize {
        let mut k = deriv;
        for &l in lorentz {
            k = k * 4 + usize::from(l);
        }
        for &a in adjoint {
            k = k * self.dim + usize::from(a);
        }
        k
    }
}

/// A point of jet space: every field coordinate up to derivative order 3,
/// plus numeric couplings.
#[derive(Clone, Debug)]
pub struct JetPoint {
    pub seed: u64,
    pub dim: usize,
    /// `g`, `e`, `alpha`, `a` in coupling order.
    pub couplings: [f64; 4],
    pub fields: Vec<FieldJet>,
    index: BTreeMap<(Name, usize, usize), usize>,
    pub generators: u32,
}

fn draw(rng: &mut ChaCha8Rng) -> f64 {
    let m: f64 = rng.gen_range(0.05..=1.0);
    if rng.gen::<bool>() {
        m
    } else {
        -m
    }
}

impl JetPoint {
    pub fn field(&self, name: &str, nl: usize, na: usize) -> Option<&FieldJet> {
        self.index.get(&(Name::from(name), nl, na)).map(|&k| &self.fields[k])
    }

    pub(crate) fn field_id(&self, name: &Name, nl: usize, na: usize) -> Option<usize> {
        self.index.get(&(name.clone(), nl, na)).copied()
    }

    fn field_mut(&mut self, name: &Name, nl: usize, na: usize) -> Option<&mut FieldJet> {
        let k = *self.index.get(&(name.clone(), nl, na))?;
        Some(&mut self.fields[k])
    }

    /// Uniform draws from `[-1, -0.05] U [0.05, 1]` for every coordinate and coupling.
    pub fn random(seed: u64, group: &GroupData, decls: &[FieldDecl]) -> JetPoint {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut couplings = [0.0; 4];
        for c in &mut couplings {
            *c = draw(&mut rng);
        }
        let mut fields = Vec::new();
        let mut index = BTreeMap::new();
        let mut generators = 0u32;
        for d in decls {
            let mut fj = FieldJet {
                decl: d.clone(),
                values: Vec::new(),
                gen_base: None,
                dim: group.dim,
            };
            let per = fj.components();
            let n = per * multi_index_count();
            fj.values = (0..n)
                .map(|k| if d.constant && k >= per { 0.0 } else { draw(&mut rng) })
                .collect();
            if d.odd {
                fj.gen_base = Some(generators);
                generators += n as u32;
            }
            index.insert((d.name.clone(), d.n_lorentz, d.n_adjoint), fields.len());
            fields.push(fj);
        }
        JetPoint {
            seed,
            dim: group.dim,
            couplings,
            fields,
            index,
            generators,
        }
    }

    /// Enforce every constraint and its derivatives up to the jet order by
    /// solving for `d_R d_0 j_0`, in order of increasing `|R|`.
    pub fn impose(&mut self, group: &GroupData, constraints: &ConstraintSet) -> Result<(), JetError> {
        let (mis, _) = multi_indices();
        for c in &constraints.constraints {
            let base = c.expression();
            let na = usize::from(c.param.is_some());
            if self.field_mut(&c.field, 1, na).is_none() {
                return Err(JetError::UnknownField(c.field.to_string()));
            }
            for r in mis.iter().filter(|r| r.iter().sum::<u8>() < MAX_ORDER as u8) {
                let mut e = base.clone();
                for (dir, &n) in r.iter().enumerate() {
                    for _ in 0..n {
                        e = e.derivative(&Index::explicit(IndexKind::Lorentz, dir as u8, false));
                    }
                }
                let mut solved = *r;
                solved[0] += 1;
                let deriv = multi_index_id(&solved).expect("order within jet");
                let comps: Vec<u8> = if na == 1 { (0..group.dim as u8).collect() } else { vec![0] };
                for a in comps {
                    let mut asg: Assignment = Vec::new();
                    if let Some(p) = &c.param {
                        asg.push((p.key().expect("named parameter"), a + 1));
                    }
                    let adj: Vec<u8> = if na == 1 { vec![a] } else { vec![] };
                    let fj = self.field_mut(&c.field, 1, na).expect("checked above");
                    let off = fj.offset(deriv, &[0], &adj);
                    fj.values[off] = 0.0;
                    let v0 = evaluate_at(&e, self, group, &asg)?.body().re;
                    self.field_mut(&c.field, 1, na).expect("checked above").values[off] = 1.0;
                    let v1 = evaluate_at(&e, self, group, &asg)?.body().re;
                    let slope = v1 - v0;
                    if slope.abs() < 1e-8 {
                        return Err(JetError::NotLinear(c.name.clone()));
                    }
                    self.field_mut(&c.field, 1, na).expect("checked above").values[off] = -v0 / slope;
                }
            }
        }
        Ok(())
    }
}

/// Derive an independent seed for trial `k` of a run seeded with `seed`.
pub fn trial_seed(seed: u64, k: u64) -> u64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(k);
    r.next_u64()
}

/// Sample with explicit field declarations, retrying with fresh draws when a
/// constraint cannot be solved.
pub fn sample_with(
    seed: u64,
    group: &GroupData,
    constraints: &ConstraintSet,
    decls: &[FieldDecl],
) -> Result<JetPoint, JetError> {
    let mut last = None;
    for retry in 0..8u64 {
        let s = if retry == 0 { seed } else { trial_seed(seed, 1 << 32 | retry) };
        let mut p = JetPoint::random(s, group, decls);
        p.seed = seed;
        match p.impose(group, constraints) {
            Ok(()) => return Ok(p),
            Err(e @ JetError::NotLinear(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Random jet point for the built-in fields (including the placeholder `X`).
pub fn sample_jet_point(seed: u64, group: &GroupData, constraints: &ConstraintSet) -> Result<JetPoint, JetError> {
    sample_with(seed, group, constraints, &crate::suite::context().fields())
}
