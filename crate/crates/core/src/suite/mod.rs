//! Models, transformations and the catalog of identities checked about them.

mod claims;

use serde::Serialize;
use thiserror::Error;

use crate::canon::canonicalize;
use crate::expr::{Context, Expression};
use crate::variational::TransformationRule;

pub use claims::{
    cross_check, list_claims, numeric_targets, verify_brs_exact, verify_claim, Claim, ClaimStatus, NumericTarget, Strategy,
    VerificationResult, CLAIM_IDS,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SuiteError {
    #[error("unknown transformation `{0}`")]
    UnknownTransformation(String),
    #[error("unknown claim `{0}`")]
    UnknownClaim(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
}

/// Builtin declarations plus an even adjoint placeholder `X[a]`.
pub fn context() -> Context {
    let mut cx = Context::builtin();
    cx.load("field X[;a] even").expect("placeholder declaration");
    cx
}

/// Parse and expand every definition.
pub fn ex(s: &str) -> Expression {
    let cx = context();
    let e = cx.parse(s).unwrap_or_else(|err| panic!("built-in expression `{s}`: {err}"));
    cx.defs.substitute(&e)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelId {
    AbelianClassical,
    AbelianQuantum,
    YmClassical,
    YmQuantum,
}

impl ModelId {
    pub const ALL: [ModelId; 4] = [
        ModelId::AbelianClassical,
        ModelId::AbelianQuantum,
        ModelId::YmClassical,
        ModelId::YmQuantum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelId::AbelianClassical => "abelian-classical",
            ModelId::AbelianQuantum => "abelian-quantum",
            ModelId::YmClassical => "ym-classical",
            ModelId::YmQuantum => "ym-quantum",
        }
    }

    pub fn parse(s: &str) -> Result<ModelId, SuiteError> {
        ModelId::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| SuiteError::UnknownModel(s.into()))
    }

    pub fn source(self) -> &'static str {
        match self {
            ModelId::AbelianClassical => "-1/4*F[mu,nu]*F[^mu,^nu] + e*A[mu]*j[^mu]",
            ModelId::AbelianQuantum => "-1/4*F[mu,nu]*F[^mu,^nu] + B*d[^mu]A[mu] + 1/2*a*B*B + e*A[mu]*j[^mu]",
            ModelId::YmClassical => "-1/4*F[mu,nu;a]*F[^mu,^nu;a] + g*A[mu;a]*j[^mu;a]",
            ModelId::YmQuantum => {
                "-1/4*F[mu,nu;a]*F[^mu,^nu;a] - d[^mu]B[a]*A[mu;a] + 1/2*alpha*B[a]*B[a] \
                 - i*d[^mu]cbar[a]*(D[mu;a,b]c[b]) + g*j[nu;a]*A[^nu;a]"
            }
        }
    }
}

/// Lagrangian density, fully expanded and canonical.
pub fn build_model(id: ModelId) -> Expression {
    canonicalize(&ex(id.source()))
}

pub const TRANSFORMATIONS: [&str; 6] = [
    "gauge-abelian",
    "gauge-nonabelian",
    "brs",
    "global-gauge",
    "ghost-scale",
    "ghost-charge",
];

pub fn build_transformation(name: &str) -> Result<TransformationRule, SuiteError> {
    let cx = context();
    let rules: (bool, &[(&str, &str)]) = match name {
        "gauge-abelian" => (false, &[("A[mu]", "d[mu]omega"), ("j[mu]", "0"), ("B", "0")]),
        "gauge-nonabelian" => (
            false,
            &[("A[mu;a]", "D[mu;a,b]omega[b]"), ("j[mu;a]", "0"), ("X[a]", "0")],
        ),
        "brs" => (
            true,
            &[
                ("A[mu;a]", "D[mu;a,b]c[b]"),
                ("B[a]", "0"),
                ("c[a]", "-1/2*g*f[a,b,c]*c[b]*c[c]"),
                ("cbar[a]", "i*B[a]"),
                // The source is gauge invariant, so it has no BRS variation.
                ("j[mu;a]", "0"),
            ],
        ),
        "global-gauge" => (
            false,
            &[
                ("A[mu;a]", "f[a,b,c]*theta[b]*A[mu;c]"),
                ("B[a]", "f[a,b,c]*theta[b]*B[c]"),
                ("c[a]", "f[a,b,c]*theta[b]*c[c]"),
                ("cbar[a]", "f[a,b,c]*theta[b]*cbar[c]"),
                ("j[mu;a]", "f[a,b,c]*theta[b]*j[mu;c]"),
            ],
        ),
        "ghost-scale" => (
            false,
            &[
                ("c[a]", "c[a]"),
                ("cbar[a]", "-cbar[a]"),
                ("A[mu;a]", "0"),
                ("B[a]", "0"),
                ("j[mu;a]", "0"),
            ],
        ),
        // Same map as ghost-scale, but graded: it picks up a sign when it
        // crosses a ghost.
        "ghost-charge" => (
            true,
            &[
                ("c[a]", "c[a]"),
                ("cbar[a]", "-cbar[a]"),
                ("A[mu;a]", "0"),
                ("B[a]", "0"),
                ("j[mu;a]", "0"),
            ],
        ),
        _ => return Err(SuiteError::UnknownTransformation(name.into())),
    };
    let (odd, table) = rules;
    let mut t = TransformationRule::new(name, odd);
    for (pat, img) in table {
        t = t.with(&cx, pat, img).expect("built-in rule");
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Coupling;

    #[test]
    fn models_are_scalars() {
        for id in ModelId::ALL {
            let l = build_model(id);
            assert!(!l.is_empty());
            assert!(l.signature().is_empty(), "{id:?}");
            assert_eq!(l.parity(), Some(false));
        }
    }

    #[test]
    fn quantum_models_carry_gauge_parameters() {
        let l = build_model(ModelId::AbelianQuantum);
        assert!(l.terms.iter().any(|m| m.coeff.pow[Coupling::GaugeA as usize] == 1));
        let l = build_model(ModelId::YmQuantum);
        assert!(l.terms.iter().any(|m| m.coeff.pow[Coupling::Alpha as usize] == 1));
        assert!(l.terms.iter().any(|m| m.coeff.imag && m.grassmann_degree() == 2));
    }

    #[test]
    fn transformations() {
        for name in TRANSFORMATIONS {
            build_transformation(name).unwrap();
        }
        assert!(build_transformation("lorentz").is_err());
        let brs = build_transformation("brs").unwrap();
        assert!(brs.odd);
        let gs = build_transformation("ghost-scale").unwrap();
        assert!(!gs.odd);
    }
}
