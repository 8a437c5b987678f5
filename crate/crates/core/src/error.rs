use num_bigint::BigInt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("curve is singular (discriminant = 0)")]
    SingularCurve,

    #[error("discriminant {0} could not be fully factored; bad-prime set would be incomplete")]
    DiscriminantNotFactored(BigInt),

    #[error("point is not on the curve")]
    NotOnCurve,

    #[error("{0} is a prime of bad reduction")]
    BadReduction(BigInt),

    #[error("point has torsion: {multiple}Q is the identity")]
    TorsionPoint { multiple: u32 },

    #[error("sigma is undefined at x = 0")]
    SigmaPole,

    #[error("sigma(Q') is neither Q nor -Q")]
    NoDescent,

    #[error("isogeny family requires u^6 | 27a; got a = {a}, u = {u}")]
    BadIsogenyParams { a: BigInt, u: BigInt },

    #[error("curve has two real components; the real embedding requires one")]
    TwoComponents,

    #[error("real embedding supports y^2 = x^3 + a2 x^2 + a4 x + a6 models only")]
    UnsupportedModel,

    #[error("index-set search exhausted: no admissible prime <= {bound} for index {index}")]
    SearchExhausted { index: u32, bound: u64 },

    #[error("work budget exceeded during {0}")]
    BudgetExceeded(String),

    #[error("membership of {prime} could not be resolved: {step}")]
    Unresolved { prime: BigInt, step: String },

    #[error("invalid rational literal {0:?}")]
    BadRational(String),

    #[error("invalid configuration: {0}")]
    BadConfig(String),

    #[error("modular arithmetic overflow: prime {0} exceeds the supported range")]
    PrimeTooLarge(BigInt),

    #[error("group order mod {0} is ambiguous at this size")]
    AmbiguousGroupOrder(BigInt),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
