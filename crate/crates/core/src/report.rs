//! The full certificate bundle: every check the library can run, executed
//! on one configuration and serialized as a single JSON document. Output
//! is deterministic for a fixed config (ordered maps, no timestamps), so
//! two runs on the same build are byte-identical.

use crate::analytic::{
    check_height_isogeny_ratio, check_primitive_growth, estimate_height, naive_doubling_estimate,
    prime_zeta2_partial, GrowthReport, HeightEstimate, RatioVerdict, RealEmbedding,
};
use crate::config::RunConfig;
use crate::curve::CurveSpec;
use crate::eds::{BadPrimeGrowth, CurveConstants, EdsSequence, PrimitiveClass};
use crate::error::Result;
use crate::factor::Budget;
use crate::isogeny::{
    DivChainReport, HypothesesReport, LiftReport, TwoPrimitiveReport,
};
use crate::sets::{EzsReport, Family, MembershipVerdict, ModelCheck, SetFamily, SetsEngine};
use crate::SPEC_VERSION;
use num_bigint::BigInt;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct SequenceSummary {
    pub first_terms: Vec<String>,
    pub length: u32,
    pub divisibility_violations: Vec<(u32, u32)>,
    pub rank_law_violations: Vec<(u64, u32)>,
    pub constants: CurveConstants,
    pub bad_prime_growth: Vec<BadPrimeGrowth>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DescentSummary {
    pub sign_match: i8,
    pub hypotheses: HypothesesReport,
    pub div_chain: DivChainReport,
    pub ord_additivity_violations: Vec<(u32, String)>,
    pub lift: LiftReport,
    pub two_primitive: TwoPrimitiveReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeightSummary {
    pub main: HeightEstimate,
    pub companion: HeightEstimate,
    pub naive_doubling_main: HeightEstimate,
    pub ratio: RatioVerdict,
    pub growth: GrowthReport,
    pub zeta_partials: Vec<(u64, f64)>,
    pub zeta_upper_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SetsSummary {
    pub family: SetFamily,
    pub s_integral: EzsReport,
    pub model_add_grid: Vec<ModelCheck>,
    pub model_mul_samples: Vec<ModelCheck>,
    pub decided_sample: Vec<MembershipVerdict>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FullReport {
    pub spec_version: &'static str,
    pub config: RunConfig,
    pub sequence: SequenceSummary,
    pub descent: DescentSummary,
    pub heights: HeightSummary,
    pub sets: SetsSummary,
    pub violations_total: u64,
    pub unknowns_total: u64,
}

/// Rank-of-apparition law over the generated prefix: for every good prime
/// l <= prime_bound whose rank lies within the prefix, `l | B_m` iff the
/// rank divides m, and the rank equals the order of Q mod l. Violating
/// pairs (l, m) are returned.
pub fn rank_law_violations(seq: &EdsSequence, prime_bound: u32, m_max: u32) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let m_max = m_max.min(seq.len());
    for &l in crate::factor::small_primes() {
        if l > prime_bound {
            break;
        }
        let lb = BigInt::from(l);
        if !seq.curve().is_good_prime(&lb) {
            continue;
        }
        let rank = match seq.rank_of_apparition(&lb) {
            Some(r) => r,
            None => continue,
        };
        let order = match seq.curve().point_order_mod_p(seq.point(), &lb) {
            Ok(o) => o,
            Err(_) => continue,
        };
        if BigInt::from(rank) != order {
            out.push((l as u64, rank));
            continue;
        }
        for m in 1..=m_max {
            let divides = (seq.b(m) % &lb) == BigInt::from(0);
            if divides != (m % rank == 0) {
                out.push((l as u64, m));
            }
        }
    }
    out
}

pub fn run_report_all(cfg: &RunConfig) -> Result<FullReport> {
    cfg.validate()?;
    let pair = cfg.build_pair()?;
    let n = cfg.bounds.term_bound;
    let seq = pair.main_eds(n)?;
    let b_seq = pair.companion_eds(n.max(90))?;

    // sequence-level checks
    let constants = seq.curve_constants(cfg.bounds.prime_bound, n);
    let sequence = SequenceSummary {
        first_terms: (1..=12.min(n)).map(|i| seq.b(i).to_string()).collect(),
        length: n,
        divisibility_violations: seq.divisibility_violations(60.min(n)),
        rank_law_violations: rank_law_violations(&seq, 200, 60.min(n)),
        constants,
        bad_prime_growth: seq.bad_prime_growth(40.min(n)),
    };

    // descent certificates
    let div_n = 30.min(b_seq.len() / pair.degree());
    let two_primitive_indices: Vec<u32> = (1..=40.min(n))
        .filter(|v| v % pair.degree() != 0)
        .collect();
    let descent = DescentSummary {
        sign_match: pair.sign_match(),
        hypotheses: pair.check_hypotheses(&seq),
        div_chain: pair.check_div_chain(&b_seq, &seq, div_n),
        ord_additivity_violations: pair.check_ord_additivity_all(&b_seq, div_n),
        lift: pair.primitive_lift_check(&b_seq, &seq, 24.min(n), cfg.budget, cfg.rho_seed),
        two_primitive: pair.two_primitive_divisors_report(
            &seq,
            &two_primitive_indices,
            cfg.budget,
        ),
    };

    // heights and growth
    let (h_lo, h_hi) = (40.min(n.saturating_sub(10)).max(2), n.min(100));
    let main_h = estimate_height(&seq, h_lo, h_hi);
    let comp_h = estimate_height(&b_seq, h_lo, h_hi);
    let heights = HeightSummary {
        ratio: check_height_isogeny_ratio(&main_h, &comp_h, pair.degree(), 0.1),
        naive_doubling_main: naive_doubling_estimate(&seq),
        growth: check_primitive_growth(&seq, main_h.value, 10, 100.min(n)),
        main: main_h,
        companion: comp_h,
        zeta_partials: [10u64, 1_000, 1_000_000]
            .iter()
            .map(|&b| (b, prime_zeta2_partial(b)))
            .collect(),
        zeta_upper_bound: 0.453,
        };

    // prime sets
    let mut engine = SetsEngine::from_config(cfg)?;
    let family = engine.build_family(cfg.bounds.fragment_prime_bound)?;
    let s_integral = engine.check_s_integral_points(cfg.bounds.ezs_bound)?;
    let count = engine.u_set().entries.len() as u32;
    let mut model_add_grid = Vec::new();
    for i in 1..=count {
        for j in 1..=count {
            for k in 1..=count {
                model_add_grid.push(engine.model_check_add(i, j, k)?);
            }
        }
    }
    let mut model_mul_samples = Vec::new();
    if count >= 4 {
        model_mul_samples.push(engine.model_check_mul(1, 1, 1)?);
        model_mul_samples.push(engine.model_check_mul(1, 1, 2)?);
    }
    let decided_sample: Vec<MembershipVerdict> = [5u32, 7, 11, 13, 61, 83]
        .iter()
        .map(|&p| engine.decide(&BigInt::from(p), Family::S))
        .collect();
    let sets = SetsSummary {
        family,
        s_integral,
        model_add_grid,
        model_mul_samples,
        decided_sample,
    };

    // violation and unknown tallies decide the process exit code
    let mut violations = 0u64;
    violations += sequence.divisibility_violations.len() as u64;
    violations += sequence.rank_law_violations.len() as u64;
    violations += descent.div_chain.violations.len() as u64;
    violations += descent.ord_additivity_violations.len() as u64;
    violations += descent.lift.violations.len() as u64;
    if !heights.ratio.pass {
        violations += 1;
    }
    if !heights.growth.pass {
        violations += 1;
    }
    let v = &sets.family.venn;
    if !(v.s1_s2_disjoint && v.t2_t1_disjoint && v.t2_s2_disjoint && v.all_members_good_reduction)
    {
        violations += 1;
    }
    violations += sets
        .model_add_grid
        .iter()
        .chain(sets.model_mul_samples.iter())
        .filter(|c| !c.agrees)
        .count() as u64;

    let mut unknowns = 0u64;
    unknowns += descent.two_primitive.counts.unknown as u64;
    unknowns += sets.s_integral.unresolved.len() as u64;
    unknowns += sets
        .decided_sample
        .iter()
        .filter(|d| d.verdict == crate::sets::Verdict::Unknown)
        .count() as u64;

    Ok(FullReport {
        spec_version: SPEC_VERSION,
        config: cfg.clone(),
        sequence,
        descent,
        heights,
        sets,
        violations_total: violations,
        unknowns_total: unknowns,
    })
}

// ---------------------------------------------------------------------------
// CSV renderings

/// Sequence table: `n, digits(B_n), [B_n,] digits(B_n^*), class, p_n, p'_n`.
pub fn eds_csv(seq: &EdsSequence, include_terms: bool, budget: u64, rho_seed: u64) -> String {
    let mut out = String::new();
    out.push_str(if include_terms {
        "n,digits_b,b,digits_primitive,class,largest_good,second_good\n"
    } else {
        "n,digits_b,digits_primitive,class,largest_good,second_good\n"
    });
    for n in 1..=seq.len() {
        let b = seq.b(n);
        let star = seq.primitive_part(n);
        let class = match seq.classify_primitive(n, &mut Budget::new(budget)) {
            PrimitiveClass::Zero => "zero".to_string(),
            PrimitiveClass::ExactlyOnePrime { prime, exponent } => {
                format!("one[{prime}^{exponent}]")
            }
            PrimitiveClass::AtLeastTwoPrimes => "two_or_more".to_string(),
            PrimitiveClass::Unknown => "unknown".to_string(),
        };
        let pp = seq.primitive_primes(n, &mut Budget::new(budget), rho_seed);
        let largest = pp
            .largest_good
            .map(|x| x.to_string())
            .unwrap_or_else(|| "-".into());
        let second = pp
            .second_good
            .map(|x| x.to_string())
            .unwrap_or_else(|| "-".into());
        let digits_b = b.to_string().len();
        let digits_star = star.to_string().len();
        if include_terms {
            out.push_str(&format!(
                "{n},{digits_b},{b},{digits_star},{class},{largest},{second}\n"
            ));
        } else {
            out.push_str(&format!(
                "{n},{digits_b},{digits_star},{class},{largest},{second}\n"
            ));
        }
    }
    out
}

/// Growth table: `n, log B_n, log B_n^*, ratio`.
pub fn growth_csv(report: &GrowthReport) -> String {
    let mut out = String::from("n,log_b,log_primitive,ratio\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6}\n",
            r.n, r.log_term, r.log_primitive, r.ratio
        ));
    }
    out
}

/// Sorted members of the four fragment sets.
pub fn fragment_csv(family: &SetFamily) -> String {
    let mut out = String::from("set,prime\n");
    for (name, members) in [
        ("S1", family.s1_members()),
        ("S2", family.s2_members()),
        ("T1", family.t1_members()),
        ("T2", family.t2_members()),
    ] {
        for p in members {
            out.push_str(&format!("{name},{p}\n"));
        }
    }
    out
}

/// Build the embedding a CLI command needs, shared here so the defaults
/// stay in one place.
pub fn build_embedding(cfg: &RunConfig) -> Result<(CurveSpec, RealEmbedding)> {
    let curve = cfg.build_curve()?;
    let emb = RealEmbedding::build(&curve, &cfg.build_point()?, cfg.precision)?;
    Ok((curve, emb))
}
