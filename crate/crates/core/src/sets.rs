//! Construction of the complementary recursive prime sets.
//!
//! The ingredients: a curve/point `(E, Q)` with sequence `B`, the constants
//! `L` (primes l with `B_l = 1`) and `b` (largest bad-prime rank), the real
//! embedding, and the isogeny degree `q`. An index set `U = {l_1 < l_2 <
//! ...}` is chosen greedily: `l_i` is the smallest admissible prime whose
//! multiple `l_i Q` has y-coordinate within `tol(i)` of `i`. Admissible
//! means above `b`, outside `L` and `{q}` (and outside `U` itself for the
//! second set `U'`).
//!
//! Write `p_n` / `p'_n` for the largest / second-largest good primitive
//! prime divisor of `B_n`. The four fragments are
//!
//! * `S1` = primes dividing some `B_{l_i}`, `l_i` in `U`,
//! * `S2` = `{p_l : l prime not in U} ∪ {p_{l_i l_j}} ∪ {p_{l l_i} : l in L}`,
//! * `T1` = primes dividing some `B_{l'_i}` (exact mode; `= S1` otherwise),
//! * `T2` = like `S2` with second-largest primes: indices from `U` and all
//!   three clauses primed in complementary mode; indices from `U'` with
//!   only the prime-index clause primed in exact mode.
//!
//! Complementary mode assembles `S = P \ S2`, `T = P \ T2` (union is all
//! primes); exact mode assembles `S = S1 ∪ T2`, `T = P \ S` (disjoint
//! union). Membership of an arbitrary prime p is decided through the order
//! `n_p` of `Q mod p`: `p` lies in `S1` iff `n_p` is one of the `l_i`, and
//! the clause structure of `n_p` decides the rest; every verdict carries
//! the witness chain that reproduces it.

use crate::analytic::{rational_to_f64, RealEmbedding};
use crate::config::{RunConfig, ScheduleKind};
use crate::curve::{CurveSpec, RatPoint};
use crate::eds::{EdsSequence, PrimitivePrimes};
use crate::error::{Error, Result};
use crate::factor::{self, Budget};
use crate::isogeny::DescentPair;
use crate::real::BigFloat;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SetMode {
    Complementary,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    S1,
    S2,
    T1,
    T2,
    S,
    T,
}

impl Family {
    pub fn parse(s: &str) -> Result<Family> {
        Ok(match s {
            "S1" | "s1" => Family::S1,
            "S2" | "s2" => Family::S2,
            "T1" | "t1" => Family::T1,
            "T2" | "t2" => Family::T2,
            "S" | "s" => Family::S,
            "T" | "t" => Family::T,
            _ => return Err(Error::BadConfig(format!("unknown family {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    In,
    Out,
    Unknown,
}

#[derive(Debug, Clone, Serialize)]
pub struct UEntry {
    pub index: u32,
    pub prime: u64,
    pub y: f64,
    pub deviation: f64,
    pub exact_verified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexSetU {
    pub entries: Vec<UEntry>,
    pub schedule: ScheduleKind,
    pub search_bound: u64,
    /// Every member exceeds this floor (the largest bad-prime rank).
    pub floor: u32,
    /// Set once the greedy search ran out of primes for some index; no
    /// entry beyond it can be constructed within the bound.
    pub exhausted_at_index: Option<u32>,
}

impl IndexSetU {
    pub fn primes(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.prime).collect()
    }

    pub fn contains(&self, v: u64) -> bool {
        self.entries.iter().any(|e| e.prime == v)
    }

    fn last_prime(&self) -> u64 {
        self.entries.last().map(|e| e.prime).unwrap_or(0)
    }

    /// Membership is settled for any value at or below the frontier: the
    /// enumeration is strictly increasing, so anything missing below the
    /// last entry is out for good. An exhausted search pushes the frontier
    /// to the bound (every prime up to it was scanned and rejected).
    fn covers(&self, v: u64) -> bool {
        v <= self.last_prime()
            || (self.exhausted_at_index.is_some() && v <= self.search_bound)
    }
}

/// A certified fragment member produced by one clause of the S2/T2
/// definition.
#[derive(Debug, Clone, Serialize)]
pub struct FragmentEntry {
    /// Sequence index n the clause points at.
    pub index: u64,
    pub clause: &'static str,
    /// Second-largest (true) or largest (false) good primitive prime.
    pub take_second: bool,
    pub status: FragmentStatus,
    #[serde(serialize_with = "crate::certificate::bigint_opt_string::serialize")]
    pub prime: Option<BigInt>,
    /// Complete factorization of the primitive part backs the choice.
    pub factoring_complete: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FragmentStatus {
    Member,
    /// The primitive part has no good prime of the requested rank.
    NoSuchPrime,
    /// Budget ran out before the factorization was complete.
    Unresolved,
    /// Term index beyond the configured size cap.
    IndexOutOfRange,
}

#[derive(Debug, Clone, Serialize)]
pub struct DivisorFragment {
    /// Index the divisors came from.
    pub index: u64,
    #[serde(serialize_with = "crate::certificate::bigint_vec_string::serialize")]
    pub primes: Vec<BigInt>,
    pub factoring_complete: bool,
    pub skipped: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SetFamily {
    pub mode: SetMode,
    pub s1: Vec<DivisorFragment>,
    pub t1: Vec<DivisorFragment>,
    pub s2: Vec<FragmentEntry>,
    pub t2: Vec<FragmentEntry>,
    pub u: IndexSetU,
    pub u_prime: Option<IndexSetU>,
    pub venn: VennReport,
}

impl SetFamily {
    pub fn s1_members(&self) -> Vec<BigInt> {
        collect_divisors(&self.s1)
    }

    pub fn t1_members(&self) -> Vec<BigInt> {
        collect_divisors(&self.t1)
    }

    pub fn s2_members(&self) -> Vec<BigInt> {
        collect_members(&self.s2)
    }

    pub fn t2_members(&self) -> Vec<BigInt> {
        collect_members(&self.t2)
    }
}

fn collect_divisors(frags: &[DivisorFragment]) -> Vec<BigInt> {
    let mut out: Vec<BigInt> = frags.iter().flat_map(|f| f.primes.clone()).collect();
    out.sort();
    out.dedup();
    out
}

fn collect_members(entries: &[FragmentEntry]) -> Vec<BigInt> {
    let mut out: Vec<BigInt> = entries
        .iter()
        .filter_map(|e| e.prime.clone())
        .collect();
    out.sort();
    out.dedup();
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct VennReport {
    pub s1_s2_disjoint: bool,
    pub t2_t1_disjoint: bool,
    pub t2_s2_disjoint: bool,
    pub s2_t2_disjoint_complementary: bool,
    /// Witness for the expected non-empty overlap T2 ∩ S1, when one was
    /// found within the computed fragments.
    #[serde(serialize_with = "crate::certificate::bigint_opt_string::serialize")]
    pub t2_s1_overlap_witness: Option<BigInt>,
    pub all_members_good_reduction: bool,
}

/// In/Out/Unknown with a reproducible witness chain.
#[derive(Debug, Clone, Serialize)]
pub struct MembershipVerdict {
    pub prime: String,
    pub family: Family,
    pub verdict: Verdict,
    pub witness: Witness,
    pub budget_spent: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Witness {
    /// Order of Q mod p.
    pub n_p: Option<u64>,
    /// |E(F_p)| and its factorization.
    pub e_p: Option<u64>,
    pub e_p_factors: Vec<(u64, u32)>,
    pub n_p_factors: Vec<(u64, u32)>,
    pub bad_reduction: bool,
    /// Which clause of the set definition fired (or was tested last).
    pub clause: Option<String>,
    /// The designated largest / second-largest prime at the clause index.
    pub designated_prime: Option<String>,
    /// Known factorization of the primitive part at the clause index.
    pub primitive_primes: Vec<String>,
    pub factoring_complete: Option<bool>,
    pub blocking_step: Option<String>,
    /// For compound families: the sub-family verdicts this one derives from.
    pub derived_from: Vec<(String, Verdict)>,
}

/// The engine owning the curve data, sequences, search state and caches.
/// Membership queries are answered through it so expensive factorizations
/// are shared; certificates stay immutable once emitted.
pub struct SetsEngine {
    pub mode: SetMode,
    curve: CurveSpec,
    point: RatPoint,
    seq: EdsSequence,
    emb: RealEmbedding,
    degree: u32,
    /// Primes l with B_l = 1 within the scan bound.
    l_set: Vec<u64>,
    l_scan_bound: u32,
    /// Largest bad-prime rank; index-set members must exceed it.
    floor_b: u32,
    schedule: ScheduleKind,
    search_bound: u64,
    budget_per_task: u64,
    rho_seed: u64,
    /// Indices above this are not materialised (term sizes grow like n^2).
    term_index_cap: u64,
    /// Fragments draw on this many leading entries of U / U', regardless of
    /// how far membership queries later extend the enumeration.
    fragment_count: u32,
    u_set: IndexSetU,
    u_prime: Option<IndexSetU>,
    term_cache: BTreeMap<u64, BigInt>,
    primitive_cache: BTreeMap<u64, PrimitivePrimes>,
    /// Fresh factoring work spent by the current top-level query.
    work_spent: u64,
}

impl SetsEngine {
    pub fn from_config(cfg: &RunConfig) -> Result<SetsEngine> {
        cfg.validate()?;
        let pair = cfg.build_pair()?;
        let mode = if cfg.set_mode == "exact" {
            SetMode::Exact
        } else {
            SetMode::Complementary
        };
        SetsEngine::new(&pair, cfg, mode)
    }

    pub fn new(pair: &DescentPair, cfg: &RunConfig, mode: SetMode) -> Result<SetsEngine> {
        let curve = pair.target_curve().clone();
        let point = pair.q_point().clone();
        let seq = EdsSequence::generate(&curve, &point, cfg.bounds.term_bound)?;
        let constants = seq.curve_constants(cfg.bounds.prime_bound, cfg.bounds.term_bound);
        if !seq.b(pair.degree()).is_one() {
            // B_q > 1 keeps the degree outside L
        } else {
            return Err(Error::BadConfig(
                "B_q = 1: the degree lies in L and the construction needs B_q > 1".into(),
            ));
        }
        let emb = RealEmbedding::build(&curve, &point, cfg.precision)?;
        let schedule = cfg.schedule;
        let mut engine = SetsEngine {
            mode,
            degree: pair.degree(),
            l_set: constants.l_set.iter().map(|&l| l as u64).collect(),
            l_scan_bound: constants.prime_bound,
            floor_b: constants.b_max,
            schedule,
            search_bound: cfg.bounds.search_bound,
            budget_per_task: cfg.budget,
            rho_seed: cfg.rho_seed,
            term_index_cap: 400,
            fragment_count: cfg.bounds.count,
            u_set: IndexSetU {
                entries: Vec::new(),
                schedule,
                search_bound: cfg.bounds.search_bound,
                floor: constants.b_max,
                exhausted_at_index: None,
            },
            u_prime: None,
            term_cache: BTreeMap::new(),
            primitive_cache: BTreeMap::new(),
            work_spent: 0,
            curve,
            point,
            seq,
            emb,
        };
        engine.term_index_cap = cfg.bounds.term_index_cap;
        engine.extend_u(cfg.bounds.count)?;
        if mode == SetMode::Exact {
            engine.build_u_prime(cfg.bounds.count)?;
        }
        Ok(engine)
    }

    pub fn sequence(&self) -> &EdsSequence {
        &self.seq
    }

    pub fn embedding(&self) -> &RealEmbedding {
        &self.emb
    }

    pub fn u_set(&self) -> &IndexSetU {
        &self.u_set
    }

    pub fn u_prime(&self) -> Option<&IndexSetU> {
        self.u_prime.as_ref()
    }

    pub fn exceptional_primes(&self) -> &[u64] {
        &self.l_set
    }

    pub fn floor_b(&self) -> u32 {
        self.floor_b
    }

    /// Membership of l in L (the primes with B_l = 1). Within the scanned
    /// bound this is table lookup; up to the term cap it is the direct
    /// check B_l = 1; beyond, undecided.
    fn in_exceptional_set(&mut self, l: u64) -> Option<bool> {
        if l <= self.l_scan_bound as u64 {
            return Some(self.l_set.contains(&l));
        }
        if l <= self.term_index_cap {
            return self.term_b(l).ok().map(|b| b.is_one());
        }
        None
    }

    fn tolerance(&self, i: u32) -> BigRational {
        match self.schedule {
            ScheduleKind::Paper => BigRational::new(BigInt::one(), BigInt::from(10 * i as i64)),
            ScheduleKind::Relaxed => BigRational::new(BigInt::one(), BigInt::from(2)),
            ScheduleKind::Custom(t) => BigRational::from_float(t)
                .unwrap_or_else(|| BigRational::new(BigInt::one(), BigInt::from(2))),
        }
    }

    /// Is the candidate admissible as a member of U (ignoring the window)?
    fn admissible(&self, l: u64, prev: u64) -> bool {
        l > self.floor_b as u64
            && l > prev
            && l != self.degree as u64
            && !self.l_set.contains(&l)
    }

    /// Test the window condition `|y(lQ) - i| < tol` for one candidate,
    /// decisively: positions are compared at full precision, and small
    /// candidates are verified in exact rational arithmetic.
    fn window_hit(
        &self,
        l: u64,
        i: u32,
        tol: &BigRational,
        window: Option<&(BigFloat, BigFloat)>,
    ) -> bool {
        if l <= 50 {
            // exact arithmetic: compute lQ and compare rationals
            let p = self.curve.scalar_mul(&self.point, l);
            let (_, y) = match p.coords() {
                None => return false,
                Some(c) => c,
            };
            let diff = (y - BigRational::from_integer(BigInt::from(i))).abs();
            return &diff < tol;
        }
        if let Some((t_lo, t_hi)) = window {
            let t = self.emb.position_of_multiple(l);
            return t_lo.cmp_val(&t) == std::cmp::Ordering::Less
                && t.cmp_val(t_hi) == std::cmp::Ordering::Less;
        }
        // fallback for wide windows: evaluate y directly
        match self.emb.fast_y_of_multiple(l) {
            Some(y) => {
                let dev = (y - i as f64).abs();
                let tol_f = rational_to_f64(tol);
                if (dev - tol_f).abs() < 1e-7 {
                    // too close to call in f64: decide at full precision
                    if let Ok(crate::analytic::YApprox::Value { y, .. }) =
                        self.emb.approx_y_of_multiple(l)
                    {
                        return (y - i as f64).abs() < tol_f;
                    }
                    return false;
                }
                dev < tol_f
            }
            None => false,
        }
    }

    /// The y-window maps to a position window when it stays in y > 0,
    /// where positions are monotone in y.
    fn position_window(&self, i: u32, tol: &BigRational) -> Option<(BigFloat, BigFloat)> {
        let lo = BigRational::from_integer(BigInt::from(i)) - tol;
        if lo <= BigRational::new(BigInt::one(), BigInt::from(100)) {
            return None;
        }
        let hi = BigRational::from_integer(BigInt::from(i)) + tol;
        let prec = self.emb.precision_bits();
        let lo_f = BigFloat::from_ratio(&lo, prec);
        let hi_f = BigFloat::from_ratio(&hi, prec);
        Some(self.emb.position_window_for_y(&lo_f, &hi_f))
    }

    /// Grow U greedily until it has `count` entries (or the search bound
    /// gives out).
    fn extend_u(&mut self, count: u32) -> Result<()> {
        while (self.u_set.entries.len() as u32) < count {
            if self.u_set.exhausted_at_index.is_some() {
                return Err(Error::SearchExhausted {
                    index: self.u_set.exhausted_at_index.unwrap(),
                    bound: self.search_bound,
                });
            }
            let i = self.u_set.entries.len() as u32 + 1;
            let prev = self.u_set.last_prime();
            match self.search_entry(i, prev, false)? {
                Some(entry) => self.u_set.entries.push(entry),
                None => {
                    self.u_set.exhausted_at_index = Some(i);
                    return Err(Error::SearchExhausted {
                        index: i,
                        bound: self.search_bound,
                    });
                }
            }
        }
        Ok(())
    }

    /// Extend U far enough to settle membership of `v`; errors only when
    /// `v` lies beyond the search bound (an exhausted search still settles
    /// everything below the bound).
    fn ensure_u_covers(&mut self, v: u64) -> Result<()> {
        loop {
            if self.u_set.covers(v) {
                return Ok(());
            }
            if v > self.search_bound || self.u_set.exhausted_at_index.is_some() {
                return Err(Error::SearchExhausted {
                    index: self.u_set.entries.len() as u32 + 1,
                    bound: self.search_bound,
                });
            }
            let next = self.u_set.entries.len() as u32 + 1;
            // exhaustion marks the flag and the next covers() check settles
            let _ = self.extend_u(next);
        }
    }

    /// Extend U' far enough to settle membership of `v`.
    fn ensure_uprime_covers(&mut self, v: u64) -> Result<()> {
        loop {
            let (covered, exhausted, next_index, prev) = match &self.u_prime {
                None => return Err(Error::BadConfig("U' not built".into())),
                Some(up) => (
                    up.covers(v),
                    up.exhausted_at_index.is_some(),
                    up.entries.len() as u32 + 1,
                    up.last_prime(),
                ),
            };
            if covered {
                return Ok(());
            }
            if exhausted || v > self.search_bound {
                return Err(Error::SearchExhausted {
                    index: next_index,
                    bound: self.search_bound,
                });
            }
            match self.search_entry(next_index, prev, true)? {
                Some(e) => self.u_prime.as_mut().unwrap().entries.push(e),
                None => {
                    // scanned every prime up to the bound for this index:
                    // the frontier legitimately extends to the bound
                    self.u_prime.as_mut().unwrap().exhausted_at_index = Some(next_index);
                }
            }
        }
    }

    fn build_u_prime(&mut self, count: u32) -> Result<()> {
        let mut entries = Vec::new();
        let mut exhausted = None;
        for i in 1..=count {
            let prev = entries.last().map(|e: &UEntry| e.prime).unwrap_or(0);
            match self.search_entry(i, prev, true)? {
                Some(e) => entries.push(e),
                None => {
                    exhausted = Some(i);
                    break;
                }
            }
        }
        self.u_prime = Some(IndexSetU {
            entries,
            schedule: self.schedule,
            search_bound: self.search_bound,
            floor: self.floor_b,
            exhausted_at_index: exhausted,
        });
        if let Some(i) = exhausted {
            return Err(Error::SearchExhausted {
                index: i,
                bound: self.search_bound,
            });
        }
        Ok(())
    }

    fn search_entry(&mut self, i: u32, prev: u64, exclude_u: bool) -> Result<Option<UEntry>> {
        let tol = self.tolerance(i);
        let window = self.position_window(i, &tol);
        let primes: Vec<u64> = factor::small_primes()
            .iter()
            .map(|&p| p as u64)
            .take_while(|&p| p <= self.search_bound)
            .collect();
        for l in primes {
            if !self.admissible(l, prev) {
                continue;
            }
            if exclude_u {
                // deciding "l in U" may require extending U to l
                self.ensure_u_covers(l)?;
                if self.u_set.contains(l) {
                    continue;
                }
            }
            if self.window_hit(l, i, &tol, window.as_ref()) {
                let exact_verified = l <= 50;
                let y = match self.emb.fast_y_of_multiple(l) {
                    Some(y) => y,
                    None => continue,
                };
                return Ok(Some(UEntry {
                    index: i,
                    prime: l,
                    y,
                    deviation: (y - i as f64).abs(),
                    exact_verified,
                }));
            }
        }
        Ok(None)
    }

    // -- terms and primitive parts at arbitrary indices ---------------------

    fn term_b(&mut self, n: u64) -> Result<BigInt> {
        if let Some(v) = self.term_cache.get(&n) {
            return Ok(v.clone());
        }
        if n <= self.seq.len() as u64 {
            return Ok(self.seq.b(n as u32).clone());
        }
        if n > self.term_index_cap {
            return Err(Error::BudgetExceeded(format!(
                "term index {n} beyond the materialisation cap {}",
                self.term_index_cap
            )));
        }
        let t = EdsSequence::term_at(&self.curve, &self.point, n)?;
        self.term_cache.insert(n, t.den_root.clone());
        Ok(t.den_root)
    }

    /// Primitive part at any index within the cap (gcd-stripping against
    /// the terms at n/p).
    fn primitive_part_at(&mut self, n: u64) -> Result<BigInt> {
        let mut x = self.term_b(n)?;
        if n == 1 {
            return Ok(x);
        }
        let mut modulus = BigInt::one();
        for p in prime_divisors_u64(n) {
            modulus *= self.term_b(n / p)?;
        }
        loop {
            let g = x.gcd(&modulus);
            if g.is_one() {
                return Ok(x);
            }
            x /= g;
        }
    }

    /// Factored primitive part at an index, cached across queries.
    fn primitive_primes_at(&mut self, n: u64) -> Result<PrimitivePrimes> {
        if let Some(v) = self.primitive_cache.get(&n) {
            return Ok(v.clone());
        }
        let star = self.primitive_part_at(n)?;
        let mut budget = Budget::new(self.budget_per_task);
        let report = factor::factor(&star, &mut budget, self.rho_seed);
        self.work_spent = self.work_spent.saturating_add(budget.spent());
        let complete = report.is_complete();
        let mut good = Vec::new();
        let mut bad = Vec::new();
        for (p, _) in &report.known {
            if self.curve.is_good_prime(p) {
                good.push(p.clone());
            } else {
                bad.push(p.clone());
            }
        }
        good.sort();
        bad.sort();
        let largest_good = if complete { good.last().cloned() } else { None };
        let second_good = if complete && good.len() >= 2 {
            Some(good[good.len() - 2].clone())
        } else {
            None
        };
        let pp = PrimitivePrimes {
            index: n.min(u32::MAX as u64) as u32,
            primitive_part: star,
            good,
            bad,
            complete,
            cofactor: report.cofactor,
            largest_good,
            second_good,
        };
        self.primitive_cache.insert(n, pp.clone());
        Ok(pp)
    }

    // -- fragments -----------------------------------------------------------

    /// Prime divisors of `B_{l_i}` for the built entries. All are good
    /// reduction because every `l_i` exceeds the bad-prime rank bound.
    fn build_divisor_fragment(&mut self, indices: &[u64]) -> Vec<DivisorFragment> {
        let mut out = Vec::new();
        for &l in indices {
            if l > self.term_index_cap {
                out.push(DivisorFragment {
                    index: l,
                    primes: Vec::new(),
                    factoring_complete: false,
                    skipped: true,
                });
                continue;
            }
            let term = match self.term_b(l) {
                Ok(t) => t,
                Err(_) => {
                    out.push(DivisorFragment {
                        index: l,
                        primes: Vec::new(),
                        factoring_complete: false,
                        skipped: true,
                    });
                    continue;
                }
            };
            let mut budget = Budget::new(self.budget_per_task);
            let report = factor::factor(&term, &mut budget, self.rho_seed);
            let primes = report.primes();
            for p in &primes {
                debug_assert!(self.curve.is_good_prime(p), "l_i > b forces good reduction");
            }
            out.push(DivisorFragment {
                index: l,
                primes,
                factoring_complete: report.is_complete(),
                skipped: false,
            });
        }
        out
    }

    /// One clause entry: the largest (or second-largest) good primitive
    /// prime at `index`.
    fn clause_entry(&mut self, index: u64, clause: &'static str, take_second: bool) -> FragmentEntry {
        if index > self.term_index_cap {
            return FragmentEntry {
                index,
                clause,
                take_second,
                status: FragmentStatus::IndexOutOfRange,
                prime: None,
                factoring_complete: false,
            };
        }
        match self.primitive_primes_at(index) {
            Err(_) => FragmentEntry {
                index,
                clause,
                take_second,
                status: FragmentStatus::Unresolved,
                prime: None,
                factoring_complete: false,
            },
            Ok(pp) => {
                if !pp.complete {
                    return FragmentEntry {
                        index,
                        clause,
                        take_second,
                        status: FragmentStatus::Unresolved,
                        prime: None,
                        factoring_complete: false,
                    };
                }
                let chosen = if take_second {
                    pp.second_good.clone()
                } else {
                    pp.largest_good.clone()
                };
                match chosen {
                    Some(p) => FragmentEntry {
                        index,
                        clause,
                        take_second,
                        status: FragmentStatus::Member,
                        prime: Some(p),
                        factoring_complete: true,
                    },
                    None => FragmentEntry {
                        index,
                        clause,
                        take_second,
                        status: FragmentStatus::NoSuchPrime,
                        prime: None,
                        factoring_complete: true,
                    },
                }
            }
        }
    }

    /// S2 (with `take_second = false`) or its T2 sibling, from the given
    /// index set.
    fn build_clause_fragment(
        &mut self,
        base: &[u64],
        fragment_prime_bound: u32,
        second_on_prime_clause: bool,
        second_on_compound_clauses: bool,
    ) -> Vec<FragmentEntry> {
        let mut out = Vec::new();
        // clause 1: p_l for primes l not in the index set
        for &l in factor::small_primes() {
            let l = l as u64;
            if l > fragment_prime_bound as u64 {
                break;
            }
            if base.contains(&l) {
                continue;
            }
            if self.l_set.contains(&l) {
                // B_l = 1: no primitive prime exists, the clause is empty here
                out.push(FragmentEntry {
                    index: l,
                    clause: "prime_index",
                    take_second: second_on_prime_clause,
                    status: FragmentStatus::NoSuchPrime,
                    prime: None,
                    factoring_complete: true,
                });
                continue;
            }
            out.push(self.clause_entry(l, "prime_index", second_on_prime_clause));
        }
        // clause 2: p at indices l_i l_j, j <= i
        for (i, &li) in base.iter().enumerate() {
            for &lj in base.iter().take(i + 1) {
                let idx = li.saturating_mul(lj);
                out.push(self.clause_entry(idx, "product_index", second_on_compound_clauses));
            }
        }
        // clause 3: p at indices l * l_i for l in L
        for &l in &self.l_set.clone() {
            for &li in base {
                let idx = l.saturating_mul(li);
                out.push(self.clause_entry(idx, "exceptional_index", second_on_compound_clauses));
            }
        }
        out
    }

    /// Build all four fragments and the Venn report. Only the leading
    /// `count` entries of each index set feed the fragments, so the output
    /// does not depend on how far membership queries extended the search.
    pub fn build_family(&mut self, fragment_prime_bound: u32) -> Result<SetFamily> {
        let count = self.fragment_count as usize;
        let u_primes: Vec<u64> = self.u_set.primes().into_iter().take(count).collect();
        let s1 = self.build_divisor_fragment(&u_primes);
        let s2 = self.build_clause_fragment(&u_primes, fragment_prime_bound, false, false);
        let (t1, t2) = match self.mode {
            SetMode::Complementary => {
                let t1 = s1.clone();
                let t2 = self.build_clause_fragment(&u_primes, fragment_prime_bound, true, true);
                (t1, t2)
            }
            SetMode::Exact => {
                let up: Vec<u64> = self
                    .u_prime
                    .as_ref()
                    .ok_or_else(|| Error::BadConfig("exact mode requires U'".into()))?
                    .primes()
                    .into_iter()
                    .take(count)
                    .collect();
                let t1 = self.build_divisor_fragment(&up);
                let t2 = self.build_clause_fragment(&up, fragment_prime_bound, true, false);
                (t1, t2)
            }
        };

        let s1_m = collect_divisors(&s1);
        let t1_m = collect_divisors(&t1);
        let s2_m = collect_members(&s2);
        let t2_m = collect_members(&t2);
        let disjoint = |a: &[BigInt], b: &[BigInt]| a.iter().all(|x| !b.contains(x));
        let good = |v: &[BigInt]| v.iter().all(|p| self.curve.is_good_prime(p));
        let overlap_witness = t2_m.iter().find(|p| s1_m.contains(p)).cloned();
        let venn = VennReport {
            s1_s2_disjoint: disjoint(&s1_m, &s2_m),
            t2_t1_disjoint: disjoint(&t2_m, &t1_m),
            t2_s2_disjoint: disjoint(&t2_m, &s2_m),
            s2_t2_disjoint_complementary: disjoint(&s2_m, &t2_m),
            t2_s1_overlap_witness: overlap_witness,
            all_members_good_reduction: good(&s1_m) && good(&t1_m) && good(&s2_m) && good(&t2_m),
        };
        Ok(SetFamily {
            mode: self.mode,
            s1,
            t1,
            s2,
            t2,
            u: self.u_set.clone(),
            u_prime: self.u_prime.clone(),
            venn,
        })
    }

    // -- membership ----------------------------------------------------------

    /// Order of Q mod p plus the group order, for the witness chain.
    fn order_data(&self, p: &BigInt) -> Result<(u64, u64)> {
        let n_p = self
            .curve
            .point_order_mod_p(&self.point, p)?
            .to_u64()
            .ok_or_else(|| Error::PrimeTooLarge(p.clone()))?;
        let e_p = self
            .curve
            .group_order_mod_p(p)?
            .to_u64()
            .ok_or_else(|| Error::PrimeTooLarge(p.clone()))?;
        Ok((n_p, e_p))
    }

    /// Decide `p in family`, emitting the full witness chain. `Unknown`
    /// names the blocking step.
    pub fn decide(&mut self, p: &BigInt, family: Family) -> MembershipVerdict {
        let mut witness = Witness::default();
        self.work_spent = 0;
        let verdict = self.decide_inner(p, family, &mut witness);
        MembershipVerdict {
            prime: p.to_string(),
            family,
            verdict,
            witness,
            budget_spent: self.work_spent,
        }
    }

    fn decide_inner(&mut self, p: &BigInt, family: Family, w: &mut Witness) -> Verdict {
        if !factor::is_prime(p) {
            w.blocking_step = Some("input is not prime".into());
            return Verdict::Unknown;
        }
        if !self.curve.is_good_prime(p) {
            w.bad_reduction = true;
            return match (family, self.mode) {
                // fragment sets contain only good primes
                (Family::S1 | Family::S2 | Family::T1 | Family::T2, _) => Verdict::Out,
                // exact: S = S1 ∪ T2 is all good, so bad primes land in T
                (Family::S, SetMode::Exact) => Verdict::Out,
                (Family::T, SetMode::Exact) => Verdict::In,
                // complementary: S = P \ S2 and T = P \ T2 keep bad primes
                (Family::S | Family::T, SetMode::Complementary) => Verdict::In,
            };
        }

        match family {
            Family::S => {
                return match self.mode {
                    SetMode::Exact => {
                        let s1 = self.decide_inner(p, Family::S1, w);
                        w.derived_from.push(("S1".into(), s1));
                        if s1 == Verdict::In {
                            return Verdict::In;
                        }
                        let t2 = self.decide_inner(p, Family::T2, w);
                        w.derived_from.push(("T2".into(), t2));
                        match (s1, t2) {
                            (_, Verdict::In) => Verdict::In,
                            (Verdict::Out, Verdict::Out) => Verdict::Out,
                            _ => Verdict::Unknown,
                        }
                    }
                    SetMode::Complementary => {
                        let s2 = self.decide_inner(p, Family::S2, w);
                        w.derived_from.push(("S2".into(), s2));
                        negate(s2)
                    }
                };
            }
            Family::T => {
                return match self.mode {
                    SetMode::Exact => {
                        let s = self.decide_inner(p, Family::S, w);
                        w.derived_from.push(("S".into(), s));
                        negate(s)
                    }
                    SetMode::Complementary => {
                        let t2 = self.decide_inner(p, Family::T2, w);
                        w.derived_from.push(("T2".into(), t2));
                        negate(t2)
                    }
                };
            }
            _ => {}
        }

        let (n_p, e_p) = match self.order_data(p) {
            Ok(v) => v,
            Err(e) => {
                w.blocking_step = Some(format!("order computation: {e}"));
                return Verdict::Unknown;
            }
        };
        w.n_p = Some(n_p);
        w.e_p = Some(e_p);
        w.e_p_factors = factor_u64_pairs(e_p);
        w.n_p_factors = factor_u64_pairs(n_p);

        match family {
            Family::S1 => self.decide_divisor_family(n_p, w, false),
            Family::T1 => match self.mode {
                SetMode::Complementary => self.decide_divisor_family(n_p, w, false),
                SetMode::Exact => self.decide_divisor_family(n_p, w, true),
            },
            Family::S2 => self.decide_clause_family(p, n_p, w, false, false, false),
            Family::T2 => match self.mode {
                SetMode::Complementary => self.decide_clause_family(p, n_p, w, false, true, true),
                SetMode::Exact => self.decide_clause_family(p, n_p, w, true, true, false),
            },
            _ => unreachable!(),
        }
    }

    /// `p | B_{l_i}` for some i iff `n_p` is one of the index primes.
    fn decide_divisor_family(&mut self, n_p: u64, w: &mut Witness, use_u_prime: bool) -> Verdict {
        if !is_prime_u64_checked(n_p) {
            w.clause = Some("order is composite: not a divisor of any prime-index term".into());
            return Verdict::Out;
        }
        if use_u_prime {
            match self.ensure_uprime_covers(n_p) {
                Ok(()) => {
                    let up = self.u_prime.as_ref().unwrap();
                    if up.contains(n_p) {
                        w.clause = Some("order appears in U'".into());
                        return Verdict::In;
                    }
                    w.clause = Some("order below the U' frontier and absent".into());
                    return Verdict::Out;
                }
                Err(_) => {
                    w.blocking_step =
                        Some("U' search exhausted before covering the order".into());
                    return Verdict::Unknown;
                }
            }
        }
        match self.ensure_u_covers(n_p) {
            Ok(()) => {
                if self.u_set.contains(n_p) {
                    w.clause = Some("order appears in U".into());
                    Verdict::In
                } else {
                    w.clause = Some("order below the U frontier and absent".into());
                    Verdict::Out
                }
            }
            Err(_) => {
                w.blocking_step = Some("U search exhausted before covering the order".into());
                Verdict::Unknown
            }
        }
    }

    /// The clause split on the structure of `n_p` for S2/T2.
    fn decide_clause_family(
        &mut self,
        p: &BigInt,
        n_p: u64,
        w: &mut Witness,
        use_u_prime: bool,
        second_on_prime_clause: bool,
        second_on_compound_clauses: bool,
    ) -> Verdict {
        let factors = factor_u64_pairs(n_p);
        let in_base = |engine: &mut SetsEngine, v: u64, w: &mut Witness| -> Option<bool> {
            if use_u_prime {
                match engine.ensure_uprime_covers(v) {
                    Ok(()) => Some(engine.u_prime.as_ref().unwrap().contains(v)),
                    Err(_) => {
                        w.blocking_step =
                            Some("U' search exhausted before covering a factor of the order".into());
                        None
                    }
                }
            } else {
                match engine.ensure_u_covers(v) {
                    Ok(()) => Some(engine.u_set.contains(v)),
                    Err(_) => {
                        w.blocking_step =
                            Some("U search exhausted before covering a factor of the order".into());
                        None
                    }
                }
            }
        };

        // classify n_p against the three clause shapes
        let (clause, take_second): (Option<&'static str>, bool) = match factors.as_slice() {
            // prime order: clause 1 wants it outside the index set
            [(l, 1)] => match in_base(self, *l, w) {
                None => return Verdict::Unknown,
                Some(true) => {
                    w.clause = Some("order lies in the index set: no clause matches".into());
                    return Verdict::Out;
                }
                Some(false) => (Some("prime_index"), second_on_prime_clause),
            },
            // l^2: the product clause with i = j
            [(l, 2)] => match in_base(self, *l, w) {
                None => return Verdict::Unknown,
                Some(true) => (Some("product_index"), second_on_compound_clauses),
                Some(false) => {
                    w.clause =
                        Some("order is the square of a prime outside the index set: no clause".into());
                    return Verdict::Out;
                }
            },
            // two distinct primes: product of two index members, or L times a member
            [(l1, 1), (l2, 1)] => {
                let (small, large) = (*l1, *l2);
                let large_in = match in_base(self, large, w) {
                    None => return Verdict::Unknown,
                    Some(v) => v,
                };
                let small_in = match in_base(self, small, w) {
                    None => return Verdict::Unknown,
                    Some(v) => v,
                };
                let small_in_l = match self.in_exceptional_set(small) {
                    Some(v) => v,
                    None => {
                        w.blocking_step =
                            Some(format!("membership of {small} in L is beyond the scan"));
                        return Verdict::Unknown;
                    }
                };
                let large_in_l = match self.in_exceptional_set(large) {
                    Some(v) => v,
                    None => {
                        w.blocking_step =
                            Some(format!("membership of {large} in L is beyond the scan"));
                        return Verdict::Unknown;
                    }
                };
                if small_in && large_in {
                    (Some("product_index"), second_on_compound_clauses)
                } else if (small_in_l && large_in) || (large_in_l && small_in) {
                    (Some("exceptional_index"), second_on_compound_clauses)
                } else {
                    w.clause = Some(
                        "order is a 2-prime product matching neither the product nor the exceptional clause"
                            .into(),
                    );
                    return Verdict::Out;
                }
            }
            _ => {
                w.clause = Some("order structure matches no clause".into());
                return Verdict::Out;
            }
        };

        w.clause = clause.map(|c| c.to_string());
        // the clause fired: p belongs iff it is the designated prime at n_p
        if n_p > self.term_index_cap {
            w.blocking_step = Some(format!(
                "term index {n_p} beyond the materialisation cap"
            ));
            return Verdict::Unknown;
        }
        match self.primitive_primes_at(n_p) {
            Err(e) => {
                w.blocking_step = Some(format!("primitive part at {n_p}: {e}"));
                Verdict::Unknown
            }
            Ok(pp) => {
                w.primitive_primes = pp.good.iter().map(|x| x.to_string()).collect();
                w.factoring_complete = Some(pp.complete);
                if !pp.complete {
                    // an incomplete factorization can still refute: with two
                    // known good primes above p, p is neither the largest nor
                    // the second-largest whatever hides in the cofactor
                    let known_above = pp.good.iter().filter(|g| *g > p).count();
                    let needed = if take_second { 2 } else { 1 };
                    if known_above >= needed {
                        w.clause = w
                            .clause
                            .take()
                            .map(|c| format!("{c} (refuted by larger known primes)"));
                        return Verdict::Out;
                    }
                    w.blocking_step =
                        Some(format!("factoring the primitive part at {n_p} exceeded the budget"));
                    return Verdict::Unknown;
                }
                let designated = if take_second {
                    pp.second_good.clone()
                } else {
                    pp.largest_good.clone()
                };
                w.designated_prime = designated.as_ref().map(|x| x.to_string());
                match designated {
                    Some(d) if &d == p => Verdict::In,
                    _ => Verdict::Out,
                }
            }
        }
    }

    // -- S-integral points ----------------------------------------------------

    /// Check which multiples `nQ` are S-integral: expected exactly the
    /// `n = l_i`, up to a finite list of exceptions (certified
    /// counterexamples, which at desk scale are the integral early
    /// multiples) plus possibly some budget-blocked indices.
    pub fn check_s_integral_points(&mut self, n_max: u32) -> Result<EzsReport> {
        let n_max = n_max.min(self.seq.len());
        // expected_in below needs U settled over [1, n_max]
        let _ = self.ensure_u_covers(n_max as u64);
        let mut rows = Vec::new();
        let mut exceptions = Vec::new();
        let mut unresolved = Vec::new();
        for n in 1..=n_max {
            let expected_in = self.u_set.contains(n as u64);
            let row = self.classify_s_integral(n, expected_in);
            match row.status {
                EzsStatus::InByConstruction
                | EzsStatus::IntegralTerm
                | EzsStatus::InAllPrimesDecided => {
                    if !expected_in {
                        exceptions.push(n);
                    }
                }
                EzsStatus::OutWithWitness => {
                    if expected_in {
                        exceptions.push(n);
                    }
                }
                EzsStatus::Unresolved => unresolved.push(n),
            }
            rows.push(row);
        }
        Ok(EzsReport {
            n_max,
            rows,
            exceptions,
            unresolved,
        })
    }

    fn classify_s_integral(&mut self, n: u32, expected_in: bool) -> EzsRow {
        let b_n = self.seq.b(n).clone();
        if b_n.is_one() {
            // integral multiple: trivially S-integral
            return EzsRow {
                n,
                expected_in,
                status: EzsStatus::IntegralTerm,
                witness_prime: None,
                note: "term has no prime support".into(),
            };
        }
        if expected_in {
            // primes of B_{l_i} are members of S1 by construction
            return EzsRow {
                n,
                expected_in,
                status: EzsStatus::InByConstruction,
                witness_prime: None,
                note: "index lies in U; divisors of the term generate S1".into(),
            };
        }
        // hunt a witness prime of B_n that is certified outside S
        if self.mode == SetMode::Exact {
            // bad primes are outside S = S1 ∪ T2
            for bad in self.curve.bad_primes().to_vec() {
                if b_n.mod_floor(&bad).is_zero() {
                    return EzsRow {
                        n,
                        expected_in,
                        status: EzsStatus::OutWithWitness,
                        witness_prime: Some(bad.to_string()),
                        note: "bad-reduction prime divides the term and S contains only good primes"
                            .into(),
                    };
                }
            }
        }
        // a prime factor l of n outside U gives the S2 witness p_l | B_l | B_n
        let mut blocking = String::new();
        for l in prime_divisors_u64(n as u64) {
            if self.l_set.contains(&l) || l == self.degree as u64 {
                continue;
            }
            match self.ensure_u_covers(l) {
                Err(_) => {
                    blocking = format!("U search exhausted before covering the factor {l}");
                    continue;
                }
                Ok(()) => {
                    if self.u_set.contains(l) {
                        continue;
                    }
                }
            }
            match self.primitive_primes_at(l) {
                Err(e) => {
                    blocking = format!("primitive part at {l}: {e}");
                }
                Ok(pp) => {
                    if pp.complete {
                        if let Some(p_l) = pp.largest_good {
                            // p_l lies in S2, hence outside S in both modes
                            return EzsRow {
                                n,
                                expected_in,
                                status: EzsStatus::OutWithWitness,
                                witness_prime: Some(p_l.to_string()),
                                note: format!(
                                    "largest good primitive prime at index {l} witnesses non-S-integrality"
                                ),
                            };
                        }
                        blocking = format!("no good primitive prime exists at index {l}");
                        continue;
                    }
                    // exact mode: a known good prime with two known good
                    // primes above it matches no clause, so it certifies
                    // non-membership of S even without the full split
                    if self.mode == SetMode::Exact && pp.good.len() >= 3 {
                        let outside_uprime = self.ensure_uprime_covers(l).is_ok()
                            && !self.u_prime.as_ref().unwrap().contains(l);
                        if outside_uprime {
                            return EzsRow {
                                n,
                                expected_in,
                                status: EzsStatus::OutWithWitness,
                                witness_prime: Some(pp.good[0].to_string()),
                                note: format!(
                                    "prime at index {l} with two larger known primes matches no clause"
                                ),
                            };
                        }
                    }
                    blocking = format!("factoring the primitive part at {l} exceeded the budget");
                }
            }
        }
        // no clause-shaped witness: fall back to deciding every prime of the
        // term (settles the prime-power and smooth indices, where all prime
        // support genuinely lies in S)
        let mut budget = Budget::new(self.budget_per_task);
        let report = factor::factor(&b_n, &mut budget, self.rho_seed);
        if report.is_complete() {
            let mut all_in = true;
            for p in report.primes() {
                match self.decide(&p, Family::S).verdict {
                    Verdict::In => {}
                    Verdict::Out => {
                        return EzsRow {
                            n,
                            expected_in,
                            status: EzsStatus::OutWithWitness,
                            witness_prime: Some(p.to_string()),
                            note: "term divisor decided outside S".into(),
                        }
                    }
                    Verdict::Unknown => {
                        all_in = false;
                        break;
                    }
                }
            }
            if all_in {
                return EzsRow {
                    n,
                    expected_in,
                    status: EzsStatus::InAllPrimesDecided,
                    witness_prime: None,
                    note: "every prime divisor of the term decided inside S".into(),
                };
            }
            blocking = "a term divisor's membership is unresolved".into();
        } else if blocking.is_empty() {
            blocking = "factoring the term exceeded the budget".into();
        }
        EzsRow {
            n,
            expected_in,
            status: EzsStatus::Unresolved,
            witness_prime: None,
            note: blocking,
        }
    }

    // -- rational decomposition ------------------------------------------------

    /// Split a nonzero rational as `x = s * t` with `s` supported on S,
    /// `t` on T, `s > 0`. Exact mode only (the split needs S ∩ T empty).
    pub fn decompose_rational(&mut self, x: &BigRational) -> Result<Decomposition> {
        if self.mode != SetMode::Exact {
            return Err(Error::BadConfig(
                "decomposition requires the exactly-complementary mode".into(),
            ));
        }
        if x.is_zero() {
            return Err(Error::BadConfig("cannot decompose zero".into()));
        }
        let mut s = BigRational::one();
        let mut t = BigRational::one();
        if x.is_negative() {
            t = -t;
        }
        let handle = |engine: &mut SetsEngine,
                          v: &BigInt,
                          invert: bool,
                          s: &mut BigRational,
                          t: &mut BigRational|
         -> Result<Vec<PrimeSplit>> {
            let mut splits = Vec::new();
            let mut budget = Budget::new(engine.budget_per_task);
            let report = factor::factor(&v.abs(), &mut budget, engine.rho_seed);
            if !report.is_complete() {
                return Err(Error::Unresolved {
                    prime: report.cofactor.clone(),
                    step: "factoring the rational's support".into(),
                });
            }
            for (p, e) in &report.known {
                let verdict = engine.decide(p, Family::S);
                let factor = BigRational::from_integer(p.pow(*e));
                let factor = if invert { factor.recip() } else { factor };
                match verdict.verdict {
                    Verdict::In => *s *= &factor,
                    Verdict::Out => *t *= &factor,
                    Verdict::Unknown => {
                        return Err(Error::Unresolved {
                            prime: p.clone(),
                            step: verdict
                                .witness
                                .blocking_step
                                .unwrap_or_else(|| "membership".into()),
                        })
                    }
                }
                splits.push(PrimeSplit {
                    prime: p.to_string(),
                    exponent: if invert { -(*e as i64) } else { *e as i64 },
                    in_s: verdict.verdict == Verdict::In,
                });
            }
            Ok(splits)
        };
        let mut splits = handle(self, x.numer(), false, &mut s, &mut t)?;
        splits.extend(handle(self, x.denom(), true, &mut s, &mut t)?);
        assert_eq!(&(&s * &t), x, "decomposition failed to reassemble");
        Ok(Decomposition {
            input: crate::rational::format_rational(x),
            s_part: crate::rational::format_rational(&s),
            t_part: crate::rational::format_rational(&t),
            splits,
        })
    }

    // -- the diophantine-model predicates ---------------------------------------

    fn model_y(&self, i: u32) -> Result<BigFloat> {
        if i == 0 || i > self.fragment_count {
            return Err(Error::BadConfig(format!(
                "index {i} beyond the built U fragment of {} entries",
                self.fragment_count
            )));
        }
        let entry = self
            .u_set
            .entries
            .get((i - 1) as usize)
            .ok_or_else(|| Error::BadConfig(format!("index {i} beyond the built U fragment")))?;
        self.emb.y_value_hp(entry.prime)
    }

    /// Addition predicate: `|y_i + y_j - y_k| <= 3/10` holds iff
    /// `i + j = k`.
    pub fn model_check_add(&self, i: u32, j: u32, k: u32) -> Result<ModelCheck> {
        let prec = self.emb.precision_bits();
        let yi = self.model_y(i)?;
        let yj = self.model_y(j)?;
        let yk = self.model_y(k)?;
        let lhs = yi.add(&yj, prec).sub(&yk, prec).abs();
        let bound = BigFloat::from_ratio(&BigRational::new(3.into(), 10.into()), prec);
        let predicate = lhs.cmp_val(&bound) != std::cmp::Ordering::Greater;
        let arithmetic = i + j == k;
        Ok(ModelCheck {
            indices: vec![i, j, k],
            deviation: lhs.to_f64(),
            bound: 0.3,
            predicate,
            arithmetic,
            agrees: predicate == arithmetic,
        })
    }

    /// Multiplication reduces to squaring and adding:
    /// `i * j = k` iff `(i+j)^2 = i^2 + j^2 + 2k`, tested as
    /// `|y_{(i+j)^2} - y_{i^2} - y_{j^2} - 2 y_k| < 1/2`. Requires the
    /// squares to lie inside the built fragment.
    pub fn model_check_mul(&self, i: u32, j: u32, k: u32) -> Result<ModelCheck> {
        let prec = self.emb.precision_bits();
        let y_sq_sum = self.model_y((i + j) * (i + j))?;
        let yi2 = self.model_y(i * i)?;
        let yj2 = self.model_y(j * j)?;
        let yk = self.model_y(k)?;
        let lhs = y_sq_sum
            .sub(&yi2, prec)
            .sub(&yj2, prec)
            .sub(&yk.mul_i64(2, prec), prec)
            .abs();
        let bound = BigFloat::from_ratio(&BigRational::new(1.into(), 2.into()), prec);
        let predicate = lhs.cmp_val(&bound) == std::cmp::Ordering::Less;
        let arithmetic = i * j == k;
        Ok(ModelCheck {
            indices: vec![i, j, k],
            deviation: lhs.to_f64(),
            bound: 0.5,
            predicate,
            arithmetic,
            agrees: predicate == arithmetic,
        })
    }
}

fn negate(v: Verdict) -> Verdict {
    match v {
        Verdict::In => Verdict::Out,
        Verdict::Out => Verdict::In,
        Verdict::Unknown => Verdict::Unknown,
    }
}

fn is_prime_u64_checked(v: u64) -> bool {
    factor::is_prime_u64(v)
}

fn factor_u64_pairs(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn prime_divisors_u64(n: u64) -> Vec<u64> {
    factor_u64_pairs(n).into_iter().map(|(p, _)| p).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EzsStatus {
    /// n is one of the l_i: S-integral by the construction of S1.
    InByConstruction,
    /// B_n = 1: the multiple is integral, hence S-integral.
    IntegralTerm,
    /// Every prime divisor of the term was individually decided into S.
    InAllPrimesDecided,
    /// A witness prime outside S divides the term.
    OutWithWitness,
    Unresolved,
}

#[derive(Debug, Clone, Serialize)]
pub struct EzsRow {
    pub n: u32,
    pub expected_in: bool,
    pub status: EzsStatus,
    pub witness_prime: Option<String>,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EzsReport {
    pub n_max: u32,
    pub rows: Vec<EzsRow>,
    /// Certified mismatches against "S-integral iff the index lies in U".
    pub exceptions: Vec<u32>,
    /// Indices the budget could not settle.
    pub unresolved: Vec<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrimeSplit {
    pub prime: String,
    pub exponent: i64,
    pub in_s: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Decomposition {
    pub input: String,
    pub s_part: String,
    pub t_part: String,
    pub splits: Vec<PrimeSplit>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelCheck {
    pub indices: Vec<u32>,
    pub deviation: f64,
    pub bound: f64,
    pub predicate: bool,
    pub arithmetic: bool,
    pub agrees: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_rational;
    use std::sync::{Mutex, MutexGuard, OnceLock};

    fn relaxed_config() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.schedule = ScheduleKind::Relaxed;
        cfg.bounds.term_bound = 60;
        cfg.bounds.count = 3;
        cfg.bounds.search_bound = 2_000;
        cfg.bounds.fragment_prime_bound = 13;
        cfg.bounds.ezs_bound = 12;
        cfg.budget = 300_000;
        cfg
    }

    fn relaxed_engine() -> MutexGuard<'static, SetsEngine> {
        static ENGINE: OnceLock<Mutex<SetsEngine>> = OnceLock::new();
        ENGINE
            .get_or_init(|| Mutex::new(SetsEngine::from_config(&relaxed_config()).unwrap()))
            .lock()
            .unwrap()
    }

    fn paper_engine() -> MutexGuard<'static, SetsEngine> {
        static ENGINE: OnceLock<Mutex<SetsEngine>> = OnceLock::new();
        ENGINE
            .get_or_init(|| {
                let mut cfg = relaxed_config();
                cfg.schedule = ScheduleKind::Paper;
                cfg.bounds.search_bound = 10_000;
                Mutex::new(SetsEngine::from_config(&cfg).unwrap())
            })
            .lock()
            .unwrap()
    }

    #[test]
    fn relaxed_index_sets_match_search_oracle() {
        let engine = relaxed_engine();
        assert_eq!(engine.u_set().primes()[..3], [61, 173, 199]);
        let up = engine.u_prime().unwrap();
        assert_eq!(up.primes()[..3], [181, 431, 569]);
        for e in &engine.u_set().entries {
            assert!(e.prime > engine.floor_b() as u64);
            assert!((e.y - e.index as f64).abs() < 0.5, "i={} y={}", e.index, e.y);
        }
        // U and U' are disjoint by construction
        for e in &up.entries {
            assert!(!engine.u_set().contains(e.prime));
        }
    }

    #[test]
    fn paper_index_set_matches_search_oracle() {
        let engine = paper_engine();
        assert_eq!(engine.u_set().primes()[..3], [293, 2521, 3691]);
        for e in &engine.u_set().entries[..3] {
            let tol = 1.0 / (10.0 * e.index as f64);
            assert!(e.deviation < tol, "i={} dev={}", e.index, e.deviation);
        }
    }

    #[test]
    fn custom_wide_schedule_verifies_exactly() {
        let mut cfg = relaxed_config();
        cfg.schedule = ScheduleKind::Custom(1.1);
        cfg.bounds.count = 1;
        cfg.bounds.search_bound = 100;
        cfg.set_mode = "complementary".into(); // no U' at this tiny bound
        let engine = SetsEngine::from_config(&cfg).unwrap();
        let e = &engine.u_set().entries[0];
        // y(43 Q) = -0.005651...; every smaller admissible prime misses the
        // window (checked in exact rational arithmetic since 43 <= 50)
        assert_eq!(e.prime, 43);
        assert!(e.exact_verified);
    }

    #[test]
    fn fragment_fixtures() {
        let mut engine = relaxed_engine();
        let family = engine.build_family(13).unwrap();
        // S2 clause-1 members: largest good primitive primes at 5, 7, 11, 13
        let s2 = family.s2_members();
        for v in [61u64, 83, 316271, 82457233] {
            assert!(s2.contains(&BigInt::from(v)), "missing {v}");
        }
        // T2 clause-1: second-largest; at 5 there is only one prime
        let t2 = family.t2_members();
        for v in [41u64, 9041, 49297] {
            assert!(t2.contains(&BigInt::from(v)), "missing {v}");
        }
        let t2_5 = family
            .t2
            .iter()
            .find(|e| e.index == 5 && e.clause == "prime_index")
            .unwrap();
        assert_eq!(t2_5.status, FragmentStatus::NoSuchPrime);
        // the exceptional index 2 contributes nothing by itself (B_2 = 1)
        let s2_2 = family
            .s2
            .iter()
            .find(|e| e.index == 2 && e.clause == "prime_index")
            .unwrap();
        assert_eq!(s2_2.status, FragmentStatus::NoSuchPrime);
        // Venn relations on the computed fragments
        assert!(family.venn.s1_s2_disjoint);
        assert!(family.venn.t2_t1_disjoint);
        assert!(family.venn.t2_s2_disjoint);
        assert!(family.venn.all_members_good_reduction);
        // S1 holds the divisors of B_61, B_173, B_199 that were found
        assert_eq!(family.s1.len(), 3);
        assert!(!family.s1[0].skipped);
    }

    #[test]
    fn membership_fixtures() {
        let mut engine = relaxed_engine();
        // order of Q mod 5 is 6 = 2 * 3: 2 lies in L but 3 is the degree,
        // outside U, so no clause matches
        let v = engine.decide(&BigInt::from(5), Family::S2);
        assert_eq!(v.verdict, Verdict::Out);
        assert_eq!(v.witness.n_p, Some(6));
        assert!(v.witness.clause.as_ref().unwrap().contains("neither"));
        // order of Q mod 11 is 4 = 2^2 with 2 outside U: no clause
        let v = engine.decide(&BigInt::from(11), Family::S2);
        assert_eq!(v.verdict, Verdict::Out);
        assert_eq!(v.witness.n_p, Some(4));
        // 61 = p_5 with 5 prime outside U: the prime-index clause fires
        let v = engine.decide(&BigInt::from(61), Family::S2);
        assert_eq!(v.verdict, Verdict::In);
        assert_eq!(v.witness.clause.as_deref(), Some("prime_index"));
        assert_eq!(v.witness.designated_prime.as_deref(), Some("61"));
        // 83 = p_7
        let v = engine.decide(&BigInt::from(83), Family::S2);
        assert_eq!(v.verdict, Verdict::In);
        // 41 = p'_7 lands in T2 (exact mode takes U' indices; 7 is outside U')
        let v = engine.decide(&BigInt::from(41), Family::T2);
        assert_eq!(v.verdict, Verdict::In);
        // membership in S1 goes through the order: n_61 = 5 is prime but not
        // in U
        let v = engine.decide(&BigInt::from(61), Family::S1);
        assert_eq!(v.verdict, Verdict::Out);
        // bad primes lie outside all four fragment families
        for fam in [Family::S1, Family::S2, Family::T1, Family::T2] {
            let v = engine.decide(&BigInt::from(2), fam);
            assert_eq!(v.verdict, Verdict::Out);
            assert!(v.witness.bad_reduction);
        }
        // exact mode: bad primes land in T
        assert_eq!(engine.decide(&BigInt::from(3), Family::T).verdict, Verdict::In);
        assert_eq!(engine.decide(&BigInt::from(3), Family::S).verdict, Verdict::Out);
        // 41 ∈ T2 ⊆ S; 61 ∈ S2 so it must land in T
        assert_eq!(engine.decide(&BigInt::from(41), Family::S).verdict, Verdict::In);
        assert_eq!(engine.decide(&BigInt::from(61), Family::T).verdict, Verdict::In);
        // non-prime input is rejected as unknown
        let v = engine.decide(&BigInt::from(6), Family::S);
        assert_eq!(v.verdict, Verdict::Unknown);
    }

    #[test]
    fn exact_mode_is_a_partition_on_resolved_primes() {
        let mut engine = relaxed_engine();
        let mut resolved = 0;
        for &p in crate::factor::small_primes().iter().take_while(|&&p| p <= 200) {
            let pb = BigInt::from(p);
            let s = engine.decide(&pb, Family::S).verdict;
            let t = engine.decide(&pb, Family::T).verdict;
            match (s, t) {
                (Verdict::Unknown, _) | (_, Verdict::Unknown) => continue,
                (a, b) => {
                    resolved += 1;
                    assert_ne!(a, b, "p = {p} in both or neither");
                }
            }
        }
        assert!(resolved >= 20, "only {resolved} resolved");
    }

    #[test]
    fn s_integral_points_small() {
        let mut engine = relaxed_engine();
        let report = engine.check_s_integral_points(12).unwrap();
        // 1Q and 2Q are integral but 1, 2 are not index-set members
        assert_eq!(report.exceptions, vec![1, 2]);
        assert!(report.unresolved.is_empty(), "{:?}", report.unresolved);
        for row in &report.rows {
            match row.n {
                1 | 2 => assert_eq!(row.status, EzsStatus::IntegralTerm),
                _ => assert_eq!(row.status, EzsStatus::OutWithWitness, "n = {}", row.n),
            }
        }
        // witness at n = 5 is the largest good primitive prime at 5
        let row5 = &report.rows[4];
        assert_eq!(row5.witness_prime.as_deref(), Some("61"));
        // multiples of 3 are witnessed by the bad prime 3
        let row3 = &report.rows[2];
        assert_eq!(row3.witness_prime.as_deref(), Some("3"));
    }

    #[test]
    fn decomposition_fixtures() {
        let mut engine = relaxed_engine();
        let one = parse_rational("1/1").unwrap();
        let d = engine.decompose_rational(&one).unwrap();
        assert_eq!((d.s_part.as_str(), d.t_part.as_str()), ("1/1", "1/1"));
        let minus_one = parse_rational("-1/1").unwrap();
        let d = engine.decompose_rational(&minus_one).unwrap();
        assert_eq!((d.s_part.as_str(), d.t_part.as_str()), ("1/1", "-1/1"));
        // 41 ∈ S (via T2), 61 ∈ T (via S2)
        let x = parse_rational("2501/1").unwrap(); // 41 * 61
        let d = engine.decompose_rational(&x).unwrap();
        assert_eq!((d.s_part.as_str(), d.t_part.as_str()), ("41/1", "61/1"));
        let x = parse_rational("-41/61").unwrap();
        let d = engine.decompose_rational(&x).unwrap();
        assert_eq!((d.s_part.as_str(), d.t_part.as_str()), ("41/1", "-1/61"));
        // zero is rejected
        assert!(engine
            .decompose_rational(&parse_rational("0/5").unwrap())
            .is_err());
    }

    #[test]
    fn model_predicates() {
        let engine = paper_engine();
        // additions agree with integer arithmetic on the built fragment
        for i in 1..=3u32 {
            for j in 1..=3u32 {
                for k in 1..=3u32 {
                    let c = engine.model_check_add(i, j, k).unwrap();
                    assert!(c.agrees, "({i},{j},{k}): dev {}", c.deviation);
                    assert_eq!(c.predicate, i + j == k);
                }
            }
        }
        // the paper tolerances keep the combined deviation under 3/10
        let c = engine.model_check_add(1, 2, 3).unwrap();
        assert!(c.predicate && c.deviation <= 0.3);
        // indices beyond the fragment are rejected
        assert!(engine.model_check_add(1, 2, 9).is_err());
        assert!(engine.model_check_mul(2, 2, 4).is_err());
    }

    #[test]
    fn exceptional_set_lookup() {
        let mut engine = relaxed_engine();
        assert_eq!(engine.in_exceptional_set(2), Some(true));
        assert_eq!(engine.in_exceptional_set(5), Some(false));
        // beyond the scanned prime bound but within the term cap: computed
        assert_eq!(engine.in_exceptional_set(101), Some(false));
        assert_eq!(engine.in_exceptional_set(100_000), None);
    }
}
