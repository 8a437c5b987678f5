use eds_descent::{CurveSpec, EdsSequence, RatPoint};

fn main() {
    let e = CurveSpec::short(-4).unwrap();
    let q = RatPoint::from_integers(2, 2);
    let t0 = std::time::Instant::now();
    let seq = EdsSequence::generate(&e, &q, 120).unwrap();
    println!(
        "generate 120: {:?}, B_120 digits {}",
        t0.elapsed(),
        seq.b(120).to_string().len()
    );
    let t0 = std::time::Instant::now();
    let _s2 = EdsSequence::generate(
        &CurveSpec::short(108).unwrap(),
        &RatPoint::from_integers(6, 18),
        120,
    )
    .unwrap();
    println!("generate companion 120: {:?}", t0.elapsed());
    let t0 = std::time::Instant::now();
    let t = EdsSequence::term_at(&e, &q, 277).unwrap();
    println!(
        "term_at 277: {:?} digits {}",
        t0.elapsed(),
        t.den_root.to_string().len()
    );
}
