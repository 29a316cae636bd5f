//! Stage plans: the theory constructors, the desk-scale preset and the
//! worst-case sample bookkeeping `N_s = Σ_{τ<s}(k_τ + m)`.
//!
//!     cargo run --example schedules

use streaming_svrg::svrg::{BatchGrowth, SvrgSchedule};

pub fn run() -> streaming_svrg::Result<()> {
    let c1 = SvrgSchedule::corollary1(2.0, 3.0, 10.0, 1.0)?;
    println!("alpha-bounded: eta = {:.6e}, m = {}, k0 = {}", c1.eta, c1.m, c1.batch.k0());

    let c2 = SvrgSchedule::corollary2(2.0, 3.0, 2.0, 3.0, 0.5, 1.0)?;
    println!("self-concordant: m = {}, k0 = {}", c2.m, c2.batch.k0());
    println!("rate bound at N = 1e12: {:.3e}", c2.rate_bound(1e12, 1.0, 1.0).unwrap_or(f64::NAN));

    // theory constants overflow long before they become useful
    match SvrgSchedule::corollary1(40.0, 50.0, 1e6, 1.0) {
        Err(e) => println!("p = 40: {e}"),
        Ok(_) => println!("p = 40 unexpectedly fits"),
    }

    let practical = SvrgSchedule::practical(10.0, 8, 2.0)?;
    println!("practical kappa=10, b=2: k0 = {}, m = {}", practical.batch.k0(), practical.m);
    for s in 0..=8 {
        let p = practical.stage(s)?;
        println!("  s = {s}: k = {:>6}, N_s = {:>6}", p.k, practical.budgeted_samples(s)?);
    }

    let factorial = practical.clone().with_batch(BatchGrowth::Factorial { k0: 10 });
    for s in 0..4 {
        let p = factorial.stage(s)?;
        println!("factorial s = {s}: k = {}, m = {}, eta = {}", p.k, p.m, p.eta);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> streaming_svrg::Result<()> {
    run()
}
