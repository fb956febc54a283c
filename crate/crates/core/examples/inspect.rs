//! Survey of the bundled fixtures: reference energies, correlation
//! shifts from the three routes, and manifold class counts.
//!
//!     cargo run -p mrrpa-core --release --example inspect

use mrrpa_core::fixtures;
use mrrpa_core::integrals::OrbitalSpaces;
use mrrpa_core::pipeline::{run_single_point, MethodSet, PipelineSettings};

fn show(label: &str, set: &mrrpa_core::IntegralSet64, spaces: &OrbitalSpaces) {
    let settings = PipelineSettings {
        methods: MethodSet {
            order_n: true,
            ..MethodSet::all()
        },
        max_ring_order: 2,
        ..Default::default()
    };
    match run_single_point(set, spaces, &settings) {
        Ok(r) => println!(
            "{label:22} e_ref={:+.10}  dE_rpa={:+.10}  dE_quad={:+.10}  dE_sosex={:+.10}  \
             classes=[{},{},{},{}]  ring2={:+.8}",
            r.e_casci,
            r.de_rpa_plasmon.unwrap_or(f64::NAN),
            r.de_rpa_quadrature.unwrap_or(f64::NAN),
            r.de_sosex.unwrap_or(f64::NAN),
            r.n_cv,
            r.n_ca,
            r.n_av,
            r.n_aa,
            r.ring_orders.first().map(|x| x.1).unwrap_or(f64::NAN),
        ),
        Err(e) => println!("{label:22} ERROR {e}"),
    }
}

fn main() {
    let (s, sp) = fixtures::four_site_cas22::<f64>(2.0);
    show("4-site CAS(2,2) u=2", &s, &sp);
    let (s, sp) = fixtures::six_site_cas22::<f64>(2.0);
    show("6-site CAS(2,2) u=2", &s, &sp);
    let (s, sp) = fixtures::dimer_cas21::<f64>(4.0);
    show("dimer CAS(2,1) u=4", &s, &sp);
    let (s, sp) = fixtures::composed_dimer_pair::<f64>(4.0);
    show("composed dimer pair", &s, &sp);
    let (s, sp) = fixtures::composed_four_site_pair::<f64>(2.0);
    show("composed 4-site pair", &s, &sp);
    let (s, sp) = fixtures::one_electron_dimer::<f64>(4.0, 1);
    show("one-electron dimer", &s, &sp);
    let s = fixtures::dimer_mo::<f64>(4.0, 2, 0);
    let sp = OrbitalSpaces::with_virtual_complement(2, vec![0], vec![], 0);
    show("dimer SR limit", &s, &sp);
    println!(
        "independent SR oracle for the dimer: {:+.10}",
        mrrpa_core::reference_sr::sr_rpa_energy(&s, 1).unwrap()
    );
}
