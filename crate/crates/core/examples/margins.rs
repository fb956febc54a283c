//! Prints the cross-route agreement margins on the acceptance fixtures.

use mrrpa_core::fixtures::{self, ScalarModel};
use mrrpa_core::integrals::OrbitalSpaces;
use mrrpa_core::manifold::{build_manifold, SectorSet};
use mrrpa_core::partition::{build_dyall, DyallSettings, InteractionKernel};
use mrrpa_core::quadrature;
use mrrpa_core::rpa;
use mrrpa_core::sosex;

fn report<K: InteractionKernel<f64>>(
    label: &str,
    man: mrrpa_core::ExcitationManifold64,
    kernel: &K,
) {
    let m = rpa::assemble_ab(&man, kernel);
    let sol = rpa::solve_rpa(&m);
    let e_pl = rpa::plasmon_energy(&sol).unwrap();
    let g64 = quadrature::grid_for(&man, 64, None).unwrap();
    let g256 = quadrature::grid_for(&man, 256, None).unwrap();
    let e64 = quadrature::rpa_energy_quadrature(&man, kernel, &g64).unwrap();
    let e256 = quadrature::rpa_energy_quadrature(&man, kernel, &g256).unwrap();
    let amps = sosex::ring_ccd_amplitudes(&sol, &m).unwrap();
    let e_bt = sosex::rpa_energy_from_t(&amps, &m);
    println!(
        "{label:24} |pl-q64|={:>9.2e}  |pl-q256|={:>9.2e}  |pl-trBT|={:>9.2e}  riccati={:>9.2e}",
        (e_pl - e64).abs(),
        (e_pl - e256).abs(),
        (e_pl - e_bt).abs(),
        amps.riccati_residual
    );
}

fn physical(label: &str, set: &mrrpa_core::IntegralSet64, spaces: &OrbitalSpaces) {
    let part = build_dyall(set, spaces, &DyallSettings::default()).unwrap();
    let sectors = SectorSet::solve_required(&part, 20_000).unwrap();
    let man = build_manifold(&part, &sectors, 1e-12).unwrap();
    let kernel = part.residual();
    report(label, man, &kernel);
}

fn main() {
    let model = ScalarModel::<f64>::new(1.0, 0.2);
    report("scalar model", model.manifold(), &model.kernel());
    let set = fixtures::dimer_mo::<f64>(4.0, 2, 0);
    let spaces = OrbitalSpaces::with_virtual_complement(2, vec![0], vec![], 0);
    physical("dimer SR", &set, &spaces);
    let (set, spaces) = fixtures::four_site_cas22::<f64>(2.0);
    physical("4-site CAS(2,2)", &set, &spaces);
    let (set, spaces) = fixtures::six_site_cas22::<f64>(2.0);
    physical("6-site CAS(2,2)", &set, &spaces);
    let (set, spaces) = fixtures::composed_dimer_pair::<f64>(4.0);
    physical("composed dimer pair", &set, &spaces);
    let (set, spaces) = fixtures::composed_four_site_pair::<f64>(2.0);
    physical("composed 4-site pair", &set, &spaces);
}
