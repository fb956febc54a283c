//! Single-point driver: integrals → partition → sector solves →
//! manifold → ring resummation, with per-stage timings and the
//! cross-validating energy routes selected by a method set.

use std::time::Instant;

use thiserror::Error;

use crate::casci::CasciError;
use crate::integrals::{IntegralSet, IntegralsError, OrbitalSpaces};
use crate::manifold::{self, ExcitationClass, ManifoldError, SectorSet};
use crate::partition::{build_dyall, DyallSettings, PartitionError};
use crate::quadrature::{self, QuadratureError};
use crate::rpa::{self, RpaError};
use crate::scalar::Scalar;
use crate::sosex::{self, SosexError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Integrals(#[from] IntegralsError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Casci(#[from] CasciError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Rpa(#[from] RpaError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Sosex(#[from] SosexError),
}

impl PipelineError {
    /// Whether this failure is a numerical-instability condition (as
    /// opposed to invalid input).
    pub fn is_instability(&self) -> bool {
        matches!(
            self,
            PipelineError::Manifold(ManifoldError::NonPositiveOmega { .. })
                | PipelineError::Manifold(ManifoldError::Casci(
                    CasciError::DegenerateGround { .. }
                ))
                | PipelineError::Casci(CasciError::DegenerateGround { .. })
                | PipelineError::Rpa(RpaError::Unstable(_))
                | PipelineError::Quadrature(QuadratureError::Instability { .. })
                | PipelineError::Sosex(SosexError::Unstable)
                | PipelineError::Sosex(SosexError::SingularX(_))
        )
    }
}

/// Which quantities a run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MethodSet {
    pub casci: bool,
    pub rpa: bool,
    pub tda: bool,
    pub quadrature: bool,
    pub sosex: bool,
    pub order_n: bool,
}

impl MethodSet {
    pub fn all() -> Self {
        Self {
            casci: true,
            rpa: true,
            tda: true,
            quadrature: true,
            sosex: true,
            order_n: false,
        }
    }

    pub fn needs_manifold(&self) -> bool {
        self.rpa || self.tda || self.quadrature || self.sosex || self.order_n
    }

    pub fn is_empty(&self) -> bool {
        !(self.casci || self.rpa || self.tda || self.quadrature || self.sosex || self.order_n)
    }
}

/// Pipeline knobs; defaults reproduce the documented behaviour.
#[derive(Debug, Clone, Copy)]
pub struct PipelineSettings {
    pub methods: MethodSet,
    pub drop_tol: f64,
    pub sector_cap: usize,
    pub grid_nodes: usize,
    /// None auto-scales to the median excitation energy.
    pub grid_scale: Option<f64>,
    /// Highest ring order for the order-by-order diagnostics.
    pub max_ring_order: u32,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            methods: MethodSet::all(),
            drop_tol: manifold::DROP_TOL,
            sector_cap: crate::casci::DEFAULT_SECTOR_CAP,
            grid_nodes: 64,
            grid_scale: None,
            max_ring_order: 8,
        }
    }
}

/// Wall-clock stage timings in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub partition_ms: f64,
    pub sectors_ms: f64,
    pub manifold_ms: f64,
    pub eigen_ms: f64,
    pub quadrature_ms: f64,
    pub amplitudes_ms: f64,
}

/// Everything a single geometry produces.
#[derive(Debug, Clone)]
pub struct SinglePoint<T: Scalar> {
    /// Total zeroth-order (CASCI) reference energy.
    pub e_casci: T,
    pub de_rpa_plasmon: Option<T>,
    pub de_rpa_quadrature: Option<T>,
    pub de_sosex: Option<T>,
    /// Lowest TDA excitation energy, when the eigenproblem ran.
    pub tda_lowest: Option<T>,
    pub stable: bool,
    pub n_cv: usize,
    pub n_ca: usize,
    pub n_av: usize,
    pub n_aa: usize,
    /// (order, energy) rows of the ring expansion when requested.
    pub ring_orders: Vec<(u32, T)>,
    pub timings: StageTimings,
}

fn ms(from: Instant) -> f64 {
    from.elapsed().as_secs_f64() * 1e3
}

/// Run the full pipeline for one integral set and orbital partition.
pub fn run_single_point<T: Scalar>(
    set: &IntegralSet<T>,
    spaces: &OrbitalSpaces,
    settings: &PipelineSettings,
) -> Result<SinglePoint<T>, PipelineError> {
    let mut timings = StageTimings::default();

    let t0 = Instant::now();
    let dyall_settings = DyallSettings {
        sector_cap: settings.sector_cap,
        ..DyallSettings::default()
    };
    let part = build_dyall(set, spaces, &dyall_settings)?;
    timings.partition_ms = ms(t0);

    let t0 = Instant::now();
    let sectors = SectorSet::solve_required(&part, settings.sector_cap)?;
    timings.sectors_ms = ms(t0);
    let na = spaces.n_active_electrons;
    let ground = sectors
        .get(na, set.ms2())
        .expect("ground sector was just solved");
    let e_casci = part.inactive_energy() + ground.energies.first().copied().unwrap_or_else(T::zero);

    let mut out = SinglePoint {
        e_casci,
        de_rpa_plasmon: None,
        de_rpa_quadrature: None,
        de_sosex: None,
        tda_lowest: None,
        stable: true,
        n_cv: 0,
        n_ca: 0,
        n_av: 0,
        n_aa: 0,
        ring_orders: Vec::new(),
        timings,
    };
    if !settings.methods.needs_manifold() {
        return Ok(out);
    }

    let t0 = Instant::now();
    let man = manifold::build_manifold(&part, &sectors, T::cast(settings.drop_tol))?;
    out.timings.manifold_ms = ms(t0);
    out.n_cv = man.count(ExcitationClass::CoreVirtual);
    out.n_ca = man.count(ExcitationClass::CoreActive);
    out.n_av = man.count(ExcitationClass::ActiveVirtual);
    out.n_aa = man.count(ExcitationClass::ActiveInternal);
    let kernel = part.residual();

    let t0 = Instant::now();
    let matrices = rpa::assemble_ab(&man, &kernel);
    let sol = rpa::solve_rpa(&matrices);
    out.timings.eigen_ms = ms(t0);
    out.stable = sol.stable;
    out.tda_lowest = sol.omega_tda.first().copied();
    if !sol.stable {
        return Ok(out);
    }
    if settings.methods.rpa {
        out.de_rpa_plasmon = Some(rpa::plasmon_energy(&sol)?);
    }

    if settings.methods.quadrature || settings.methods.order_n {
        let t0 = Instant::now();
        let grid =
            quadrature::grid_for(&man, settings.grid_nodes, settings.grid_scale.map(T::cast))?;
        if settings.methods.quadrature {
            match quadrature::rpa_energy_quadrature(&man, &kernel, &grid) {
                Ok(e) => out.de_rpa_quadrature = Some(e),
                Err(QuadratureError::Instability { .. }) => {
                    out.stable = false;
                }
                Err(e) => return Err(e.into()),
            }
        }
        if settings.methods.order_n {
            for order in 2..=settings.max_ring_order.max(2) {
                out.ring_orders.push((
                    order,
                    quadrature::ring_order_n(&man, &kernel, order, &grid)?,
                ));
            }
        }
        out.timings.quadrature_ms = ms(t0);
    }

    if settings.methods.sosex {
        let t0 = Instant::now();
        let amps = sosex::ring_ccd_amplitudes(&sol, &matrices)?;
        out.de_sosex = Some(sosex::sosex_energy(&amps, &man, &kernel));
        out.timings.amplitudes_ms = ms(t0);
    }
    Ok(out)
}
