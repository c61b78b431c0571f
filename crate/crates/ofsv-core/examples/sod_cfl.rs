use ofsv_core::basis::Discretization1;
use ofsv_core::geometry::{CvFamily, CvLayout, Mesh1D};
use ofsv_core::numflux::FluxKind;
use ofsv_core::physics::{ConservationLaw, EulerPrim};
use ofsv_core::solver::{run, BcSide, RunSetup, System, System1};
use ofsv_core::timeint::StepControl;

fn shock_tube(cfl: f64, left: (f64, f64, f64), right: (f64, f64, f64), t_final: f64, flux: FluxKind) -> Result<f64, String> {
    let disc = Discretization1::new(
        Mesh1D::uniform(0.0, 1.0, 50).unwrap(),
        CvLayout::new(2, CvFamily::GaussLegendre).unwrap(),
        3,
    );
    let sys = System1::new(
        disc,
        ConservationLaw::euler_1d(),
        flux,
        true,
        (BcSide::Transmissive, BcSide::Transmissive),
    )
    .unwrap();
    let state = sys.disc.average_initial(
        |x, out| {
            let p = if x < 0.5 {
                EulerPrim::new_1d(left.0, left.1, left.2)
            } else {
                EulerPrim::new_1d(right.0, right.1, right.2)
            };
            out.copy_from_slice(&p.to_cons_1d(1.4));
        },
        6,
    );
    let ctrl = StepControl::new(cfl, t_final);
    match run(RunSetup::new(System::One(Box::new(sys)), state, ctrl)) {
        Ok(out) => Ok(out.diagnostics.iter().map(|d| d.min_density).fold(f64::INFINITY, f64::min)),
        Err(e) => Err(format!("{e}")),
    }
}

fn main() {
    for &cfl in &[0.4, 0.3, 0.25, 0.2, 0.15] {
        let sod = shock_tube(cfl, (1.0, 0.0, 1.0), (0.125, 0.0, 0.1), 0.2, FluxKind::Hllc);
        let lax = shock_tube(cfl, (0.445, 0.698, 3.528), (0.5, 0.0, 0.571), 0.14, FluxKind::Hllc);
        println!("CFL {cfl}: sod = {sod:?}  lax = {lax:?}");
    }
    // also LF at 0.4
    let sod_lf = shock_tube(0.4, (1.0, 0.0, 1.0), (0.125, 0.0, 0.1), 0.2, FluxKind::LaxFriedrichs);
    println!("CFL 0.4 LF: sod = {sod_lf:?}");
}
