//! Solves the cubic beam problem at ε = 10⁻³, ω = 2.5 on the constant profile and prints the
//! stage summary.

use flexure::basis::ModalBasis;
use flexure::coefficients::CoefficientProfile;
use flexure::forcing::{BuiltinModel, ForcingModel, SourceShape, SourceTime};
use flexure::nash_moser::{certify_solution, solve, NashMoserSettings, SolveContext};
use flexure::report::summary_lines;

fn main() -> flexure::Result<()> {
    let profile = CoefficientProfile::constant(512)?;
    let basis = ModalBasis::new(&profile, 16, None)?;
    let forcing = ForcingModel::builtin(BuiltinModel::Cubic, basis.grid(), SourceShape::Sine, 1.0, SourceTime::Cosine);
    let ctx = SolveContext { basis: &basis, forcing: &forcing, settings: NashMoserSettings::default() };
    let state = solve(&ctx, 1e-3, 2.5)?;
    for line in summary_lines(&certify_solution(&ctx, &state)?) {
        println!("{line}");
    }
    Ok(())
}
