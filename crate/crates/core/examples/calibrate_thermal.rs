use soen_transmitter::calibrate::{calibrate_thermal, CalibrationAnchors};
use soen_transmitter::drive::NtronParams;
use soen_transmitter::htron::{ChannelSpec, MaterialDb, ThermalStack, DEFAULT_AREA, DEFAULT_BATH};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let stack = ThermalStack::from_db(&MaterialDb::default(), DEFAULT_AREA, DEFAULT_BATH)?;
    let fit = calibrate_thermal(
        &stack,
        &ChannelSpec::default(),
        &NtronParams::default(),
        &CalibrationAnchors::default(),
    )?;
    println!("{fit:#?}");
    Ok(())
}
