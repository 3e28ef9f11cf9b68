//! Least-squares fit of the uncertain thermal parameters to two switching
//! anchors: the turn-on delay under a constant gate current, and the time
//! above `T_c` produced by an nTron pulse of known time constant.
//!
//! Two parameters are fitted: the cubic specific-heat coefficient shared by
//! the two dielectric spacers, and the resistance-area product between the
//! lower spacer and the bath.

use crate::drive::{drive_thermal, DriveError, NtronParams, PulseShape};
use crate::htron::{ChannelSpec, MaterialDb, ThermalStack};
use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{Matrix2, Owned, Vector2, U2};
use serde::{Deserialize, Serialize};

/// Spacer materials sharing the fitted specific heat.
pub const SPACER_MATERIALS: [&str; 2] = ["a-Si", "SiO2"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationAnchors {
    /// Constant gate current of the turn-on anchor, A.
    pub square_current: f64,
    /// Target delay from drive onset to the channel going normal, s.
    pub turn_on: f64,
    /// nTron time constant of the second anchor, s.
    pub tau: f64,
    /// Target time above `T_c` for that pulse, s.
    pub time_above: f64,
}

impl Default for CalibrationAnchors {
    fn default() -> Self {
        Self {
            square_current: 1.2e-3,
            turn_on: 1e-9,
            tau: 30e-9,
            time_above: 4.7e-9,
        }
    }
}

/// Length of the constant drive used for the turn-on anchor.
const TURN_ON_WINDOW: f64 = 20e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnchorValues {
    /// `None` if the channel never switched within the drive window.
    pub turn_on: Option<f64>,
    pub time_above: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub spacer_cv_cubic: f64,
    pub substrate_resistance_area: f64,
    pub achieved: AnchorValues,
    pub evaluations: usize,
    pub converged: bool,
    pub termination: String,
}

impl CalibrationResult {
    /// Writes the fitted specific heat into `db`.
    pub fn apply_to_db(&self, db: &mut MaterialDb) -> Result<(), DriveError> {
        for name in SPACER_MATERIALS {
            let m = db.get_mut(name)?;
            m.cv_linear = 0.0;
            m.cv_cubic = self.spacer_cv_cubic;
        }
        Ok(())
    }

    /// Stack with the fitted values.
    pub fn apply_to_stack(&self, stack: &ThermalStack) -> ThermalStack {
        let mut s = stack.clone().with_substrate_resistance_area(self.substrate_resistance_area);
        for l in &mut s.layers {
            if SPACER_MATERIALS.contains(&l.material.name.as_str()) {
                l.material.cv_linear = 0.0;
                l.material.cv_cubic = self.spacer_cv_cubic;
            }
        }
        s
    }
}

/// Evaluates both anchors on `stack`.
pub fn evaluate_anchors(
    stack: &ThermalStack,
    channel: &ChannelSpec,
    ntron: &NtronParams,
    anchors: &CalibrationAnchors,
) -> Result<AnchorValues, DriveError> {
    let square = PulseShape::Square {
        t_start: 0.0,
        duration: TURN_ON_WINDOW,
        amplitude: anchors.square_current,
    };
    let turn_on = drive_thermal(stack, channel, square, ntron.load_resistance)?.switch_time;
    let n = ntron.clone().with_tau(anchors.tau);
    let time_above = drive_thermal(stack, channel, n.pulse(0.0), n.load_resistance)?.time_above_tc;
    Ok(AnchorValues {
        turn_on,
        time_above,
    })
}

struct Problem<'a> {
    base: &'a ThermalStack,
    channel: &'a ChannelSpec,
    ntron: &'a NtronParams,
    anchors: &'a CalibrationAnchors,
    /// `[ln A3, ln R_sub·A]`
    x: Vector2<f64>,
    failure: std::cell::RefCell<Option<DriveError>>,
}

impl Problem<'_> {
    fn stack_at(&self, x: &Vector2<f64>) -> ThermalStack {
        CalibrationResult {
            spacer_cv_cubic: x[0].exp(),
            substrate_resistance_area: x[1].exp(),
            achieved: AnchorValues {
                turn_on: None,
                time_above: 0.0,
            },
            evaluations: 0,
            converged: false,
            termination: String::new(),
        }
        .apply_to_stack(self.base)
    }

    fn residuals_at(&self, x: &Vector2<f64>) -> Option<Vector2<f64>> {
        match evaluate_anchors(&self.stack_at(x), self.channel, self.ntron, self.anchors) {
            Ok(v) => {
                let on = v.turn_on.unwrap_or(2.0 * TURN_ON_WINDOW);
                Some(Vector2::new(
                    (on / self.anchors.turn_on).ln(),
                    (v.time_above.max(1e-15) / self.anchors.time_above).ln(),
                ))
            }
            Err(e) => {
                self.failure.borrow_mut().get_or_insert(e);
                None
            }
        }
    }
}

impl LeastSquaresProblem<f64, U2, U2> for Problem<'_> {
    type ResidualStorage = Owned<f64, U2>;
    type JacobianStorage = Owned<f64, U2, U2>;
    type ParameterStorage = Owned<f64, U2>;

    fn set_params(&mut self, x: &Vector2<f64>) {
        self.x = *x;
    }

    fn params(&self) -> Vector2<f64> {
        self.x
    }

    fn residuals(&self) -> Option<Vector2<f64>> {
        self.residuals_at(&self.x)
    }

    fn jacobian(&self) -> Option<Matrix2<f64>> {
        let h = 1e-3;
        let mut j = Matrix2::zeros();
        for k in 0..2 {
            let mut up = self.x;
            let mut down = self.x;
            up[k] += h;
            down[k] -= h;
            let d = (self.residuals_at(&up)? - self.residuals_at(&down)?) / (2.0 * h);
            j.set_column(k, &d);
        }
        Some(j)
    }
}

/// Fits spacer specific heat and substrate resistance to `anchors`, starting
/// from the values in `stack`.
pub fn calibrate_thermal(
    stack: &ThermalStack,
    channel: &ChannelSpec,
    ntron: &NtronParams,
    anchors: &CalibrationAnchors,
) -> Result<CalibrationResult, DriveError> {
    stack.validate()?;
    let a3 = stack.layers[crate::htron::node::LOWER_SPACER].material.cv_cubic;
    let r0 = if stack.substrate_resistance_area > 0.0 {
        stack.substrate_resistance_area
    } else {
        1e-6
    };
    let problem = Problem {
        base: stack,
        channel,
        ntron,
        anchors,
        x: Vector2::new(a3.max(1e-6).ln(), r0.ln()),
        failure: std::cell::RefCell::new(None),
    };
    let (problem, report) = LevenbergMarquardt::new()
        .with_tol(1e-10)
        .with_patience(50)
        .minimize(problem);
    if let Some(e) = problem.failure.borrow_mut().take() {
        return Err(e);
    }
    let result_stack = problem.stack_at(&problem.x);
    let achieved = evaluate_anchors(&result_stack, channel, ntron, anchors)?;
    Ok(CalibrationResult {
        spacer_cv_cubic: problem.x[0].exp(),
        substrate_resistance_area: problem.x[1].exp(),
        achieved,
        evaluations: report.number_of_evaluations,
        converged: report.termination.was_successful(),
        termination: format!("{:?}", report.termination),
    })
}
