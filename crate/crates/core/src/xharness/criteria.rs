//! Verdict thresholds. Every pass/fail decision of the harness reads its
//! threshold from [`TABLE`]; the table and its version are echoed into each
//! run summary.

pub const VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub key: &'static str,
    pub value: f64,
    pub meaning: &'static str,
}

const fn t(key: &'static str, value: f64, meaning: &'static str) -> Threshold {
    Threshold { key, value, meaning }
}

pub const TABLE: &[Threshold] = &[
    t("reflection.energy_ratio_tol", 1e-12, "max |E(extension)/E(half) - 2|"),
    t("reflection.order_ratio_lo", 3.5, "min error ratio per grid halving, Neumann flux solve"),
    t("reflection.order_ratio_hi", 4.5, "max error ratio per grid halving, Neumann flux solve"),
    t("mms.min_order", 1.8, "min observed spatial order"),
    t("conservation.mass_drift", 1e-8, "max relative mass drift over the run"),
    t("conservation.energy_rise_rate", 1e-3, "max energy increase per unit time, relative to E(0)"),
    t("density.bound_factor", 2.0, "max rho <= factor (1 + rho_far + max rho0), every member"),
    t("density.tight_factor", 1.5, "same, largest nu"),
    t("limit.exponent_lo", -0.65, "lower end of the div u vs nu exponent"),
    t("limit.exponent_hi", -0.35, "upper end of the div u vs nu exponent"),
    t("limit.r2_min", 0.95, "min r^2 of the div u vs nu fit"),
    t("decay.edge_activity", 1e-6, "edge-activity flag level closing the fitting window"),
    t("decay.grad_u_exponent_max", -0.35, "max fitted decay exponent of ||grad u||_2"),
    t("decay.udot_exponent_max", -0.7, "max fitted decay exponent of ||sqrt(rho) u_dot||_2"),
    t("decay.r2_min", 0.9, "min r^2 of the decay fits"),
    t("localization.mass_ball_min", 0.25, "min mass in the growing half ball"),
    t("localization.mass_ball_slack", 1e-6, "tolerance on the mass-ball bound"),
    t("localization.moment_growth", 1.2, "max of moment(t)/(1+t) relative to moment(0)"),
    t("longtime.reduction", 0.2, "max ratio of the t_end value to the t = 1 value"),
    t("zlotnik.refinement_ratio", 3.0, "min residual ratio under (h, dt) halving"),
];

/// Threshold value by key.
///
/// # Panics
/// On a key missing from the table; keys are compile-time constants of the
/// harness.
pub fn get(key: &str) -> f64 {
    TABLE.iter().find(|t| t.key == key).unwrap_or_else(|| panic!("no threshold `{key}`")).value
}
