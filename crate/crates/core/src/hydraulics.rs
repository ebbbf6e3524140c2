//! Valve-controlled asymmetric cylinder: chamber flows, pressure dynamics,
//! piston force, proportional position tracking and a coupled servo axis.
//!
//! Cylinder positions `x_h` are measured from the fully retracted end,
//! `0 < x_h < s`; [`HydraulicParams::stroke_origin`] maps the suspension
//! actuator coordinate to it, `x_h = x − stroke_origin`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dead-volume guard on the chamber lengths.
pub const X_EPS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HydraulicParams {
    pub c_p1: f64,
    pub c_n1: f64,
    pub c_p2: f64,
    pub c_n2: f64,
    /// Supply pressure.
    pub p_s: f64,
    /// Tank pressure.
    pub p_r: f64,
    /// Bulk modulus.
    pub beta: f64,
    /// Maximum piston stroke `s`.
    pub stroke: f64,
    pub a_a: f64,
    pub a_b: f64,
    /// Actuator coordinate at which the piston is fully retracted.
    pub stroke_origin: f64,
}

/// Coefficient giving 40 L/min at full command and 3.5 MPa drop.
pub fn rated_flow_coefficient(flow_l_per_min: f64, dp: f64) -> f64 {
    flow_l_per_min / 60.0e3 / dp.sqrt()
}

impl Default for HydraulicParams {
    fn default() -> Self {
        let c = rated_flow_coefficient(40.0, 3.5e6);
        let bore: f64 = 0.1;
        let rod: f64 = 0.063;
        let a_a = std::f64::consts::PI * bore * bore / 4.0;
        Self {
            c_p1: c,
            c_n1: c,
            c_p2: c,
            c_n2: c,
            p_s: 21.0e6,
            p_r: 0.1e6,
            beta: 1.0e9,
            stroke: 0.4,
            a_a,
            a_b: a_a - std::f64::consts::PI * rod * rod / 4.0,
            stroke_origin: -0.3,
        }
    }
}

impl HydraulicParams {
    pub fn validate(&self) -> Result<()> {
        let coeffs = [self.c_p1, self.c_n1, self.c_p2, self.c_n2, self.beta, self.stroke];
        if coeffs.iter().any(|c| !(*c > 0.0)) {
            return Err(Error::Config("flow coefficients, bulk modulus and stroke must be positive".into()));
        }
        if !(self.a_a > self.a_b && self.a_b > 0.0) {
            return Err(Error::Config("piston areas must satisfy A_a > A_b > 0".into()));
        }
        if !(self.p_s > self.p_r && self.p_r >= 0.0) {
            return Err(Error::Config("pressures must satisfy p_s > p_r >= 0".into()));
        }
        Ok(())
    }

    pub fn to_cylinder(&self, x: f64) -> f64 {
        x - self.stroke_origin
    }

    pub fn from_cylinder(&self, x_h: f64) -> f64 {
        x_h + self.stroke_origin
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HydraulicState {
    pub p_a: f64,
    pub p_b: f64,
    /// Valve command in `[-1, 1]`.
    pub u: f64,
}

/// Selector: 1 for `u > 0`, else 0.
#[inline]
pub fn selector(u: f64) -> f64 {
    if u > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Pressure-drop function `sign(Δp) √|Δp|`.
#[inline]
pub fn drop_fn(dp: f64) -> f64 {
    dp.signum() * dp.abs().sqrt()
}

/// Chamber flows `(Q_a, Q_b)`. For `u > 0` chamber a is fed from supply and
/// b drains to tank; for `u < 0` the roles swap, both flows keeping the sign
/// of the volume change they cause.
pub fn valve_flows(p: &HydraulicParams, st: &HydraulicState) -> (f64, f64) {
    let u = st.u;
    let (pos, neg) = (selector(u), selector(-u));
    let q_a = p.c_p1 * drop_fn(p.p_s - st.p_a) * u * pos + p.c_n1 * drop_fn(st.p_a - p.p_r) * u * neg;
    let q_b = -p.c_n2 * drop_fn(st.p_b - p.p_r) * u * pos - p.c_p2 * drop_fn(p.p_s - st.p_b) * u * neg;
    (q_a, q_b)
}

fn check_chamber(p: &HydraulicParams, x_h: f64) -> Result<()> {
    if x_h <= X_EPS || x_h >= p.stroke - X_EPS {
        return Err(Error::ChamberDegenerate { x: x_h, stroke: p.stroke });
    }
    Ok(())
}

/// `(ṗ_a, ṗ_b)` at cylinder position `x_h` and rate `ẋ`.
pub fn pressure_rates(p: &HydraulicParams, st: &HydraulicState, x_h: f64, xd: f64) -> Result<(f64, f64)> {
    check_chamber(p, x_h)?;
    let (q_a, q_b) = valve_flows(p, st);
    let pa_dot = p.beta / (p.a_a * x_h) * (q_a - p.a_a * xd);
    let pb_dot = p.beta / (p.a_b * (p.stroke - x_h)) * (q_b + p.a_b * xd);
    Ok((pa_dot, pb_dot))
}

pub fn piston_force(p: &HydraulicParams, st: &HydraulicState) -> f64 {
    p.a_a * st.p_a - p.a_b * st.p_b
}

/// `u = k_p (x_r − x)` saturated to `[-1, 1]`.
pub fn track_position(k_p: f64, x_r: f64, x: f64) -> f64 {
    (k_p * (x_r - x)).clamp(-1.0, 1.0)
}

fn clamp_pressures(p: &HydraulicParams, st: &mut HydraulicState) -> bool {
    let (a, b) = (st.p_a.clamp(p.p_r, p.p_s), st.p_b.clamp(p.p_r, p.p_s));
    let clamped = a != st.p_a || b != st.p_b;
    if clamped {
        log::debug!("pressure clamp: p_a {:.4e} -> {a:.4e}, p_b {:.4e} -> {b:.4e}", st.p_a, st.p_b);
    }
    st.p_a = a;
    st.p_b = b;
    clamped
}

/// One RK4 step of the pressure ODEs with the piston motion given as a
/// function of the time offset within the step. Returns the new state and
/// whether the pressures had to be clamped to `[p_r, p_s]`.
pub fn hydraulic_step_with(
    p: &HydraulicParams,
    st: &HydraulicState,
    motion: impl Fn(f64) -> (f64, f64),
    dt: f64,
) -> Result<(HydraulicState, bool)> {
    let rates = |pa: f64, pb: f64, tau: f64| -> Result<(f64, f64)> {
        let (x, xd) = motion(tau);
        pressure_rates(p, &HydraulicState { p_a: pa, p_b: pb, u: st.u }, x, xd)
    };
    let (a1, b1) = rates(st.p_a, st.p_b, 0.0)?;
    let (a2, b2) = rates(st.p_a + 0.5 * dt * a1, st.p_b + 0.5 * dt * b1, 0.5 * dt)?;
    let (a3, b3) = rates(st.p_a + 0.5 * dt * a2, st.p_b + 0.5 * dt * b2, 0.5 * dt)?;
    let (a4, b4) = rates(st.p_a + dt * a3, st.p_b + dt * b3, dt)?;
    let mut out = HydraulicState {
        p_a: st.p_a + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
        p_b: st.p_b + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
        u: st.u,
    };
    let clamped = clamp_pressures(p, &mut out);
    Ok((out, clamped))
}

/// RK4 step with the cylinder held at `x_h` moving at constant `ẋ`.
pub fn hydraulic_step(p: &HydraulicParams, st: &HydraulicState, x_h: f64, xd: f64, dt: f64) -> Result<HydraulicState> {
    Ok(hydraulic_step_with(p, st, |tau| (x_h + xd * tau, xd), dt)?.0)
}

/// Load parameters of one actuator as seen along its stroke.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisLoad {
    /// Effective moving mass reflected to the actuator.
    pub mass: f64,
    /// Viscous friction coefficient.
    pub damping: f64,
}

/// One suspension actuator: valve, cylinder and the reflected mechanical
/// load, integrated together with RK4. State `[p_a, p_b, x, ẋ]` with `x` in
/// actuator coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServoAxis {
    pub params: HydraulicParams,
    pub load: AxisLoad,
    pub k_p: f64,
    pub hydraulic: HydraulicState,
    pub x: f64,
    pub xd: f64,
    pub xdd: f64,
    pub clamp_events: u64,
}

impl ServoAxis {
    /// Axis at rest at `x`, chamber pressures balancing `f_load` with the
    /// rod-side chamber at `p_b`.
    pub fn at_rest(params: HydraulicParams, load: AxisLoad, k_p: f64, x: f64, f_load: f64, p_b: f64) -> Result<Self> {
        params.validate()?;
        check_chamber(&params, params.to_cylinder(x))?;
        let p_a = (f_load + params.a_b * p_b) / params.a_a;
        if !(p_a >= params.p_r && p_a <= params.p_s) {
            return Err(Error::Config(format!("load {f_load} N cannot be held within the supply pressure")));
        }
        Ok(Self {
            params,
            load,
            k_p,
            hydraulic: HydraulicState { p_a, p_b, u: 0.0 },
            x,
            xd: 0.0,
            xdd: 0.0,
            clamp_events: 0,
        })
    }

    pub fn piston_force(&self) -> f64 {
        piston_force(&self.params, &self.hydraulic)
    }

    fn derivative(&self, s: [f64; 4], u: f64, f_load: &impl Fn(f64) -> f64) -> Result<[f64; 4]> {
        let st = HydraulicState { p_a: s[0], p_b: s[1], u };
        let (pa, pb) = pressure_rates(&self.params, &st, self.params.to_cylinder(s[2]), s[3])?;
        let acc = (piston_force(&self.params, &st) - f_load(s[2]) - self.load.damping * s[3]) / self.load.mass;
        Ok([pa, pb, s[3], acc])
    }

    /// Advances by `dt` with the valve command computed once from the
    /// measured position (zero-order hold). `f_load(x)` is the static load
    /// the actuator has to hold at position `x`.
    pub fn step(&mut self, x_r: f64, f_load: impl Fn(f64) -> f64, dt: f64) -> Result<()> {
        let u = track_position(self.k_p, x_r, self.x);
        let s0 = [self.hydraulic.p_a, self.hydraulic.p_b, self.x, self.xd];
        let add = |a: [f64; 4], k: [f64; 4], h: f64| std::array::from_fn::<f64, 4, _>(|i| a[i] + h * k[i]);
        let k1 = self.derivative(s0, u, &f_load)?;
        let k2 = self.derivative(add(s0, k1, 0.5 * dt), u, &f_load)?;
        let k3 = self.derivative(add(s0, k2, 0.5 * dt), u, &f_load)?;
        let k4 = self.derivative(add(s0, k3, dt), u, &f_load)?;
        let s1: [f64; 4] = std::array::from_fn(|i| s0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        let mut hyd = HydraulicState { p_a: s1[0], p_b: s1[1], u };
        if clamp_pressures(&self.params, &mut hyd) {
            self.clamp_events += 1;
        }
        self.hydraulic = hyd;
        self.x = s1[2];
        self.xd = s1[3];
        self.xdd = self.derivative([hyd.p_a, hyd.p_b, s1[2], s1[3]], u, &f_load)?[3];
        Ok(())
    }
}
