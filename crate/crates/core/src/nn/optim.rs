use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    #[serde(rename = "adamax")]
    AdaMax,
    Sgd,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::AdaMax => "adamax",
            OptimizerKind::Sgd => "sgd",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "adam" => Some(OptimizerKind::Adam),
            "adamax" => Some(OptimizerKind::AdaMax),
            "sgd" => Some(OptimizerKind::Sgd),
            _ => None,
        }
    }
}

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Moment estimates for one parameter vector.
#[derive(Clone, Debug)]
pub struct OptimizerState {
    kind: OptimizerKind,
    t: i32,
    m: Vec<f64>,
    /// Second moment (Adam) or infinity norm (AdaMax).
    v: Vec<f64>,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, n: usize) -> Self {
        let moments = if kind == OptimizerKind::Sgd { 0 } else { n };
        Self {
            kind,
            t: 0,
            m: vec![0.0; moments],
            v: vec![0.0; moments],
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        debug_assert_eq!(params.len(), grads.len());
        self.t += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= lr * g;
                }
            }
            OptimizerKind::Adam => {
                let c1 = 1.0 - BETA1.powi(self.t);
                let c2 = 1.0 - BETA2.powi(self.t);
                for i in 0..params.len() {
                    let g = grads[i];
                    self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * g;
                    self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * g * g;
                    let m_hat = self.m[i] / c1;
                    let v_hat = self.v[i] / c2;
                    params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
            }
            OptimizerKind::AdaMax => {
                let step = lr / (1.0 - BETA1.powi(self.t));
                for i in 0..params.len() {
                    let g = grads[i];
                    self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * g;
                    self.v[i] = (BETA2 * self.v[i]).max(g.abs());
                    // u = 0 only while every gradient seen so far was 0, so m = 0 too.
                    if self.v[i] > 0.0 {
                        params[i] -= step * self.m[i] / self.v[i];
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_first_step() {
        let mut s = OptimizerState::new(OptimizerKind::Adam, 1);
        let mut p = [0.0];
        s.step(&mut p, &[1.0], 0.001);
        assert!((p[0] - (-0.001 / (1.0 + 1e-8))).abs() < 1e-18);
        assert!((p[0] + 0.000999999990).abs() < 1e-15);
    }

    #[test]
    fn adamax_first_step() {
        let mut s = OptimizerState::new(OptimizerKind::AdaMax, 1);
        let mut p = [0.0];
        s.step(&mut p, &[1.0], 0.001);
        assert!((p[0] + 0.001).abs() < 1e-15);
    }

    #[test]
    fn sgd_zero_gradient_is_noop() {
        let mut s = OptimizerState::new(OptimizerKind::Sgd, 2);
        let mut p = [1.5, -2.0];
        s.step(&mut p, &[0.0, 0.0], 0.1);
        assert_eq!(p, [1.5, -2.0]);
    }

    #[test]
    fn adamax_zero_gradient_is_noop() {
        let mut s = OptimizerState::new(OptimizerKind::AdaMax, 1);
        let mut p = [3.0];
        s.step(&mut p, &[0.0], 0.1);
        assert_eq!(p, [3.0]);
    }

    #[test]
    fn names_round_trip() {
        for k in [OptimizerKind::Adam, OptimizerKind::AdaMax, OptimizerKind::Sgd] {
            assert_eq!(OptimizerKind::from_name(k.name()), Some(k));
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.name()));
        }
    }
}
