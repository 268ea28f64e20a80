//! The alphabet M: a finite weighted point set with a metric, either a
//! discrete label set or a uniform quadrature of the unit circle.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RuelleError};

/// Constructed weights must sum to 1 within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Discrete,
    CircleArc,
}

/// Which per-branch weight the transfer operator uses.
///
/// `Probability` integrates against the a priori probability (the weights
/// stored in the [`StateSpace`]); `Counting` sums branches with unit weight.
/// The two differ by a factor per application: with uniform weights on N
/// symbols, eigenvalues differ by exactly N. Closed forms in the literature
/// appear in both conventions, so operator entry points take the choice
/// explicitly instead of picking one silently.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    #[default]
    Probability,
    Counting,
}

impl Weighting {
    #[inline]
    pub fn branch_weight(self, space: &StateSpace, a: usize) -> f64 {
        match self {
            Weighting::Probability => space.weight(a),
            Weighting::Counting => 1.0,
        }
    }

    #[inline]
    pub fn log_branch_weight(self, space: &StateSpace, a: usize) -> f64 {
        match self {
            Weighting::Probability => space.log_weight(a),
            Weighting::Counting => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Weighting::Probability => "probability",
            Weighting::Counting => "counting",
        }
    }
}

/// Compact alphabet: labels, numeric coordinates, fully supported a priori
/// probability, and a metric normalized so diam(M) <= 1.
#[derive(Clone, Debug)]
pub struct StateSpace {
    labels: Vec<String>,
    coords: Vec<Vec<f64>>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    metric_kind: MetricKind,
}

/// One invariant check from [`StateSpace::validate`].
#[derive(Clone, Debug, Serialize)]
pub struct SpaceCheck {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpaceReport {
    pub checks: Vec<SpaceCheck>,
    pub pass: bool,
}

impl StateSpace {
    /// Finite alphabet from labels. `weights = None` means uniform; given
    /// weights are normalized silently (a priori measures only matter up to
    /// scale), but must be strictly positive before normalization.
    pub fn make_finite_alphabet(labels: &[&str], weights: Option<&[f64]>) -> Result<Self> {
        if labels.is_empty() {
            return Err(RuelleError::EmptyAlphabet);
        }
        let n = labels.len();
        let raw: Vec<f64> = match weights {
            None => vec![1.0; n],
            Some(w) => {
                if w.len() != n {
                    return Err(RuelleError::WeightCountMismatch { got: w.len(), want: n });
                }
                w.to_vec()
            }
        };
        for (i, &w) in raw.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(RuelleError::NonpositiveWeight { index: i, value: w });
            }
        }
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        // Numeric labels provide their own coordinate; others fall back to the
        // index so scalar potentials stay total.
        let coords: Vec<Vec<f64>> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| vec![l.trim().parse::<f64>().unwrap_or(i as f64)])
            .collect();
        Ok(Self::finish(
            labels.iter().map(|s| s.to_string()).collect(),
            coords,
            weights,
            MetricKind::Discrete,
        ))
    }

    /// Uniform quadrature of the unit circle: `node_count` equally spaced
    /// points, each of weight 1/node_count, arc metric scaled so diam = 1.
    pub fn make_circle(node_count: usize) -> Result<Self> {
        if node_count < 2 {
            return Err(RuelleError::BadNodeCount(node_count));
        }
        let mut labels = Vec::with_capacity(node_count);
        let mut coords = Vec::with_capacity(node_count);
        for k in 0..node_count {
            let theta = 2.0 * std::f64::consts::PI * (k as f64) / (node_count as f64);
            labels.push(format!("node_{k}_of_{node_count}"));
            coords.push(vec![theta.cos(), theta.sin(), theta]);
        }
        let w = 1.0 / node_count as f64;
        Ok(Self::finish(labels, coords, vec![w; node_count], MetricKind::CircleArc))
    }

    /// Uniform two-point spin alphabet {-1, +1}; index 0 is -1.
    pub fn uniform_spins() -> Self {
        Self::make_finite_alphabet(&["-1", "+1"], None).expect("static alphabet")
    }

    /// Uniform binary alphabet {0, 1}; index 0 is the renewal symbol 0.
    pub fn uniform_binary() -> Self {
        Self::make_finite_alphabet(&["0", "1"], None).expect("static alphabet")
    }

    /// Assembles a space without normalization or positivity checks, so that
    /// `validate` can be exercised on deliberately broken inputs.
    pub fn from_raw_parts(
        labels: Vec<String>,
        coords: Vec<Vec<f64>>,
        weights: Vec<f64>,
        metric_kind: MetricKind,
    ) -> Self {
        Self::finish(labels, coords, weights, metric_kind)
    }

    fn finish(
        labels: Vec<String>,
        coords: Vec<Vec<f64>>,
        weights: Vec<f64>,
        metric_kind: MetricKind,
    ) -> Self {
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        StateSpace { labels, coords, weights, log_weights, metric_kind }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    #[inline]
    pub fn log_weight(&self, i: usize) -> f64 {
        self.log_weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn metric_kind(&self) -> MetricKind {
        self.metric_kind
    }

    /// Scalar coordinate of point `i` (first component), used by scalar
    /// potentials such as beta*x_1.
    #[inline]
    pub fn coord_value(&self, i: usize) -> f64 {
        self.coords[i][0]
    }

    pub fn coords(&self, i: usize) -> &[f64] {
        &self.coords[i]
    }

    /// Point metric, normalized so diam(M) <= 1: discrete 0/1, or arc length
    /// divided by pi on the circle.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        match self.metric_kind {
            MetricKind::Discrete => {
                if i == j {
                    0.0
                } else {
                    1.0
                }
            }
            MetricKind::CircleArc => {
                let ti = self.coords[i][2];
                let tj = self.coords[j][2];
                let two_pi = 2.0 * std::f64::consts::PI;
                let mut d = (ti - tj).abs() % two_pi;
                if d > std::f64::consts::PI {
                    d = two_pi - d;
                }
                d / std::f64::consts::PI
            }
        }
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n() {
            Ok(())
        } else {
            Err(RuelleError::IndexOutOfRange { index: i, n: self.n() })
        }
    }

    /// Pure invariant report; never mutates and never fails.
    pub fn validate(&self) -> SpaceReport {
        let mut checks = Vec::new();

        let nonempty = self.n() >= 1;
        checks.push(SpaceCheck {
            name: "nonempty",
            pass: nonempty,
            detail: format!("{} points", self.n()),
        });

        let full_support = self.weights.iter().all(|&w| w > 0.0 && w.is_finite());
        checks.push(SpaceCheck {
            name: "full_support",
            pass: full_support,
            detail: format!(
                "min weight {:e}",
                self.weights.iter().copied().fold(f64::INFINITY, f64::min)
            ),
        });

        let total: f64 = self.weights.iter().sum();
        let sum_ok = (total - 1.0).abs() <= WEIGHT_SUM_TOL;
        checks.push(SpaceCheck {
            name: "weights_sum_to_one",
            pass: sum_ok,
            detail: format!("sum = {total:.17}"),
        });

        if self.metric_kind == MetricKind::CircleArc {
            let on_circle = self
                .coords
                .iter()
                .all(|c| (c[0] * c[0] + c[1] * c[1] - 1.0).abs() <= 1e-12);
            checks.push(SpaceCheck {
                name: "points_on_unit_circle",
                pass: on_circle,
                detail: String::new(),
            });
        }

        let pass = checks.iter().all(|c| c.pass);
        SpaceReport { checks, pass }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_normalization() {
        let s = StateSpace::make_finite_alphabet(&["-1", "+1"], None).unwrap();
        assert_eq!(s.weights(), &[0.5, 0.5]);
        assert_eq!(s.coord_value(0), -1.0);
        assert_eq!(s.coord_value(1), 1.0);
    }

    #[test]
    fn given_weights_are_rescaled() {
        let s = StateSpace::make_finite_alphabet(&["0", "1"], Some(&[2.0, 2.0])).unwrap();
        assert_eq!(s.weights(), &[0.5, 0.5]);
        let s = StateSpace::make_finite_alphabet(&["a", "b", "c"], Some(&[1.0, 2.0, 3.0])).unwrap();
        let expect = [1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0];
        for (w, e) in s.weights().iter().zip(expect) {
            assert!((w - e).abs() < 1e-15);
        }
        // non-numeric labels fall back to index coordinates
        assert_eq!(s.coord_value(2), 2.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            StateSpace::make_finite_alphabet(&[], None),
            Err(RuelleError::EmptyAlphabet)
        ));
        assert!(matches!(
            StateSpace::make_finite_alphabet(&["a", "b"], Some(&[1.0])),
            Err(RuelleError::WeightCountMismatch { .. })
        ));
        assert!(matches!(
            StateSpace::make_finite_alphabet(&["a", "b"], Some(&[1.0, 0.0])),
            Err(RuelleError::NonpositiveWeight { index: 1, .. })
        ));
        assert!(matches!(StateSpace::make_circle(1), Err(RuelleError::BadNodeCount(1))));
    }

    #[test]
    fn circle_nodes_and_metric() {
        let s = StateSpace::make_circle(4).unwrap();
        assert_eq!(s.n(), 4);
        for i in 0..4 {
            assert!((s.weight(i) - 0.25).abs() < 1e-15);
        }
        // quarter turn = half of the diameter-normalized metric
        assert!((s.distance(0, 1) - 0.5).abs() < 1e-12);
        assert!((s.distance(0, 2) - 1.0).abs() < 1e-12);
        assert!((s.distance(1, 3) - 1.0).abs() < 1e-12);
        assert_eq!(s.distance(3, 3), 0.0);
    }

    #[test]
    fn circle_quadrature_integrates_low_degree_trig_exactly() {
        // sum_i w_i cos(k theta_i) must match (1/2pi) integral cos(k t) dt = 0
        // for 1 <= k < N/2, and 1 at k = 0.
        let n = 16;
        let s = StateSpace::make_circle(n).unwrap();
        for k in 0..(n / 2) {
            let mut c = 0.0;
            let mut d = 0.0;
            for i in 0..n {
                let theta = s.coords(i)[2];
                c += s.weight(i) * (k as f64 * theta).cos();
                d += s.weight(i) * (k as f64 * theta).sin();
            }
            let exact = if k == 0 { 1.0 } else { 0.0 };
            assert!((c - exact).abs() < 1e-10, "cos degree {k}: {c}");
            assert!(d.abs() < 1e-10, "sin degree {k}: {d}");
        }
    }

    #[test]
    fn validate_flags_broken_invariants() {
        let good = StateSpace::uniform_spins();
        assert!(good.validate().pass);

        let drifted = StateSpace::from_raw_parts(
            vec!["a".into(), "b".into()],
            vec![vec![0.0], vec![1.0]],
            vec![0.5, 0.5 + 1e-6],
            MetricKind::Discrete,
        );
        let rep = drifted.validate();
        assert!(!rep.pass);
        assert!(rep.checks.iter().any(|c| c.name == "weights_sum_to_one" && !c.pass));

        let dead = StateSpace::from_raw_parts(
            vec!["a".into(), "b".into()],
            vec![vec![0.0], vec![1.0]],
            vec![1.0, 0.0],
            MetricKind::Discrete,
        );
        let rep = dead.validate();
        assert!(rep.checks.iter().any(|c| c.name == "full_support" && !c.pass));
    }

    #[test]
    fn weighting_branch_weights() {
        let s = StateSpace::uniform_spins();
        assert_eq!(Weighting::Probability.branch_weight(&s, 0), 0.5);
        assert_eq!(Weighting::Counting.branch_weight(&s, 0), 1.0);
        assert_eq!(Weighting::Counting.log_branch_weight(&s, 1), 0.0);
    }
}
