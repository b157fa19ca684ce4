use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::HypersurfaceError;
use crate::pseudolinalg::Signature;
use crate::rotational::RotationalSpec;
use crate::scalarjet::{Jet, ScalarField};

/// A parameterized map from an `n`-dimensional chart box into `E^{n+1}_s`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImmersionSpec {
    pub sig: Signature,
    /// One closed interval per chart variable.
    pub domain: Vec<(f64, f64)>,
    pub map: ChartMap,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChartMap {
    Components(ComponentMap),
    Rotational(RotationalSpec),
}

/// Explicit component expressions over named chart variables.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawComponents", into = "RawComponents")]
pub struct ComponentMap {
    vars: Vec<String>,
    fields: Vec<ScalarField>,
}

#[derive(Serialize, Deserialize)]
struct RawComponents {
    vars: Vec<String>,
    components: Vec<String>,
}

impl TryFrom<RawComponents> for ComponentMap {
    type Error = crate::scalarjet::ParseError;
    fn try_from(raw: RawComponents) -> Result<Self, Self::Error> {
        ComponentMap::parse(&raw.vars, &raw.components)
    }
}

impl From<ComponentMap> for RawComponents {
    fn from(c: ComponentMap) -> Self {
        RawComponents {
            components: c.fields.iter().map(|f| f.to_string()).collect(),
            vars: c.vars,
        }
    }
}

impl ComponentMap {
    pub fn parse<S: AsRef<str>>(vars: &[S], components: &[S]) -> Result<Self, crate::scalarjet::ParseError> {
        let vars: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
        let fields = components
            .iter()
            .map(|c| ScalarField::parse(c.as_ref(), &vars))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { vars, fields })
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn fields(&self) -> &[ScalarField] {
        &self.fields
    }
}

impl ImmersionSpec {
    pub fn from_components<S: AsRef<str>>(
        sig: Signature,
        vars: &[S],
        components: &[S],
        domain: Vec<(f64, f64)>,
    ) -> Result<Self, HypersurfaceError> {
        let map = ComponentMap::parse(vars, components)?;
        let spec = Self {
            sig,
            domain,
            map: ChartMap::Components(map),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), HypersurfaceError> {
        let n = self.chart_dim();
        if n + 1 != self.sig.dim() {
            return Err(HypersurfaceError::Shape(format!(
                "chart dimension {n} does not fit ambient dimension {}",
                self.sig.dim()
            )));
        }
        if let ChartMap::Components(c) = &self.map {
            if c.vars.len() != n || c.fields.len() != self.sig.dim() {
                return Err(HypersurfaceError::Shape(format!(
                    "{} variables and {} components for a {n}-dimensional chart in E^{}",
                    c.vars.len(),
                    c.fields.len(),
                    self.sig.dim()
                )));
            }
        }
        if let ChartMap::Rotational(r) = &self.map {
            if r.n != n || r.sig != self.sig {
                return Err(HypersurfaceError::Shape(
                    "rotational spec disagrees with the immersion's dimensions".into(),
                ));
            }
        }
        for (a, b) in &self.domain {
            if !(a < b) {
                return Err(HypersurfaceError::Shape(format!("empty interval [{a}, {b}]")));
            }
        }
        Ok(())
    }

    pub fn chart_dim(&self) -> usize {
        self.domain.len()
    }

    pub fn var_names(&self) -> Vec<String> {
        match &self.map {
            ChartMap::Components(c) => c.vars.clone(),
            ChartMap::Rotational(r) => r.var_names(),
        }
    }

    /// Jets of all ambient components at `p`, over the chart variables.
    pub fn jets(&self, p: &[f64], order: usize) -> Result<Vec<Jet>, HypersurfaceError> {
        if p.len() != self.chart_dim() {
            return Err(HypersurfaceError::Shape(format!(
                "point has {} coordinates, chart has {}",
                p.len(),
                self.chart_dim()
            )));
        }
        match &self.map {
            ChartMap::Components(c) => {
                let vars = Jet::variables(p, order)?;
                c.fields
                    .iter()
                    .map(|f| f.eval_with(&vars).map_err(HypersurfaceError::from))
                    .collect()
            }
            ChartMap::Rotational(r) => r.jets(p, order),
        }
    }

    /// Position vector at `p`.
    pub fn position(&self, p: &[f64]) -> Result<Vec<f64>, HypersurfaceError> {
        Ok(self.jets(p, 0)?.iter().map(Jet::value).collect())
    }
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

/// Names accepted by [`builtin`].
pub const BUILTINS: [&str; 8] = [
    "plane",
    "polar_plane",
    "graph",
    "sphere",
    "hyperbolic_plane",
    "cylinder",
    "cone",
    "perturbed_graph",
];

/// Builtin fixture immersions, all expressed through the expression language.
pub fn builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<ImmersionSpec, HypersurfaceError> {
    use std::f64::consts::PI;
    let s3 = |s| Signature::new(3, s).expect("signature");
    let spec = match name {
        "plane" => ImmersionSpec::from_components(
            s3(param(params, "index", 0.0) as usize),
            &["u", "v"],
            &["u", "v", "0"],
            vec![(-1.0, 1.0), (-1.0, 1.0)],
        ),
        "polar_plane" => ImmersionSpec::from_components(
            s3(0),
            &["r", "u"],
            &["r*cos(u)", "r*sin(u)", "0"],
            vec![(0.2, 2.0), (0.0, 2.0 * PI)],
        ),
        "graph" => ImmersionSpec::from_components(
            s3(1),
            &["u", "v"],
            &["u", "v", "u*v"],
            vec![(-0.6, 0.6), (-0.6, 0.6)],
        ),
        "sphere" => {
            let r = param(params, "radius", 1.0);
            ImmersionSpec::from_components(
                s3(0),
                &["t", "u"],
                &[
                    &format!("{r:?}*cos(t)"),
                    &format!("{r:?}*sin(t)*cos(u)"),
                    &format!("{r:?}*sin(t)*sin(u)"),
                ],
                vec![(0.3, PI - 0.3), (0.0, 2.0 * PI)],
            )
        }
        "hyperbolic_plane" => ImmersionSpec::from_components(
            s3(1),
            &["r", "u"],
            &["sinh(r)*cos(u)", "sinh(r)*sin(u)", "cosh(r)"],
            vec![(0.2, 2.0), (0.0, 2.0 * PI)],
        ),
        "cylinder" => {
            let r = param(params, "radius", 2.0);
            ImmersionSpec::from_components(
                s3(0),
                &["t", "u"],
                &["t", &format!("{r:?}*cos(u)"), &format!("{r:?}*sin(u)")],
                vec![(-1.0, 1.0), (0.0, 2.0 * PI)],
            )
        }
        "cone" => ImmersionSpec::from_components(
            s3(0),
            &["t", "u"],
            &["sqrt(3)*t/2", "-(t/2)*cos(u)", "-(t/2)*sin(u)"],
            vec![(0.5, 4.0), (0.0, 2.0 * PI)],
        ),
        "perturbed_graph" => {
            let seed = param(params, "seed", 0.0) as u64;
            let amp = param(params, "amplitude", 0.15);
            let p = random_cubic(seed, amp);
            ImmersionSpec::from_components(
                Signature::new(4, 1).expect("signature"),
                &["u", "v", "w"],
                &["u", "v", "w", p.as_str()],
                vec![(-0.5, 0.5), (-0.5, 0.5), (-0.5, 0.5)],
            )
        }
        other => Err(HypersurfaceError::UnknownBuiltin(other.to_string())),
    }?;
    Ok(spec)
}

/// A seeded random cubic polynomial in `u, v, w` with small coefficients.
fn random_cubic(seed: u64, amp: f64) -> String {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let monos = [
        "u*v", "v*w", "u*w", "u^2", "v^2", "w^2", "u^3", "u*v*w", "v^2*w", "w^3", "u^2*v",
    ];
    let mut terms = vec![format!("{:?}*u", amp * rng.random_range(-1.0..1.0))];
    for m in monos {
        terms.push(format!("{:?}*{m}", amp * rng.random_range(-1.0..1.0)));
    }
    terms.join(" + ")
}
