//! Scalar profiles `f(x)` on [0, 1] used for initial and boundary data.

use std::fmt;
use std::sync::Arc;

use evalexpr::{
    build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node,
    Value,
};

/// Step of the central difference used for non-constant profile derivatives.
const DERIVATIVE_STEP: f64 = 1e-6;

#[derive(Clone)]
pub enum Profile {
    Constant(f64),
    /// An arithmetic expression in `x` (and the constant `pi`), e.g.
    /// `1 + 0.2*math::sin(2*pi*x)`.
    Expr { source: String, node: Arc<Node> },
    /// Programmatic profile; `label` is what gets echoed into config dumps.
    Custom {
        label: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Profile({})", self.label())
    }
}

impl Profile {
    pub fn constant(v: f64) -> Self {
        Profile::Constant(v)
    }

    pub fn custom(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Profile::Custom {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    /// A plain number becomes [`Profile::Constant`]; anything else is
    /// compiled as an expression in `x`.
    pub fn parse(src: &str) -> Result<Self, String> {
        let src = src.trim();
        if let Ok(v) = src.parse::<f64>() {
            return Ok(Profile::Constant(v));
        }
        let node = build_operator_tree::<DefaultNumericTypes>(src)
            .map_err(|e| format!("cannot parse expression '{src}': {e}"))?;
        for ident in node.iter_variable_identifiers() {
            if ident != "x" && ident != "pi" {
                return Err(format!("expression '{src}' uses unknown variable '{ident}'"));
            }
        }
        let profile = Profile::Expr {
            source: src.to_string(),
            node: Arc::new(node),
        };
        for x in [0.0, 0.5, 1.0] {
            profile.try_eval(x)?;
        }
        Ok(profile)
    }

    fn try_eval(&self, x: f64) -> Result<f64, String> {
        match self {
            Profile::Constant(v) => Ok(*v),
            Profile::Custom { f, .. } => Ok(f(x)),
            Profile::Expr { source, node } => {
                let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
                ctx.set_value("x".into(), Value::Float(x))
                    .and_then(|_| ctx.set_value("pi".into(), Value::Float(std::f64::consts::PI)))
                    .map_err(|e| e.to_string())?;
                node.eval_number_with_context(&ctx)
                    .map_err(|e| format!("cannot evaluate '{source}' at x = {x}: {e}"))
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.try_eval(x).unwrap_or(f64::NAN)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Profile::Constant(_) => 0.0,
            _ => {
                (self.eval(x + DERIVATIVE_STEP) - self.eval(x - DERIVATIVE_STEP))
                    / (2.0 * DERIVATIVE_STEP)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Profile::Constant(_))
    }

    pub fn label(&self) -> String {
        match self {
            Profile::Constant(v) => format!("{v}"),
            Profile::Expr { source, .. } => source.clone(),
            Profile::Custom { label, .. } => label.clone(),
        }
    }
}
