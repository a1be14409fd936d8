//! Machine-readable reports. JSON is the canonical output; the text view is
//! a rendering of the same data.

use paracr_core::invariants::InvariantReport;
use paracr_core::jet::AdmissibilityReport;
use paracr_core::scenarios::ExampleReport;
use paracr_core::ZeroVerdict;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub input: InputEcho,
    pub seed: u64,
    pub samples: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub admissibility: Option<AdmissibilityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariants: Option<InvariantReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub example: Option<ExampleReport>,
}

#[derive(Serialize, Default)]
pub struct InputEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
}

impl Report {
    pub fn new(command: &'static str, input: InputEcho, seed: u64, samples: u32) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            input,
            seed,
            samples,
            admissibility: None,
            invariants: None,
            example: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let push = |out: &mut String, s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        push(&mut out, format!("paracr {} (schema {})", self.tool_version, self.schema_version));
        if let Some(g) = &self.input.g {
            push(&mut out, format!("G = {g}"));
        }
        if let Some(h) = &self.input.h {
            push(&mut out, format!("H = {h}"));
        }
        if let Some(f) = &self.input.f {
            push(&mut out, format!("f = {f}"));
        }
        push(&mut out, format!("seed = {}, samples = {}", self.seed, self.samples));
        if let Some(adm) = &self.admissibility {
            push(&mut out, "admissibility:".to_string());
            push(&mut out, format!("  G_r = 0 (Levi degenerate): {}", verdict(&adm.levi_degenerate, true)));
            push(&mut out, format!("  G_pp != 0 (2-nondegenerate): {}", verdict(&adm.two_nondegenerate, false)));
            push(&mut out, format!("  integrability residual = 0: {}", verdict(&adm.integrable, true)));
            push(&mut out, format!("  in class: {}", adm.in_class()));
        }
        if let Some(inv) = &self.invariants {
            push(&mut out, "invariants:".to_string());
            push(&mut out, format!("  W = {}  [{}]", inv.wunschmann, verdict(&inv.wunschmann_verdict, true)));
            push(&mut out, format!("  M = {}  [{}]", inv.monge, verdict(&inv.monge_verdict, true)));
            push(&mut out, format!("  B = {}", inv.b));
            push(&mut out, format!("  N = {}  [{}]", inv.mixed, verdict(&inv.mixed_verdict, true)));
            push(&mut out, format!("  C = {}", inv.c));
            push(&mut out, format!("  Z = {}  [{}]", inv.chern, verdict(&inv.chern_verdict, true)));
            push(&mut out, format!("  flat: {}", inv.flat));
            push(&mut out, format!("  contact projective pair: {}", inv.contact_projective_pair));
        }
        if let Some(ex) = &self.example {
            push(&mut out, "example suite:".to_string());
            push(&mut out, format!("  in class: {}", ex.admissibility.in_class()));
            push(&mut out, format!("  N = 0: {}", verdict(&ex.mixed_zero, true)));
            push(&mut out, format!("  W - 2r^3 B = 0: {}", verdict(&ex.wunschmann_vs_monge, true)));
            for (i, v) in ex.pullback_match.iter().enumerate() {
                push(&mut out, format!("  coframe form {} matches: {}", i + 1, verdict(v, true)));
            }
            push(&mut out, format!("  solution satisfies the ODE: {}", verdict(&ex.solution_residual, true)));
            push(&mut out, format!("  tangent frame components: {}", verdict(&ex.tangent_frame_residual, true)));
            push(&mut out, format!("  contact tangency: {}", verdict(&ex.contact_tangency, true)));
            push(&mut out, format!("  geodesic residual: {}", verdict(&ex.geodesic_residual, true)));
        }
        out
    }
}

fn verdict(v: &ZeroVerdict, expect_zero: bool) -> String {
    let desc = match v {
        ZeroVerdict::StructurallyZero => "structurally zero".to_string(),
        ZeroVerdict::ProbablyZero { samples, .. } => {
            format!("zero at {samples} random points")
        }
        ZeroVerdict::Nonzero { value, .. } => format!("nonzero (witness value {value})"),
    };
    let ok = v.is_zero() == expect_zero;
    format!("{desc}{}", if ok { "" } else { "  <-- unexpected" })
}
