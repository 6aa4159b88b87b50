//! Run configuration: TOML with `[run]`, `[physics]`, `[numerics]` and
//! `[kernel]` sections. Every key has a preset default.

use std::fmt;
use std::path::PathBuf;

use heatbath::gle::ConvolutionRule;
use heatbath::io::Provenance;
use toml::{Table, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    KernelEval,
    Kappa,
    NoiseSample,
    SimGle,
    SimLangevin,
    SimBath,
    Compare,
    Fig(u8),
}

impl Kind {
    pub fn parse(s: &str) -> Option<Kind> {
        Some(match s {
            "kernel-eval" => Kind::KernelEval,
            "kappa" => Kind::Kappa,
            "noise-sample" => Kind::NoiseSample,
            "sim-gle" => Kind::SimGle,
            "sim-langevin" => Kind::SimLangevin,
            "sim-bath" => Kind::SimBath,
            "compare" => Kind::Compare,
            "reproduce-fig1" => Kind::Fig(1),
            "reproduce-fig2" => Kind::Fig(2),
            "reproduce-fig3" => Kind::Fig(3),
            "reproduce-fig4" => Kind::Fig(4),
            _ => return None,
        })
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::KernelEval => write!(f, "kernel-eval"),
            Kind::Kappa => write!(f, "kappa"),
            Kind::NoiseSample => write!(f, "noise-sample"),
            Kind::SimGle => write!(f, "sim-gle"),
            Kind::SimLangevin => write!(f, "sim-langevin"),
            Kind::SimBath => write!(f, "sim-bath"),
            Kind::Compare => write!(f, "compare"),
            Kind::Fig(n) => write!(f, "reproduce-fig{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CouplingSource {
    Example,
    Forces(PathBuf),
    BetaGrid(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelEvalMode {
    Analytic,
    Quadrature,
    Finite,
}

impl KernelEvalMode {
    fn name(&self) -> &'static str {
        match self {
            KernelEvalMode::Analytic => "analytic",
            KernelEvalMode::Quadrature => "quadrature",
            KernelEvalMode::Finite => "finite",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub kind: Option<Kind>,
    pub seed: u64,
    pub out: PathBuf,
    pub paths: usize,
    pub threads: usize,

    pub temperature: f64,
    pub m: f64,
    pub c: f64,
    pub nbar: usize,
    pub eta: Option<f64>,
    pub stiff: bool,
    pub chi: Option<f64>,
    pub delta: Option<f64>,

    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
    pub bins: usize,
    pub hist_range: f64,
    pub t_ref: f64,
    pub rule: ConvolutionRule,
    pub masses: Vec<f64>,
    pub coupled: bool,

    pub coupling: CouplingSource,
    pub kernel_mode: KernelEvalMode,
    pub tau_max: f64,
    pub tau_step: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            kind: None,
            seed: 1,
            out: PathBuf::from("out"),
            paths: 2000,
            threads: 0,
            temperature: 3.0,
            m: 0.25,
            c: 1.0,
            nbar: 8,
            eta: None,
            stiff: false,
            chi: None,
            delta: None,
            dt: 0.005,
            steps: 4000,
            record_every: 20,
            bins: 40,
            hist_range: 4.0,
            t_ref: 10.0,
            rule: ConvolutionRule::HalfStepLeft,
            masses: vec![1.0, 0.25, 0.0625, 0.01],
            coupled: true,
            coupling: CouplingSource::Example,
            kernel_mode: KernelEvalMode::Analytic,
            tau_max: 20.0,
            tau_step: 0.1,
        }
    }
}

/// One problem found in a configuration, tied to a `section.key`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub key: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("run", &["kind", "seed", "out", "paths", "threads"]),
    ("physics", &["T", "m", "c", "nbar", "eta", "scaling", "chi", "delta"]),
    (
        "numerics",
        &[
            "dt",
            "steps",
            "record_every",
            "bins",
            "hist_range",
            "t_ref",
            "rule",
            "masses",
            "coupled",
        ],
    ),
    (
        "kernel",
        &["coupling", "forces", "beta_grid", "mode", "tau_max", "tau_step"],
    ),
];

struct Reader<'a> {
    table: &'a Table,
    diags: Vec<Diagnostic>,
}

impl<'a> Reader<'a> {
    fn get(&self, section: &str, key: &str) -> Option<&'a Value> {
        self.table.get(section)?.as_table()?.get(key)
    }

    fn bad(&mut self, section: &str, key: &str, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            key: format!("{section}.{key}"),
            message: message.into(),
        });
    }

    fn float(&mut self, section: &str, key: &str, slot: &mut f64) {
        match self.get(section, key) {
            None => {}
            Some(Value::Float(v)) => *slot = *v,
            Some(Value::Integer(v)) => *slot = *v as f64,
            Some(other) => self.bad(section, key, format!("expected a number, found {}", other.type_str())),
        }
    }

    fn opt_float(&mut self, section: &str, key: &str, slot: &mut Option<f64>) {
        if self.get(section, key).is_some() {
            let mut v = 0.0;
            self.float(section, key, &mut v);
            *slot = Some(v);
        }
    }

    fn uint(&mut self, section: &str, key: &str, slot: &mut usize) {
        match self.get(section, key) {
            None => {}
            Some(Value::Integer(v)) if *v >= 0 => *slot = *v as usize,
            Some(Value::Integer(v)) => self.bad(section, key, format!("must be nonnegative, got {v}")),
            Some(other) => self.bad(section, key, format!("expected an integer, found {}", other.type_str())),
        }
    }

    fn string(&mut self, section: &str, key: &str) -> Option<String> {
        match self.get(section, key) {
            None => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(other) => {
                self.bad(section, key, format!("expected a string, found {}", other.type_str()));
                None
            }
        }
    }
}

impl Config {
    /// Parses TOML text. Syntax errors fail outright with their location;
    /// unknown keys and type errors are collected as diagnostics.
    pub fn parse(text: &str) -> Result<(Config, Vec<Diagnostic>), String> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
        let mut r = Reader {
            table: &table,
            diags: Vec::new(),
        };
        for (name, value) in &table {
            match SECTIONS.iter().find(|(s, _)| s == name) {
                None => r.diags.push(Diagnostic {
                    key: name.clone(),
                    message: "unknown section".into(),
                }),
                Some((_, keys)) => match value.as_table() {
                    None => r.bad(name, "", "expected a table"),
                    Some(t) => {
                        for k in t.keys() {
                            if !keys.contains(&k.as_str()) {
                                r.diags.push(Diagnostic {
                                    key: format!("{name}.{k}"),
                                    message: "unknown key".into(),
                                });
                            }
                        }
                    }
                },
            }
        }

        let mut c = Config::default();
        if let Some(k) = r.string("run", "kind") {
            match Kind::parse(&k) {
                Some(kind) => c.kind = Some(kind),
                None => r.bad("run", "kind", format!("unknown experiment kind {k:?}")),
            }
        }
        match r.get("run", "seed") {
            None => {}
            Some(Value::Integer(v)) if *v >= 0 => c.seed = *v as u64,
            Some(Value::Integer(v)) => r.bad("run", "seed", format!("must be nonnegative, got {v}")),
            Some(other) => r.bad(
                "run",
                "seed",
                format!("expected an integer, found {}", other.type_str()),
            ),
        }
        if let Some(out) = r.string("run", "out") {
            c.out = PathBuf::from(out);
        }
        r.uint("run", "paths", &mut c.paths);
        r.uint("run", "threads", &mut c.threads);

        r.float("physics", "T", &mut c.temperature);
        r.float("physics", "m", &mut c.m);
        r.float("physics", "c", &mut c.c);
        r.uint("physics", "nbar", &mut c.nbar);
        r.opt_float("physics", "eta", &mut c.eta);
        if let Some(s) = r.string("physics", "scaling") {
            match s.as_str() {
                "small-mass" => c.stiff = false,
                "stiff" => c.stiff = true,
                _ => r.bad(
                    "physics",
                    "scaling",
                    format!("expected \"small-mass\" or \"stiff\", got {s:?}"),
                ),
            }
        }
        r.opt_float("physics", "chi", &mut c.chi);
        r.opt_float("physics", "delta", &mut c.delta);

        r.float("numerics", "dt", &mut c.dt);
        r.uint("numerics", "steps", &mut c.steps);
        r.uint("numerics", "record_every", &mut c.record_every);
        r.uint("numerics", "bins", &mut c.bins);
        r.float("numerics", "hist_range", &mut c.hist_range);
        r.float("numerics", "t_ref", &mut c.t_ref);
        if let Some(s) = r.string("numerics", "rule") {
            match s.as_str() {
                "half-step-left" => c.rule = ConvolutionRule::HalfStepLeft,
                "trapezoid" => c.rule = ConvolutionRule::Trapezoid,
                _ => r.bad(
                    "numerics",
                    "rule",
                    format!("expected \"half-step-left\" or \"trapezoid\", got {s:?}"),
                ),
            }
        }
        match r.get("numerics", "masses") {
            None => {}
            Some(Value::Array(a)) => {
                let parsed: Option<Vec<f64>> = a
                    .iter()
                    .map(|v| match v {
                        Value::Float(f) => Some(*f),
                        Value::Integer(i) => Some(*i as f64),
                        _ => None,
                    })
                    .collect();
                match parsed {
                    Some(v) => c.masses = v,
                    None => r.bad("numerics", "masses", "expected an array of numbers"),
                }
            }
            Some(other) => r.bad(
                "numerics",
                "masses",
                format!("expected an array, found {}", other.type_str()),
            ),
        }
        match r.get("numerics", "coupled") {
            None => {}
            Some(Value::Boolean(b)) => c.coupled = *b,
            Some(other) => r.bad(
                "numerics",
                "coupled",
                format!("expected a boolean, found {}", other.type_str()),
            ),
        }

        let forces = r.string("kernel", "forces");
        let grid = r.string("kernel", "beta_grid");
        if let Some(s) = r.string("kernel", "coupling") {
            match s.as_str() {
                "example" => c.coupling = CouplingSource::Example,
                "forces" => match &forces {
                    Some(p) => c.coupling = CouplingSource::Forces(PathBuf::from(p)),
                    None => r.bad("kernel", "forces", "coupling = \"forces\" needs a force table path"),
                },
                "beta-grid" => match &grid {
                    Some(p) => c.coupling = CouplingSource::BetaGrid(PathBuf::from(p)),
                    None => r.bad("kernel", "beta_grid", "coupling = \"beta-grid\" needs a grid path"),
                },
                _ => r.bad(
                    "kernel",
                    "coupling",
                    format!("expected \"example\", \"forces\" or \"beta-grid\", got {s:?}"),
                ),
            }
        }
        if let Some(s) = r.string("kernel", "mode") {
            match s.as_str() {
                "analytic" => c.kernel_mode = KernelEvalMode::Analytic,
                "quadrature" => c.kernel_mode = KernelEvalMode::Quadrature,
                "finite" => c.kernel_mode = KernelEvalMode::Finite,
                _ => r.bad(
                    "kernel",
                    "mode",
                    format!("expected \"analytic\", \"quadrature\" or \"finite\", got {s:?}"),
                ),
            }
        }
        r.float("kernel", "tau_max", &mut c.tau_max);
        r.float("kernel", "tau_step", &mut c.tau_step);

        let mut diags = r.diags;
        diags.extend(c.check());
        Ok((c, diags))
    }

    /// Range violations and incompatible combinations.
    pub fn check(&self) -> Vec<Diagnostic> {
        let mut d = Vec::new();
        let mut bad = |key: &str, message: String| {
            d.push(Diagnostic {
                key: key.into(),
                message,
            })
        };
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.seed > i64::MAX as u64 {
            bad("run.seed", format!("must not exceed {}, got {}", i64::MAX, self.seed));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            bad("physics.T", format!("must be nonnegative, got {}", self.temperature));
        }
        if !positive(self.m) {
            bad("physics.m", format!("must be positive, got {}", self.m));
        }
        if !positive(self.c) {
            bad("physics.c", format!("must be positive, got {}", self.c));
        }
        if self.nbar < 2 || !self.nbar.is_multiple_of(2) {
            bad(
                "physics.nbar",
                format!("must be even and at least 2, got {}", self.nbar),
            );
        }
        if let Some(eta) = self.eta {
            if !positive(eta) {
                bad(
                    "physics.eta",
                    format!("must be positive for a finite lattice, got {eta}"),
                );
            }
        }
        if self.stiff {
            match (self.chi, self.delta) {
                (Some(chi), Some(delta)) => {
                    if !positive(chi) {
                        bad("physics.chi", format!("must be positive, got {chi}"));
                    }
                    if !(delta > 0.25) {
                        bad("physics.delta", format!("stiff scaling needs delta > 1/4, got {delta}"));
                    }
                }
                _ => bad("physics.scaling", "stiff scaling needs both chi and delta".into()),
            }
            if let Some(k) = self.kind {
                if !matches!(k, Kind::SimLangevin) {
                    bad(
                        "physics.scaling",
                        format!("stiff scaling applies to sim-langevin only, not {k}"),
                    );
                }
            }
        } else if self.chi.is_some() || self.delta.is_some() {
            bad(
                "physics.scaling",
                "chi and delta are only used with scaling = \"stiff\"".into(),
            );
        }
        if !positive(self.dt) {
            bad("numerics.dt", format!("must be positive, got {}", self.dt));
        }
        if self.steps == 0 {
            bad("numerics.steps", "must be positive".into());
        }
        if self.record_every == 0 {
            bad("numerics.record_every", "must be positive".into());
        } else if !self.steps.is_multiple_of(self.record_every) {
            bad(
                "numerics.record_every",
                format!("must divide steps ({}), got {}", self.steps, self.record_every),
            );
        }
        if self.bins == 0 {
            bad("numerics.bins", "must be positive".into());
        }
        if !positive(self.hist_range) {
            bad(
                "numerics.hist_range",
                format!("must be positive, got {}", self.hist_range),
            );
        }
        if self.paths == 0 {
            bad("run.paths", "must be positive".into());
        }
        if positive(self.dt) && self.record_every > 0 {
            let grid = self.dt * self.record_every as f64;
            let k = self.t_ref / grid;
            if !(self.t_ref >= 0.0) || (k - k.round()).abs() > 1e-9 || self.t_ref > self.dt * self.steps as f64 + 1e-12
            {
                bad(
                    "numerics.t_ref",
                    format!(
                        "must be a recorded time in [0, steps*dt] on the grid of spacing {grid}, got {}",
                        self.t_ref
                    ),
                );
            }
        }
        if self.masses.is_empty() || self.masses.iter().any(|m| !positive(*m)) {
            bad("numerics.masses", "need at least one positive mass ratio".into());
        }
        if !positive(self.tau_max) || !positive(self.tau_step) {
            bad("kernel.tau_max", "tau_max and tau_step must be positive".into());
        }
        if self.kernel_mode == KernelEvalMode::Analytic && self.coupling != CouplingSource::Example {
            bad(
                "kernel.mode",
                "the analytic kernel exists for the example coupling only".into(),
            );
        }
        if self.kernel_mode == KernelEvalMode::Quadrature && matches!(self.coupling, CouplingSource::Forces(_)) {
            bad(
                "kernel.mode",
                "force tables have no continuum limit kernel; use mode = \"finite\"".into(),
            );
        }
        if self.coupling == CouplingSource::Example && !(self.c > 0.5) {
            bad(
                "physics.c",
                format!("the example coupling needs c > 1/2, got {}", self.c),
            );
        }
        if let Some(k) = self.kind {
            if matches!(k, Kind::SimGle | Kind::SimLangevin | Kind::Compare | Kind::Fig(_))
                && self.coupling != CouplingSource::Example
            {
                bad(
                    "kernel.coupling",
                    format!("{k} simulates the reduced example dynamics only"),
                );
            }
        }
        d
    }

    /// Resolved configuration as TOML, in a fixed key order.
    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        for (section, entries) in self.entries() {
            s.push_str(&format!("[{section}]\n"));
            for (k, v) in entries {
                s.push_str(&format!("{k} = {v}\n"));
            }
            s.push('\n');
        }
        s
    }

    /// `section.key` → TOML literal for output headers.
    /// Result-relevant settings; the output directory and thread count are left out.
    pub fn provenance(&self) -> Provenance {
        let mut p = Provenance::new();
        for (section, entries) in self.entries() {
            for (k, v) in entries {
                if section == "run" && (k == "out" || k == "threads") {
                    continue;
                }
                p.push(format!("{section}.{k}"), v);
            }
        }
        p
    }

    fn entries(&self) -> Vec<(&'static str, Vec<(&'static str, String)>)> {
        let q = |s: &str| format!("{s:?}");
        let f = |v: f64| {
            let s = format!("{v:?}");
            if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
                s
            } else {
                format!("{s}.0")
            }
        };
        let mut run = Vec::new();
        if let Some(k) = self.kind {
            run.push(("kind", q(&k.to_string())));
        }
        run.push(("seed", self.seed.to_string()));
        run.push(("out", q(&self.out.display().to_string())));
        run.push(("paths", self.paths.to_string()));
        run.push(("threads", self.threads.to_string()));

        let mut physics = vec![
            ("T", f(self.temperature)),
            ("m", f(self.m)),
            ("c", f(self.c)),
            ("nbar", self.nbar.to_string()),
        ];
        if let Some(eta) = self.eta {
            physics.push(("eta", f(eta)));
        }
        physics.push(("scaling", q(if self.stiff { "stiff" } else { "small-mass" })));
        if let Some(chi) = self.chi {
            physics.push(("chi", f(chi)));
        }
        if let Some(delta) = self.delta {
            physics.push(("delta", f(delta)));
        }

        let masses: Vec<String> = self.masses.iter().map(|m| f(*m)).collect();
        let numerics = vec![
            ("dt", f(self.dt)),
            ("steps", self.steps.to_string()),
            ("record_every", self.record_every.to_string()),
            ("bins", self.bins.to_string()),
            ("hist_range", f(self.hist_range)),
            ("t_ref", f(self.t_ref)),
            ("rule", q(self.rule.name())),
            ("masses", format!("[{}]", masses.join(", "))),
            ("coupled", self.coupled.to_string()),
        ];

        let mut kernel = Vec::new();
        match &self.coupling {
            CouplingSource::Example => kernel.push(("coupling", q("example"))),
            CouplingSource::Forces(p) => {
                kernel.push(("coupling", q("forces")));
                kernel.push(("forces", q(&p.display().to_string())));
            }
            CouplingSource::BetaGrid(p) => {
                kernel.push(("coupling", q("beta-grid")));
                kernel.push(("beta_grid", q(&p.display().to_string())));
            }
        }
        kernel.push(("mode", q(self.kernel_mode.name())));
        kernel.push(("tau_max", f(self.tau_max)));
        kernel.push(("tau_step", f(self.tau_step)));

        vec![
            ("run", run),
            ("physics", physics),
            ("numerics", numerics),
            ("kernel", kernel),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_preset() {
        let (c, d) = Config::parse("").unwrap();
        assert!(d.is_empty(), "{d:?}");
        assert_eq!(c, Config::default());
    }

    #[test]
    fn resolved_config_round_trips() {
        let text = "[physics]\nm = 0.01\nscaling = \"stiff\"\nchi = 2\ndelta = 0.5\n[run]\nkind = \"sim-langevin\"\n";
        let (c, d) = Config::parse(text).unwrap();
        assert!(d.is_empty(), "{d:?}");
        let (again, d2) = Config::parse(&c.to_toml()).unwrap();
        assert!(d2.is_empty(), "{d2:?}");
        assert_eq!(again, c);
    }

    #[test]
    fn reports_unknown_keys_and_ranges() {
        let (_, d) = Config::parse("[physics]\nT = -1\ncolour = 3\n[extra]\n").unwrap();
        let keys: Vec<&str> = d.iter().map(|d| d.key.as_str()).collect();
        assert!(keys.contains(&"physics.T"));
        assert!(keys.contains(&"physics.colour"));
        assert!(keys.contains(&"extra"));
    }

    #[test]
    fn stiff_needs_delta_above_quarter() {
        let (_, d) = Config::parse("[physics]\nscaling = \"stiff\"\nchi = 1\ndelta = 0.2\n").unwrap();
        assert!(d.iter().any(|d| d.key == "physics.delta"));
        let (_, d) = Config::parse("[physics]\nscaling = \"stiff\"\n").unwrap();
        assert!(d.iter().any(|d| d.key == "physics.scaling"));
    }

    #[test]
    fn syntax_errors_carry_a_location() {
        let err = Config::parse("[physics\nT = 1").unwrap_err();
        assert!(err.contains("line 1"), "{err}");
    }
}
