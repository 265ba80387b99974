use serde_json::{json, Value};

use super::format::canonical;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Flag {
    Sound,
    Lossy,
    Undecided,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::Sound => "SOUND",
            Flag::Lossy => "LOSSY",
            Flag::Undecided => "UNDECIDED",
        }
    }
}

/// One relation instance and its residual.
#[derive(Debug, Clone)]
pub struct Check {
    pub relation: String,
    pub index: String,
    pub residual: String,
    pub zero: bool,
    pub flag: Flag,
}

impl Check {
    pub fn new(relation: impl Into<String>, index: impl Into<String>, residual: String, zero: bool) -> Self {
        Check { relation: relation.into(), index: index.into(), residual, zero, flag: Flag::Sound }
    }

    pub fn undecided(relation: impl Into<String>, index: impl Into<String>, why: String) -> Self {
        Check { relation: relation.into(), index: index.into(), residual: why, zero: true, flag: Flag::Undecided }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub command: String,
    pub window: String,
    pub checks: Vec<Check>,
    /// Structure-file snippet produced by constructive commands.
    pub output: Option<Value>,
    /// A single evaluated value, for `eval`.
    pub value: Option<String>,
    pub flag: Option<Flag>,
    pub failure: Option<String>,
}

impl Report {
    pub fn new(command: &str, window: String) -> Self {
        Report { command: command.into(), window, ..Report::default() }
    }

    pub fn exit_code(&self) -> i32 {
        if self.failure.is_some() || self.checks.iter().any(|c| !c.zero) {
            return 1;
        }
        let worst = self.checks.iter().map(|c| c.flag).chain(self.flag).max().unwrap_or(Flag::Sound);
        if worst == Flag::Sound {
            0
        } else {
            2
        }
    }

    fn status(&self) -> &'static str {
        match self.exit_code() {
            0 => "PASS",
            1 => "FAIL",
            _ if self.checks.iter().map(|c| c.flag).chain(self.flag).any(|f| f == Flag::Undecided) => "UNDECIDED",
            _ => "LOSSY",
        }
    }

    pub fn to_text(&self) -> String {
        if let Some(v) = &self.output {
            if self.failure.is_none() && self.checks.iter().all(|c| c.zero) {
                return canonical(v);
            }
        }
        let mut out = format!("{} (window {})\n", self.command, self.window);
        if let Some(v) = &self.value {
            out += &format!("value: {v}\n");
        }
        if self.checks.is_empty() && self.value.is_none() && self.failure.is_none() {
            out += "vacuous: 0 relations\n";
        }
        for c in &self.checks {
            out += &format!("{} {}: {} {}\n", c.relation, c.index, c.residual, c.flag.as_str());
        }
        if let Some(f) = &self.failure {
            out += &format!("failure: {f}\n");
        }
        let nonzero = self.checks.iter().filter(|c| !c.zero).count();
        let undecided = self.checks.iter().filter(|c| c.flag == Flag::Undecided).count();
        if !self.checks.is_empty() {
            out += &format!(
                "summary: {} checked, {nonzero} nonzero, {undecided} undecided\n",
                self.checks.len()
            );
        }
        if let Some(f) = self.flag {
            out += &format!("flag: {}\n", f.as_str());
        }
        out += &format!("status: {}\n", self.status());
        out
    }

    pub fn to_json(&self) -> String {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| {
                json!({
                    "relation": c.relation,
                    "index": c.index,
                    "residual": c.residual,
                    "zero": c.zero,
                    "flag": c.flag.as_str(),
                })
            })
            .collect();
        let mut v = json!({
            "command": self.command,
            "window": self.window,
            "checks": checks,
            "status": self.status(),
            "exit_code": self.exit_code(),
        });
        let m = v.as_object_mut().expect("object literal");
        if let Some(o) = &self.output {
            m.insert("output".into(), o.clone());
        }
        if let Some(x) = &self.value {
            m.insert("value".into(), json!(x));
        }
        if let Some(f) = self.flag {
            m.insert("flag".into(), json!(f.as_str()));
        }
        if let Some(f) = &self.failure {
            m.insert("failure".into(), json!(f));
        }
        canonical(&v)
    }
}
