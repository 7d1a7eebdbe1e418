use std::fmt;
use std::fmt::Write as _;
use std::path::PathBuf;

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Pass,
    Uncertain,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Uncertain => "uncertain",
            Verdict::Fail => "fail",
        })
    }
}

/// Offending point (all coordinates) and how far it is from where it should be.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub point: Vec<Complex64>,
    pub distance: f64,
    pub note: String,
}

/// Named list of points in `C^dims`, exported as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub name: String,
    pub dims: usize,
    pub points: Vec<Vec<Complex64>>,
}

impl PointSet {
    pub fn planar(name: impl Into<String>, points: &[Complex64]) -> Self {
        PointSet {
            name: name.into(),
            dims: 1,
            points: points.iter().map(|p| vec![*p]).collect(),
        }
    }

    /// First coordinate of every point.
    pub fn planar_points(&self) -> Vec<Complex64> {
        self.points.iter().filter_map(|p| p.first().copied()).collect()
    }

    /// Header line naming the check and coordinate count, then `re,im[,...]` rows.
    pub fn to_csv(&self, check: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# check={check} set={} coords={}", self.name, self.dims);
        for p in &self.points {
            let row: Vec<String> = p.iter().map(|z| format!("{:?},{:?}", z.re, z.im)).collect();
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    name: String,
    verdict: Verdict,
    witness: Option<Witness>,
    pub stats: Vec<(String, f64)>,
    pub notes: Vec<String>,
    pub point_sets: Vec<PointSet>,
}

impl CheckResult {
    pub fn pass(name: impl Into<String>) -> Self {
        Self::with_verdict(name.into(), Verdict::Pass, None)
    }

    pub fn uncertain(name: impl Into<String>, note: impl Into<String>) -> Self {
        let mut c = Self::with_verdict(name.into(), Verdict::Uncertain, None);
        c.notes.push(note.into());
        c
    }

    /// A failure always names its witness.
    pub fn fail(name: impl Into<String>, witness: Witness) -> Self {
        Self::with_verdict(name.into(), Verdict::Fail, Some(witness))
    }

    fn with_verdict(name: String, verdict: Verdict, witness: Option<Witness>) -> Self {
        CheckResult {
            name,
            verdict,
            witness,
            stats: Vec::new(),
            notes: Vec::new(),
            point_sets: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn verdict(&self) -> Verdict {
        self.verdict
    }

    pub fn witness(&self) -> Option<&Witness> {
        self.witness.as_ref()
    }

    pub fn stat(&self, key: &str) -> Option<f64> {
        self.stats.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn point_set(&self, name: &str) -> Option<&PointSet> {
        self.point_sets.iter().find(|p| p.name == name)
    }

    pub fn with_stat(mut self, key: impl Into<String>, value: f64) -> Self {
        self.stats.push((key.into(), value));
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn with_points(mut self, set: PointSet) -> Self {
        self.point_sets.push(set);
        self
    }

    /// Downgrade a pass to uncertain; fails stay fails.
    pub fn weaken(&mut self, note: impl Into<String>) {
        if self.verdict == Verdict::Pass {
            self.verdict = Verdict::Uncertain;
        }
        self.notes.push(note.into());
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub scenario_id: String,
    pub checks: Vec<CheckResult>,
    pub artifacts: Vec<PathBuf>,
}

impl VerificationReport {
    pub fn new(scenario_id: impl Into<String>) -> Self {
        VerificationReport {
            scenario_id: scenario_id.into(),
            checks: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn single(scenario_id: impl Into<String>, check: CheckResult) -> Self {
        let mut r = Self::new(scenario_id);
        r.checks.push(check);
        r
    }

    /// Worst verdict over all checks; an empty report passes.
    pub fn verdict(&self) -> Verdict {
        self.checks.iter().map(|c| c.verdict).max().unwrap_or(Verdict::Pass)
    }

    /// 0 pass, 1 any fail, 2 any uncertain and no fail.
    pub fn exit_code(&self) -> i32 {
        match self.verdict() {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Uncertain => 2,
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Human-readable report. `generated` (a timestamp, say) goes on the one
    /// designated header line so the rest of the text is reproducible.
    pub fn to_text(&self, generated: Option<&str>) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "generated: {}", generated.unwrap_or("-"));
        let _ = writeln!(s, "scenario: {}", self.scenario_id);
        let _ = writeln!(s, "verdict: {}", self.verdict());
        let _ = writeln!(s, "exit_code: {}", self.exit_code());
        for c in &self.checks {
            let _ = writeln!(s);
            let _ = writeln!(s, "[check {}]", c.name);
            let _ = writeln!(s, "verdict: {}", c.verdict);
            if let Some(w) = &c.witness {
                let pt: Vec<String> = w.point.iter().map(|z| format!("({:?},{:?})", z.re, z.im)).collect();
                let _ = writeln!(s, "witness: {} distance={:e}", pt.join(" "), w.distance);
                if !w.note.is_empty() {
                    let _ = writeln!(s, "witness_note: {}", w.note);
                }
            }
            for (k, v) in &c.stats {
                let _ = writeln!(s, "{k}: {v:e}");
            }
            for n in &c.notes {
                let _ = writeln!(s, "note: {n}");
            }
        }
        if !self.artifacts.is_empty() {
            let _ = writeln!(s);
            let _ = writeln!(s, "[artifacts]");
            for a in &self.artifacts {
                let _ = writeln!(s, "{}", a.display());
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_worst_verdict() {
        let mut r = VerificationReport::new("t");
        assert_eq!(r.exit_code(), 0);
        r.checks.push(CheckResult::pass("a"));
        assert_eq!(r.exit_code(), 0);
        r.checks.push(CheckResult::uncertain("b", "residuals"));
        assert_eq!(r.exit_code(), 2);
        r.checks.push(CheckResult::fail(
            "c",
            Witness { point: vec![Complex64::new(0.0, 1.0)], distance: 1.0, note: String::new() },
        ));
        assert_eq!(r.exit_code(), 1);
        assert_eq!(r.verdict(), Verdict::Fail);
    }

    #[test]
    fn text_mentions_witness_and_timestamp_only_in_header() {
        let w = Witness { point: vec![Complex64::new(0.0, 1.0)], distance: 0.5, note: "root".into() };
        let r = VerificationReport::single("s", CheckResult::fail("stab", w).with_stat("samples", 3.0));
        let t = r.to_text(Some("2020-01-01"));
        assert!(t.starts_with("generated: 2020-01-01\n"));
        assert!(t.contains("witness: (0.0,1.0) distance=5e-1"));
        assert_eq!(t.lines().skip(1).collect::<Vec<_>>(), r.to_text(None).lines().skip(1).collect::<Vec<_>>());
    }

    #[test]
    fn csv_layout() {
        let set = PointSet {
            name: "roots".into(),
            dims: 2,
            points: vec![vec![Complex64::new(1.0, -0.5), Complex64::new(0.0, 2.0)]],
        };
        assert_eq!(set.to_csv("gl"), "# check=gl set=roots coords=2\n1.0,-0.5,0.0,2.0\n");
    }

    #[test]
    fn weaken_keeps_fail() {
        let mut c = CheckResult::pass("x");
        c.weaken("n");
        assert_eq!(c.verdict(), Verdict::Uncertain);
        let mut f = CheckResult::fail("y", Witness { point: vec![], distance: 1.0, note: String::new() });
        f.weaken("n");
        assert_eq!(f.verdict(), Verdict::Fail);
    }
}
