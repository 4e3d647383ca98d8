//! Machine-readable verification certificates.
//!
//! Every verification command produces a [`Certificate`]: a named list of
//! [`Check`]s, each of which passed, failed, was skipped, or records
//! informational data. Serialization is deterministic: field order is
//! fixed by declaration order, map-valued data is avoided, and timing
//! fields stay `None` unless explicitly requested, so re-running a
//! verification on the same input yields byte-identical JSON.

use serde::Serialize;

/// Version of the certificate JSON layout.
pub const CERT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
    Info,
}

/// One verified claim, with enough witness data to re-check it by hand.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    /// Human-readable statement of what was checked.
    pub detail: String,
    /// Witness values (counter-examples on failure, confirming data on
    /// success). Kept as preformatted strings for stable serialization.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub witnesses: Vec<String>,
}

impl Check {
    pub fn pass(name: impl Into<String>, detail: impl Into<String>) -> Check {
        Check {
            name: name.into(),
            status: CheckStatus::Pass,
            detail: detail.into(),
            witnesses: Vec::new(),
        }
    }

    pub fn fail(name: impl Into<String>, detail: impl Into<String>) -> Check {
        Check {
            name: name.into(),
            status: CheckStatus::Fail,
            detail: detail.into(),
            witnesses: Vec::new(),
        }
    }

    pub fn skipped(name: impl Into<String>, detail: impl Into<String>) -> Check {
        Check {
            name: name.into(),
            status: CheckStatus::Skipped,
            detail: detail.into(),
            witnesses: Vec::new(),
        }
    }

    pub fn info(name: impl Into<String>, detail: impl Into<String>) -> Check {
        Check {
            name: name.into(),
            status: CheckStatus::Info,
            detail: detail.into(),
            witnesses: Vec::new(),
        }
    }

    pub fn with_witness(mut self, witness: impl Into<String>) -> Check {
        self.witnesses.push(witness.into());
        self
    }

    pub fn with_witnesses<I, S>(mut self, witnesses: I) -> Check
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.witnesses.extend(witnesses.into_iter().map(Into::into));
        self
    }

    /// Builds a pass/fail check from a boolean outcome.
    pub fn verdict(name: impl Into<String>, detail: impl Into<String>, ok: bool) -> Check {
        if ok {
            Check::pass(name, detail)
        } else {
            Check::fail(name, detail)
        }
    }
}

/// A complete certificate for one verification run.
///
/// Serialization is by hand so the JSON carries a computed `overall`
/// field ("pass"/"fail") that can never drift from the check list.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub schema: u32,
    /// Name of the verification that produced this certificate.
    pub subject: String,
    /// Version of the tool that emitted the certificate.
    pub tool_version: &'static str,
    /// SHA-256 digests of the inputs, as `label:hex` strings, so a
    /// certificate can be tied back to exact input files.
    pub inputs: Vec<String>,
    pub checks: Vec<Check>,
    /// Wall-clock time, present only when timing output is requested:
    /// certificates are byte-stable across runs by default.
    pub elapsed_ms: Option<u64>,
}

impl Serialize for Certificate {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut len = 5;
        if !self.inputs.is_empty() {
            len += 1;
        }
        if self.elapsed_ms.is_some() {
            len += 1;
        }
        let mut st = serializer.serialize_struct("Certificate", len)?;
        st.serialize_field("schema", &self.schema)?;
        st.serialize_field("subject", &self.subject)?;
        st.serialize_field("tool_version", &self.tool_version)?;
        if !self.inputs.is_empty() {
            st.serialize_field("inputs", &self.inputs)?;
        }
        st.serialize_field("checks", &self.checks)?;
        let overall = if self.all_passed() { "pass" } else { "fail" };
        st.serialize_field("overall", &overall)?;
        if let Some(ms) = self.elapsed_ms {
            st.serialize_field("elapsed_ms", &ms)?;
        }
        st.end()
    }
}

impl Certificate {
    pub fn new(subject: impl Into<String>) -> Certificate {
        Certificate {
            schema: CERT_SCHEMA,
            subject: subject.into(),
            tool_version: env!("CARGO_PKG_VERSION"),
            inputs: Vec::new(),
            checks: Vec::new(),
            elapsed_ms: None,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn add_input_digest(&mut self, label: &str, hex_digest: &str) {
        self.inputs.push(format!("{label}:{hex_digest}"));
    }

    /// True when no check failed. Skipped and informational checks do not
    /// count against the verdict.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn counts(&self) -> (usize, usize, usize, usize) {
        let mut pass = 0;
        let mut fail = 0;
        let mut skipped = 0;
        let mut info = 0;
        for c in &self.checks {
            match c.status {
                CheckStatus::Pass => pass += 1,
                CheckStatus::Fail => fail += 1,
                CheckStatus::Skipped => skipped += 1,
                CheckStatus::Info => info += 1,
            }
        }
        (pass, fail, skipped, info)
    }

    /// Merges another certificate's checks under a `prefix/` namespace.
    pub fn absorb(&mut self, prefix: &str, other: Certificate) {
        for mut check in other.checks {
            check.name = format!("{prefix}/{}", check.name);
            self.checks.push(check);
        }
        self.inputs.extend(other.inputs);
    }
}
