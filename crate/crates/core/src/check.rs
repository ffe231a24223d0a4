use serde::Serialize;

/// Outcome of an exhaustive check: how many instances were examined and the
/// first violating instance, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult<W> {
    pub pass: bool,
    pub checked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<W>,
}

impl<W> CheckResult<W> {
    pub fn pass(checked: usize) -> Self {
        CheckResult {
            pass: true,
            checked,
            witness: None,
        }
    }

    pub fn fail(checked: usize, witness: W) -> Self {
        CheckResult {
            pass: false,
            checked,
            witness: Some(witness),
        }
    }

    /// Runs `test` over `items`, stopping at the first failure.
    pub fn over<I, T, F>(items: I, mut test: F) -> Self
    where
        I: IntoIterator<Item = T>,
        F: FnMut(&T) -> Option<W>,
    {
        let mut checked = 0;
        for item in items {
            checked += 1;
            if let Some(w) = test(&item) {
                return CheckResult::fail(checked, w);
            }
        }
        CheckResult::pass(checked)
    }

    pub fn map_witness<V>(self, f: impl FnOnce(W) -> V) -> CheckResult<V> {
        CheckResult {
            pass: self.pass,
            checked: self.checked,
            witness: self.witness.map(f),
        }
    }
}
