use bibcap_core::PageLabel;

#[derive(Debug, Clone)]
pub enum Op {
    Assign(usize, PageLabel),
    Override(usize, PageLabel, bool),
    Mark(usize),
    Unmark(usize),
}

#[derive(Clone, Default)]
pub struct ModelScan {
    pub duplicate: bool,
    pub label: Option<PageLabel>,
    pub override_label: Option<PageLabel>,
}

impl ModelScan {
    pub fn effective(&self) -> Option<PageLabel> {
        self.override_label.or(self.label)
    }
}

/// Predicts the outcome of `op` from a plain list of scans.
pub fn model_step(model: &mut [ModelScan], op: &Op) -> Result<(), &'static str> {
    let taken_by_other = |model: &[ModelScan], me: usize, label: PageLabel| {
        model
            .iter()
            .enumerate()
            .any(|(i, s)| i != me && !s.duplicate && s.effective() == Some(label))
    };
    match *op {
        Op::Assign(i, label) => {
            if model[i].duplicate {
                return Err("ScanIsDuplicate");
            }
            let effective = model[i].override_label.unwrap_or(label);
            if taken_by_other(model, i, effective) {
                return Err("DuplicateLabel");
            }
            model[i].label = Some(label);
        }
        Op::Override(i, label, with_note) => {
            if model[i].duplicate {
                return Err("ScanIsDuplicate");
            }
            if model[i].label.is_none() {
                return Err("NoAssignment");
            }
            if !with_note {
                return Err("EmptyNote");
            }
            if taken_by_other(model, i, label) {
                return Err("DuplicateLabel");
            }
            model[i].override_label = Some(label);
        }
        Op::Mark(i) => {
            if model[i].duplicate {
                return Err("AlreadyMarked");
            }
            model[i].duplicate = true;
        }
        Op::Unmark(i) => {
            if !model[i].duplicate {
                return Err("NotMarked");
            }
            if let Some(label) = model[i].effective() {
                if taken_by_other(model, i, label) {
                    return Err("DuplicateLabel");
                }
            }
            model[i].duplicate = false;
        }
    }
    Ok(())
}
