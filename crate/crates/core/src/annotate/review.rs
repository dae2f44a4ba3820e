use serde::Serialize;

use super::{AnnotateError, AnnotatedObject, Result};

/// Distinct approvals needed before an annotation is accepted.
pub const REQUIRED_APPROVALS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ReviewStatus {
    Queued,
    Annotated,
    UnderReview,
    Accepted,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ReviewState {
    pub status: ReviewStatus,
    /// Distinct reviewers who approved, in approval order.
    pub approvers: Vec<String>,
}

impl Default for ReviewState {
    fn default() -> Self {
        Self { status: ReviewStatus::Queued, approvers: Vec::new() }
    }
}

impl ReviewState {
    pub fn approvals(&self) -> usize {
        self.approvers.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReviewEvent {
    Submit,
    Approve(String),
    Reject,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub state: ReviewState,
    /// Set on rejection: the image's annotations must be discarded.
    pub clear_annotations: bool,
}

/// One step of the review workflow. A submitted annotation passes through
/// `Annotated` straight into `UnderReview`; a rejection sends the image back
/// to the queue with its approvals reset.
pub fn review_transition(state: &ReviewState, event: &ReviewEvent) -> Result<Transition> {
    use ReviewStatus::*;
    let keep = |state: ReviewState| Ok(Transition { state, clear_annotations: false });
    match (state.status, event) {
        (Queued, ReviewEvent::Submit) | (Annotated, ReviewEvent::Submit) => {
            keep(ReviewState { status: UnderReview, approvers: Vec::new() })
        }
        (UnderReview, ReviewEvent::Approve(who)) => {
            if state.approvers.contains(who) {
                return Err(AnnotateError::DuplicateApprover(who.clone()));
            }
            let mut approvers = state.approvers.clone();
            approvers.push(who.clone());
            let status = if approvers.len() >= REQUIRED_APPROVALS { Accepted } else { UnderReview };
            keep(ReviewState { status, approvers })
        }
        (UnderReview, ReviewEvent::Reject) => {
            Ok(Transition { state: ReviewState::default(), clear_annotations: true })
        }
        (status, event) => Err(AnnotateError::IllegalTransition { status, event: format!("{event:?}") }),
    }
}

/// An image's annotations together with its review state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReviewedImage {
    pub state: ReviewState,
    pub objects: Vec<AnnotatedObject>,
}

impl ReviewedImage {
    /// Applies `event`, clearing the objects on rejection. The image is left
    /// untouched when the event is illegal.
    pub fn apply(&mut self, event: &ReviewEvent) -> Result<()> {
        let t = review_transition(&self.state, event)?;
        if t.clear_annotations {
            self.objects.clear();
        }
        self.state = t.state;
        Ok(())
    }
}
