//! Problem adapters: generic QPs (including the scalar oracle problems), the
//! hard-margin linear SVM, and continuous max-flow Potts segmentation.

pub mod io;
pub mod potts;
pub mod qp;
pub mod svm;
