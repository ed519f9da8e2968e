//! Desk-scale phrase-based statistical machine translation workbench.

pub mod align;
pub mod corpus;
pub mod decoder;
pub mod eval;
pub mod harness;
pub mod lm;
pub mod morpho;
pub mod num;
pub mod phrase;

pub use num::Scalar;

pub type LanguageModel = lm::NGramModel<f64>;
pub type TranslationTable = align::TranslationTable<f64>;
pub type Ibm1Training = align::Ibm1Training<f64>;
pub type BleuComponents = eval::BleuComponents<f64>;
pub type NistComponents = eval::NistComponents<f64>;
pub type MeteorComponents = eval::MeteorComponents<f64>;
pub type TerComponents = eval::TerComponents<f64>;
