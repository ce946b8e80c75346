//! Analyses for π-calculus terms with a hierarchy of base types: normal
//! forms, forests and depth, T-compatibility, typing, inference, bounded
//! exploration and coverability, and the net and counter machine encodings.

pub mod corpus;
pub mod encodings;
pub mod forest;
pub mod gen;
pub mod hierarchy;
pub mod inference;
pub mod normal_form;
pub mod parser;
pub mod pretty;
pub mod reduction;
pub mod tcompat;
pub mod term;
pub mod typing;

pub use encodings::{encode_minsky, encode_reset_net, Encoded, MinskyMachine, ResetNet};
pub use forest::{depth_exact, forest_of, nest_nu, LabelledForest};
pub use hierarchy::{p_safe, BaseTypeRef, Hierarchy, HierarchyError, TypeEnv};
pub use inference::{infer, infer_with, InferOptions, InferenceResult, InferenceStatus};
pub use normal_form::{canonical, nf, prune, Binder, NormalForm, Sequential};
pub use parser::{parse, ParseError};
pub use pretty::pretty;
pub use reduction::{check_invariance, cover, explore, CoverVerdict, ExploreOptions, StateGraph};
pub use tcompat::{is_tcompat, is_tshaped, phi, TcompatError};
pub use term::{Name, Prefix, Substitution, Term, TypeExpr};
pub use typing::{typecheck, typecheck_term, TypingReport};
