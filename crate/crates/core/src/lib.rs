//! Finite approximations of free groups over labelled graphs, coset
//! extensions over retractable permutation groups, and finite F-inverse
//! covers of Margolis–Meakin expansions.

pub mod cosetext;
pub mod egroup;
pub mod invmon;
pub mod sgraph;
pub mod tower;
