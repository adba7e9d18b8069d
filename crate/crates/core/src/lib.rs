pub mod egraph;
pub mod expr;
pub mod matchdb;
pub mod eqsat;
pub mod fitdata;
pub mod catalog;
pub mod blocks;
pub mod session;
