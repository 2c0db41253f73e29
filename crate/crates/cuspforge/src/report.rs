//! Report helpers.
use num_bigint::BigInt;
use serde::Serializer;

pub fn serialize_bigints<S: Serializer>(v: &Vec<BigInt>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}
