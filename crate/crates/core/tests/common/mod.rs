#![allow(dead_code)]

pub mod seeded;
