use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Time,
    Position,
    Velocity,
    Parameter,
}

/// Ordered, duplicate-free list of declared variable names with roles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarSet {
    vars: Vec<(Arc<str>, Role)>,
}

impl VarSet {
    pub fn new<S: AsRef<str>>(vars: impl IntoIterator<Item = (S, Role)>) -> Result<VarSet> {
        let vars: Vec<(Arc<str>, Role)> =
            vars.into_iter().map(|(n, r)| (Arc::from(n.as_ref()), r)).collect();
        for (i, (n, _)) in vars.iter().enumerate() {
            if !is_identifier(n) {
                return Err(Error::VarSet(format!("`{n}` is not an identifier")));
            }
            if crate::symexpr::Func::from_name(n).is_some() {
                return Err(Error::VarSet(format!("`{n}` is a function name")));
            }
            if vars[..i].iter().any(|(m, _)| m == n) {
                return Err(Error::VarSet(format!("duplicate name `{n}`")));
            }
        }
        let times = vars.iter().filter(|(_, r)| *r == Role::Time).count();
        if times != 1 {
            return Err(Error::VarSet(format!("expected one time variable, found {times}")));
        }
        Ok(VarSet { vars })
    }

    /// `t, x1..xn, v1..vn`.
    pub fn standard(n: usize) -> VarSet {
        let mut vars = vec![(Arc::from("t"), Role::Time)];
        vars.extend((1..=n).map(|i| (Arc::from(format!("x{i}")), Role::Position)));
        vars.extend((1..=n).map(|i| (Arc::from(format!("v{i}")), Role::Velocity)));
        VarSet { vars }
    }

    /// Returns a copy with an extra parameter name appended.
    pub fn with_parameter(&self, name: &str) -> Result<VarSet> {
        VarSet::new(
            self.vars
                .iter()
                .map(|(n, r)| (n.to_string(), *r))
                .chain([(name.to_string(), Role::Parameter)]),
        )
    }

    pub fn contains(&self, name: &str) -> bool {
        self.vars.iter().any(|(n, _)| &**n == name)
    }

    pub fn role(&self, name: &str) -> Option<Role> {
        self.vars.iter().find(|(n, _)| &**n == name).map(|(_, r)| *r)
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Role)> {
        self.vars.iter().map(|(n, r)| (&**n, *r))
    }

    pub fn names_with(&self, role: Role) -> Vec<Arc<str>> {
        self.vars.iter().filter(|(_, r)| *r == role).map(|(n, _)| n.clone()).collect()
    }

    pub fn time(&self) -> Arc<str> {
        self.names_with(Role::Time).pop().expect("one time variable")
    }
}

fn is_identifier(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_layout() {
        let vs = VarSet::standard(2);
        let names: Vec<_> = vs.iter().map(|(n, _)| n.to_string()).collect();
        assert_eq!(names, ["t", "x1", "x2", "v1", "v2"]);
        assert_eq!(vs.role("v2"), Some(Role::Velocity));
    }

    #[test]
    fn rejects_bad_sets() {
        assert!(VarSet::new([("t", Role::Time), ("t", Role::Position)]).is_err());
        assert!(VarSet::new([("x", Role::Position)]).is_err());
        assert!(VarSet::new([("t", Role::Time), ("sin", Role::Position)]).is_err());
        assert!(VarSet::standard(1).with_parameter("zeta").is_ok());
    }
}
