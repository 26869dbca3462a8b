//! Interned symbols: chart variables, named parameters and transcendental kernels.
//!
//! Every symbol gets a process-local id. Ids only drive internal term order;
//! anything user-visible is ordered by [`Sym::display_cmp`], which depends on
//! the symbol's printed key and is therefore stable across runs.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, RwLock};

use once_cell::sync::Lazy;

use super::ratfun::RatFun;
use super::Q;

#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Sym(pub(crate) u32);

/// First chart coordinate.
pub const X: Sym = Sym(0);
/// Second chart coordinate.
pub const Y: Sym = Sym(1);

#[derive(Clone, Debug)]
pub enum Kernel {
    Sin(RatFun),
    Cos(RatFun),
    Exp(RatFun),
    Ln(RatFun),
    /// `base^exponent` with the exponent strictly between 0 and 1.
    Pow(RatFun, Q),
}

impl Kernel {
    pub fn arg(&self) -> &RatFun {
        match self {
            Kernel::Sin(a) | Kernel::Cos(a) | Kernel::Exp(a) | Kernel::Ln(a) | Kernel::Pow(a, _) => a,
        }
    }

    fn key(&self) -> String {
        match self {
            Kernel::Sin(a) => format!("sin({})", a.canonical_string()),
            Kernel::Cos(a) => format!("cos({})", a.canonical_string()),
            Kernel::Exp(a) => format!("exp({})", a.canonical_string()),
            Kernel::Ln(a) => format!("ln({})", a.canonical_string()),
            Kernel::Pow(a, r) => format!("({})^({})", a.canonical_string(), r),
        }
    }
}

#[derive(Debug)]
pub enum SymKind {
    Var(String),
    Kernel(Kernel),
}

#[derive(Debug)]
pub struct SymInfo {
    pub kind: SymKind,
    pub key: String,
    class: u8,
    /// Plain variables this symbol depends on, transitively.
    pub free_vars: BTreeSet<Sym>,
    /// True when the symbol (or something below it) is a logarithm or a
    /// fractional power, i.e. only real-valued on part of the chart.
    pub needs_positive: bool,
}

struct Table {
    infos: Vec<Arc<SymInfo>>,
    by_key: HashMap<String, Sym>,
    derivs: HashMap<(Sym, Sym), RatFun>,
}

static TABLE: Lazy<RwLock<Table>> = Lazy::new(|| {
    let mut t = Table { infos: Vec::new(), by_key: HashMap::new(), derivs: HashMap::new() };
    for (i, name) in ["X", "Y"].iter().enumerate() {
        let s = Sym(i as u32);
        t.infos.push(Arc::new(SymInfo {
            kind: SymKind::Var(name.to_string()),
            key: name.to_string(),
            class: i as u8,
            free_vars: [s].into_iter().collect(),
            needs_positive: false,
        }));
        t.by_key.insert(name.to_string(), s);
    }
    RwLock::new(t)
});

fn intern(key: String, make: impl FnOnce(Sym) -> SymInfo) -> Sym {
    if let Some(s) = TABLE.read().unwrap().by_key.get(&key) {
        return *s;
    }
    let mut t = TABLE.write().unwrap();
    if let Some(s) = t.by_key.get(&key) {
        return *s;
    }
    let s = Sym(t.infos.len() as u32);
    t.infos.push(Arc::new(make(s)));
    t.by_key.insert(key, s);
    s
}

impl Sym {
    /// Plain variable by name. `X` and `Y` map to the chart coordinates.
    pub fn var(name: &str) -> Sym {
        intern(name.to_string(), |s| SymInfo {
            kind: SymKind::Var(name.to_string()),
            key: name.to_string(),
            class: 2,
            free_vars: [s].into_iter().collect(),
            needs_positive: false,
        })
    }

    pub fn kernel(k: Kernel) -> Sym {
        let key = k.key();
        let mut free = BTreeSet::new();
        let mut positive = matches!(k, Kernel::Ln(_) | Kernel::Pow(..));
        for s in k.arg().symbols() {
            let info = s.info();
            free.extend(info.free_vars.iter().copied());
            positive |= info.needs_positive;
        }
        let k2 = key.clone();
        intern(key, move |_| SymInfo {
            kind: SymKind::Kernel(k),
            key: k2,
            class: 3,
            free_vars: free,
            needs_positive: positive,
        })
    }

    pub fn info(self) -> Arc<SymInfo> {
        TABLE.read().unwrap().infos[self.0 as usize].clone()
    }

    pub fn name(self) -> String {
        self.info().key.clone()
    }

    pub fn is_plain(self) -> bool {
        matches!(self.info().kind, SymKind::Var(_))
    }

    pub fn kernel_def(self) -> Option<Kernel> {
        match &self.info().kind {
            SymKind::Kernel(k) => Some(k.clone()),
            SymKind::Var(_) => None,
        }
    }

    pub fn depends_on(self, v: Sym) -> bool {
        self == v || self.info().free_vars.contains(&v)
    }

    /// Order used for printing and canonical forms: X, Y, parameters by name,
    /// then kernels by printed form.
    pub fn display_cmp(a: Sym, b: Sym) -> Ordering {
        if a == b {
            return Ordering::Equal;
        }
        let (ia, ib) = (a.info(), b.info());
        ia.class.cmp(&ib.class).then_with(|| ia.key.cmp(&ib.key))
    }

    /// `d self / d v` for a plain variable `v`.
    pub fn derivative(self, v: Sym) -> RatFun {
        if self == v {
            return RatFun::one();
        }
        if !self.depends_on(v) {
            return RatFun::zero();
        }
        if let Some(d) = TABLE.read().unwrap().derivs.get(&(self, v)) {
            return d.clone();
        }
        let d = match self.kernel_def() {
            None => RatFun::zero(),
            Some(k) => {
                let du = k.arg().diff(v);
                match &k {
                    Kernel::Sin(u) => RatFun::from_sym(Sym::kernel(Kernel::Cos(u.clone()))).mul(&du),
                    Kernel::Cos(u) => RatFun::from_sym(Sym::kernel(Kernel::Sin(u.clone()))).mul(&du).neg(),
                    Kernel::Exp(_) => RatFun::from_sym(self).mul(&du),
                    Kernel::Ln(u) => du.div(u).expect("logarithm of zero"),
                    Kernel::Pow(u, r) => RatFun::from_sym(self)
                        .mul(&du)
                        .div(u)
                        .expect("power of zero")
                        .scale(r),
                }
            }
        };
        TABLE.write().unwrap().derivs.insert((self, v), d.clone());
        d
    }
}
