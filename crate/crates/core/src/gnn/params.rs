use ndarray::{ArrayViewD, ArrayViewMutD};

use crate::{Error, Real, Result};

/// Named parameter arrays of a module, visited in a fixed order.
///
/// Gradients and optimizer moments are stored in clones of the module
/// itself, so the same visiting order pairs values with their gradients.
pub trait Params<T: Real> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewD<'a, T>));

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewMutD<'a, T>));
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

pub fn named_params<T: Real, P: Params<T> + ?Sized>(module: &P) -> Vec<(String, ArrayViewD<'_, T>)> {
    let mut out = Vec::new();
    module.visit("", &mut |name, view| out.push((name, view)));
    out
}

pub fn named_params_mut<T: Real, P: Params<T> + ?Sized>(
    module: &mut P,
) -> Vec<(String, ArrayViewMutD<'_, T>)> {
    let mut out = Vec::new();
    module.visit_mut("", &mut |name, view| out.push((name, view)));
    out
}

pub fn num_params<T: Real, P: Params<T> + ?Sized>(module: &P) -> usize {
    named_params(module).iter().map(|(_, v)| v.len()).sum()
}

/// A copy of `module` with every parameter set to zero.
pub fn zeros_like<T: Real, P: Params<T> + Clone>(module: &P) -> P {
    let mut z = module.clone();
    z.visit_mut("", &mut |_, mut v| v.fill(T::zero()));
    z
}

/// Copies parameters between modules with identical names and shapes,
/// converting the element type.
pub fn copy_params<A: Real, B: Real>(
    src: &(impl Params<A> + ?Sized),
    dst: &mut (impl Params<B> + ?Sized),
) -> Result<()> {
    let src = named_params(src);
    let mut dst = named_params_mut(dst);
    if src.len() != dst.len() {
        return Err(Error::Format(format!(
            "parameter count mismatch: {} vs {}",
            src.len(),
            dst.len()
        )));
    }
    for ((sn, sv), (dn, dv)) in src.iter().zip(dst.iter_mut()) {
        if sn != dn || sv.shape() != dv.shape() {
            return Err(Error::Format(format!(
                "parameter mismatch: {sn} {:?} vs {dn} {:?}",
                sv.shape(),
                dv.shape()
            )));
        }
        dv.zip_mut_with(sv, |d, &s| *d = B::of(s.as_f64()));
    }
    Ok(())
}
