//! String ids for the built-in nonlinearities, kernels and forcings, as used
//! in scenario files: `name` or `name:key=value,key=value`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::kernel::Kernel;
use crate::nonlinearity::Nonlinearity;

/// A parsed id: the name and its numeric parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogId {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

impl CatalogId {
    pub fn parse(id: &str) -> Result<Self> {
        let id = id.trim();
        let (name, rest) = match id.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r)),
            None => (id, None),
        };
        if name.is_empty() {
            return Err(Error::UnknownId(id.to_string()));
        }
        let mut params = BTreeMap::new();
        if let Some(rest) = rest {
            for pair in rest.split(',').filter(|p| !p.trim().is_empty()) {
                let (k, v) = pair
                    .split_once('=')
                    .ok_or_else(|| Error::InvalidConfig(format!("`{pair}` in `{id}` is not key=value")))?;
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("`{v}` in `{id}` is not a number")))?;
                if params.insert(k.trim().to_string(), v).is_some() {
                    return Err(Error::InvalidConfig(format!("parameter `{k}` repeated in `{id}`")));
                }
            }
        }
        Ok(Self { name: name.to_string(), params })
    }

    /// Take a parameter, falling back to `default` when absent.
    fn take(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        match (self.params.remove(key), default) {
            (Some(v), _) | (None, Some(v)) => Ok(v),
            (None, None) => Err(Error::InvalidConfig(format!("`{}` needs parameter `{key}`", self.name))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.params.keys().next() {
            Some(k) => Err(Error::InvalidConfig(format!("`{}` has no parameter `{k}`", self.name))),
            None => Ok(()),
        }
    }
}

/// `power_plus_one:beta=B`, `log_linear`, `pure_power:p=P`.
pub fn nonlinearity(id: &str) -> Result<Nonlinearity> {
    let mut c = CatalogId::parse(id)?;
    let nl = match c.name.as_str() {
        "power_plus_one" => Nonlinearity::power_plus_one(c.take("beta", None)?)?,
        "log_linear" => Nonlinearity::log_linear(),
        "pure_power" => Nonlinearity::pure_power(c.take("p", None)?)?,
        _ => return Err(Error::UnknownId(id.to_string())),
    };
    c.finish()?;
    Ok(nl)
}

/// `power_decay:omega=W,alpha=A`, `stretched_exp:omega=W,gamma=G`,
/// `inverse_gamma:omega=W`, `t_exp_decay[:omega=W]`. Omitted parameters take
/// the defaults `omega = 1`, `alpha = 0`, `gamma = 1`.
pub fn kernel(id: &str) -> Result<Kernel> {
    let mut c = CatalogId::parse(id)?;
    let k = match c.name.as_str() {
        "power_decay" => Kernel::power_decay(c.take("omega", Some(1.0))?, c.take("alpha", Some(0.0))?)?,
        "stretched_exp" => Kernel::stretched_exp(c.take("omega", Some(1.0))?, c.take("gamma", Some(1.0))?)?,
        "inverse_gamma" => Kernel::inverse_gamma(c.take("omega", Some(1.0))?)?,
        "t_exp_decay" => Kernel::times_exp_decay(c.take("omega", Some(1.0))?)?,
        _ => return Err(Error::UnknownId(id.to_string())),
    };
    c.finish()?;
    Ok(k)
}

/// `zero`, `power_growth:alpha=A`, `rate_scale:K=K`. `rate_scale` is built
/// from the scenario's nonlinearity.
pub fn forcing(id: &str, nl: &Nonlinearity) -> Result<Forcing> {
    let mut c = CatalogId::parse(id)?;
    let f = match c.name.as_str() {
        "zero" => Forcing::zero(),
        "power_growth" => Forcing::power_growth(c.take("alpha", None)?)?,
        "rate_scale" => Forcing::rate_scale(c.take("K", None)?, nl)?,
        _ => return Err(Error::UnknownId(id.to_string())),
    };
    c.finish()?;
    Ok(f)
}
