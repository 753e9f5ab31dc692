//! Market-entry channels and the channel-choice rule.
//!
//! Every channel earns the same gross profit `(dL gamma / 4)(c_D - c)^2` in
//! the new market and differs only in what it pays to find it:
//!
//! | channel        | cost                                  |
//! |----------------|---------------------------------------|
//! | local          | `i d_s`                               |
//! | remote         | `i d'_s + d_0s`                       |
//! | follow         | `delta i e^{-N_s+1} d_s`              |
//! | peer neighbour | `delta (d_0s + d'_s - d_s^rho)`       |
//!
//! The shock is added to profit for local, remote and follow, and charged
//! inside the cost for the peer-neighbour channel, so it enters that channel's
//! profit with a minus sign.

use core::fmt;

use crate::entry::follow_attenuation;
use crate::geo::CountryId;
use crate::{ModelError, Result};

/// Entry channel. Declaration order is the tie-break priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    Follow,
    PeerNeighbor,
    Remote,
    Local,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::Follow, Channel::PeerNeighbor, Channel::Remote, Channel::Local];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Follow => "follow",
            Channel::PeerNeighbor => "peer_neighbor",
            Channel::Remote => "remote",
            Channel::Local => "local",
        }
    }

    pub fn parse(s: &str) -> Option<Channel> {
        Channel::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Sign with which the channel's shock enters its profit.
    pub fn shock_sign(self) -> f64 {
        match self {
            Channel::PeerNeighbor => -1.0,
            _ => 1.0,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Gross export profit in a new market of size `delta_l`.
#[inline]
pub fn gross_profit(delta_l: f64, gamma: f64, cutoff: f64, cost: f64) -> f64 {
    let gap = cutoff - cost;
    delta_l * gamma / 4.0 * gap * gap
}

fn check_viable(cost: f64, cutoff: f64) -> Result<()> {
    if cost > cutoff {
        Err(ModelError::NotViable { cost, cutoff })
    } else {
        Ok(())
    }
}

pub fn local_search_profit(
    delta_l: f64,
    gamma: f64,
    cutoff: f64,
    cost: f64,
    info_cost: f64,
    d_s: f64,
    shock: f64,
) -> Result<f64> {
    check_viable(cost, cutoff)?;
    Ok(gross_profit(delta_l, gamma, cutoff, cost) - info_cost * d_s + shock)
}

pub fn remote_search_profit(
    delta_l: f64,
    gamma: f64,
    cutoff: f64,
    cost: f64,
    info_cost: f64,
    d_prime_s: f64,
    d_0s: f64,
    shock: f64,
) -> Result<f64> {
    check_viable(cost, cutoff)?;
    Ok(gross_profit(delta_l, gamma, cutoff, cost) - info_cost * d_prime_s - d_0s + shock)
}

/// Profit from following the `n_s` peers already in the market; needs at
/// least one of them.
#[allow(clippy::too_many_arguments)]
pub fn follow_profit(
    delta_l: f64,
    gamma: f64,
    cutoff: f64,
    cost: f64,
    delta: f64,
    info_cost: f64,
    n_s: f64,
    d_s: f64,
    shock: f64,
) -> Result<f64> {
    if !(n_s >= 1.0) {
        return Err(ModelError::ChannelUnavailable(Channel::Follow));
    }
    check_viable(cost, cutoff)?;
    let cost_term = delta * info_cost * follow_attenuation(n_s)? * d_s;
    Ok(gross_profit(delta_l, gamma, cutoff, cost) - cost_term + shock)
}

/// `I1 - I2` with `I2 = delta (d_0s + d'_s - d_s^rho) + shock`.
#[allow(clippy::too_many_arguments)]
pub fn peer_neighbor_profit(
    delta_l: f64,
    gamma: f64,
    cutoff: f64,
    cost: f64,
    delta: f64,
    d_0s: f64,
    d_prime_s: f64,
    d_rho_s: f64,
    shock: f64,
) -> Result<f64> {
    check_viable(cost, cutoff)?;
    let i1 = gross_profit(delta_l, gamma, cutoff, cost);
    let i2 = delta * (d_0s + d_prime_s - d_rho_s) + shock;
    Ok(i1 - i2)
}

/// Strict triangle relation `d_s < d'_s + d_0s` between the direct route and
/// the route through an existing partner.
pub fn triangle_check(d_s: f64, d_prime_s: f64, d_0s: f64) -> bool {
    d_s < d_prime_s + d_0s
}

/// Inputs for the remote channel: the route through one of the firm's markets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemoteRoute {
    pub d_prime_s: f64,
    pub d_0s: f64,
}

/// Inputs for the peer-neighbour channel: the industry's markets around the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeerRoute {
    pub d_0s: f64,
    pub d_prime_s: f64,
    pub d_rho_s: f64,
}

/// One firm looking at one target market, with the channels open to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prospect {
    pub delta_l: f64,
    pub gamma: f64,
    pub cutoff: f64,
    pub cost: f64,
    pub info_cost: f64,
    pub delta: f64,
    /// Direct distance home -> target.
    pub d_s: f64,
    /// Peers already in the target.
    pub n_s: f64,
    pub remote: Option<RemoteRoute>,
    pub peer: Option<PeerRoute>,
}

/// Raw shock draws for one decision. `follow` and `local` share the local
/// shock; `remote` and `peer` share the remote one.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Shocks {
    pub local: f64,
    pub remote: f64,
}

impl Shocks {
    pub fn raw(&self, ch: Channel) -> f64 {
        match ch {
            Channel::Local | Channel::Follow => self.local,
            Channel::Remote | Channel::PeerNeighbor => self.remote,
        }
    }
}

/// A priced entry option. `net_profit == gross_profit - entry_cost + shock`,
/// where `shock` is the signed contribution to profit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryOpportunity {
    pub firm: u32,
    pub target: CountryId,
    pub channel: Channel,
    pub delta_l: f64,
    pub gross_profit: f64,
    pub entry_cost: f64,
    pub shock: f64,
    pub net_profit: f64,
}

impl Prospect {
    pub fn available(&self, ch: Channel) -> bool {
        match ch {
            Channel::Local => true,
            Channel::Remote => self.remote.is_some(),
            Channel::Follow => self.n_s >= 1.0,
            Channel::PeerNeighbor => self.peer.is_some(),
        }
    }

    /// Entry cost of a channel, excluding the shock.
    pub fn entry_cost(&self, ch: Channel) -> Option<f64> {
        if !self.available(ch) {
            return None;
        }
        Some(match ch {
            Channel::Local => self.info_cost * self.d_s,
            Channel::Remote => {
                let r = self.remote?;
                self.info_cost * r.d_prime_s + r.d_0s
            }
            Channel::Follow => self.delta * self.info_cost * libm::exp(-self.n_s + 1.0) * self.d_s,
            Channel::PeerNeighbor => {
                let p = self.peer?;
                self.delta * (p.d_0s + p.d_prime_s - p.d_rho_s)
            }
        })
    }

    /// Prices one channel; `None` when the channel is closed or the firm is
    /// above the cutoff.
    pub fn quote(&self, firm: u32, target: CountryId, ch: Channel, shocks: &Shocks) -> Option<EntryOpportunity> {
        if self.cost > self.cutoff {
            return None;
        }
        let entry_cost = self.entry_cost(ch)?;
        let gross = gross_profit(self.delta_l, self.gamma, self.cutoff, self.cost);
        let shock = ch.shock_sign() * shocks.raw(ch);
        Some(EntryOpportunity {
            firm,
            target,
            channel: ch,
            delta_l: self.delta_l,
            gross_profit: gross,
            entry_cost,
            shock,
            net_profit: gross - entry_cost + shock,
        })
    }
}

/// Picks the most profitable open channel if it beats `reservation`.
///
/// Ties go to the channel that comes first in [`Channel::ALL`].
pub fn entry_decision(
    firm: u32,
    target: CountryId,
    prospect: &Prospect,
    shocks: &Shocks,
    reservation: f64,
) -> Option<EntryOpportunity> {
    let mut best: Option<EntryOpportunity> = None;
    for ch in Channel::ALL {
        if let Some(q) = prospect.quote(firm, target, ch, shocks) {
            match &best {
                Some(b) if b.net_profit >= q.net_profit => {}
                _ => best = Some(q),
            }
        }
    }
    best.filter(|b| b.net_profit > reservation)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_examples() {
        assert_eq!(local_search_profit(100.0, 1.0, 2.0, 2.0, 2.0, 3.0, 0.0).unwrap(), -6.0);
        assert_eq!(local_search_profit(100.0, 1.0, 2.0, 1.0, 2.0, 3.0, 0.0).unwrap(), 19.0);
        let a = local_search_profit(100.0, 1.0, 2.0, 1.0, 2.0, 3.0, 0.0).unwrap();
        let b = local_search_profit(100.0, 1.0, 2.0, 1.0, 2.0, 3.0, 0.37).unwrap();
        assert!((b - a - 0.37).abs() < 1e-12);
    }

    #[test]
    fn remote_examples() {
        assert_eq!(remote_search_profit(100.0, 1.0, 2.0, 2.0, 2.0, 1.0, 4.0, 0.0).unwrap(), -6.0);
        assert_eq!(remote_search_profit(100.0, 1.0, 2.0, 1.0, 2.0, 1.0, 4.0, 0.0).unwrap(), 19.0);
        // remote beats local although the direct route is shorter
        let local = local_search_profit(100.0, 1.0, 2.0, 1.0, 2.0, 3.0, 0.0).unwrap();
        let remote = remote_search_profit(100.0, 1.0, 2.0, 1.0, 2.0, 0.5, 2.0, 0.0).unwrap();
        assert_eq!(remote, 22.0);
        assert!(remote > local);
        // the comparison turns on unit costs, not on the triangle relation
        let local = local_search_profit(100.0, 1.0, 2.0, 1.0, 2.0, 3.0, 0.0).unwrap();
        let remote = remote_search_profit(100.0, 1.0, 2.0, 1.0, 2.0, 1.2, 2.0, 0.0).unwrap();
        assert!(triangle_check(3.0, 1.2, 2.0));
        assert!(remote > local);
    }

    #[test]
    fn follow_examples() {
        let one = follow_profit(100.0, 1.0, 2.0, 1.0, 1.0, 2.0, 1.0, 3.0, 0.0).unwrap();
        assert_eq!(one, 25.0 - 6.0);
        let five = follow_profit(100.0, 1.0, 2.0, 1.0, 1.0, 2.0, 5.0, 3.0, 0.0).unwrap();
        assert!((five - (25.0 - 6.0 * libm::exp(-4.0))).abs() < 1e-12);
        assert!((five - 24.89).abs() < 0.001);
        let e = follow_profit(100.0, 1.0, 2.0, 1.0, 1.0, 2.0, 0.5, 3.0, 0.0).unwrap_err();
        assert_eq!(e, ModelError::ChannelUnavailable(Channel::Follow));
    }

    #[test]
    fn follow_degenerates_to_scaled_local() {
        let delta = 1.7;
        let f = follow_profit(80.0, 0.6, 3.0, 1.0, delta, 2.5, 1.0, 4.0, 0.0).unwrap();
        let gross = gross_profit(80.0, 0.6, 3.0, 1.0);
        let local = local_search_profit(80.0, 0.6, 3.0, 1.0, 2.5, 4.0, 0.0).unwrap();
        assert!(((gross - f) - delta * (gross - local)).abs() < 1e-12);
    }

    #[test]
    fn follow_slope_in_peers() {
        let (delta, i, ds) = (1.3, 2.0, 3.0);
        let at = |n: f64| follow_profit(100.0, 1.0, 2.0, 1.0, delta, i, n, ds, 0.0).unwrap();
        for n in [1.5, 2.0, 4.0, 7.5] {
            let h = 1e-5;
            let fd = (at(n + h) - at(n - h)) / (2.0 * h);
            let analytic = i * libm::exp(-n + 1.0) * ds * delta;
            assert!(analytic > 0.0);
            assert!((fd - analytic).abs() < 1e-7 * analytic.max(1e-3), "{fd} {analytic}");
        }
    }

    #[test]
    fn peer_neighbor_examples() {
        assert_eq!(peer_neighbor_profit(100.0, 1.0, 2.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0).unwrap(), 25.0);
        assert_eq!(peer_neighbor_profit(100.0, 1.0, 2.0, 1.0, 1.0, 4.0, 6.0, 2.0, 0.0).unwrap(), 17.0);
        let delta = 1.5;
        let base = peer_neighbor_profit(100.0, 1.0, 2.0, 1.0, delta, 4.0, 6.0, 2.0, 0.0).unwrap();
        let dp = peer_neighbor_profit(100.0, 1.0, 2.0, 1.0, delta, 4.0, 7.0, 2.0, 0.0).unwrap();
        let dr = peer_neighbor_profit(100.0, 1.0, 2.0, 1.0, delta, 4.0, 6.0, 3.0, 0.0).unwrap();
        assert_eq!(dp - base, -delta);
        assert_eq!(dr - base, delta);
        let shocked = peer_neighbor_profit(100.0, 1.0, 2.0, 1.0, delta, 4.0, 6.0, 2.0, 0.25).unwrap();
        assert_eq!(shocked - base, -0.25);
    }

    #[test]
    fn triangle_examples() {
        assert!(triangle_check(3.0, 1.0, 4.0));
        assert!(!triangle_check(5.0, 1.0, 4.0));
    }

    fn prospect() -> Prospect {
        Prospect {
            delta_l: 100.0,
            gamma: 1.0,
            cutoff: 2.0,
            cost: 1.0,
            info_cost: 2.0,
            delta: 1.0,
            d_s: 3.0,
            n_s: 5.0,
            remote: None,
            peer: None,
        }
    }

    #[test]
    fn decision_prefers_follow_over_local() {
        let p = prospect();
        let d = entry_decision(0, CountryId(1), &p, &Shocks::default(), 0.0).unwrap();
        assert_eq!(d.channel, Channel::Follow);
        assert!((d.net_profit - 24.89).abs() < 1e-3);
        assert_eq!(d.net_profit, d.gross_profit - d.entry_cost + d.shock);
    }

    #[test]
    fn decision_no_entry_when_all_negative() {
        let p = Prospect { delta_l: 0.01, ..prospect() };
        assert!(entry_decision(0, CountryId(1), &p, &Shocks::default(), 0.0).is_none());
    }

    #[test]
    fn decision_single_positive_channel() {
        // local and follow negative, remote positive
        let p = Prospect {
            delta_l: 8.0,
            n_s: 1.0,
            d_s: 10.0,
            remote: Some(RemoteRoute { d_prime_s: 0.5, d_0s: 0.5 }),
            ..prospect()
        };
        let d = entry_decision(3, CountryId(2), &p, &Shocks::default(), 0.0).unwrap();
        assert_eq!(d.channel, Channel::Remote);
        assert_eq!(d.firm, 3);
    }

    #[test]
    fn decision_tie_break_order() {
        // follow at n = 1 with delta = 1 costs exactly the local cost
        let p = Prospect { n_s: 1.0, ..prospect() };
        let d = entry_decision(0, CountryId(1), &p, &Shocks::default(), 0.0).unwrap();
        assert_eq!(d.channel, Channel::Follow);
    }

    #[test]
    fn decision_respects_reservation() {
        let p = prospect();
        assert!(entry_decision(0, CountryId(1), &p, &Shocks::default(), 30.0).is_none());
    }

    #[test]
    fn peer_shock_enters_negatively() {
        let p = Prospect { peer: Some(PeerRoute { d_0s: 1.0, d_prime_s: 2.0, d_rho_s: 1.0 }), ..prospect() };
        let s = Shocks { local: 0.0, remote: 0.5 };
        let q = p.quote(0, CountryId(1), Channel::PeerNeighbor, &s).unwrap();
        assert_eq!(q.shock, -0.5);
        assert_eq!(q.net_profit, 25.0 - 2.0 - 0.5);
    }
}
