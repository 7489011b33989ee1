use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::crypto::{Certificate, CertificateAuthority, PkKeyPair, PRINCIPAL_MODULUS_BITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    /// Subscriber / mobile station.
    Ss,
    Bs,
    Authenticator,
    Server,
    Ca,
    Attacker,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Ss => "ss",
            Role::Bs => "bs",
            Role::Authenticator => "authenticator",
            Role::Server => "server",
            Role::Ca => "ca",
            Role::Attacker => "attacker",
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MacAddress(pub [u8; 6]);

impl fmt::Display for MacAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d, e, g] = self.0;
        write!(f, "{a:02x}:{b:02x}:{c:02x}:{d:02x}:{e:02x}:{g:02x}")
    }
}

impl fmt::Debug for MacAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PrincipalId {
    pub role: Role,
    pub name: String,
    pub mac_address: MacAddress,
}

impl PrincipalId {
    pub fn new(role: Role, name: impl Into<String>, mac: [u8; 6]) -> Self {
        Self {
            role,
            name: name.into(),
            mac_address: MacAddress(mac),
        }
    }
}

impl fmt::Display for PrincipalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A principal together with its long-term credentials.
#[derive(Clone, Debug)]
pub struct Principal {
    pub id: PrincipalId,
    pub keys: PkKeyPair,
    pub cert: Certificate,
    /// Device certificate pushed in the PKM Authentication Information message.
    pub manufacturer_cert: Certificate,
}

impl Principal {
    pub fn enroll<R: RngCore + ?Sized>(id: PrincipalId, ca: &CertificateAuthority, rng: &mut R) -> Self {
        let keys = PkKeyPair::generate(PRINCIPAL_MODULUS_BITS, rng);
        Self::with_keys(id, keys, ca)
    }

    pub fn with_keys(id: PrincipalId, keys: PkKeyPair, ca: &CertificateAuthority) -> Self {
        let cert = ca.issue(id.name.clone(), keys.public());
        let manufacturer_cert = ca.issue(format!("manufacturer:{}", id.name), keys.public());
        Self {
            id,
            keys,
            cert,
            manufacturer_cert,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SecurityCapabilities {
    cipher_suites: Vec<String>,
}

impl SecurityCapabilities {
    pub fn new(cipher_suites: Vec<String>) -> Option<Self> {
        (!cipher_suites.is_empty()).then_some(Self { cipher_suites })
    }

    pub fn cipher_suites(&self) -> &[String] {
        &self.cipher_suites
    }
}

impl Default for SecurityCapabilities {
    fn default() -> Self {
        Self {
            cipher_suites: vec!["aes-ccm".into(), "des-cbc".into()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SaDescriptor {
    pub said: u16,
    pub cipher_suite: String,
}
