use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::hash::{CanonicalEncoder, Digest};
use super::rsa::{PkKeyPair, RsaPublicKey};

/// Simplified certificate: a CA signature over the subject name, the
/// subject's RSA public key and the issuer name.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Certificate {
    pub subject_id: String,
    pub subject_public_key: RsaPublicKey,
    pub issuer_id: String,
    pub signature: BigUint,
}

impl Certificate {
    /// Digest of the signed fields.
    pub fn tbs_digest(&self) -> Digest {
        tbs_digest(&self.subject_id, &self.subject_public_key, &self.issuer_id)
    }
}

fn tbs_digest(subject: &str, key: &RsaPublicKey, issuer: &str) -> Digest {
    let mut enc = CanonicalEncoder::new();
    enc.str(subject).uint(&key.n).uint(&key.e).str(issuer);
    enc.hash()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Error, Serialize, Deserialize)]
pub enum CertError {
    #[error("certificate issuer is not trusted")]
    UntrustedIssuer,
    #[error("certificate signature does not verify")]
    BadSignature,
}

/// Public half of a CA, as held by relying parties.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrustAnchor {
    pub id: String,
    pub key: RsaPublicKey,
}

#[derive(Clone, Debug)]
pub struct CertificateAuthority {
    id: String,
    keys: PkKeyPair,
}

impl CertificateAuthority {
    pub fn new(id: impl Into<String>, keys: PkKeyPair) -> Self {
        Self { id: id.into(), keys }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn anchor(&self) -> TrustAnchor {
        TrustAnchor {
            id: self.id.clone(),
            key: self.keys.public(),
        }
    }

    pub fn issue(&self, subject_id: impl Into<String>, subject_key: RsaPublicKey) -> Certificate {
        issue_cert(&self.id, &self.keys, subject_id.into(), subject_key)
    }
}

pub fn issue_cert(issuer_id: &str, ca_private: &PkKeyPair, subject_id: String, subject_key: RsaPublicKey) -> Certificate {
    let digest = tbs_digest(&subject_id, &subject_key, issuer_id);
    Certificate {
        subject_id,
        subject_public_key: subject_key,
        issuer_id: issuer_id.to_owned(),
        signature: ca_private.sign_digest(&digest),
    }
}

pub fn verify_cert(anchor: &TrustAnchor, cert: &Certificate) -> Result<(), CertError> {
    if cert.issuer_id != anchor.id {
        return Err(CertError::UntrustedIssuer);
    }
    if anchor.key.verify_digest(&cert.tbs_digest(), &cert.signature) {
        Ok(())
    } else {
        Err(CertError::BadSignature)
    }
}
