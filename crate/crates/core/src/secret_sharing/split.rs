use rand::RngCore;

use super::bits::BitString;
use super::SharingError;

/// Splits `secret` into `k` fragments whose XOR is the secret. The first
/// `k - 1` fragments are uniform; the last absorbs the secret.
pub fn xor_split<R: RngCore + ?Sized>(
    secret: &BitString,
    k: usize,
    rng: &mut R,
) -> Result<Vec<BitString>, SharingError> {
    if k < 2 {
        return Err(SharingError::TooFewFragments(k));
    }
    let pads = (0..k - 1)
        .map(|_| BitString::random(secret.len(), rng))
        .collect();
    xor_split_with(secret, pads)
}

/// Deterministic variant of [`xor_split`] with caller-chosen leading fragments.
pub fn xor_split_with(
    secret: &BitString,
    mut fragments: Vec<BitString>,
) -> Result<Vec<BitString>, SharingError> {
    if secret.is_empty() {
        return Err(SharingError::Empty);
    }
    if fragments.is_empty() {
        return Err(SharingError::TooFewFragments(fragments.len() + 1));
    }
    let mut last = secret.clone();
    for f in &fragments {
        last = last.xor(f)?;
    }
    fragments.push(last);
    Ok(fragments)
}

pub fn xor_combine(fragments: &[BitString]) -> Result<BitString, SharingError> {
    let (first, rest) = fragments.split_first().ok_or(SharingError::Empty)?;
    rest.iter().try_fold(first.clone(), |acc, f| acc.xor(f))
}

pub fn concat_split(value: &BitString) -> Result<(BitString, BitString), SharingError> {
    if value.is_empty() {
        return Err(SharingError::Empty);
    }
    if value.len() % 2 == 1 {
        return Err(SharingError::OddLength(value.len()));
    }
    let mid = value.len() / 2;
    Ok((value.slice(0, mid), value.slice(mid, value.len())))
}

pub fn concat_join(left: &BitString, right: &BitString) -> Result<BitString, SharingError> {
    if left.is_empty() || right.is_empty() {
        return Err(SharingError::Empty);
    }
    Ok(left.concat(right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::DetRng;
    use proptest::prelude::*;

    fn b(s: &str) -> BitString {
        BitString::from_bin(s)
    }

    #[test]
    fn forced_two_way_split() {
        let out = xor_split_with(&b("1011"), vec![b("0110")]).unwrap();
        assert_eq!(out, vec![b("0110"), b("1101")]);
        let out = xor_split_with(&b("1011"), vec![b("0000")]).unwrap();
        assert_eq!(out, vec![b("0000"), b("1011")]);
    }

    #[test]
    fn combine_by_hand() {
        assert_eq!(xor_combine(&[b("0101"), b("0101")]).unwrap(), b("0000"));
        assert_eq!(
            xor_combine(&[b("1100"), b("0101"), b("1010")]).unwrap(),
            b("0011")
        );
        assert!(xor_combine(&[b("1100"), b("010")]).is_err());
    }

    #[test]
    fn split_errors() {
        let mut rng = DetRng::new(0, "x");
        assert_eq!(
            xor_split(&b("1011"), 1, &mut rng),
            Err(SharingError::TooFewFragments(1))
        );
        assert_eq!(
            xor_split(&BitString::zeros(0), 2, &mut rng),
            Err(SharingError::Empty)
        );
    }

    #[test]
    fn halves() {
        assert_eq!(concat_split(&b("10110100")).unwrap(), (b("1011"), b("0100")));
        assert_eq!(concat_split(&b("101")), Err(SharingError::OddLength(3)));
        assert_eq!(concat_join(&b("0100"), &b("0111")).unwrap(), b("01000111"));
        assert_eq!(concat_join(&BitString::zeros(0), &b("1")), Err(SharingError::Empty));
    }

    /// Enumerates every 2-bit secret and every choice of the random leading
    /// fragments, tallying how often each observed (k-1)-tuple occurs per
    /// secret. Independence means the tally is the same for every secret.
    #[test]
    fn any_k_minus_one_fragments_are_independent_of_the_secret() {
        use std::collections::BTreeMap;
        for k in 2..=4usize {
            let len = 2;
            for drop in 0..k {
                let mut per_secret: Vec<BTreeMap<Vec<BitString>, usize>> = Vec::new();
                for s in 0..4u64 {
                    let secret = BitString::from_u64(s, len);
                    let mut tally = BTreeMap::new();
                    for pads in 0..(1u64 << (len * (k - 1))) {
                        let forced = (0..k - 1)
                            .map(|i| BitString::from_u64((pads >> (i * len)) & 3, len))
                            .collect();
                        let mut frags = xor_split_with(&secret, forced).unwrap();
                        frags.remove(drop);
                        *tally.entry(frags).or_insert(0) += 1;
                    }
                    per_secret.push(tally);
                }
                assert!(per_secret.windows(2).all(|w| w[0] == w[1]), "k={k} drop={drop}");
            }
        }
    }

    proptest! {
        #[test]
        fn combine_inverts_split(bits in proptest::collection::vec(any::<bool>(), 1..40), k in 2usize..6, seed: u64) {
            let s = BitString::from_bits(bits);
            let mut rng = DetRng::new(seed, "prop");
            let mut frags = xor_split(&s, k, &mut rng).unwrap();
            prop_assert_eq!(xor_combine(&frags).unwrap(), s.clone());
            frags.reverse();
            prop_assert_eq!(xor_combine(&frags).unwrap(), s);
        }

        #[test]
        fn join_inverts_split(half in 1usize..32, seed: u64) {
            let mut rng = DetRng::new(seed, "halves");
            let v = BitString::random(half * 2, &mut rng);
            let (l, r) = concat_split(&v).unwrap();
            prop_assert_eq!(concat_join(&l, &r).unwrap(), v);
        }
    }
}
