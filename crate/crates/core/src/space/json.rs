//! JSON form of a basis: `{atoms, balls, hull, K, eta}`.

use serde::{Deserialize, Serialize};

use super::basis::BallBasis;
use super::measure::MeasureSpace;
use super::region::Region;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BasisDoc {
    pub atoms: Vec<f64>,
    pub balls: Vec<Vec<usize>>,
    pub hull: Vec<usize>,
    #[serde(rename = "K")]
    pub k: f64,
    pub eta: Option<f64>,
}

impl BasisDoc {
    pub fn from_basis(basis: &BallBasis) -> BasisDoc {
        BasisDoc {
            atoms: basis.space().weights().to_vec(),
            balls: basis.balls().iter().map(|b| b.members.iter().collect()).collect(),
            hull: basis.hull_map().to_vec(),
            k: basis.k(),
            eta: basis.eta(),
        }
    }

    pub fn into_basis(self) -> Result<BallBasis> {
        let n = self.atoms.len();
        let space = MeasureSpace::new(self.atoms)?;
        let mut members = Vec::with_capacity(self.balls.len());
        for (id, atoms) in self.balls.iter().enumerate() {
            if let Some(&x) = atoms.iter().find(|&&x| x >= n) {
                return Err(Error::UnknownAtom(x));
            }
            members.push(
                Region::from_atoms(n, atoms)
                    .ok_or_else(|| Error::Invalid(format!("ball {id} is empty")))?,
            );
        }
        Ok(BallBasis::new(space, members, self.hull, self.k, self.eta)?.recognize())
    }
}

pub fn basis_to_json(basis: &BallBasis) -> String {
    serde_json::to_string(&BasisDoc::from_basis(basis)).expect("basis documents serialize")
}

pub fn basis_from_json(text: &str) -> Result<BallBasis> {
    let doc: BasisDoc = serde_json::from_str(text)?;
    doc.into_basis()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::BasisKind;

    #[test]
    fn round_trip_is_bit_exact() {
        for basis in [BallBasis::dyadic(4).unwrap(), BallBasis::grid(9).unwrap()] {
            let text = basis_to_json(&basis);
            let back = basis_from_json(&text).unwrap();
            assert_eq!(back.kind(), basis.kind());
            assert_eq!(basis_to_json(&back), text);
        }
    }

    #[test]
    fn custom_documents_stay_custom() {
        let text = r#"{"atoms":[0.1,0.7,0.2],"balls":[[0],[1],[2],[0,1],[1,2],[0,1,2]],"hull":[3,5,4,5,5,5],"K":10.0,"eta":null}"#;
        let basis = basis_from_json(text).unwrap();
        assert_eq!(basis.kind(), BasisKind::Custom);
        assert_eq!(basis_to_json(&basis), text);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"atoms":[1.0],"balls":[[0]],"hull":[0],"K":1.0,"eta":null,"extra":1}"#;
        assert!(basis_from_json(text).is_err());
    }
}
