//! YAML helpers that write enums as single-key maps (`{nav: {...}}`)
//! instead of YAML tags.

use serde::de::DeserializeOwned;
use serde::Serialize;

pub fn from_str<T: DeserializeOwned>(text: &str) -> Result<T, serde_yaml::Error> {
    serde_yaml::with::singleton_map_recursive::deserialize(serde_yaml::Deserializer::from_str(text))
}

pub fn to_string<T: Serialize>(value: &T) -> Result<String, serde_yaml::Error> {
    let mut out = Vec::new();
    let mut ser = serde_yaml::Serializer::new(&mut out);
    serde_yaml::with::singleton_map_recursive::serialize(value, &mut ser)?;
    Ok(String::from_utf8(out).expect("yaml is utf-8"))
}
