use std::path::Path;

use convnilm_core::data::{read_cache, write_cache, Manifest, WindowCache};

use crate::failure::{Failure, Outcome};

pub const MANIFEST: &str = "manifest.toml";
pub const CACHE: &str = "windows.bin";

pub struct Dataset {
    pub manifest: Manifest,
    pub cache: WindowCache,
}

pub fn load(dir: &Path) -> Outcome<Dataset> {
    let manifest = Manifest::load(dir.join(MANIFEST))
        .map_err(|e| Failure::from(e).context(format!("reading {}", dir.join(MANIFEST).display())))?;
    let cache = read_cache(dir.join(CACHE))
        .map_err(|e| Failure::from(e).context(format!("reading {}", dir.join(CACHE).display())))?;
    if cache.names != manifest.appliances {
        return Err(Failure::data(format!(
            "{}: manifest lists {:?} but the cache holds {:?}",
            dir.display(),
            manifest.appliances,
            cache.names
        )));
    }
    Ok(Dataset { manifest, cache })
}

pub fn save(dir: &Path, manifest: &Manifest, cache: &WindowCache) -> Outcome {
    std::fs::create_dir_all(dir)?;
    write_cache(dir.join(CACHE), cache)?;
    manifest.save(dir.join(MANIFEST))?;
    Ok(())
}
