use wasm_bindgen::prelude::*;

#[wasm_bindgen(js_name = bundledConfig)]
pub fn bundled_config() -> String {
    crate::BUNDLED_CONFIG.to_string()
}

#[wasm_bindgen]
pub fn design(config: &str) -> Result<String, JsValue> {
    crate::design(config).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn simulate(config: &str, t_end: f64, points: usize) -> Result<String, JsValue> {
    crate::simulate(config, t_end, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = boundaryField)]
pub fn boundary_field(config: &str, node: usize, z_d: f64, angles: usize) -> Result<String, JsValue> {
    crate::boundary_field(config, node, z_d, angles).map_err(|e| JsValue::from_str(&e))
}
