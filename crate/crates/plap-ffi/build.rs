fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("cargo sets CARGO_MANIFEST_DIR");
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=build.rs");

    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        cpp_compat: true,
        include_guard: Some("PLAP_H".to_string()),
        usize_is_size_t: true,
        documentation: true,
        enumeration: cbindgen::EnumConfig { prefix_with_name: true, ..Default::default() },
        header: Some("/* C interface to the radial p-Laplace shooting solver. */".to_string()),
        autogen_warning: Some(
            "/* Generated by cbindgen from the plap-ffi crate; do not edit by hand. */"
                .to_string(),
        ),
        ..Default::default()
    };

    match cbindgen::Builder::new().with_crate(&crate_dir).with_config(config).generate() {
        Ok(bindings) => {
            bindings.write_to_file(format!("{crate_dir}/include/plap.h"));
        }
        Err(err) => panic!("failed to generate the C header: {err}"),
    }
}
