//! Named run configurations. Parameter sets (angles, thresholds,
//! conductivities, timings) are referenced by name inside them.

pub struct Preset {
    pub name: &'static str,
    pub about: &'static str,
    pub toml: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "slab-benchmark",
        about: "2.0 x 0.7 x 0.3 cm slab at h = 350 um",
        toml: r#"
[geometry]
kind = "slab"
lengths = [2.0, 0.7, 0.3]
h = 0.035
"#,
    },
    Preset {
        name: "ideal-biventricle",
        about: "idealized biventricle at h = 1 mm",
        toml: r#"
[geometry]
kind = "biventricle"
h = 0.1
"#,
    },
    Preset {
        name: "ideal-la",
        about: "idealized left atrium",
        toml: r#"
[geometry]
kind = "atrium"
side = "left"
h = 0.1
"#,
    },
    Preset {
        name: "ideal-ra",
        about: "idealized right atrium",
        toml: r#"
[geometry]
kind = "atrium"
side = "right"
h = 0.1
"#,
    },
    Preset {
        name: "fibers-r",
        about: "R-RBM on the idealized biventricle, histology angles",
        toml: r#"
[geometry]
kind = "biventricle"
h = 0.1
[fibers]
method = "R"
angles = "histology"
"#,
    },
    Preset {
        name: "fibers-b",
        about: "B-RBM on the idealized biventricle, histology angles",
        toml: r#"
[geometry]
kind = "biventricle"
h = 0.1
[fibers]
method = "B"
angles = "histology"
"#,
    },
    Preset {
        name: "fibers-d",
        about: "D-RBM on the idealized biventricle, histology and outflow-tract angles",
        toml: r#"
[geometry]
kind = "biventricle"
h = 0.1
[fibers]
method = "D"
angles = "histology"
ot_angles = "histology"
"#,
    },
    Preset {
        name: "atrial-la",
        about: "left atrial bundles with the idealized-geometry thresholds",
        toml: r#"
[geometry]
kind = "atrium"
side = "left"
h = 0.1
[fibers]
method = "atrial"
taus = "ideal"
"#,
    },
    Preset {
        name: "atrial-ra",
        about: "right atrial bundles with the idealized-geometry thresholds",
        toml: r#"
[geometry]
kind = "atrium"
side = "right"
h = 0.1
[fibers]
method = "atrial"
taus = "ideal"
"#,
    },
    Preset {
        name: "slab-cv",
        about: "planar wave along the fibers of the benchmark slab, ventricular conductivities",
        toml: r#"
[geometry]
kind = "slab"
lengths = [2.0, 0.7, 0.3]
h = 0.035
[ep]
ionic = "ttp"
conductivity = "ventricular"
mass = "consistent"
dt = 0.05
bdf_order = 3
t_end = 120.0
stop_margin = 5.0
cv_axis = [1.0, 0.0, 0.0]
stimuli = [{ center = [-1.0, 0.35, 0.15], radius = 1.1, start = 0.0, duration = 1.0 }]
"#,
    },
    Preset {
        name: "slab-bdf3",
        about: "corner-stimulated slab, BDF3 at dt = 50 us",
        toml: r#"
[geometry]
kind = "slab"
lengths = [2.0, 0.7, 0.3]
h = 0.035
[ep]
ionic = "ms-ventricular"
conductivity = [1.334, 0.176, 0.176]
dt = 0.05
bdf_order = 3
t_end = 200.0
stop_margin = 2.0
stimuli = [{ center = [0.0, 0.0, 0.0], radius = 0.15, start = 0.0 }]
"#,
    },
    Preset {
        name: "slab-bdf1",
        about: "corner-stimulated slab, BDF1 at dt = 10 us",
        toml: r#"
[geometry]
kind = "slab"
lengths = [2.0, 0.7, 0.3]
h = 0.035
[ep]
ionic = "ms-ventricular"
conductivity = [1.334, 0.176, 0.176]
dt = 0.01
bdf_order = 1
t_end = 200.0
stop_margin = 2.0
stimuli = [{ center = [0.0, 0.0, 0.0], radius = 0.15, start = 0.0 }]
"#,
    },
    Preset {
        name: "la-isotropic",
        about: "left atrium, isotropic sigma = 7.0, BB/FO/CSM schedule",
        toml: r#"
[geometry]
kind = "atrium"
side = "left"
h = 0.1
[ep]
ionic = "crn"
isotropic = 7.0
t_end = 500.0
stop_margin = 5.0
schedule = { chambers = ["la"] }
"#,
    },
    Preset {
        name: "la-fiber",
        about: "left atrium with bundle fibers, BB/FO/CSM schedule",
        toml: r#"
[geometry]
kind = "atrium"
side = "left"
h = 0.1
[fibers]
method = "atrial"
taus = "ideal"
[ep]
ionic = "crn"
conductivity = "atrial"
t_end = 500.0
stop_margin = 5.0
schedule = { chambers = ["la"] }
"#,
    },
    Preset {
        name: "whole-heart",
        about: "atria and ventricles as isolated domains driven by the conduction-system timings",
        toml: r#"
[geometry]
kind = "biventricle"
h = 0.1
[fibers]
method = "D"
angles = "histology"
ot_angles = "histology"
taus = "ideal"
[ep]
t_end = 500.0
stop_margin = 5.0
schedule = { chambers = ["ra", "la", "ventricles"] }
"#,
    },
    Preset {
        name: "fit-ventricular",
        about: "fit sigma for 60/40/20 cm/s with the ventricular surrogate",
        toml: r#"
[fit]
ionic = "ms-ventricular"
targets = [60.0, 40.0, 20.0]
h = 0.035
dt = 0.05
"#,
    },
    Preset {
        name: "fit-atrial",
        about: "fit sigma for 120/40 cm/s with the atrial surrogate",
        toml: r#"
[fit]
ionic = "ms-atrial"
targets = [120.0, 40.0]
h = 0.035
dt = 0.05
"#,
    },
    Preset {
        name: "fit-ttp",
        about: "fit sigma for 60 cm/s with the ventricular ionic model",
        toml: r#"
[fit]
ionic = "ttp"
targets = [60.0]
h = 0.035
dt = 0.05
mass = "consistent"
"#,
    },
];

/// Named parameter sets usable inside configs.
pub const PARAMETER_SETS: &[(&str, &str)] = &[
    ("angles = \"histology\"", "alpha_epi/endo = -60/60 (left), -25/90 (right); beta = 20/-20, 20/0"),
    ("angles = \"zero\"", "all rotation angles 0"),
    ("ot_angles = \"histology\"", "outflow tracts: alpha_epi 0, alpha_endo 90, beta 0"),
    ("taus = \"ideal\"", "bundle thresholds for the idealized atria"),
    ("taus = \"zygote\"", "bundle thresholds for the Zygote atria"),
    ("taus = \"riunet\"", "bundle thresholds for the Riunet atria"),
    ("conductivity = \"ventricular\"", "sigma_f/s/n = 1.07/0.49/0.16 mS/cm"),
    ("conductivity = \"atrial\"", "sigma_f/s/n = 7.0/0.77/0.77 mS/cm"),
    ("schedule", "SAN 0, BB 28, FO 42, CSM 80, AL/SL/PL 160, SR/ER 165 ms"),
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
